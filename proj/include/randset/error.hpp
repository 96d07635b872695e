#pragma once

#include <stdexcept>
#include <string>

namespace randset {

// Malformed or inconsistent input data (files, identifiers, memberships).
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The random-set null has zero variance, so no standardized score exists.
class degenerate_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The requested gene-list FDR cannot be achieved (kappa outside (0,1)).
class infeasible_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail
}  // namespace randset
