#pragma once

// Gene universe, category membership and probe-to-gene mapping.
//
// A GeneScoreTable pairs a shared Universe (identifiers plus lookup index)
// with one score per gene. Tables derived from one another (ranks, selection
// indicators, annotated subsets) share the Universe pointer, and categories
// bound to a table refer to the same pointer; that identity is what "bound to
// the same universe" means throughout the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "randset/error.hpp"

namespace randset {

struct Universe {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
};

class GeneScoreTable {
 public:
  GeneScoreTable(std::vector<std::string> ids, std::vector<double> scores)
      : scores_(std::move(scores)) {
    if (ids.size() != scores_.size()) {
      throw input_error("score table: " + std::to_string(ids.size()) + " ids but " +
                        std::to_string(scores_.size()) + " scores");
    }
    if (ids.size() < 2) throw input_error("score table: universe needs at least 2 genes");
    auto u = std::make_shared<Universe>();
    u->index.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!u->index.emplace(ids[i], i).second) {
        throw input_error("score table: duplicate id '" + ids[i] + "'");
      }
      if (!std::isfinite(scores_[i])) {
        throw input_error("score table: non-finite score for '" + ids[i] + "'");
      }
    }
    u->ids = std::move(ids);
    universe_ = std::move(u);
  }

  std::size_t size() const { return scores_.size(); }
  std::span<const double> scores() const { return scores_; }
  double score(std::size_t i) const { return scores_[i]; }
  const std::vector<std::string>& ids() const { return universe_->ids; }
  const std::string& id(std::size_t i) const { return universe_->ids[i]; }
  const std::shared_ptr<const Universe>& universe() const { return universe_; }

  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = universe_->index.find(id);
    if (it == universe_->index.end()) return std::nullopt;
    return it->second;
  }

  // Same universe, different scores.
  GeneScoreTable with_scores(std::vector<double> scores) const {
    if (scores.size() != size()) {
      throw std::invalid_argument("with_scores: length does not match universe");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!std::isfinite(scores[i])) {
        throw input_error("score table: non-finite score for '" + id(i) + "'");
      }
    }
    return GeneScoreTable(universe_, std::move(scores));
  }

  bool same_universe(const GeneScoreTable& other) const {
    return universe_ == other.universe_;
  }

 private:
  GeneScoreTable(std::shared_ptr<const Universe> u, std::vector<double> scores)
      : universe_(std::move(u)), scores_(std::move(scores)) {}

  std::shared_ptr<const Universe> universe_;
  std::vector<double> scores_;
};

struct Category {
  std::string id;
  std::string description;
  std::vector<std::string> members;
};

class CategoryCatalog {
 public:
  CategoryCatalog() = default;
  explicit CategoryCatalog(std::vector<Category> categories, std::size_t min_size = 10)
      : min_size_(min_size) {
    for (auto& c : categories) add(std::move(c));
  }

  void add(Category c) {
    if (!ids_.insert(c.id).second) {
      throw input_error("catalog: duplicate category id '" + c.id + "'");
    }
    categories_.push_back(std::move(c));
  }

  const std::vector<Category>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }
  std::size_t min_size() const { return min_size_; }
  void set_min_size(std::size_t n) { min_size_ = n; }

 private:
  std::vector<Category> categories_;
  std::unordered_set<std::string> ids_;
  std::size_t min_size_ = 10;
};

// Category membership as sorted indices into a universe.
struct BoundCategory {
  std::string id;
  std::string description;
  std::vector<std::uint32_t> members;
  std::shared_ptr<const Universe> universe;

  std::size_t size() const { return members.size(); }
};

enum class UniverseMode { all, annotated };

class BoundCatalog {
 public:
  BoundCatalog(GeneScoreTable table, std::vector<BoundCategory> categories,
               UniverseMode mode, std::size_t min_size)
      : table_(std::move(table)),
        categories_(std::move(categories)),
        mode_(mode),
        min_size_(min_size) {}

  const GeneScoreTable& table() const { return table_; }
  const std::vector<BoundCategory>& categories() const { return categories_; }
  const BoundCategory& operator[](std::size_t i) const { return categories_[i]; }
  std::size_t size() const { return categories_.size(); }
  std::size_t universe_size() const { return table_.size(); }
  UniverseMode mode() const { return mode_; }
  std::size_t min_size() const { return min_size_; }

  // Membership back in identifier form, e.g. for re-binding.
  CategoryCatalog unbind() const {
    CategoryCatalog out;
    out.set_min_size(min_size_);
    for (const auto& c : categories_) {
      Category cat{c.id, c.description, {}};
      cat.members.reserve(c.size());
      for (auto g : c.members) cat.members.push_back(table_.id(g));
      out.add(std::move(cat));
    }
    return out;
  }

 private:
  GeneScoreTable table_;
  std::vector<BoundCategory> categories_;
  UniverseMode mode_;
  std::size_t min_size_;
};

// Intersects every category with the table, drops categories below
// min_size, and in annotated mode shrinks the universe to the union of the
// surviving categories (so binding is idempotent).
inline BoundCatalog bind(const CategoryCatalog& catalog, const GeneScoreTable& table,
                         UniverseMode mode) {
  struct Pending {
    const Category* src;
    std::vector<std::uint32_t> idx;
  };
  std::vector<Pending> kept;
  for (const auto& c : catalog.categories()) {
    std::vector<std::uint32_t> idx;
    idx.reserve(c.members.size());
    for (const auto& g : c.members) {
      if (auto i = table.index_of(g)) idx.push_back(static_cast<std::uint32_t>(*i));
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    if (idx.empty() || idx.size() < catalog.min_size()) continue;
    kept.push_back({&c, std::move(idx)});
  }

  GeneScoreTable working = table;
  if (mode == UniverseMode::annotated) {
    std::vector<char> used(table.size(), 0);
    for (const auto& p : kept)
      for (auto i : p.idx) used[i] = 1;
    std::vector<std::uint32_t> remap(table.size(), 0);
    std::vector<std::string> ids;
    std::vector<double> scores;
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (!used[i]) continue;
      remap[i] = static_cast<std::uint32_t>(ids.size());
      ids.push_back(table.id(i));
      scores.push_back(table.score(i));
    }
    if (ids.empty()) throw input_error("bind: annotated universe is empty");
    working = GeneScoreTable(std::move(ids), std::move(scores));
    for (auto& p : kept)
      for (auto& i : p.idx) i = remap[i];  // order-preserving, stays sorted
  }
  if (kept.empty()) throw input_error("bind: no category survives binding");

  std::vector<BoundCategory> out;
  out.reserve(kept.size());
  for (auto& p : kept) {
    out.push_back({p.src->id, p.src->description, std::move(p.idx), working.universe()});
  }
  return BoundCatalog(std::move(working), std::move(out), mode, catalog.min_size());
}

inline std::size_t overlap(const BoundCategory& a, const BoundCategory& b) {
  if (a.universe != b.universe) {
    throw std::invalid_argument("overlap: categories bound to different universes");
  }
  std::size_t n = 0;
  auto i = a.members.begin();
  auto j = b.members.begin();
  while (i != a.members.end() && j != b.members.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

// Symmetric k x k matrix of pairwise overlaps, row-major; diagonal holds sizes.
inline std::vector<std::size_t> overlap_matrix(const BoundCatalog& catalog) {
  const std::size_t k = catalog.size();
  std::vector<std::size_t> out(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    out[i * k + i] = catalog[i].size();
    for (std::size_t j = i + 1; j < k; ++j) {
      const std::size_t n = overlap(catalog[i], catalog[j]);
      out[i * k + j] = n;
      out[j * k + i] = n;
    }
  }
  return out;
}

// Many-to-one probe -> gene mapping.
class ProbeGeneMap {
 public:
  void add(std::string probe, std::string gene) {
    auto [it, fresh] = map_.emplace(std::move(probe), std::move(gene));
    if (!fresh) throw input_error("probe map: probe '" + it->first + "' mapped twice");
  }

  std::optional<std::string_view> gene_of(const std::string& probe) const {
    auto it = map_.find(probe);
    if (it == map_.end()) return std::nullopt;
    return std::string_view(it->second);
  }

  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }

 private:
  std::unordered_map<std::string, std::string> map_;
};

// Number of distinct genes behind a probe-level category.
inline std::size_t distinct_genes(const BoundCategory& c, const GeneScoreTable& probes,
                                  const ProbeGeneMap& map) {
  std::unordered_set<std::string_view> genes;
  for (auto i : c.members) {
    auto g = map.gene_of(probes.id(i));
    if (!g) throw input_error("probe map: no gene for probe '" + probes.id(i) + "'");
    genes.insert(*g);
  }
  return genes.size();
}

inline double median(std::vector<double> xs) {
  detail::require(!xs.empty(), "median: empty input");
  const std::size_t n = xs.size();
  const std::size_t mid = n / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double hi = xs[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return lo + 0.5 * (hi - lo);
}

// Gene-level table whose score is the median of each gene's probes. Genes
// appear in order of their first probe.
inline GeneScoreTable reduce_probesets(const GeneScoreTable& probes, const ProbeGeneMap& map) {
  std::vector<std::string> unmapped;
  std::unordered_map<std::string_view, std::size_t> slot;
  std::vector<std::string> genes;
  std::vector<std::vector<double>> values;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto g = map.gene_of(probes.id(i));
    if (!g) {
      unmapped.push_back(probes.id(i));
      continue;
    }
    auto [it, fresh] = slot.emplace(*g, genes.size());
    if (fresh) {
      genes.emplace_back(*g);
      values.emplace_back();
    }
    values[it->second].push_back(probes.score(i));
  }
  if (!unmapped.empty()) {
    std::string msg = "reduce_probesets: " + std::to_string(unmapped.size()) + " unmapped probe(s):";
    const std::size_t shown = std::min<std::size_t>(unmapped.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += " " + unmapped[i];
    if (shown < unmapped.size()) msg += " ...";
    throw input_error(msg);
  }
  std::vector<double> scores;
  scores.reserve(genes.size());
  for (auto& v : values) scores.push_back(median(std::move(v)));
  return GeneScoreTable(std::move(genes), std::move(scores));
}

}  // namespace randset
