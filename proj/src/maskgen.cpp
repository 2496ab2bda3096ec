#include "treeattn/maskgen.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include <fmt/format.h>

#include "treeattn/error.hpp"

namespace treeattn {

std::string_view to_string(MaskCategory category) {
  switch (category) {
    case MaskCategory::Parent: return "parent";
    case MaskCategory::Child: return "child";
    case MaskCategory::Sibling: return "sibling";
    case MaskCategory::Pairwise: return "pairwise";
    case MaskCategory::Full: return "full";
  }
  return "?";
}

MaskCategory mask_category_from_string(std::string_view name) {
  for (auto c : {MaskCategory::Parent, MaskCategory::Child, MaskCategory::Sibling, MaskCategory::Pairwise,
                 MaskCategory::Full}) {
    if (to_string(c) == name) return c;
  }
  throw UsageError(fmt::format("unknown mask category '{}'", name));
}

// ---------------------------------------------------------------------------
// Mask

Mask::Mask(std::size_t n, MaskSpec spec, std::vector<std::uint8_t> dense)
    : n_(n), spec_(spec), dense_(std::move(dense)), rows_(n) {
  if (dense_.size() != n * n) throw StructureError("mask: dense matrix has wrong size");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      auto& v = dense_[i * n + j];
      if (v > 1) throw StructureError("mask: entries must be 0 or 1");
      if (v) rows_[i].push_back(static_cast<int>(j));
    }
    ones_ += rows_[i].size();
  }
}

Mask Mask::full(std::size_t n) {
  return Mask(n, {MaskCategory::Full, std::nullopt, TreeKind::Dependency}, std::vector<std::uint8_t>(n * n, 1));
}

Mask Mask::identity(std::size_t n, MaskSpec spec) {
  std::vector<std::uint8_t> dense(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) dense[i * n + i] = 1;
  return Mask(n, spec, std::move(dense));
}

bool Mask::empty_off_diagonal() const {
  for (std::size_t i = 0; i < n_; ++i)
    for (int j : rows_[i])
      if (static_cast<std::size_t>(j) != i) return false;
  return true;
}

Mask Mask::transposed() const {
  std::vector<std::uint8_t> t(n_ * n_, 0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) t[j * n_ + i] = dense_[i * n_ + j];
  return Mask(n_, spec_, std::move(t));
}

Mask Mask::with_self_loops() const {
  auto d = dense_;
  for (std::size_t i = 0; i < n_; ++i) d[i * n_ + i] = 1;
  return Mask(n_, spec_, std::move(d));
}

// ---------------------------------------------------------------------------
// Tree metrics: Euler tour + sparse-table range minimum gives O(1) LCA queries.

TreeMetrics::TreeMetrics(const SyntaxTree& tree) : kind_(tree.kind) {
  require_valid(tree);
  const std::size_t node_count = tree.nodes.size();
  n_ = tree.token_count();

  std::map<int, std::size_t> pos;
  for (std::size_t k = 0; k < node_count; ++k) pos[tree.nodes[k].id] = k;
  std::vector<std::vector<std::size_t>> children(node_count);
  for (std::size_t k = 0; k < node_count; ++k) {
    if (tree.nodes[k].parent) children[pos[*tree.nodes[k].parent]].push_back(k);
  }
  for (auto& list : children) {
    std::sort(list.begin(), list.end(),
              [&](std::size_t a, std::size_t b) { return tree.nodes[a].id < tree.nodes[b].id; });
  }

  std::vector<int> depth(node_count, 0);
  std::vector<std::size_t> first(node_count, 0);
  std::vector<std::size_t> euler;
  euler.reserve(2 * node_count);
  // Iterative DFS; the frame holds the next child to visit.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{pos[tree.root_id], 0}};
  first[stack.back().first] = 0;
  euler.push_back(stack.back().first);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < children[node].size()) {
      const std::size_t child = children[node][next++];
      depth[child] = depth[node] + 1;
      first[child] = euler.size();
      euler.push_back(child);
      stack.push_back({child, 0});
    } else {
      stack.pop_back();
      if (!stack.empty()) euler.push_back(stack.back().first);
    }
  }

  const std::size_t len = euler.size();
  const std::size_t levels = std::bit_width(len);
  std::vector<std::vector<std::size_t>> table(levels, std::vector<std::size_t>(len));
  table[0] = euler;
  auto shallower = [&](std::size_t a, std::size_t b) { return depth[a] <= depth[b] ? a : b; };
  for (std::size_t lvl = 1; lvl < levels; ++lvl) {
    const std::size_t half = std::size_t{1} << (lvl - 1);
    for (std::size_t i = 0; i + (std::size_t{1} << lvl) <= len; ++i) {
      table[lvl][i] = shallower(table[lvl - 1][i], table[lvl - 1][i + half]);
    }
  }
  auto lca = [&](std::size_t a, std::size_t b) {
    std::size_t lo = first[a], hi = first[b];
    if (lo > hi) std::swap(lo, hi);
    const std::size_t lvl = std::bit_width(hi - lo + 1) - 1;
    return shallower(table[lvl][lo], table[lvl][hi + 1 - (std::size_t{1} << lvl)]);
  };

  std::vector<std::size_t> token_node(n_);
  for (std::size_t k = 0; k < node_count; ++k) {
    if (tree.nodes[k].token_index) token_node[*tree.nodes[k].token_index - 1] = k;
  }
  dist_.assign(n_ * n_, 0);
  anc_.assign(n_ * n_, 0);
  depths_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    depths_[i] = depth[token_node[i]];
    for (std::size_t j = 0; j < n_; ++j) {
      if (i == j) continue;
      const std::size_t a = token_node[i], b = token_node[j];
      const std::size_t c = lca(a, b);
      dist_[i * n_ + j] = depth[a] + depth[b] - 2 * depth[c];
      if (c == a) anc_[i * n_ + j] = depth[b] - depth[a];
    }
  }
  distances_ = DistanceMatrix{n_, dist_};
}

DistanceMatrix token_distance_matrix(const SyntaxTree& tree) { return TreeMetrics(tree).distances(); }

std::optional<int> ancestor_distance(const SyntaxTree& tree, int i, int j) {
  const int n = static_cast<int>(tree.token_count());
  if (i < 1 || i > n || j < 1 || j > n) {
    throw StructureError(fmt::format("token index out of range: ({}, {}) with n = {}", i, j, n));
  }
  TreeMetrics metrics(tree);
  const int hops = metrics.ancestor_hops(i - 1, j - 1);
  if (hops == 0) return std::nullopt;
  return hops;
}

// ---------------------------------------------------------------------------
// Masks

namespace {

void check_spec(const MaskSpec& spec, const MaskConfig& config) {
  const bool needs_distance = spec.category == MaskCategory::Parent || spec.category == MaskCategory::Child ||
                              spec.category == MaskCategory::Sibling;
  if (spec.category == MaskCategory::Full) throw UsageError("full masks are not built from trees");
  if (needs_distance != spec.distance.has_value()) {
    throw UsageError(fmt::format("{} mask {} a distance", to_string(spec.category),
                                 needs_distance ? "requires" : "does not take"));
  }
  if (spec.distance && (*spec.distance < 1 || *spec.distance > config.max_dist)) {
    throw UsageError(fmt::format("mask distance {} outside 1..{}", *spec.distance, config.max_dist));
  }
}

// Writes the single-sentence mask for `metrics` into `dense` (stride `stride`) at `offset`.
void fill_block(const TreeMetrics& metrics, const MaskSpec& spec, const MaskConfig& config,
                std::vector<std::uint8_t>& dense, std::size_t stride, std::size_t offset) {
  const std::size_t n = metrics.size();
  const int d = *spec.distance;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      bool on = false;
      switch (spec.category) {
        case MaskCategory::Parent: on = metrics.ancestor_hops(i, j) == d; break;
        case MaskCategory::Child: on = metrics.ancestor_hops(j, i) == d; break;
        case MaskCategory::Sibling:
          on = i != j && metrics.distance(i, j) == d &&
               (config.literal_sibling || (metrics.ancestor_hops(i, j) == 0 && metrics.ancestor_hops(j, i) == 0));
          break;
        default: break;
      }
      if (on) dense[(offset + i) * stride + offset + j] = 1;
    }
  }
}

void apply_self_loops(std::vector<std::uint8_t>& dense, std::size_t n, const MaskConfig& config) {
  if (!config.self_loops) return;
  for (std::size_t i = 0; i < n; ++i) dense[i * n + i] = 1;
}

const SyntaxTree& tree_of_kind(const TreeGroup& group, TreeKind kind) {
  for (const auto& tree : group)
    if (tree.kind == kind) return tree;
  throw StructureError(fmt::format("no {} tree supplied", to_string(kind)));
}

}  // namespace

Mask build_mask(const TreeMetrics& metrics, const MaskSpec& spec, const MaskConfig& config) {
  check_spec(spec, config);
  if (spec.category == MaskCategory::Pairwise) throw StructureError("pairwise masks need a sentence pair");
  if (spec.tree_kind != metrics.kind()) {
    throw StructureError(fmt::format("mask expects a {} tree, got {}", to_string(spec.tree_kind),
                                     to_string(metrics.kind())));
  }
  const std::size_t n = metrics.size();
  std::vector<std::uint8_t> dense(n * n, 0);
  fill_block(metrics, spec, config, dense, n, 0);
  apply_self_loops(dense, n, config);
  return Mask(n, spec, std::move(dense));
}

Mask build_mask(const SyntaxTree& tree, const MaskSpec& spec, const MaskConfig& config) {
  check_spec(spec, config);
  return build_mask(TreeMetrics(tree), spec, config);
}

namespace {

Mask build_pair_mask(const TreeMetrics* first, const TreeMetrics* second, std::size_t n1, std::size_t n2,
                     const MaskSpec& spec, const MaskConfig& config) {
  check_spec(spec, config);
  const std::size_t n = n1 + n2;
  std::vector<std::uint8_t> dense(n * n, 0);
  if (spec.category == MaskCategory::Pairwise) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if ((i < n1) != (j < n1)) dense[i * n + j] = 1;
  } else {
    if (first->kind() != spec.tree_kind || second->kind() != spec.tree_kind) {
      throw StructureError("mask tree kind does not match the sentence pair trees");
    }
    fill_block(*first, spec, config, dense, n, 0);
    fill_block(*second, spec, config, dense, n, n1);
  }
  apply_self_loops(dense, n, config);
  return Mask(n, spec, std::move(dense));
}

}  // namespace

Mask build_mask(const SentencePair& pair, const MaskSpec& spec, const MaskConfig& config) {
  check_pair(pair);
  check_spec(spec, config);
  tree_of_kind(pair.first, spec.tree_kind);
  if (spec.category == MaskCategory::Pairwise) {
    return build_pair_mask(nullptr, nullptr, pair.first_size(), pair.second_size(), spec, config);
  }
  TreeMetrics a(tree_of_kind(pair.first, spec.tree_kind));
  TreeMetrics b(tree_of_kind(pair.second, spec.tree_kind));
  return build_pair_mask(&a, &b, a.size(), b.size(), spec, config);
}

namespace {

constexpr MaskCategory kTreeCategories[] = {MaskCategory::Parent, MaskCategory::Child, MaskCategory::Sibling};

void check_config(const MaskConfig& config) {
  if (config.max_dist < 1) throw UsageError("max_dist must be positive");
  if (config.tree_kinds.empty()) throw UsageError("at least one tree kind is required");
  for (std::size_t a = 0; a < config.tree_kinds.size(); ++a)
    for (std::size_t b = a + 1; b < config.tree_kinds.size(); ++b)
      if (config.tree_kinds[a] == config.tree_kinds[b]) throw UsageError("tree kinds repeated in config");
}

void finish_set(MaskSet& set) {
  if (!set.config.prune_empty) return;
  std::vector<Mask> kept;
  for (auto& mask : set.masks) {
    if (mask.empty_off_diagonal()) {
      set.pruned.push_back(mask.spec());
    } else {
      kept.push_back(std::move(mask));
    }
  }
  set.masks = std::move(kept);
}

}  // namespace

MaskSet build_mask_set(const TreeGroup& group, const MaskConfig& config) {
  check_config(config);
  check_group(group);
  MaskSet set;
  set.n = group.front().token_count();
  set.config = config;
  for (TreeKind kind : config.tree_kinds) {
    TreeMetrics metrics(tree_of_kind(group, kind));
    for (MaskCategory category : kTreeCategories) {
      for (int d = 1; d <= config.max_dist; ++d) {
        set.masks.push_back(build_mask(metrics, {category, d, kind}, config));
      }
    }
  }
  finish_set(set);
  return set;
}

MaskSet build_mask_set(const SentencePair& pair, const MaskConfig& config) {
  check_config(config);
  check_pair(pair);
  MaskSet set;
  set.n = pair.combined_size();
  set.config = config;
  for (TreeKind kind : config.tree_kinds) {
    TreeMetrics a(tree_of_kind(pair.first, kind));
    TreeMetrics b(tree_of_kind(pair.second, kind));
    for (MaskCategory category : kTreeCategories) {
      for (int d = 1; d <= config.max_dist; ++d) {
        set.masks.push_back(build_pair_mask(&a, &b, a.size(), b.size(), {category, d, kind}, config));
      }
    }
    // One pairwise copy per tree-kind group; the copies are identical.
    set.masks.push_back(
        build_pair_mask(nullptr, nullptr, a.size(), b.size(), {MaskCategory::Pairwise, std::nullopt, kind}, config));
  }
  finish_set(set);
  return set;
}

// ---------------------------------------------------------------------------
// Subword expansion

Alignment Alignment::from_counts(std::span<const int> subwords_per_word) {
  Alignment a;
  int at = 0;
  for (int c : subwords_per_word) {
    a.spans.push_back({at, at + c});
    at += c;
  }
  a.check();
  return a;
}

void Alignment::check() const {
  int expected = 0;
  for (std::size_t w = 0; w < spans.size(); ++w) {
    if (spans[w].begin != expected || spans[w].end <= spans[w].begin) {
      throw StructureError(fmt::format("alignment: word {} span [{}, {}) is empty or not contiguous", w + 1,
                                       spans[w].begin, spans[w].end));
    }
    expected = spans[w].end;
  }
}

Mask expand_to_subwords(const Mask& mask, const Alignment& alignment, bool self_loops) {
  alignment.check();
  if (alignment.word_count() != mask.n()) {
    throw StructureError(fmt::format("alignment covers {} words but mask has n = {}", alignment.word_count(),
                                     mask.n()));
  }
  const std::size_t m = alignment.subword_count();
  std::vector<std::uint8_t> dense(m * m, 0);
  for (std::size_t wi = 0; wi < mask.n(); ++wi) {
    for (int wj : mask.row(wi)) {
      const auto& a = alignment.spans[wi];
      const auto& b = alignment.spans[static_cast<std::size_t>(wj)];
      for (int p = a.begin; p < a.end; ++p)
        for (int q = b.begin; q < b.end; ++q) dense[static_cast<std::size_t>(p) * m + q] = 1;
    }
  }
  if (self_loops)
    for (std::size_t p = 0; p < m; ++p) dense[p * m + p] = 1;
  return Mask(m, mask.spec(), std::move(dense));
}

// ---------------------------------------------------------------------------
// JSON

ordered_json to_json(const MaskSpec& spec) {
  ordered_json j;
  j["category"] = to_string(spec.category);
  j["distance"] = spec.distance ? ordered_json(*spec.distance) : ordered_json(nullptr);
  j["tree_kind"] = to_string(spec.tree_kind);
  return j;
}

ordered_json to_json(const MaskConfig& config) {
  ordered_json j;
  j["max_dist"] = config.max_dist;
  j["tree_kinds"] = ordered_json::array();
  for (auto k : config.tree_kinds) j["tree_kinds"].push_back(to_string(k));
  j["self_loops"] = config.self_loops;
  j["literal_sibling"] = config.literal_sibling;
  j["prune_empty"] = config.prune_empty;
  return j;
}

ordered_json to_json(const MaskSet& set) {
  ordered_json j;
  j["n"] = set.n;
  j["config"] = to_json(set.config);
  j["masks"] = ordered_json::array();
  for (const auto& mask : set.masks) {
    ordered_json mj = to_json(mask.spec());
    mj["rows"] = ordered_json::array();
    for (std::size_t i = 0; i < mask.n(); ++i) {
      ordered_json row = ordered_json::array();
      for (int c : mask.row(i)) row.push_back(c + 1);
      mj["rows"].push_back(std::move(row));
    }
    j["masks"].push_back(std::move(mj));
  }
  if (set.config.prune_empty) {
    j["pruned"] = ordered_json::array();
    for (const auto& spec : set.pruned) j["pruned"].push_back(to_json(spec));
  }
  return j;
}

}  // namespace treeattn
