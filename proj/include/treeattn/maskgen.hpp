#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "treeattn/treebank.hpp"

namespace treeattn {

/// Full is not a syntax category: it marks the all-ones mask used for dense attention.
enum class MaskCategory { Parent, Child, Sibling, Pairwise, Full };

std::string_view to_string(MaskCategory category);
MaskCategory mask_category_from_string(std::string_view name);

struct MaskSpec {
  MaskCategory category = MaskCategory::Parent;
  std::optional<int> distance;  // absent for Pairwise and Full
  TreeKind tree_kind = TreeKind::Dependency;

  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

struct MaskConfig {
  int max_dist = 15;
  std::vector<TreeKind> tree_kinds{TreeKind::Dependency, TreeKind::Constituency};
  bool self_loops = true;
  /// Literal sibling reading: any same-sentence pair at the distance. When false,
  /// ancestor/descendant pairs are excluded.
  bool literal_sibling = true;
  bool prune_empty = false;
};

/// Boolean n x n connectivity matrix; entry (i, j) means query i may attend to key j.
/// Keeps a dense byte matrix and a per-row sorted column list that always agree.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t n, MaskSpec spec, std::vector<std::uint8_t> dense);

  static Mask full(std::size_t n);
  static Mask identity(std::size_t n, MaskSpec spec = {MaskCategory::Full, std::nullopt, TreeKind::Dependency});

  std::size_t n() const { return n_; }
  const MaskSpec& spec() const { return spec_; }
  bool at(std::size_t i, std::size_t j) const { return dense_[i * n_ + j] != 0; }
  std::span<const std::uint8_t> dense() const { return dense_; }
  std::span<const int> row(std::size_t i) const { return rows_[i]; }
  std::size_t one_count() const { return ones_; }
  /// True when no entry off the diagonal is set.
  bool empty_off_diagonal() const;

  Mask transposed() const;
  Mask with_self_loops() const;

  friend bool operator==(const Mask& a, const Mask& b) {
    return a.n_ == b.n_ && a.spec_ == b.spec_ && a.dense_ == b.dense_;
  }

 private:
  std::size_t n_ = 0;
  MaskSpec spec_;
  std::vector<std::uint8_t> dense_;
  std::vector<std::vector<int>> rows_;
  std::size_t ones_ = 0;
};

struct MaskSet {
  std::size_t n = 0;
  MaskConfig config;
  std::vector<Mask> masks;
  std::vector<MaskSpec> pruned;
};

/// Integer n x n matrix, 0-based storage.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<int> values;
  int operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Precomputed token distances and ancestry for one validated tree.
/// Indices are 0-based token positions.
class TreeMetrics {
 public:
  explicit TreeMetrics(const SyntaxTree& tree);

  std::size_t size() const { return n_; }
  TreeKind kind() const { return kind_; }
  int distance(std::size_t i, std::size_t j) const { return dist_[i * n_ + j]; }
  /// Hops from token j up to token i when i is a proper ancestor of j, else 0.
  int ancestor_hops(std::size_t i, std::size_t j) const { return anc_[i * n_ + j]; }
  const DistanceMatrix& distances() const { return distances_; }
  /// Depth of each token's node (root depth 0).
  const std::vector<int>& token_depths() const { return depths_; }

 private:
  std::size_t n_ = 0;
  TreeKind kind_ = TreeKind::Dependency;
  std::vector<int> dist_;
  std::vector<int> anc_;
  std::vector<int> depths_;
  DistanceMatrix distances_;
};

DistanceMatrix token_distance_matrix(const SyntaxTree& tree);
/// 1-based token indices. Hop count when token i is a proper ancestor of token j.
std::optional<int> ancestor_distance(const SyntaxTree& tree, int i, int j);

Mask build_mask(const TreeMetrics& metrics, const MaskSpec& spec, const MaskConfig& config);
Mask build_mask(const SyntaxTree& tree, const MaskSpec& spec, const MaskConfig& config);
Mask build_mask(const SentencePair& pair, const MaskSpec& spec, const MaskConfig& config);

MaskSet build_mask_set(const TreeGroup& group, const MaskConfig& config);
MaskSet build_mask_set(const SentencePair& pair, const MaskConfig& config);

/// Word -> contiguous subword span, 0-based half-open.
struct Alignment {
  struct Span {
    int begin;
    int end;
  };
  std::vector<Span> spans;

  static Alignment from_counts(std::span<const int> subwords_per_word);
  std::size_t word_count() const { return spans.size(); }
  std::size_t subword_count() const { return spans.empty() ? 0 : static_cast<std::size_t>(spans.back().end); }
  /// Throws StructureError unless spans are nonempty, contiguous and cover 0..subword_count.
  void check() const;
};

Mask expand_to_subwords(const Mask& mask, const Alignment& alignment, bool self_loops);

ordered_json to_json(const MaskSpec& spec);
ordered_json to_json(const MaskConfig& config);
ordered_json to_json(const MaskSet& set);

}  // namespace treeattn
