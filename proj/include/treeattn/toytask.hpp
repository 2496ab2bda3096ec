#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treeattn/attention.hpp"
#include "treeattn/maskgen.hpp"
#include "treeattn/rng.hpp"
#include "treeattn/treebank.hpp"

namespace treeattn {

/// Builds a dependency tree from 1-based heads (0 marks the root). Forms are "t1".."tn".
SyntaxTree tree_from_heads(std::span<const int> heads);

/// Uniform over rooted labeled trees on n tokens: a Pruefer sequence of length n - 2 plus a root,
/// both drawn from `seed`.
SyntaxTree gen_random_tree(std::size_t n, std::uint64_t seed);

/// Decodes a Pruefer sequence (values 1..n) into an undirected tree and orients it towards `root`.
/// Returns 1-based heads.
std::vector<int> decode_pruefer(std::span<const int> sequence, std::size_t n, int root);

enum class ToyTask { RootDistanceParity, WithinKOfRoot };
std::string_view to_string(ToyTask task);
ToyTask toy_task_from_string(std::string_view name);

std::vector<int> task_labels(const SyntaxTree& tree, ToyTask task, int k);

enum class Split { Train, Dev, Test };

struct ToyExample {
  SyntaxTree tree;
  std::vector<int> labels;
  Split split = Split::Train;
};

struct ToyDatasetConfig {
  ToyTask task = ToyTask::RootDistanceParity;
  int k = 1;  // within_k_of_root threshold
  std::size_t train = 2000, dev = 200, test = 500;
  std::size_t min_len = 5, max_len = 10;
  std::uint64_t seed = 0;
};

/// Trees are distinct across the whole dataset, so the splits are disjoint.
struct ToyDataset {
  ToyDatasetConfig config;
  std::vector<ToyExample> examples;

  std::vector<const ToyExample*> split(Split which) const;
};

ToyDataset make_dataset(const ToyDatasetConfig& config);

enum class MaskSource { Syntax, Random, Full };
std::string_view to_string(MaskSource source);
MaskSource mask_source_from_string(std::string_view name);

/// Same size and spec; keeps the diagonal when it is fully set and scatters the
/// remaining ones uniformly over the other positions.
Mask random_mask_like(const Mask& mask, Rng& rng);

struct ExperimentConfig {
  MaskSource source = MaskSource::Syntax;
  BlockDims dims;
  std::size_t layers = 1;
  MaskConfig masks{6, {TreeKind::Dependency}, true, true, false};
  MaskMode attention_mode = MaskMode::Additive;
  double learning_rate = 0.05;
  std::size_t epochs = 4;
  std::size_t batch_size = 8;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct SeedResult {
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double final_train_loss = 0.0;
  std::size_t parameter_count = 0;
};

struct ToyMetrics {
  MaskSource source = MaskSource::Syntax;
  std::vector<SeedResult> runs;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Embedding table + `layers` syntax blocks + per-token linear classifier, trained with
/// mini-batch gradient descent; one run per seed.
ToyMetrics train_toy(const ExperimentConfig& config, const ToyDataset& dataset);

/// Parameter count of the toy model; independent of the mask source.
std::size_t toy_parameter_count(const ExperimentConfig& config, const ToyDataset& dataset);

/// Columns mode, seed, test_accuracy; then "mean" and "std" rows per mode.
std::string to_tsv(std::span<const ToyMetrics> metrics);

}  // namespace treeattn
