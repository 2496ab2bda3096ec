#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treeattn/tensor.hpp"
#include "treeattn/treebank.hpp"

namespace treeattn {

/// Linear map B (rank x d_model); squared distances ||B(h_i - h_j)||^2 estimate tree distances.
struct ProbeMatrix {
  Tensor b;
};

enum class ProbeInit { Random, Identity };

struct ProbeConfig {
  std::size_t rank = 0;  // 0 means d_model
  double learning_rate = 0.05;
  std::size_t epochs = 300;
  std::size_t batch_size = 10;
  std::uint64_t seed = 0;
  ProbeInit init = ProbeInit::Random;
};

struct ProbeSentence {
  Tensor embeddings;  // n x d_model
  SyntaxTree tree;    // dependency tree over the same n tokens
};

/// Minimizes the mean over sentences of (1/n^2) sum_ij |dist(i,j) - ||B(h_i - h_j)||^2| with
/// mini-batch subgradient descent. Deterministic for a fixed seed.
ProbeMatrix train_probe(std::span<const ProbeSentence> sentences, const ProbeConfig& config);

double probe_loss(const ProbeMatrix& probe, std::span<const ProbeSentence> sentences);

Tensor probe_distances(const ProbeMatrix& probe, const Tensor& embeddings);

/// Kruskal over the complete graph with ties broken towards the lexicographically smaller (i, j).
/// Returns 0-based edges (i < j) in the order they were accepted. `excluded` tokens (0-based) are skipped.
std::vector<std::pair<int, int>> minimum_spanning_tree(const Tensor& distances, std::span<const int> excluded = {});

/// Fraction of gold undirected edges recovered by the MST of `predicted`.
/// `excluded` lists 1-based token indices left out of both trees (e.g. punctuation).
double uuas(const Tensor& predicted, const SyntaxTree& gold, std::span<const int> excluded = {});

/// Average (1-based) ranks with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks; nullopt when either rank vector has zero variance.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);
/// Over the upper-triangle (i < j) entries of two n x n matrices; n >= 3.
std::optional<double> spearman(const Tensor& predicted, const Tensor& gold);

/// Tree distances as reals.
Tensor gold_distances(const SyntaxTree& tree);

/// Row t marks the edges on the root -> t path: entry c - 1 is 1 for every non-root token c on it.
/// Squared Euclidean distances between rows equal tree distances.
Tensor path_indicator_embeddings(const SyntaxTree& tree, std::size_t dim);

struct ProbeReportRow {
  std::string sentence_id;
  std::size_t n = 0;
  double uuas = 0.0;
  std::optional<double> spearman;
};

struct ProbeReport {
  std::vector<ProbeReportRow> rows;
  double mean_uuas = 0.0;
  std::optional<double> mean_spearman;  // over sentences where it is defined
};

ProbeReport evaluate_probe(const ProbeMatrix& probe, std::span<const ProbeSentence> sentences,
                           std::span<const std::string> ids = {});

/// Columns sentence_id, n, uuas, spearman, then a "mean" summary line.
std::string to_tsv(const ProbeReport& report);

}  // namespace treeattn
