#include "treeattn/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "treeattn/error.hpp"
#include "treeattn/maskgen.hpp"
#include "treeattn/rng.hpp"

namespace treeattn {

namespace {

void check_sentence(const ProbeSentence& s, std::size_t d_model) {
  if (s.embeddings.cols() != d_model) {
    throw StructureError(fmt::format("probe: embedding width {} differs from {}", s.embeddings.cols(), d_model));
  }
  if (s.embeddings.rows() != s.tree.token_count()) {
    throw StructureError(fmt::format("probe: {} embeddings for {} tokens", s.embeddings.rows(), s.tree.token_count()));
  }
  if (s.tree.kind != TreeKind::Dependency) throw StructureError("probe: gold trees must be dependency trees");
}

// Loss of one sentence; adds (1/n^2) * dLoss/dB into grad when given.
double sentence_loss(const Tensor& b, const Tensor& h, const DistanceMatrix& dist, Tensor* grad) {
  const std::size_t n = h.rows(), d = h.cols(), rank = b.rows();
  const double norm = 1.0 / static_cast<double>(n * n);
  // G = sum_ij sign_ij * delta delta^T; dLoss/dB = 2 B G.
  Tensor g(d, d);
  std::vector<double> delta(d), proj(rank);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t c = 0; c < d; ++c) delta[c] = h(i, c) - h(j, c);
      double pred = 0.0;
      for (std::size_t r = 0; r < rank; ++r) {
        double s = 0.0;
        auto br = b.row(r);
        for (std::size_t c = 0; c < d; ++c) s += br[c] * delta[c];
        proj[r] = s;
        pred += s * s;
      }
      const double diff = pred - static_cast<double>(dist(i, j));
      loss += 2.0 * std::abs(diff);  // (i, j) and (j, i)
      if (grad && diff != 0.0) {
        const double sign = diff > 0.0 ? 2.0 : -2.0;
        for (std::size_t a = 0; a < d; ++a) {
          if (delta[a] == 0.0) continue;
          auto gr = g.row(a);
          for (std::size_t c = 0; c < d; ++c) gr[c] += sign * delta[a] * delta[c];
        }
      }
    }
  }
  if (grad) {
    Tensor step = matmul(b, g);
    step *= 2.0 * norm;
    *grad += step;
  }
  return loss * norm;
}

}  // namespace

ProbeMatrix train_probe(std::span<const ProbeSentence> sentences, const ProbeConfig& config) {
  if (sentences.empty()) throw StructureError("probe: no training sentences");
  const std::size_t d = sentences.front().embeddings.cols();
  for (const auto& s : sentences) check_sentence(s, d);
  const std::size_t rank = config.rank == 0 ? d : config.rank;
  if (rank > d) throw UsageError(fmt::format("probe rank {} exceeds d_model {}", rank, d));
  if (config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw UsageError("probe: batch size and learning rate must be positive");
  }

  Rng root(config.seed);
  ProbeMatrix probe;
  if (config.init == ProbeInit::Identity) {
    probe.b = Tensor(rank, d);
    for (std::size_t r = 0; r < rank; ++r) probe.b(r, r) = 1.0;
  } else {
    Rng init = root.split(1);
    probe.b = Tensor::uniform(rank, d, 1.0 / std::sqrt(static_cast<double>(d)), init);
  }

  std::vector<DistanceMatrix> gold;
  for (const auto& s : sentences) gold.push_back(token_distance_matrix(s.tree));

  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle = root.split(1000 + epoch);
    shuffle.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Tensor grad(rank, d);
      double loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        loss += sentence_loss(probe.b, sentences[order[k]].embeddings, gold[order[k]], &grad);
      }
      if (!std::isfinite(loss)) throw NumericalError(fmt::format("probe: non-finite loss in epoch {}", epoch));
      grad *= config.learning_rate / static_cast<double>(end - start);
      probe.b -= grad;
    }
  }
  require_finite(probe.b, "probe matrix");
  return probe;
}

double probe_loss(const ProbeMatrix& probe, std::span<const ProbeSentence> sentences) {
  if (sentences.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : sentences) {
    check_sentence(s, probe.b.cols());
    total += sentence_loss(probe.b, s.embeddings, token_distance_matrix(s.tree), nullptr);
  }
  return total / static_cast<double>(sentences.size());
}

Tensor probe_distances(const ProbeMatrix& probe, const Tensor& embeddings) {
  if (embeddings.cols() != probe.b.cols()) {
    throw StructureError(fmt::format("probe: embedding width {} differs from probe width {}", embeddings.cols(),
                                     probe.b.cols()));
  }
  const Tensor projected = matmul_nt(embeddings, probe.b);  // n x rank
  const std::size_t n = embeddings.rows();
  Tensor out(n, n, 0.0, Axis::Tokens, Axis::Tokens);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < projected.cols(); ++r) {
        const double diff = projected(i, r) - projected(j, r);
        s += diff * diff;
      }
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

std::vector<std::pair<int, int>> minimum_spanning_tree(const Tensor& distances, std::span<const int> excluded) {
  const int n = static_cast<int>(distances.rows());
  if (distances.cols() != distances.rows()) throw StructureError("mst: distance matrix is not square");
  std::set<int> skip(excluded.begin(), excluded.end());
  struct Edge {
    double w;
    int i, j;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    if (skip.count(i)) continue;
    for (int j = i + 1; j < n; ++j) {
      if (skip.count(j)) continue;
      edges.push_back({distances(static_cast<std::size_t>(i), static_cast<std::size_t>(j)), i, j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w < b.w;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  std::vector<std::pair<int, int>> tree;
  for (const auto& e : edges) {
    const int a = find(e.i), b = find(e.j);
    if (a == b) continue;
    parent[static_cast<std::size_t>(a)] = b;
    tree.emplace_back(e.i, e.j);
  }
  return tree;
}

double uuas(const Tensor& predicted, const SyntaxTree& gold, std::span<const int> excluded) {
  require_valid(gold);
  if (gold.kind != TreeKind::Dependency) throw StructureError("uuas: gold tree must be a dependency tree");
  const std::size_t n = gold.token_count();
  if (n < 2) throw StructureError("uuas: needs at least two tokens");
  if (predicted.rows() != n || predicted.cols() != n) {
    throw StructureError(fmt::format("uuas: {}x{} distances for {} tokens", predicted.rows(), predicted.cols(), n));
  }
  std::set<int> skip;
  std::vector<int> skip0;
  for (int t : excluded) {
    skip.insert(t);
    skip0.push_back(t - 1);
  }
  std::set<std::pair<int, int>> gold_edges;
  for (const auto& node : gold.nodes) {
    if (!node.parent) continue;
    const int a = *node.token_index;
    const int b = *std::find_if(gold.nodes.begin(), gold.nodes.end(), [&](const Node& x) {
                     return x.id == *node.parent;
                   })->token_index;
    if (skip.count(a) || skip.count(b)) continue;
    gold_edges.insert({std::min(a, b) - 1, std::max(a, b) - 1});
  }
  if (gold_edges.empty()) throw StructureError("uuas: no gold edges left to score");
  std::size_t hits = 0;
  for (const auto& e : minimum_spanning_tree(predicted, skip0)) hits += gold_edges.count(e);
  return static_cast<double>(hits) / static_cast<double>(gold_edges.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StructureError("spearman: vectors differ in length");
  if (a.size() < 3) throw StructureError("spearman: needs at least three pairs");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return std::nullopt;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

std::optional<double> spearman(const Tensor& predicted, const Tensor& gold) {
  const std::size_t n = predicted.rows();
  if (predicted.cols() != n || gold.rows() != n || gold.cols() != n) {
    throw StructureError("spearman: matrices must be square and equal in size");
  }
  if (n < 3) throw StructureError("spearman: needs n >= 3");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      a.push_back(predicted(i, j));
      b.push_back(gold(i, j));
    }
  return spearman(a, b);
}

Tensor gold_distances(const SyntaxTree& tree) {
  const auto dist = token_distance_matrix(tree);
  Tensor out(dist.n, dist.n, 0.0, Axis::Tokens, Axis::Tokens);
  for (std::size_t i = 0; i < dist.n; ++i)
    for (std::size_t j = 0; j < dist.n; ++j) out(i, j) = dist(i, j);
  return out;
}

Tensor path_indicator_embeddings(const SyntaxTree& tree, std::size_t dim) {
  require_valid(tree);
  if (tree.kind != TreeKind::Dependency) throw StructureError("path indicators need a dependency tree");
  const std::size_t n = tree.token_count();
  if (dim < n) throw StructureError(fmt::format("path indicators need dim >= {}", n));
  std::vector<int> head(n + 1, 0);
  for (const auto& node : tree.nodes) {
    if (node.parent) {
      for (const auto& p : tree.nodes)
        if (p.id == *node.parent) head[static_cast<std::size_t>(*node.token_index)] = *p.token_index;
    }
  }
  Tensor out(n, dim);
  for (std::size_t t = 1; t <= n; ++t) {
    for (std::size_t c = t; head[c] != 0; c = static_cast<std::size_t>(head[c])) out(t - 1, c - 1) = 1.0;
  }
  return out;
}

ProbeReport evaluate_probe(const ProbeMatrix& probe, std::span<const ProbeSentence> sentences,
                           std::span<const std::string> ids) {
  ProbeReport report;
  double uuas_sum = 0.0, spr_sum = 0.0;
  std::size_t spr_count = 0;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sentence = sentences[s];
    const Tensor pred = probe_distances(probe, sentence.embeddings);
    ProbeReportRow row;
    row.sentence_id = s < ids.size() ? ids[s] : std::to_string(s + 1);
    row.n = sentence.tree.token_count();
    row.uuas = uuas(pred, sentence.tree);
    if (row.n >= 3) row.spearman = spearman(pred, gold_distances(sentence.tree));
    uuas_sum += row.uuas;
    if (row.spearman) {
      spr_sum += *row.spearman;
      ++spr_count;
    }
    report.rows.push_back(std::move(row));
  }
  if (!sentences.empty()) report.mean_uuas = uuas_sum / static_cast<double>(sentences.size());
  if (spr_count > 0) report.mean_spearman = spr_sum / static_cast<double>(spr_count);
  return report;
}

std::string to_tsv(const ProbeReport& report) {
  auto fmt_opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string("NA"); };
  std::string out = "sentence_id\tn\tuuas\tspearman\n";
  double n_sum = 0.0;
  for (const auto& row : report.rows) {
    out += fmt::format("{}\t{}\t{:.6f}\t{}\n", row.sentence_id, row.n, row.uuas, fmt_opt(row.spearman));
    n_sum += static_cast<double>(row.n);
  }
  const double n_mean = report.rows.empty() ? 0.0 : n_sum / static_cast<double>(report.rows.size());
  out += fmt::format("mean\t{:.2f}\t{:.6f}\t{}\n", n_mean, report.mean_uuas, fmt_opt(report.mean_spearman));
  return out;
}

}  // namespace treeattn
