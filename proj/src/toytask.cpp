#include "treeattn/toytask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "treeattn/error.hpp"

namespace treeattn {

SyntaxTree tree_from_heads(std::span<const int> heads) {
  SyntaxTree tree;
  tree.kind = TreeKind::Dependency;
  const int n = static_cast<int>(heads.size());
  for (int t = 1; t <= n; ++t) {
    tree.tokens.push_back({t, fmt::format("t{}", t)});
    Node node{t, "_", std::nullopt, t};
    if (heads[static_cast<std::size_t>(t - 1)] != 0) {
      node.parent = heads[static_cast<std::size_t>(t - 1)];
    } else {
      tree.root_id = t;
    }
    tree.nodes.push_back(std::move(node));
  }
  require_valid(tree);
  return tree;
}

std::vector<int> decode_pruefer(std::span<const int> sequence, std::size_t n, int root) {
  if (n == 0) throw UsageError("trees need at least one token");
  if (sequence.size() + 2 != n && !(n == 1 && sequence.empty())) {
    throw UsageError(fmt::format("Pruefer sequence for {} nodes must have length {}", n, n < 2 ? 0 : n - 2));
  }
  if (root < 1 || root > static_cast<int>(n)) throw UsageError("root out of range");
  std::vector<std::vector<int>> adj(n + 1);
  if (n >= 2) {
    std::vector<int> degree(n + 1, 1);
    for (int x : sequence) {
      if (x < 1 || x > static_cast<int>(n)) throw UsageError("Pruefer value out of range");
      ++degree[static_cast<std::size_t>(x)];
    }
    // Leaves are taken in increasing label order.
    std::set<int> leaves;
    for (std::size_t v = 1; v <= n; ++v)
      if (degree[v] == 1) leaves.insert(static_cast<int>(v));
    for (int x : sequence) {
      const int leaf = *leaves.begin();
      leaves.erase(leaves.begin());
      adj[static_cast<std::size_t>(leaf)].push_back(x);
      adj[static_cast<std::size_t>(x)].push_back(leaf);
      if (--degree[static_cast<std::size_t>(x)] == 1) leaves.insert(x);
    }
    const int a = *leaves.begin();
    const int b = *std::next(leaves.begin());
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<int> heads(n, -1);
  heads[static_cast<std::size_t>(root - 1)] = 0;
  std::vector<int> queue{root};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int v = queue[q];
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (heads[static_cast<std::size_t>(w - 1)] == -1) {
        heads[static_cast<std::size_t>(w - 1)] = v;
        queue.push_back(w);
      }
    }
  }
  return heads;
}

SyntaxTree gen_random_tree(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("trees need at least one token");
  Rng rng(seed);
  std::vector<int> sequence(n >= 2 ? n - 2 : 0);
  for (int& x : sequence) x = static_cast<int>(rng.below(n)) + 1;
  const int root = static_cast<int>(rng.below(n)) + 1;
  const auto heads = decode_pruefer(sequence, n, root);
  return tree_from_heads(heads);
}

std::string_view to_string(ToyTask task) {
  return task == ToyTask::RootDistanceParity ? "root_distance_parity" : "within_k_of_root";
}

ToyTask toy_task_from_string(std::string_view name) {
  if (name == "root_distance_parity") return ToyTask::RootDistanceParity;
  if (name == "within_k_of_root") return ToyTask::WithinKOfRoot;
  throw UsageError(fmt::format("unknown toy task '{}'", name));
}

std::vector<int> task_labels(const SyntaxTree& tree, ToyTask task, int k) {
  const TreeMetrics metrics(tree);
  std::vector<int> labels;
  for (int depth : metrics.token_depths()) {
    labels.push_back(task == ToyTask::RootDistanceParity ? depth % 2 : (depth <= k ? 1 : 0));
  }
  return labels;
}

std::vector<const ToyExample*> ToyDataset::split(Split which) const {
  std::vector<const ToyExample*> out;
  for (const auto& e : examples)
    if (e.split == which) out.push_back(&e);
  return out;
}

ToyDataset make_dataset(const ToyDatasetConfig& config) {
  if (config.min_len < 1 || config.max_len < config.min_len) throw UsageError("invalid toy sentence length range");
  ToyDataset data;
  data.config = config;
  Rng rng(config.seed);
  std::set<std::vector<int>> seen;
  const std::pair<Split, std::size_t> plan[] = {
      {Split::Train, config.train}, {Split::Dev, config.dev}, {Split::Test, config.test}};
  for (const auto& [split, count] : plan) {
    std::size_t made = 0, attempts = 0;
    while (made < count) {
      if (++attempts > 1000 * (count + 1)) {
        throw UsageError(fmt::format("cannot draw {} distinct trees with lengths {}..{}", count, config.min_len,
                                     config.max_len));
      }
      const std::size_t n = config.min_len + rng.below(config.max_len - config.min_len + 1);
      SyntaxTree tree = gen_random_tree(n, rng.next_u64());
      std::vector<int> key;
      for (const auto& node : tree.nodes) key.push_back(node.parent.value_or(0));
      if (!seen.insert(key).second) continue;
      auto labels = task_labels(tree, config.task, config.k);
      data.examples.push_back({std::move(tree), std::move(labels), split});
      ++made;
    }
  }
  return data;
}

std::string_view to_string(MaskSource source) {
  switch (source) {
    case MaskSource::Syntax: return "syntax";
    case MaskSource::Random: return "random";
    case MaskSource::Full: return "full";
  }
  return "?";
}

MaskSource mask_source_from_string(std::string_view name) {
  for (auto s : {MaskSource::Syntax, MaskSource::Random, MaskSource::Full})
    if (to_string(s) == name) return s;
  throw UsageError(fmt::format("unknown mask source '{}'", name));
}

Mask random_mask_like(const Mask& mask, Rng& rng) {
  const std::size_t n = mask.n();
  bool full_diagonal = true;
  for (std::size_t i = 0; i < n; ++i) full_diagonal = full_diagonal && mask.at(i, i);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!(full_diagonal && i == j)) candidates.push_back(i * n + j);
  const std::size_t draws = mask.one_count() - (full_diagonal ? n : 0);
  std::vector<std::uint8_t> dense(n * n, 0);
  if (full_diagonal)
    for (std::size_t i = 0; i < n; ++i) dense[i * n + i] = 1;
  // Partial Fisher-Yates: the first `draws` candidates become ones.
  for (std::size_t k = 0; k < draws; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(candidates.size() - k));
    std::swap(candidates[k], candidates[pick]);
    dense[candidates[k]] = 1;
  }
  return Mask(n, mask.spec(), std::move(dense));
}

// ---------------------------------------------------------------------------
// Training

namespace {

constexpr std::size_t kClasses = 2;

struct ToyModel {
  Tensor embeddings;
  std::vector<BlockParams> blocks;
  Tensor w_out, b_out;

  std::size_t parameter_count() const {
    std::size_t c = embeddings.size() + w_out.size() + b_out.size();
    for (const auto& b : blocks) c += b.parameter_count();
    return c;
  }
};

ToyModel init_model(const ExperimentConfig& config, std::size_t vocab, Rng rng) {
  ToyModel m;
  Rng emb = rng.split(1);
  m.embeddings = Tensor::uniform(vocab, config.dims.d_model, 1.0, emb);
  for (std::size_t l = 0; l < config.layers; ++l) {
    Rng r = rng.split(10 + l);
    m.blocks.push_back(BlockParams::init(config.dims, r));
  }
  Rng out = rng.split(2);
  m.w_out = Tensor::uniform(config.dims.d_model, kClasses, 1.0 / std::sqrt(static_cast<double>(config.dims.d_model)), out);
  m.b_out = Tensor(1, kClasses);
  return m;
}

ToyModel zero_like(const ToyModel& m) {
  ToyModel z;
  z.embeddings = Tensor(m.embeddings.rows(), m.embeddings.cols());
  for (const auto& b : m.blocks) z.blocks.push_back(BlockParams::zeros(b.dims));
  z.w_out = Tensor(m.w_out.rows(), m.w_out.cols());
  z.b_out = Tensor(1, kClasses);
  return z;
}

struct Evaluation {
  double loss = 0.0;
  std::size_t correct = 0;
};

// Mean token cross-entropy of one sentence; accumulates gradients into `grads` when given.
Evaluation run_sentence(const ToyModel& model, const ToyExample& ex, std::span<const Mask> masks, MaskMode mode,
                        ToyModel* grads) {
  const std::size_t n = ex.tree.token_count();
  const std::size_t d = model.embeddings.cols();
  Tensor h(n, d);
  for (std::size_t t = 0; t < n; ++t) {
    const auto src = model.embeddings.row(static_cast<std::size_t>(ex.tree.tokens[t].index - 1));
    std::copy(src.begin(), src.end(), h.row(t).begin());
  }
  std::vector<BlockCache> caches;
  for (const auto& block : model.blocks) {
    auto f = block_forward(h, masks, block, mode);
    h = std::move(f.output);
    if (grads) caches.push_back(std::move(f.cache));
  }
  Tensor logits = matmul(h, model.w_out);
  Evaluation ev;
  Tensor dlogits(n, kClasses);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < kClasses; ++c) logits(t, c) += model.b_out(0, c);
    const double mx = std::max(logits(t, 0), logits(t, 1));
    double sum = 0.0;
    for (std::size_t c = 0; c < kClasses; ++c) sum += std::exp(logits(t, c) - mx);
    const auto label = static_cast<std::size_t>(ex.labels[t]);
    ev.loss += -(logits(t, label) - mx - std::log(sum));
    const std::size_t pred = logits(t, 1) > logits(t, 0) ? 1 : 0;
    if (pred == label) ++ev.correct;
    for (std::size_t c = 0; c < kClasses; ++c) {
      const double p = std::exp(logits(t, c) - mx) / sum;
      dlogits(t, c) = (p - (c == label ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  ev.loss /= static_cast<double>(n);
  if (!grads) return ev;

  matmul_tn_acc(h, dlogits, grads->w_out);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t c = 0; c < kClasses; ++c) grads->b_out(0, c) += dlogits(t, c);
  Tensor dh = matmul_nt(dlogits, model.w_out);
  for (std::size_t l = model.blocks.size(); l-- > 0;) {
    auto g = block_backward(caches[l], dh);
    grads->blocks[l].axpy(1.0, g.params);
    dh = std::move(g.input);
  }
  for (std::size_t t = 0; t < n; ++t) {
    auto dst = grads->embeddings.row(static_cast<std::size_t>(ex.tree.tokens[t].index - 1));
    auto src = dh.row(t);
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
  }
  return ev;
}

void apply(ToyModel& model, const ToyModel& grads, double step) {
  auto sub = [step](Tensor& p, const Tensor& g) {
    auto pv = p.values();
    auto gv = g.values();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] -= step * gv[i];
  };
  sub(model.embeddings, grads.embeddings);
  for (std::size_t l = 0; l < model.blocks.size(); ++l) model.blocks[l].descend(grads.blocks[l], step);
  sub(model.w_out, grads.w_out);
  sub(model.b_out, grads.b_out);
}

std::vector<std::vector<Mask>> masks_for(const ExperimentConfig& config, std::span<const ToyExample> examples,
                                         Rng rng) {
  std::vector<std::vector<Mask>> out;
  out.reserve(examples.size());
  for (std::size_t s = 0; s < examples.size(); ++s) {
    const auto& tree = examples[s].tree;
    if (config.source == MaskSource::Full) {
      out.push_back({Mask::full(tree.token_count())});
      continue;
    }
    auto set = build_mask_set(TreeGroup{tree}, config.masks);
    if (config.source == MaskSource::Random) {
      Rng r = rng.split(s);
      for (auto& m : set.masks) m = random_mask_like(m, r);
    }
    out.push_back(std::move(set.masks));
  }
  return out;
}

std::size_t vocab_size(const ToyDataset& dataset) {
  std::size_t vocab = dataset.config.max_len;
  for (const auto& e : dataset.examples) vocab = std::max(vocab, e.tree.token_count());
  return vocab;
}

}  // namespace

std::size_t toy_parameter_count(const ExperimentConfig& config, const ToyDataset& dataset) {
  return init_model(config, vocab_size(dataset), Rng(0)).parameter_count();
}

ToyMetrics train_toy(const ExperimentConfig& config, const ToyDataset& dataset) {
  config.dims.check();
  if (config.layers == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw UsageError("toy experiment: layers, batch size and learning rate must be positive");
  }
  if (config.seeds.empty()) throw UsageError("toy experiment: no seeds");
  std::vector<ToyExample> train, test;
  for (const auto& e : dataset.examples) {
    if (e.split == Split::Train) train.push_back(e);
    if (e.split == Split::Test) test.push_back(e);
  }
  if (train.empty() || test.empty()) throw UsageError("toy experiment: train and test splits must be nonempty");
  const std::size_t vocab = vocab_size(dataset);

  ToyMetrics metrics;
  metrics.source = config.source;
  for (std::uint64_t seed : config.seeds) {
    Rng root(seed);
    ToyModel model = init_model(config, vocab, root.split(1));
    const auto train_masks = masks_for(config, train, root.split(3));
    const auto test_masks = masks_for(config, test, root.split(4));

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    double epoch_loss = 0.0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      Rng shuffle = root.split(2).split(epoch);
      shuffle.shuffle(std::span<std::size_t>(order));
      epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        ToyModel grads = zero_like(model);
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t s = order[k];
          try {
            epoch_loss += run_sentence(model, train[s], train_masks[s], config.attention_mode, &grads).loss;
          } catch (const NumericalError& e) {
            throw NumericalError(fmt::format("toy training diverged (seed {}, epoch {}): {}", seed, epoch, e.what()));
          }
        }
        if (!std::isfinite(epoch_loss)) {
          throw NumericalError(fmt::format("toy training diverged (seed {}, epoch {})", seed, epoch));
        }
        apply(model, grads, config.learning_rate / static_cast<double>(end - start));
      }
      epoch_loss /= static_cast<double>(train.size());
    }

    std::size_t correct = 0, total = 0;
    for (std::size_t s = 0; s < test.size(); ++s) {
      correct += run_sentence(model, test[s], test_masks[s], config.attention_mode, nullptr).correct;
      total += test[s].tree.token_count();
    }
    metrics.runs.push_back({seed, static_cast<double>(correct) / static_cast<double>(total), epoch_loss,
                            model.parameter_count()});
  }
  double sum = 0.0;
  for (const auto& r : metrics.runs) sum += r.test_accuracy;
  metrics.mean = sum / static_cast<double>(metrics.runs.size());
  double var = 0.0;
  for (const auto& r : metrics.runs) var += (r.test_accuracy - metrics.mean) * (r.test_accuracy - metrics.mean);
  metrics.stddev = metrics.runs.size() > 1 ? std::sqrt(var / static_cast<double>(metrics.runs.size() - 1)) : 0.0;
  return metrics;
}

std::string to_tsv(std::span<const ToyMetrics> metrics) {
  std::string out = "mode\tseed\ttest_accuracy\n";
  for (const auto& m : metrics)
    for (const auto& r : m.runs) out += fmt::format("{}\t{}\t{:.6f}\n", to_string(m.source), r.seed, r.test_accuracy);
  for (const auto& m : metrics) {
    out += fmt::format("{}\tmean\t{:.6f}\n", to_string(m.source), m.mean);
    out += fmt::format("{}\tstd\t{:.6f}\n", to_string(m.source), m.stddev);
  }
  return out;
}

}  // namespace treeattn
