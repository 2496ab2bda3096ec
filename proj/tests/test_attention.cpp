#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "treeattn/error.hpp"
#include "treeattn/gradcheck.hpp"
#include "treeattn/toytask.hpp"

using namespace treeattn;

namespace {

double max_row_sum_error(const Tensor& w) {
  double worst = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = 0.0;
    for (double x : w.row(i)) s += x;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

BlockParams identity_reduction(std::size_t d) {
  auto p = BlockParams::zeros(BlockDims{d, 1, d, 2 * d});
  p.attention.heads[0].wq = Tensor::identity(d);
  p.attention.heads[0].wk = Tensor::identity(d);
  p.attention.heads[0].wv = Tensor::identity(d);
  p.attention.wo = Tensor::identity(d);
  p.topical.wv = Tensor::identity(d);
  p.norm1.gain.fill(1.0);
  p.norm2.gain.fill(1.0);
  return p;
}

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Tensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t c = 0; c < t.cols(); ++c) out(i, c) = t(perm[i], c);
  return out;
}

Mask permute_mask(const Mask& m, const std::vector<std::size_t>& perm) {
  std::vector<std::uint8_t> d(m.n() * m.n());
  for (std::size_t i = 0; i < m.n(); ++i)
    for (std::size_t j = 0; j < m.n(); ++j) d[i * m.n() + j] = m.at(perm[i], perm[j]);
  return Mask(m.n(), m.spec(), d);
}

}  // namespace

TEST_CASE("masked_attention: singleton") {
  Rng rng(1);
  Tensor q = Tensor::uniform(1, 3, 1.0, rng), k = Tensor::uniform(1, 3, 1.0, rng), v = Tensor::uniform(1, 3, 1.0, rng);
  for (auto mode : {MaskMode::Additive, MaskMode::Multiplicative}) {
    auto r = masked_attention(q, k, v, Mask::full(1), mode);
    CHECK(r.weights == Tensor{{1.0}});
    CHECK(r.output == v);
  }
}

TEST_CASE("masked_attention: all-ones mask is vanilla attention bit for bit") {
  Rng rng(2);
  for (int it = 0; it < 20; ++it) {
    const std::size_t n = 1 + rng.below(12);
    Tensor q = Tensor::uniform(n, 4, 2.0, rng), k = Tensor::uniform(n, 4, 2.0, rng), v = Tensor::uniform(n, 4, 2.0, rng);
    auto vanilla = vanilla_attention(q, k, v);
    for (auto mode : {MaskMode::Additive, MaskMode::Multiplicative}) {
      auto r = masked_attention(q, k, v, Mask::full(n), mode);
      CHECK(r.weights == vanilla.weights);
      CHECK(r.output == vanilla.output);
    }
  }
}

TEST_CASE("masked_attention: identity mask in additive mode") {
  Rng rng(7);
  Tensor q = Tensor::uniform(5, 4, 1.0, rng), k = Tensor::uniform(5, 4, 1.0, rng), v = Tensor::uniform(5, 4, 1.0, rng);
  auto r = masked_attention(q, k, v, Mask::identity(5), MaskMode::Additive);
  CHECK(r.weights == Tensor::identity(5));
  CHECK(r.output == v);
}

TEST_CASE("masked_attention: matches the scalar-loop oracle") {
  Rng rng(4);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 1 + rng.below(6), dh = 1 + rng.below(5);
    Tensor q = Tensor::uniform(n, dh, 1.5, rng), k = Tensor::uniform(n, dh, 1.5, rng), v = Tensor::uniform(n, dh, 1.5, rng);
    auto m = oracle::random_mask(n, rng.uniform(), rng);
    for (auto mode : {MaskMode::Additive, MaskMode::Multiplicative}) {
      auto r = masked_attention(q, k, v, m, mode);
      auto o = oracle::attention(q, k, v, m, mode);
      CHECK(max_abs_diff(r.weights, o.weights) < 1e-12);
      CHECK(max_abs_diff(r.output, o.output) < 1e-12);
      CHECK(max_row_sum_error(r.weights) <= 1e-12);
      if (mode == MaskMode::Additive)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            if (!m.at(i, j)) CHECK(r.weights(i, j) == 0.0);
    }
  }
}

TEST_CASE("masked_attention: errors") {
  Tensor q(3, 2, 0.1), k(3, 2, 0.2), v(3, 2, 0.3);
  std::vector<std::uint8_t> d{1, 0, 0, 0, 0, 0, 0, 0, 1};
  Mask m(3, {MaskCategory::Parent, 1, TreeKind::Dependency}, d);
  CHECK_THROWS_AS(masked_attention(q, k, v, m, MaskMode::Additive), StructureError);
  CHECK_NOTHROW(masked_attention(q, k, v, m, MaskMode::Multiplicative));
  CHECK_THROWS_AS(masked_attention(q, k, v, Mask::full(4), MaskMode::Additive), StructureError);
  CHECK_THROWS_AS(masked_attention(q, Tensor(3, 3), v, Mask::full(3), MaskMode::Additive), StructureError);
  Tensor bad = q;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(masked_attention(bad, k, v, Mask::full(3), MaskMode::Additive), NumericalError);
}

TEST_CASE("multi_head_masked: identity single head reduces to vanilla attention") {
  Rng rng(3);
  Tensor h = Tensor::uniform(5, 4, 1.0, rng);
  auto p = identity_reduction(4);
  auto out = multi_head_masked(h, p.attention, Mask::full(5), MaskMode::Additive);
  CHECK(out == vanilla_attention(h, h, h).output);
}

TEST_CASE("multi_head_masked: identical masks give identical outputs") {
  Rng rng(3);
  Tensor h = Tensor::uniform(4, 8, 1.0, rng);
  auto p = BlockParams::init(BlockDims{8, 2, 4, 8}, rng);
  auto m = oracle::random_mask(4, 0.5, rng);
  auto copy = Mask(m.n(), {MaskCategory::Sibling, 3, TreeKind::Constituency},
                   std::vector<std::uint8_t>(m.dense().begin(), m.dense().end()));
  CHECK(multi_head_masked(h, p.attention, m, MaskMode::Additive) ==
        multi_head_masked(h, p.attention, copy, MaskMode::Additive));
}

TEST_CASE("multi_head_masked: matches head-by-head oracle") {
  Rng rng(3);
  Tensor h = Tensor::uniform(4, 8, 1.0, rng);
  auto p = BlockParams::init(BlockDims{8, 2, 4, 8}, rng);
  auto m = oracle::random_mask(4, 0.5, rng);
  for (auto mode : {MaskMode::Additive, MaskMode::Multiplicative})
    CHECK(max_abs_diff(multi_head_masked(h, p.attention, m, mode), oracle::multi_head(h, p.attention, m, mode)) < 1e-12);
}

TEST_CASE("topical_attention: single sub-network") {
  Rng rng(11);
  auto p = BlockParams::init(BlockDims{8, 2, 4, 8}, rng);
  std::vector<Tensor> stack{Tensor::uniform(3, 8, 1.0, rng)};
  auto r = topical_attention(stack, p.topical);
  for (std::size_t t = 0; t < 3; ++t) CHECK(r.weights(t, 0) == 1.0);
  p.topical.wv = Tensor::identity(8);
  CHECK(topical_attention(stack, p.topical).output == stack[0]);
}

TEST_CASE("topical_attention: matches the per-token oracle") {
  Rng rng(11);
  auto p = BlockParams::init(BlockDims{8, 2, 4, 8}, rng);
  p.topical.q_task = Tensor::uniform(1, 8, 2.0, rng);
  std::vector<Tensor> stack;
  for (int j = 0; j < 4; ++j) stack.push_back(Tensor::uniform(3, 8, 1.0, rng));
  auto r = topical_attention(stack, p.topical);
  auto o = oracle::topical(stack, p.topical);
  CHECK(max_abs_diff(r.output, o.output) < 1e-12);
  CHECK(max_abs_diff(r.weights, o.weights) < 1e-12);
  CHECK(max_row_sum_error(r.weights) <= 1e-12);
  CHECK_THROWS_AS(topical_attention(std::span<const Tensor>{}, p.topical), StructureError);
}

TEST_CASE("block_forward: reduction to a standard transformer sublayer") {
  Rng rng(13);
  const std::size_t n = 5, d = 6;
  Tensor h = Tensor::uniform(n, d, 1.0, rng);
  auto p = identity_reduction(d);
  const Mask m = Mask::full(n);
  auto out = block_forward(h, std::span<const Mask>(&m, 1), p, MaskMode::Additive).output;
  LayerNormParams ln{Tensor(1, d, 1.0), Tensor(1, d, 0.0)};
  auto expect = oracle::layer_norm(oracle::layer_norm(h + vanilla_attention(h, h, h).output, ln), ln);
  CHECK(max_abs_diff(out, expect) < 1e-9);
}

TEST_CASE("block_forward: matches the composed oracle") {
  Rng rng(5);
  const std::size_t n = 6;
  BlockDims dims{16, 4, 4, 24};
  Tensor h = Tensor::uniform(n, 16, 1.0, rng);
  auto p = BlockParams::init(dims, rng);
  p.topical.q_task = Tensor::uniform(1, 16, 1.0, rng);
  std::vector<Mask> masks;
  for (int j = 0; j < 7; ++j) masks.push_back(oracle::random_mask(n, 0.3, rng));
  for (auto mode : {MaskMode::Additive, MaskMode::Multiplicative}) {
    auto out = block_forward(h, masks, p, mode).output;
    CHECK(max_abs_diff(out, oracle::block(h, masks, p, mode)) < 1e-10);
  }
}

TEST_CASE("block_forward: permutation equivariance and mask order invariance") {
  Rng rng(21);
  const std::size_t n = 7;
  BlockDims dims{8, 2, 4, 16};
  Tensor h = Tensor::uniform(n, 8, 1.0, rng);
  auto p = BlockParams::init(dims, rng);
  p.topical.q_task = Tensor::uniform(1, 8, 1.0, rng);
  auto tree = gen_random_tree(n, 4);
  auto set = build_mask_set(TreeGroup{tree}, MaskConfig{4, {TreeKind::Dependency}, true, true, false});
  auto base = block_forward(h, set, p, MaskMode::Additive).output;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<Mask> pm;
  for (const auto& m : set.masks) pm.push_back(permute_mask(m, perm));
  auto permuted = block_forward(permute_rows(h, perm), pm, p, MaskMode::Additive).output;
  CHECK(max_abs_diff(permuted, permute_rows(base, perm)) < 1e-12);

  std::vector<Mask> reordered(set.masks.rbegin(), set.masks.rend());
  auto f1 = block_forward(h, set, p, MaskMode::Additive);
  auto f2 = block_forward(h, reordered, p, MaskMode::Additive);
  CHECK(max_abs_diff(f1.cache.topical_out, f2.cache.topical_out) < 1e-12);
}

TEST_CASE("block_backward: zero upstream gradient") {
  Rng rng(8);
  BlockDims dims{8, 2, 4, 16};
  Tensor h = Tensor::uniform(4, 8, 1.0, rng);
  auto p = BlockParams::init(dims, rng);
  std::vector<Mask> masks{oracle::random_mask(4, 0.5, rng), Mask::full(4)};
  auto f = block_forward(h, masks, p, MaskMode::Additive);
  auto g = block_backward(f.cache, Tensor(4, 8));
  for (double x : g.input.values()) CHECK(x == 0.0);
  for (double x : g.params.flatten()) CHECK(x == 0.0);
}

TEST_CASE("block_backward: single-token closed form") {
  Rng rng(9);
  BlockDims dims{6, 2, 3, 8};
  Tensor h = Tensor::uniform(1, 6, 1.0, rng);
  auto p = BlockParams::init(dims, rng);
  const Mask m = Mask::full(1);
  auto f = block_forward(h, std::span<const Mask>(&m, 1), p, MaskMode::Additive);
  auto g = block_backward(f.cache, Tensor(1, 6, 1.0));
  // loss = sum of gain * xhat + bias, and xhat sums to zero, so with unit gains only the
  // output bias and gain see a gradient.
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(g.params.norm2.bias(0, c) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.params.norm2.gain(0, c) == doctest::Approx(f.output(0, c)).epsilon(1e-9));
    CHECK(std::abs(g.input(0, c)) < 1e-9);
  }
}

TEST_CASE("block_backward: stale cache") {
  CHECK_THROWS_AS(block_backward(BlockCache{}, Tensor(1, 1)), StructureError);
  Rng rng(8);
  auto p = BlockParams::init(BlockDims{8, 2, 4, 16}, rng);
  const Mask m = Mask::full(3);
  auto f = block_forward(Tensor::uniform(3, 8, 1.0, rng), std::span<const Mask>(&m, 1), p, MaskMode::Additive);
  CHECK_THROWS_AS(block_backward(f.cache, Tensor(2, 8)), StructureError);
}

TEST_CASE("grad_check: scalar examples") {
  Objective square = [](std::span<const double> t, std::vector<double>* g) {
    if (g) *g = {2.0 * t[0]};
    return t[0] * t[0];
  };
  auto r = grad_check(square, {3.0}, 1e-5);
  CHECK(std::abs(r.numeric[0] - 6.0) < 1e-9);
  Objective linear = [](std::span<const double> t, std::vector<double>* g) {
    if (g) *g = {2.0, -3.0};
    return 2.0 * t[0] - 3.0 * t[1];
  };
  for (double eps : {1e-3, 1e-5, 1e-7}) CHECK(grad_check(linear, {0.5, 1.5}, eps).max_relative_error < 1e-8);
  Objective bad = [](std::span<const double>, std::vector<double>* g) {
    if (g) *g = {0.0};
    return std::nan("");
  };
  CHECK_THROWS_AS(grad_check(bad, {1.0}), NumericalError);
}

TEST_CASE("block_backward: finite differences on a random instance") {
  for (auto mode : {MaskMode::Additive, MaskMode::Multiplicative}) {
    Rng rng(5);
    BlockDims dims{8, 2, 4, 12};
    const std::size_t n = 5;
    Tensor h = Tensor::uniform(n, 8, 1.0, rng);
    auto p = BlockParams::init(dims, rng);
    p.topical.q_task = Tensor::uniform(1, 8, 1.0, rng);
    std::vector<Mask> masks;
    for (int j = 0; j < 3; ++j) masks.push_back(oracle::random_mask(n, 0.4, rng));
    auto report = grad_check(block_objective(h, masks, dims, mode), block_theta(p, h));
    CHECK(report.max_relative_error < 1e-5);
  }
}

TEST_CASE("sparse_masked_attention") {
  Rng rng(9);
  {
    const std::size_t n = 64;
    Tensor q = Tensor::uniform(n, 8, 1.0, rng), k = Tensor::uniform(n, 8, 1.0, rng), v = Tensor::uniform(n, 8, 1.0, rng);
    auto r = sparse_masked_attention(q, k, v, Mask::identity(n));
    CHECK(r.visited_pairs == 64);
    CHECK(r.output == v);
    auto full = sparse_masked_attention(q, k, v, Mask::full(n));
    CHECK(full.visited_pairs == n * n);
    CHECK(full.output == masked_attention(q, k, v, Mask::full(n), MaskMode::Additive).output);
  }
  {
    Rng r9(9);
    const std::size_t n = 128;
    Tensor q = Tensor::uniform(n, 8, 1.0, r9), k = Tensor::uniform(n, 8, 1.0, r9), v = Tensor::uniform(n, 8, 1.0, r9);
    auto m = oracle::random_mask(n, 0.05, r9);
    auto s = sparse_masked_attention(q, k, v, m);
    auto d = masked_attention(q, k, v, m, MaskMode::Additive);
    CHECK(max_abs_diff(s.output, d.output) < 1e-9);
    CHECK(s.visited_pairs == m.one_count());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r_ = 0; r_ < m.row(i).size(); ++r_)
        CHECK(std::abs(s.weights[i][r_] - d.weights(i, std::size_t(m.row(i)[r_]))) < 1e-12);
  }
  std::vector<std::uint8_t> d{1, 0, 0, 0};
  Tensor x(2, 2, 0.5);
  CHECK_THROWS_AS(sparse_masked_attention(x, x, x, Mask(2, {}, d)), StructureError);
}

TEST_CASE("params: flatten and assign round trip, init bounds") {
  Rng rng(1);
  BlockDims dims{8, 2, 4, 16};
  auto p = BlockParams::init(dims, rng);
  auto flat = p.flatten();
  CHECK(flat.size() == p.parameter_count());
  auto z = BlockParams::zeros(dims);
  z.assign(flat);
  CHECK(z.flatten() == flat);
  for (double x : p.attention.heads[0].wq.values()) CHECK(std::abs(x) <= 1.0 / std::sqrt(8.0));
  for (double x : p.ffn.w2.values()) CHECK(std::abs(x) <= 1.0 / std::sqrt(16.0));
  for (double x : p.norm1.gain.values()) CHECK(x == 1.0);
  CHECK_THROWS_AS(BlockDims({8, 3, 4, 16}).check(), UsageError);
}
