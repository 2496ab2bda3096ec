#include "treeattn/attention.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "treeattn/error.hpp"
#include "treeattn/rng.hpp"

namespace treeattn {

std::string_view to_string(MaskMode mode) { return mode == MaskMode::Additive ? "additive" : "multiplicative"; }

MaskMode mask_mode_from_string(std::string_view name) {
  if (name == "additive") return MaskMode::Additive;
  if (name == "multiplicative") return MaskMode::Multiplicative;
  throw UsageError(fmt::format("unknown masking mode '{}'", name));
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
  return cdf + x * pdf;
}

namespace {

// Softmax of one row of raw (unscaled) dot products. `allowed` is null for unmasked rows.
// Every path evaluates the kept entries in ascending column order with identical arithmetic,
// so an all-ones mask reproduces the unmasked result bit for bit.
void softmax_row(std::span<const double> raw, const std::uint8_t* allowed, MaskMode mode, double scale,
                 std::span<double> out, std::size_t row_index) {
  const std::size_t n = raw.size();
  const bool skip_masked = allowed != nullptr && mode == MaskMode::Additive;
  double max = -INFINITY;
  std::size_t kept = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (skip_masked && !allowed[j]) {
      out[j] = 0.0;
      continue;
    }
    ++kept;
    double s = raw[j];
    if (!std::isfinite(s)) throw NumericalError(fmt::format("non-finite attention score in row {}", row_index + 1));
    if (allowed != nullptr && mode == MaskMode::Multiplicative) s = s * static_cast<double>(allowed[j]);
    s = s / scale;
    out[j] = s;
    if (s > max) max = s;
  }
  if (kept == 0) {
    throw StructureError(fmt::format("degenerate mask row {}: no key is visible in additive mode", row_index + 1));
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (skip_masked && !allowed[j]) continue;
    out[j] = std::exp(out[j] - max);
    sum += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (skip_masked && !allowed[j]) continue;
    out[j] = out[j] / sum;
  }
}

Tensor attention_weights(const Tensor& raw, const Mask* mask, MaskMode mode, double scale) {
  const std::size_t n = raw.rows();
  Tensor w(n, raw.cols(), 0.0, Axis::Tokens, Axis::Tokens);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* allowed = mask ? mask->dense().data() + i * mask->n() : nullptr;
    softmax_row(raw.row(i), allowed, mode, scale, w.row(i), i);
  }
  return w;
}

void check_qkv(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rows() != k.rows() || k.rows() != v.rows()) {
    throw StructureError(fmt::format("attention: Q, K, V row counts differ ({}, {}, {})", q.rows(), k.rows(), v.rows()));
  }
  if (q.cols() != k.cols()) throw StructureError("attention: Q and K widths differ");
  if (q.rows() == 0) throw StructureError("attention: empty input");
}

}  // namespace

AttentionResult masked_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask,
                                 MaskMode mode) {
  check_qkv(q, k, v);
  if (mask.n() != q.rows()) {
    throw StructureError(fmt::format("attention: mask n = {} but {} tokens", mask.n(), q.rows()));
  }
  const Tensor raw = matmul_nt(q, k);
  AttentionResult r;
  r.weights = attention_weights(raw, &mask, mode, std::sqrt(static_cast<double>(q.cols())));
  r.output = matmul(r.weights, v);
  return r;
}

AttentionResult vanilla_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  check_qkv(q, k, v);
  const Tensor raw = matmul_nt(q, k);
  AttentionResult r;
  r.weights = attention_weights(raw, nullptr, MaskMode::Additive, std::sqrt(static_cast<double>(q.cols())));
  r.output = matmul(r.weights, v);
  return r;
}

SparseAttentionResult sparse_masked_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask) {
  check_qkv(q, k, v);
  const std::size_t n = q.rows();
  if (mask.n() != n) throw StructureError(fmt::format("attention: mask n = {} but {} tokens", mask.n(), n));
  const double scale = std::sqrt(static_cast<double>(q.cols()));
  SparseAttentionResult r;
  r.output = Tensor(n, v.cols());
  r.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto keys = mask.row(i);
    if (keys.empty()) {
      throw StructureError(fmt::format("degenerate mask row {}: no key is visible in additive mode", i + 1));
    }
    auto& w = r.weights[i];
    w.resize(keys.size());
    auto qi = q.row(i);
    double max = -INFINITY;
    for (std::size_t r_ = 0; r_ < keys.size(); ++r_) {
      auto kj = k.row(static_cast<std::size_t>(keys[r_]));
      double s = 0.0;
      for (std::size_t c = 0; c < qi.size(); ++c) s += qi[c] * kj[c];
      s = s / scale;
      w[r_] = s;
      if (s > max) max = s;
      ++r.visited_pairs;
    }
    double sum = 0.0;
    for (double& x : w) {
      x = std::exp(x - max);
      sum += x;
    }
    for (double& x : w) x = x / sum;
    auto out = r.output.row(i);
    for (std::size_t r_ = 0; r_ < keys.size(); ++r_) {
      auto vj = v.row(static_cast<std::size_t>(keys[r_]));
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[r_] * vj[c];
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Parameters

void BlockDims::check() const {
  if (d_model == 0 || heads == 0 || d_head == 0 || d_ff == 0) throw UsageError("model dimensions must be positive");
  if (heads * d_head != d_model) {
    throw UsageError(fmt::format("d_model ({}) must equal heads ({}) x d_head ({})", d_model, heads, d_head));
  }
}

BlockParams BlockParams::zeros(const BlockDims& dims) {
  dims.check();
  BlockParams p;
  p.dims = dims;
  const std::size_t d = dims.d_model;
  p.attention.heads.resize(dims.heads);
  for (auto& h : p.attention.heads) {
    h.wq = Tensor(d, dims.d_head);
    h.wk = Tensor(d, dims.d_head);
    h.wv = Tensor(d, dims.d_head);
  }
  p.attention.wo = Tensor(dims.heads * dims.d_head, d);
  p.topical.q_task = Tensor(1, d);
  p.topical.wk = Tensor(d, d);
  p.topical.wv = Tensor(d, d);
  p.ffn.w1 = Tensor(d, dims.d_ff);
  p.ffn.b1 = Tensor(1, dims.d_ff);
  p.ffn.w2 = Tensor(dims.d_ff, d);
  p.ffn.b2 = Tensor(1, d);
  p.norm1.gain = Tensor(1, d);
  p.norm1.bias = Tensor(1, d);
  p.norm2.gain = Tensor(1, d);
  p.norm2.bias = Tensor(1, d);
  return p;
}

BlockParams BlockParams::init(const BlockDims& dims, Rng& rng) {
  BlockParams p = zeros(dims);
  const double d = static_cast<double>(dims.d_model);
  const double in_model = 1.0 / std::sqrt(d);
  for (auto& h : p.attention.heads) {
    h.wq = Tensor::uniform(dims.d_model, dims.d_head, in_model, rng);
    h.wk = Tensor::uniform(dims.d_model, dims.d_head, in_model, rng);
    h.wv = Tensor::uniform(dims.d_model, dims.d_head, in_model, rng);
  }
  p.attention.wo = Tensor::uniform(dims.heads * dims.d_head, dims.d_model,
                                   1.0 / std::sqrt(static_cast<double>(dims.heads * dims.d_head)), rng);
  p.topical.q_task = Tensor::uniform(1, dims.d_model, in_model, rng);
  p.topical.wk = Tensor::uniform(dims.d_model, dims.d_model, in_model, rng);
  p.topical.wv = Tensor::uniform(dims.d_model, dims.d_model, in_model, rng);
  p.ffn.w1 = Tensor::uniform(dims.d_model, dims.d_ff, in_model, rng);
  p.ffn.w2 = Tensor::uniform(dims.d_ff, dims.d_model, 1.0 / std::sqrt(static_cast<double>(dims.d_ff)), rng);
  p.norm1.gain.fill(1.0);
  p.norm2.gain.fill(1.0);
  return p;
}

std::size_t BlockParams::parameter_count() const {
  std::size_t count = 0;
  for_each_tensor([&](const Tensor& t) { count += t.size(); });
  return count;
}

std::vector<double> BlockParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for_each_tensor([&](const Tensor& t) { flat.insert(flat.end(), t.values().begin(), t.values().end()); });
  return flat;
}

void BlockParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw StructureError(fmt::format("expected {} parameters, got {}", parameter_count(), flat.size()));
  }
  std::size_t at = 0;
  for_each_tensor([&](Tensor& t) {
    auto v = t.values();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(at), flat.begin() + static_cast<std::ptrdiff_t>(at + v.size()),
              v.begin());
    at += v.size();
  });
}

void BlockParams::axpy(double alpha, const BlockParams& other) {
  std::vector<const Tensor*> g;
  other.for_each_tensor([&](const Tensor& t) { g.push_back(&t); });
  std::size_t at = 0;
  for_each_tensor([&](Tensor& t) {
    if (at >= g.size() || g[at]->size() != t.size()) throw StructureError("gradient shape mismatch");
    auto dst = t.values();
    auto src = g[at]->values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
    ++at;
  });
}

// ---------------------------------------------------------------------------
// Forward

namespace {

void check_params(const BlockParams& p, const Tensor& h) {
  p.dims.check();
  if (h.cols() != p.dims.d_model) {
    throw StructureError(fmt::format("input width {} does not match d_model {}", h.cols(), p.dims.d_model));
  }
  if (p.attention.heads.size() != p.dims.heads) throw StructureError("head count does not match dimensions");
}

struct HeadProjections {
  std::vector<Tensor> q, k, v, raw;
};

HeadProjections project_heads(const Tensor& h, const AttentionParams& params) {
  HeadProjections out;
  for (const auto& head : params.heads) {
    out.q.push_back(matmul(h, head.wq));
    out.k.push_back(matmul(h, head.wk));
    out.v.push_back(matmul(h, head.wv));
    out.raw.push_back(matmul_nt(out.q.back(), out.k.back()));
  }
  return out;
}

// Runs every head under one mask; fills per-head weights and the concatenated head outputs.
Tensor run_sub_network(const HeadProjections& proj, const Mask& mask, MaskMode mode, std::vector<Tensor>* weights) {
  const std::size_t n = proj.q.front().rows();
  const std::size_t dh = proj.q.front().cols();
  const double scale = std::sqrt(static_cast<double>(dh));
  if (mask.n() != n) throw StructureError(fmt::format("mask n = {} but {} tokens", mask.n(), n));
  Tensor concat(n, dh * proj.q.size());
  for (std::size_t i = 0; i < proj.q.size(); ++i) {
    Tensor w = attention_weights(proj.raw[i], &mask, mode, scale);
    Tensor a = matmul(w, proj.v[i]);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t c = 0; c < dh; ++c) concat(t, i * dh + c) = a(t, c);
    if (weights) weights->push_back(std::move(w));
  }
  return concat;
}

struct TopicalDetail {
  std::vector<Tensor> k, v;
  TopicalResult result;
};

TopicalDetail topical_detail(std::span<const Tensor> stack, const TopicalParams& params) {
  if (stack.empty()) throw StructureError("topical attention needs at least one sub-network");
  const std::size_t n = stack.front().rows();
  const std::size_t d = params.q_task.cols();
  if (params.q_task.rows() != 1 || params.wk.rows() != d || params.wv.rows() != d) {
    throw StructureError("topical parameters have inconsistent shapes");
  }
  TopicalDetail out;
  for (const auto& hj : stack) {
    if (hj.rows() != n || hj.cols() != d) throw StructureError("topical attention: sub-network outputs differ in shape");
    out.k.push_back(matmul(hj, params.wk));
    out.v.push_back(matmul(hj, params.wv));
  }
  const std::size_t m = stack.size();
  const double scale = std::sqrt(static_cast<double>(d));
  out.result.weights = Tensor(n, m, 0.0, Axis::Tokens, Axis::Subnetworks);
  out.result.output = Tensor(n, out.v.front().cols());
  std::vector<double> raw(m);
  auto q = params.q_task.row(0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < m; ++j) {
      auto kj = out.k[j].row(t);
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[c] * kj[c];
      raw[j] = s;
    }
    softmax_row(raw, nullptr, MaskMode::Additive, scale, out.result.weights.row(t), t);
    auto o = out.result.output.row(t);
    for (std::size_t j = 0; j < m; ++j) {
      const double w = out.result.weights(t, j);
      auto vj = out.v[j].row(t);
      for (std::size_t c = 0; c < o.size(); ++c) o[c] += w * vj[c];
    }
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& p, Tensor& hat, std::vector<double>& inv_std) {
  const std::size_t n = x.rows(), d = x.cols();
  hat = Tensor(n, d);
  inv_std.assign(n, 0.0);
  Tensor y(n, d);
  for (std::size_t t = 0; t < n; ++t) {
    auto xr = x.row(t);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[t] = is;
    for (std::size_t c = 0; c < d; ++c) {
      hat(t, c) = (xr[c] - mean) * is;
      y(t, c) = p.gain(0, c) * hat(t, c) + p.bias(0, c);
    }
  }
  return y;
}

Tensor layer_norm_backward(const Tensor& dy, const Tensor& hat, const std::vector<double>& inv_std,
                           const LayerNormParams& p, LayerNormParams& grads) {
  const std::size_t n = dy.rows(), d = dy.cols();
  Tensor dx(n, d);
  std::vector<double> dhat(d);
  for (std::size_t t = 0; t < n; ++t) {
    double mean1 = 0.0, mean2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      grads.gain(0, c) += dy(t, c) * hat(t, c);
      grads.bias(0, c) += dy(t, c);
      dhat[c] = dy(t, c) * p.gain(0, c);
      mean1 += dhat[c];
      mean2 += dhat[c] * hat(t, c);
    }
    mean1 /= static_cast<double>(d);
    mean2 /= static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c) dx(t, c) = inv_std[t] * (dhat[c] - mean1 - hat(t, c) * mean2);
  }
  return dx;
}

void add_row_bias(Tensor& x, const Tensor& bias) {
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t c = 0; c < x.cols(); ++c) x(t, c) += bias(0, c);
}

void accumulate_column_sums(const Tensor& x, Tensor& acc) {
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t c = 0; c < x.cols(); ++c) acc(0, c) += x(t, c);
}

}  // namespace

Tensor multi_head_masked(const Tensor& h, const AttentionParams& params, const Mask& mask, MaskMode mode) {
  if (params.heads.empty()) throw StructureError("attention needs at least one head");
  if (h.cols() != params.heads.front().wq.rows()) throw StructureError("input width does not match W^Q");
  const auto proj = project_heads(h, params);
  return matmul(run_sub_network(proj, mask, mode, nullptr), params.wo);
}

TopicalResult topical_attention(std::span<const Tensor> stack, const TopicalParams& params) {
  return topical_detail(stack, params).result;
}

BlockForward block_forward(const Tensor& h, std::span<const Mask> masks, const BlockParams& params, MaskMode mode) {
  check_params(params, h);
  if (masks.empty()) throw StructureError("block needs at least one mask");
  const std::size_t n = h.rows();
  for (const auto& m : masks) {
    if (m.n() != n) throw StructureError(fmt::format("mask n = {} but {} tokens", m.n(), n));
  }

  BlockForward f;
  BlockCache& c = f.cache;
  c.params = params;
  c.mode = mode;
  c.masks.assign(masks.begin(), masks.end());
  c.input = h;

  auto proj = project_heads(h, params.attention);
  for (const auto& mask : masks) {
    c.weights.emplace_back();
    c.concat.push_back(run_sub_network(proj, mask, mode, &c.weights.back()));
    c.sub_out.push_back(matmul(c.concat.back(), params.attention.wo));
  }
  c.q = std::move(proj.q);
  c.k = std::move(proj.k);
  c.v = std::move(proj.v);

  auto topical = topical_detail(c.sub_out, params.topical);
  c.topical_k = std::move(topical.k);
  c.topical_v = std::move(topical.v);
  c.topical_weights = std::move(topical.result.weights);
  c.topical_out = std::move(topical.result.output);

  Tensor x1 = h + c.topical_out;
  c.hidden1 = layer_norm(x1, params.norm1, c.norm1_hat, c.norm1_inv_std);
  c.ffn_pre = matmul(c.hidden1, params.ffn.w1);
  add_row_bias(c.ffn_pre, params.ffn.b1);
  c.ffn_act = c.ffn_pre;
  for (double& v : c.ffn_act.values()) v = gelu(v);
  Tensor x2 = matmul(c.ffn_act, params.ffn.w2);
  add_row_bias(x2, params.ffn.b2);
  x2 += c.hidden1;
  f.output = layer_norm(x2, params.norm2, c.norm2_hat, c.norm2_inv_std);
  require_finite(f.output, "block output");
  c.valid = true;
  return f;
}

BlockForward block_forward(const Tensor& h, const MaskSet& masks, const BlockParams& params, MaskMode mode) {
  return block_forward(h, std::span<const Mask>(masks.masks), params, mode);
}

// ---------------------------------------------------------------------------
// Backward

BlockGradients block_backward(const BlockCache& c, const Tensor& grad_output) {
  if (!c.valid) throw StructureError("block_backward: cache is empty or stale");
  const std::size_t n = c.input.rows();
  const BlockParams& p = c.params;
  const std::size_t d = p.dims.d_model;
  const std::size_t dh = p.dims.d_head;
  if (grad_output.rows() != n || grad_output.cols() != d) {
    throw StructureError(fmt::format("block_backward: gradient is {}x{} but the cached output is {}x{}",
                                     grad_output.rows(), grad_output.cols(), n, d));
  }

  BlockGradients g;
  g.params = BlockParams::zeros(p.dims);
  BlockParams& gp = g.params;

  // Second residual + layer norm.
  Tensor dx2 = layer_norm_backward(grad_output, c.norm2_hat, c.norm2_inv_std, p.norm2, gp.norm2);
  Tensor dy1 = dx2;
  matmul_tn_acc(c.ffn_act, dx2, gp.ffn.w2);
  accumulate_column_sums(dx2, gp.ffn.b2);
  Tensor dz = matmul_nt(dx2, p.ffn.w2);
  for (std::size_t i = 0; i < dz.size(); ++i) dz.values()[i] *= gelu_derivative(c.ffn_pre.values()[i]);
  matmul_tn_acc(c.hidden1, dz, gp.ffn.w1);
  accumulate_column_sums(dz, gp.ffn.b1);
  dy1 += matmul_nt(dz, p.ffn.w1);

  // First residual + layer norm.
  Tensor dx1 = layer_norm_backward(dy1, c.norm1_hat, c.norm1_inv_std, p.norm1, gp.norm1);
  g.input = dx1;
  const Tensor& dtopical = dx1;

  // Topical attention.
  const std::size_t m = c.sub_out.size();
  const double tscale = std::sqrt(static_cast<double>(d));
  std::vector<Tensor> dtk(m, Tensor(n, d)), dtv(m, Tensor(n, d));
  auto q = p.topical.q_task.row(0);
  auto dq = gp.topical.q_task.row(0);
  std::vector<double> dw(m);
  for (std::size_t t = 0; t < n; ++t) {
    auto go = dtopical.row(t);
    double weighted = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      auto vj = c.topical_v[j].row(t);
      double s = 0.0;
      for (std::size_t col = 0; col < d; ++col) s += go[col] * vj[col];
      dw[j] = s;
      weighted += c.topical_weights(t, j) * s;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double w = c.topical_weights(t, j);
      const double ds = w * (dw[j] - weighted) / tscale;
      auto kj = c.topical_k[j].row(t);
      auto dkj = dtk[j].row(t);
      auto dvj = dtv[j].row(t);
      for (std::size_t col = 0; col < d; ++col) {
        dvj[col] = w * go[col];
        dkj[col] = ds * q[col];
        dq[col] += ds * kj[col];
      }
    }
  }

  // Sub-networks; Q, K, V gradients accumulate across masks since the projections are shared.
  const std::size_t heads = p.dims.heads;
  std::vector<Tensor> dQ(heads, Tensor(n, dh)), dK(heads, Tensor(n, dh)), dV(heads, Tensor(n, dh));
  const double scale = std::sqrt(static_cast<double>(dh));
  for (std::size_t j = 0; j < m; ++j) {
    matmul_tn_acc(c.sub_out[j], dtk[j], gp.topical.wk);
    matmul_tn_acc(c.sub_out[j], dtv[j], gp.topical.wv);
    Tensor dsub = matmul_nt(dtk[j], p.topical.wk);
    dsub += matmul_nt(dtv[j], p.topical.wv);

    matmul_tn_acc(c.concat[j], dsub, gp.attention.wo);
    Tensor dconcat = matmul_nt(dsub, p.attention.wo);
    const Mask& mask = c.masks[j];
    for (std::size_t i = 0; i < heads; ++i) {
      Tensor da(n, dh);
      for (std::size_t t = 0; t < n; ++t)
        for (std::size_t col = 0; col < dh; ++col) da(t, col) = dconcat(t, i * dh + col);
      const Tensor& w = c.weights[j][i];
      matmul_tn_acc(w, da, dV[i]);
      Tensor dw_attn = matmul_nt(da, c.v[i]);
      Tensor draw(n, n);
      for (std::size_t t = 0; t < n; ++t) {
        double dot = 0.0;
        for (std::size_t s = 0; s < n; ++s) dot += w(t, s) * dw_attn(t, s);
        for (std::size_t s = 0; s < n; ++s) {
          double v = w(t, s) * (dw_attn(t, s) - dot) / scale;
          if (c.mode == MaskMode::Multiplicative && !mask.at(t, s)) v = 0.0;
          draw(t, s) = v;
        }
      }
      dQ[i] += matmul(draw, c.k[i]);
      matmul_tn_acc(draw, c.q[i], dK[i]);
    }
  }

  for (std::size_t i = 0; i < heads; ++i) {
    const auto& hp = p.attention.heads[i];
    auto& hg = gp.attention.heads[i];
    matmul_tn_acc(c.input, dQ[i], hg.wq);
    matmul_tn_acc(c.input, dK[i], hg.wk);
    matmul_tn_acc(c.input, dV[i], hg.wv);
    g.input += matmul_nt(dQ[i], hp.wq);
    g.input += matmul_nt(dK[i], hp.wk);
    g.input += matmul_nt(dV[i], hp.wv);
  }
  require_finite(g.input, "input gradient");
  return g;
}

}  // namespace treeattn
