#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "treeattn/maskgen.hpp"
#include "treeattn/tensor.hpp"

namespace treeattn {

class Rng;

/// Additive: masked scores are excluded from the softmax, so masked weights are exactly 0.
/// Multiplicative: the literal element-wise product, masked scores become 0 before softmax.
enum class MaskMode { Additive, Multiplicative };

std::string_view to_string(MaskMode mode);
MaskMode mask_mode_from_string(std::string_view name);

struct AttentionResult {
  Tensor output;   // n x d_head
  Tensor weights;  // n x n, row-stochastic
};

/// Scaled dot-product attention restricted by `mask`.
AttentionResult masked_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask,
                                 MaskMode mode);

/// Unmasked scaled dot-product attention.
AttentionResult vanilla_attention(const Tensor& q, const Tensor& k, const Tensor& v);

struct SparseAttentionResult {
  Tensor output;
  /// weights[i][r] belongs to key mask.row(i)[r].
  std::vector<std::vector<double>> weights;
  std::size_t visited_pairs = 0;
};

/// Additive-mode attention that only touches (query, key) pairs allowed by the mask.
SparseAttentionResult sparse_masked_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask);

struct BlockDims {
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t d_head = 8;
  std::size_t d_ff = 64;

  void check() const;
  friend bool operator==(const BlockDims&, const BlockDims&) = default;
};

struct HeadParams {
  Tensor wq, wk, wv;  // d_model x d_head
};

/// Projections shared by every sub-network of a layer.
struct AttentionParams {
  std::vector<HeadParams> heads;
  Tensor wo;  // (heads * d_head) x d_model
};

struct TopicalParams {
  Tensor q_task;  // 1 x d_model
  Tensor wk, wv;  // d_model x d_model
};

struct FeedForwardParams {
  Tensor w1, b1;  // d_model x d_ff, 1 x d_ff
  Tensor w2, b2;  // d_ff x d_model, 1 x d_model
};

struct LayerNormParams {
  Tensor gain, bias;  // 1 x d_model
};

struct BlockParams {
  BlockDims dims;
  AttentionParams attention;
  TopicalParams topical;
  FeedForwardParams ffn;
  LayerNormParams norm1, norm2;

  /// Weights uniform in +-1/sqrt(fan_in); biases 0; layer-norm gains 1.
  static BlockParams init(const BlockDims& dims, Rng& rng);
  static BlockParams zeros(const BlockDims& dims);

  /// Visits every tensor in checkpoint order: per head Wq, Wk, Wv; Wo; q_task,
  /// topical Wk, Wv; W1, b1, W2, b2; norm1 gain, bias; norm2 gain, bias.
  template <typename F>
  void for_each_tensor(F&& f) {
    visit_tensors(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit_tensors(*this, f);
  }

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  /// this += alpha * other (shapes must match).
  void axpy(double alpha, const BlockParams& other);
  /// In-place params -= step * grads.
  void descend(const BlockParams& grads, double step) { axpy(-step, grads); }

 private:
  template <typename Self, typename F>
  static void visit_tensors(Self& self, F& f) {
    for (auto& h : self.attention.heads) {
      f(h.wq);
      f(h.wk);
      f(h.wv);
    }
    f(self.attention.wo);
    f(self.topical.q_task);
    f(self.topical.wk);
    f(self.topical.wv);
    f(self.ffn.w1);
    f(self.ffn.b1);
    f(self.ffn.w2);
    f(self.ffn.b2);
    f(self.norm1.gain);
    f(self.norm1.bias);
    f(self.norm2.gain);
    f(self.norm2.bias);
  }
};

/// One sub-network: every head attends under `mask`, heads are concatenated and projected by Wo.
Tensor multi_head_masked(const Tensor& h, const AttentionParams& params, const Mask& mask, MaskMode mode);

struct TopicalResult {
  Tensor output;   // n x d_model
  Tensor weights;  // n x m
};

/// Per-token aggregation over sub-network outputs. `stack[j]` is the n x d_model output of
/// sub-network j; for token t the rows stack[0..m)[t] form its m x d_model matrix.
TopicalResult topical_attention(std::span<const Tensor> stack, const TopicalParams& params);

/// Everything block_backward needs, captured by block_forward.
struct BlockCache {
  bool valid = false;
  BlockParams params;
  MaskMode mode = MaskMode::Additive;
  std::vector<Mask> masks;
  Tensor input;
  // Per head (mask independent).
  std::vector<Tensor> q, k, v;
  // [mask][head] attention weights.
  std::vector<std::vector<Tensor>> weights;
  std::vector<Tensor> concat;   // per mask, n x (heads * d_head)
  std::vector<Tensor> sub_out;  // per mask, H_j
  std::vector<Tensor> topical_k, topical_v;
  Tensor topical_weights;
  Tensor topical_out;
  Tensor norm1_hat;
  std::vector<double> norm1_inv_std;
  Tensor hidden1;
  Tensor ffn_pre, ffn_act;
  Tensor norm2_hat;
  std::vector<double> norm2_inv_std;
};

struct BlockForward {
  Tensor output;
  BlockCache cache;
};

BlockForward block_forward(const Tensor& h, std::span<const Mask> masks, const BlockParams& params, MaskMode mode);
BlockForward block_forward(const Tensor& h, const MaskSet& masks, const BlockParams& params, MaskMode mode);

struct BlockGradients {
  Tensor input;
  BlockParams params;
};

BlockGradients block_backward(const BlockCache& cache, const Tensor& grad_output);

constexpr double kLayerNormEps = 1e-12;

double gelu(double x);
double gelu_derivative(double x);

}  // namespace treeattn
