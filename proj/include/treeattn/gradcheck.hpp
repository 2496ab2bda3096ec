#pragma once

#include <functional>
#include <span>
#include <vector>

#include "treeattn/attention.hpp"

namespace treeattn {

/// Scalar objective. When `grad` is non-null it must be filled with the analytic gradient.
using Objective = std::function<double(std::span<const double> theta, std::vector<double>* grad)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Central differences per coordinate; relative error |g_a - g_n| / max(1, |g_a|, |g_n|).
GradCheckReport grad_check(const Objective& f, std::vector<double> theta, double eps = 1e-5);

/// Objective over (block parameters, input) with loss = sum of squared block outputs.
/// theta is the flattened parameters followed by the input matrix.
Objective block_objective(const Tensor& input, std::vector<Mask> masks, BlockDims dims, MaskMode mode);
std::vector<double> block_theta(const BlockParams& params, const Tensor& input);

}  // namespace treeattn
