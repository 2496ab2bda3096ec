#include "treeattn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "treeattn/error.hpp"

namespace treeattn {

GradCheckReport grad_check(const Objective& f, std::vector<double> theta, double eps) {
  GradCheckReport report;
  const double base = f(theta, &report.analytic);
  if (!std::isfinite(base)) throw NumericalError("grad_check: objective is not finite");
  if (report.analytic.size() != theta.size()) {
    throw StructureError(fmt::format("grad_check: analytic gradient has {} entries for {} parameters",
                                     report.analytic.size(), theta.size()));
  }
  report.numeric.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + eps;
    const double plus = f(theta, nullptr);
    theta[i] = saved - eps;
    const double minus = f(theta, nullptr);
    theta[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericalError(fmt::format("grad_check: non-finite evaluation at coordinate {}", i));
    }
    const double numeric = (plus - minus) / (2.0 * eps);
    report.numeric[i] = numeric;
    const double a = report.analytic[i];
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_index = i;
    }
  }
  return report;
}

std::vector<double> block_theta(const BlockParams& params, const Tensor& input) {
  auto theta = params.flatten();
  theta.insert(theta.end(), input.values().begin(), input.values().end());
  return theta;
}

Objective block_objective(const Tensor& input, std::vector<Mask> masks, BlockDims dims, MaskMode mode) {
  const std::size_t rows = input.rows(), cols = input.cols();
  return [masks = std::move(masks), dims, mode, rows, cols](std::span<const double> theta,
                                                           std::vector<double>* grad) {
    BlockParams params = BlockParams::zeros(dims);
    const std::size_t count = params.parameter_count();
    if (theta.size() != count + rows * cols) throw StructureError("block objective: theta has the wrong size");
    params.assign(theta.first(count));
    Tensor h(rows, cols);
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(count), theta.end(), h.values().begin());

    auto fwd = block_forward(h, masks, params, mode);
    double loss = 0.0;
    for (double v : fwd.output.values()) loss += v * v;
    if (grad) {
      Tensor dout = fwd.output;
      dout *= 2.0;
      auto g = block_backward(fwd.cache, dout);
      *grad = block_theta(g.params, g.input);
    }
    return loss;
  };
}

}  // namespace treeattn
