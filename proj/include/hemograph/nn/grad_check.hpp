#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hemograph/nn/mlp.hpp"

namespace hemograph {

struct GradCheckEntry {
  std::string tensor;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_tensor;
  double max_rel_error = 0.0;

  bool passes(double tolerance) const { return max_rel_error < tolerance; }
};

namespace detail {

inline double rel_error(double a, double b, double scale) {
  const double denom = std::max({std::abs(a), std::abs(b), scale});
  return std::abs(a - b) / denom;
}

}  // namespace detail

/// Compares reverse-mode parameter gradients of J = w.y(x) against central
/// finite differences, tensor by tensor. `w` is a fixed deterministic probe.
/// The relative-error denominator is floored at 1e-4 of the objective scale:
/// below that, central differences at the given step cannot resolve a
/// gradient beyond their eps*|J|/h noise, so tiny entries are effectively
/// held to an absolute tolerance instead.
inline GradCheckReport grad_check(Mlp& mlp, const Eigen::VectorXd& x, double h = 1e-6) {
  mlp.validate();
  Eigen::VectorXd w(mlp.out_dim());
  for (int i = 0; i < w.size(); ++i) w[i] = 0.25 + 0.5 * std::cos(1.7 * (i + 1));

  MlpCache cache;
  const double j0 = w.dot(mlp_forward(mlp, x, &cache));
  MlpGrads grads = MlpGrads::like(mlp);
  mlp_backward(mlp, cache, w, grads);

  const auto objective = [&]() { return w.dot(mlp_forward(mlp, x)); };

  GradCheckReport report;
  const double floor = 1e-4 * std::max(1.0, std::abs(j0));

  auto check_tensor = [&](const std::string& name, double* param, const double* analytic,
                          std::ptrdiff_t size) {
    GradCheckEntry entry{name, 0.0};
    for (std::ptrdiff_t i = 0; i < size; ++i) {
      const double saved = param[i];
      const double step = h * std::max(1.0, std::abs(saved));
      param[i] = saved + step;
      const double jp = objective();
      param[i] = saved - step;
      const double jm = objective();
      param[i] = saved;
      const double fd = (jp - jm) / (2.0 * step);
      entry.max_rel_error = std::max(entry.max_rel_error, detail::rel_error(fd, analytic[i], floor));
    }
    report.per_tensor.push_back(entry);
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
  };

  for (int l = 0; l < mlp.n_layers(); ++l) {
    check_tensor("W" + std::to_string(l), mlp.W[l].data(), grads.dW[l].data(), mlp.W[l].size());
    check_tensor("b" + std::to_string(l), mlp.b[l].data(), grads.db[l].data(), mlp.b[l].size());
  }
  if (mlp.final_layer_norm) {
    check_tensor("ln_gain", mlp.ln_gain.data(), grads.dgain.data(), mlp.ln_gain.size());
    check_tensor("ln_offset", mlp.ln_offset.data(), grads.doffset.data(), mlp.ln_offset.size());
  }
  return report;
}

}  // namespace hemograph
