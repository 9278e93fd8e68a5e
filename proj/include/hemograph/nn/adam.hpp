#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hemograph/errors.hpp"

namespace hemograph {

/// Flat view over one parameter (or gradient) tensor.
struct TensorView {
  double* data = nullptr;
  std::ptrdiff_t size = 0;

  Eigen::Map<Eigen::ArrayXd> array() const { return {data, size}; }
};

struct AdamState {
  std::vector<Eigen::ArrayXd> m;
  std::vector<Eigen::ArrayXd> v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const std::vector<TensorView>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.push_back(Eigen::ArrayXd::Zero(p.size));
      s.v.push_back(Eigen::ArrayXd::Zero(p.size));
    }
    return s;
  }
};

/// One Adam update with bias correction. Deterministic; epsilon sits inside
/// the square root of the corrected second moment.
inline void adam_step(const std::vector<TensorView>& params,
                      const std::vector<TensorView>& grads, AdamState& state, double lr) {
  require(params.size() == grads.size() && params.size() == state.m.size(),
          "adam_step: tensor list size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require(params[i].size == grads[i].size && params[i].size == state.m[i].size(),
            "adam_step: tensor shape mismatch");
    if (!grads[i].array().isFinite().all())
      throw numerical_error("adam_step: non-finite gradient");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = grads[i].array();
    auto p = params[i].array();
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.square();
    p -= lr * (state.m[i] / bc1) / ((state.v[i] / bc2) + state.eps).sqrt();
  }
}

}  // namespace hemograph
