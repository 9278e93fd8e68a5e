#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hemograph/errors.hpp"
#include "hemograph/rng.hpp"

namespace hemograph {

/// Fully connected network: affine + LeakyReLU hidden layers, affine output,
/// optional layer normalization (with learnable gain/offset) on the output.
struct Mlp {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  bool final_layer_norm = true;
  Eigen::VectorXd ln_gain;
  Eigen::VectorXd ln_offset;
  double leaky_slope = 0.01;
  std::uint64_t revision = 0;  // bumped by optimizer updates; guards stale caches

  int n_layers() const { return static_cast<int>(W.size()); }
  int in_dim() const { return static_cast<int>(W.front().cols()); }
  int out_dim() const { return static_cast<int>(W.back().rows()); }

  void validate() const {
    require(!W.empty() && W.size() == b.size(), "mlp: empty or inconsistent layer lists");
    for (int l = 0; l < n_layers(); ++l) {
      require(W[l].rows() == b[l].size(), "mlp: bias size mismatch at layer " + std::to_string(l));
      if (l > 0)
        require(W[l].cols() == W[l - 1].rows(), "mlp: layer dims do not chain at layer " + std::to_string(l));
    }
    if (final_layer_norm) {
      require(ln_gain.size() == out_dim() && ln_offset.size() == out_dim(),
              "mlp: layer-norm affine size mismatch");
      require(ln_gain.allFinite() && ln_offset.allFinite(), "mlp: non-finite layer-norm affine");
    }
  }
};

/// Glorot-style uniform initialization with a seeded generator.
inline Mlp make_mlp(int in_dim, int out_dim, int hidden_width, int hidden_layers,
                    bool final_layer_norm, Rng& rng) {
  require(in_dim > 0 && out_dim > 0 && hidden_width > 0 && hidden_layers >= 0,
          "make_mlp: bad dimensions");
  Mlp mlp;
  mlp.final_layer_norm = final_layer_norm;
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int l = 0; l < hidden_layers; ++l) dims.push_back(hidden_width);
  dims.push_back(out_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-a, a);
    mlp.W.push_back(std::move(w));
    mlp.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  if (final_layer_norm) {
    mlp.ln_gain = Eigen::VectorXd::Ones(out_dim);
    mlp.ln_offset = Eigen::VectorXd::Zero(out_dim);
  }
  mlp.validate();
  return mlp;
}

inline constexpr double kLayerNormVarClamp = 1e-12;

/// Intermediates of one forward evaluation over a column batch.
struct MlpCache {
  Eigen::MatrixXd input;             // in_dim x cols
  std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer
  Eigen::MatrixXd ln_xhat;
  Eigen::VectorXd ln_inv_std;        // per column
  std::vector<char> ln_clamped;      // per column
  std::uint64_t revision = 0;
  bool valid() const { return !pre.empty(); }
};

/// Gradient accumulator shaped like an Mlp's parameters.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
  Eigen::VectorXd dgain;
  Eigen::VectorXd doffset;

  static MlpGrads like(const Mlp& mlp) {
    MlpGrads g;
    for (int l = 0; l < mlp.n_layers(); ++l) {
      g.dW.push_back(Eigen::MatrixXd::Zero(mlp.W[l].rows(), mlp.W[l].cols()));
      g.db.push_back(Eigen::VectorXd::Zero(mlp.b[l].size()));
    }
    if (mlp.final_layer_norm) {
      g.dgain = Eigen::VectorXd::Zero(mlp.out_dim());
      g.doffset = Eigen::VectorXd::Zero(mlp.out_dim());
    }
    return g;
  }

  void set_zero() {
    for (auto& m : dW) m.setZero();
    for (auto& v : db) v.setZero();
    dgain.setZero();
    doffset.setZero();
  }
};

namespace detail {

inline void leaky_relu_inplace(Eigen::MatrixXd& z, double slope) {
  z = z.array().max(slope * z.array());
}

inline Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& z, double slope) {
  return z.array().max(slope * z.array());
}

inline Eigen::MatrixXd leaky_relu_derivative(const Eigen::MatrixXd& z, double slope) {
  return (z.array() > 0.0).select(Eigen::MatrixXd::Ones(z.rows(), z.cols()),
                                  Eigen::MatrixXd::Constant(z.rows(), z.cols(), slope));
}

}  // namespace detail

/// Batched forward pass; columns are independent samples. Each output column
/// is a pure function of the matching input column, so column order never
/// changes results.
inline Eigen::MatrixXd mlp_forward_columns(const Mlp& mlp, const Eigen::MatrixXd& x,
                                           MlpCache* cache = nullptr) {
  require(static_cast<int>(x.rows()) == mlp.in_dim(), "mlp_forward: input dimension mismatch");
  const int cols = static_cast<int>(x.cols());
  const int n_layers = mlp.n_layers();

  if (cache) {
    cache->input = x;
    cache->pre.assign(n_layers, Eigen::MatrixXd());
    cache->revision = mlp.revision;
  }

  Eigen::MatrixXd act = x;
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = (mlp.W[l] * act).colwise() + mlp.b[l];
    if (cache) cache->pre[l] = z;
    if (l + 1 < n_layers) {
      detail::leaky_relu_inplace(z, mlp.leaky_slope);
    }
    act = std::move(z);
  }

  if (mlp.final_layer_norm) {
    const int n = mlp.out_dim();
    Eigen::MatrixXd xhat(n, cols);
    Eigen::VectorXd inv_std(cols);
    std::vector<char> clamped(cols, 0);
    for (int c = 0; c < cols; ++c) {
      const double mu = act.col(c).mean();
      const Eigen::VectorXd centered = act.col(c).array() - mu;
      const double var = centered.squaredNorm() / n;
      const bool clamp = var < kLayerNormVarClamp;
      const double s = std::sqrt(clamp ? kLayerNormVarClamp : var);
      xhat.col(c) = centered / s;
      inv_std[c] = 1.0 / s;
      clamped[c] = clamp;
    }
    act = (xhat.array().colwise() * mlp.ln_gain.array()).colwise() + mlp.ln_offset.array();
    if (cache) {
      cache->ln_xhat = std::move(xhat);
      cache->ln_inv_std = std::move(inv_std);
      cache->ln_clamped = std::move(clamped);
    }
  }

  if (!act.allFinite()) throw numerical_error("mlp_forward: non-finite output");
  return act;
}

/// Reverse-mode gradients of the batched forward map. Accumulates parameter
/// gradients into `grads` and returns the input gradient.
inline Eigen::MatrixXd mlp_backward_columns(const Mlp& mlp, const MlpCache& cache,
                                            const Eigen::MatrixXd& dy, MlpGrads& grads) {
  require(cache.valid(), "mlp_backward: cache from no forward call");
  if (cache.revision != mlp.revision)
    throw contract_error("mlp_backward: stale cache (parameters changed since forward)");
  require(static_cast<int>(dy.rows()) == mlp.out_dim() && dy.cols() == cache.input.cols(),
          "mlp_backward: output gradient shape mismatch");

  const int n_layers = mlp.n_layers();
  Eigen::MatrixXd dz;

  if (mlp.final_layer_norm) {
    const int n = mlp.out_dim();
    const int cols = static_cast<int>(dy.cols());
    grads.dgain.noalias() += (dy.array() * cache.ln_xhat.array()).rowwise().sum().matrix();
    grads.doffset.noalias() += dy.rowwise().sum();
    dz.resize(n, cols);
    for (int c = 0; c < cols; ++c) {
      const Eigen::VectorXd dxhat = dy.col(c).cwiseProduct(mlp.ln_gain);
      const double mean_dxhat = dxhat.mean();
      if (cache.ln_clamped[c]) {
        dz.col(c) = (dxhat.array() - mean_dxhat) * cache.ln_inv_std[c];
      } else {
        const double mean_dxhat_xhat = dxhat.cwiseProduct(cache.ln_xhat.col(c)).mean();
        dz.col(c) = (dxhat.array() - mean_dxhat -
                     cache.ln_xhat.col(c).array() * mean_dxhat_xhat) *
                    cache.ln_inv_std[c];
      }
    }
  } else {
    dz = dy;
  }

  for (int l = n_layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd act_in =
        l == 0 ? cache.input : detail::leaky_relu(cache.pre[l - 1], mlp.leaky_slope);
    grads.dW[l].noalias() += dz * act_in.transpose();
    grads.db[l].noalias() += dz.rowwise().sum();
    if (l == 0) {
      return mlp.W[0].transpose() * dz;
    }
    Eigen::MatrixXd da = mlp.W[l].transpose() * dz;
    dz = da.cwiseProduct(detail::leaky_relu_derivative(cache.pre[l - 1], mlp.leaky_slope));
  }
  return {};
}

/// Single-vector convenience wrappers.
inline Eigen::VectorXd mlp_forward(const Mlp& mlp, const Eigen::VectorXd& x,
                                   MlpCache* cache = nullptr) {
  return mlp_forward_columns(mlp, x, cache).col(0);
}

inline Eigen::VectorXd mlp_backward(const Mlp& mlp, const MlpCache& cache,
                                    const Eigen::VectorXd& dy, MlpGrads& grads) {
  return mlp_backward_columns(mlp, cache, dy, grads).col(0);
}

}  // namespace hemograph
