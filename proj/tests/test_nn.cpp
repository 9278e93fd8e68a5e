#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "hemograph/nn/adam.hpp"
#include "hemograph/nn/grad_check.hpp"
#include "hemograph/nn/mlp.hpp"
#include "hemograph/nn/schedule.hpp"

using namespace hemograph;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_vector(int n, Rng& rng) {
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("single affine identity layer maps x to x") {
  Mlp mlp;
  mlp.W = {MatrixXd::Identity(4, 4)};
  mlp.b = {VectorXd::Zero(4)};
  mlp.final_layer_norm = false;
  Rng rng(0);
  const VectorXd x = random_vector(4, rng);
  REQUIRE(mlp_forward(mlp, x).isApprox(x, 0.0));
}

TEST_CASE("LeakyReLU uses slope 0.01 on hidden layers") {
  // one hidden layer wired as identity exposes the activation directly
  Mlp mlp;
  mlp.W = {MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1)};
  mlp.b = {VectorXd::Zero(1), VectorXd::Zero(1)};
  mlp.final_layer_norm = false;
  VectorXd x(1);
  x << -1.0;
  REQUIRE(mlp_forward(mlp, x)[0] == Catch::Approx(-0.01));
  x << 2.0;
  REQUIRE(mlp_forward(mlp, x)[0] == Catch::Approx(2.0));
}

TEST_CASE("layer norm of a constant vector gives zeros under unit gain") {
  Mlp mlp;
  mlp.W = {MatrixXd::Identity(5, 5)};
  mlp.b = {VectorXd::Zero(5)};
  mlp.final_layer_norm = true;
  mlp.ln_gain = VectorXd::Ones(5);
  mlp.ln_offset = VectorXd::Zero(5);
  const VectorXd y = mlp_forward(mlp, VectorXd::Constant(5, 3.7));
  REQUIRE(y.isZero(1e-15));
}

TEST_CASE("layer norm output has zero mean and unit variance pre-affine") {
  Rng rng(7);
  Mlp mlp = make_mlp(6, 16, 64, 2, true, rng);
  MlpCache cache;
  mlp_forward(mlp, random_vector(6, rng), &cache);
  const VectorXd xhat = cache.ln_xhat.col(0);
  REQUIRE(std::abs(xhat.mean()) < 1e-12);
  REQUIRE(std::abs(xhat.squaredNorm() / xhat.size() - 1.0) < 1e-10);
}

TEST_CASE("dimension mismatch raises") {
  Rng rng(1);
  Mlp mlp = make_mlp(3, 2, 8, 1, false, rng);
  REQUIRE_THROWS_AS(mlp_forward(mlp, VectorXd::Zero(4)), validation_error);
}

TEST_CASE("zero output gradient yields zero parameter gradients") {
  Rng rng(2);
  Mlp mlp = make_mlp(5, 3, 16, 2, true, rng);
  MlpCache cache;
  mlp_forward(mlp, random_vector(5, rng), &cache);
  MlpGrads grads = MlpGrads::like(mlp);
  const VectorXd dx = mlp_backward(mlp, cache, VectorXd::Zero(3), grads);
  REQUIRE(dx.isZero(0.0));
  for (const auto& g : grads.dW) REQUIRE(g.isZero(0.0));
  for (const auto& g : grads.db) REQUIRE(g.isZero(0.0));
  REQUIRE(grads.dgain.isZero(0.0));
}

TEST_CASE("single affine layer weight gradient is the outer product") {
  Mlp mlp;
  mlp.W = {MatrixXd::Ones(2, 3)};
  mlp.b = {VectorXd::Zero(2)};
  mlp.final_layer_norm = false;
  Rng rng(3);
  const VectorXd x = random_vector(3, rng);
  const VectorXd dy = random_vector(2, rng);
  MlpCache cache;
  mlp_forward(mlp, x, &cache);
  MlpGrads grads = MlpGrads::like(mlp);
  mlp_backward(mlp, cache, dy, grads);
  REQUIRE(grads.dW[0].isApprox(dy * x.transpose(), 1e-15));
  REQUIRE(grads.db[0].isApprox(dy, 1e-15));
}

TEST_CASE("stale cache is rejected after a parameter update") {
  Rng rng(4);
  Mlp mlp = make_mlp(4, 4, 8, 1, true, rng);
  MlpCache cache;
  mlp_forward(mlp, random_vector(4, rng), &cache);
  mlp.revision++;  // simulates an optimizer step
  MlpGrads grads = MlpGrads::like(mlp);
  REQUIRE_THROWS_AS(mlp_backward(mlp, cache, VectorXd::Ones(4), grads), contract_error);
}

TEST_CASE("grad_check: every GNN MLP shape passes at 1e-5") {
  Rng rng(5);
  // encoder, edge encoder, edge processor, node processor, decoder shapes
  const std::vector<std::tuple<int, int, bool>> shapes = {
      {17, 16, true}, {8, 16, true}, {48, 16, true}, {64, 16, true}, {16, 2, false}};
  for (auto [in, out, ln] : shapes) {
    Mlp mlp = make_mlp(in, out, 64, 2, ln, rng);
    const auto report = grad_check(mlp, random_vector(in, rng));
    INFO("shape " << in << "->" << out << " ln=" << ln
                  << " max_rel_error=" << report.max_rel_error);
    REQUIRE(report.passes(1e-5));
  }
}

TEST_CASE("grad_check: linear network is exact to machine-precision scale") {
  Rng rng(6);
  Mlp mlp;
  mlp.W = {MatrixXd::Random(3, 4)};
  mlp.b = {VectorXd::Random(3)};
  mlp.final_layer_norm = false;
  const auto report = grad_check(mlp, random_vector(4, rng));
  REQUIRE(report.max_rel_error < 1e-9);
}

TEST_CASE("forward over a column batch equals per-column application") {
  // guards the exact permutation-equivariance contract of the surrogate
  Rng rng(8);
  Mlp mlp = make_mlp(17, 16, 64, 2, true, rng);
  MatrixXd X(17, 23);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  const MatrixXd Y = mlp_forward_columns(mlp, X);
  for (int c = 0; c < X.cols(); ++c) {
    const VectorXd yc = mlp_forward(mlp, X.col(c));
    REQUIRE((yc.array() == Y.col(c).array()).all());
  }
  // reversed column order produces bitwise-identical per-column results
  const MatrixXd Yr = mlp_forward_columns(mlp, X.rowwise().reverse());
  for (int c = 0; c < X.cols(); ++c) {
    REQUIRE((Yr.col(c).array() == Y.col(X.cols() - 1 - c).array()).all());
  }
}

TEST_CASE("batched backward matches accumulated per-column backward") {
  Rng rng(9);
  Mlp mlp = make_mlp(8, 16, 32, 2, true, rng);
  MatrixXd X(8, 7), dY(16, 7);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  for (int i = 0; i < dY.size(); ++i) dY.data()[i] = rng.normal();

  MlpCache cache;
  mlp_forward_columns(mlp, X, &cache);
  MlpGrads batched = MlpGrads::like(mlp);
  const MatrixXd dX = mlp_backward_columns(mlp, cache, dY, batched);

  MlpGrads accum = MlpGrads::like(mlp);
  MatrixXd dX_ref(8, 7);
  for (int c = 0; c < 7; ++c) {
    MlpCache cc;
    mlp_forward(mlp, X.col(c), &cc);
    dX_ref.col(c) = mlp_backward(mlp, cc, dY.col(c), accum);
  }
  REQUIRE(dX.isApprox(dX_ref, 1e-13));
  for (int l = 0; l < mlp.n_layers(); ++l) {
    REQUIRE(batched.dW[l].isApprox(accum.dW[l], 1e-12));
    REQUIRE(batched.db[l].isApprox(accum.db[l], 1e-12));
  }
}

TEST_CASE("adam: zero gradient at zero moments leaves parameters unchanged") {
  VectorXd p = VectorXd::Constant(3, 1.5);
  VectorXd g = VectorXd::Zero(3);
  std::vector<TensorView> pv = {{p.data(), p.size()}};
  std::vector<TensorView> gv = {{g.data(), g.size()}};
  AdamState st = AdamState::like(pv);
  adam_step(pv, gv, st, 1e-3);
  REQUIRE(p.isApprox(VectorXd::Constant(3, 1.5), 0.0));
}

TEST_CASE("adam: first-step update matches the hand-evaluated value") {
  VectorXd p = VectorXd::Zero(1);
  VectorXd g = VectorXd::Ones(1);
  std::vector<TensorView> pv = {{p.data(), 1}};
  std::vector<TensorView> gv = {{g.data(), 1}};
  AdamState st = AdamState::like(pv);
  adam_step(pv, gv, st, 1e-3);
  // frozen from the bias-corrected formulas: -lr / sqrt(1 + eps)
  REQUIRE(p[0] == Catch::Approx(-9.99999995e-4).epsilon(1e-12));
}

TEST_CASE("adam: identical inputs give bitwise-identical results") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    VectorXd p(16);
    for (int i = 0; i < 16; ++i) p[i] = rng.normal();
    AdamState st = AdamState::like({{p.data(), p.size()}});
    for (int it = 0; it < 5; ++it) {
      VectorXd g(16);
      for (int i = 0; i < 16; ++i) g[i] = rng.normal();
      adam_step({{p.data(), p.size()}}, {{g.data(), g.size()}}, st, 1e-3);
    }
    return p;
  };
  const VectorXd a = run(11);
  const VectorXd b = run(11);
  REQUIRE((a.array() == b.array()).all());
}

TEST_CASE("adam: non-finite gradient raises") {
  VectorXd p = VectorXd::Zero(2);
  VectorXd g = VectorXd::Zero(2);
  g[1] = std::numeric_limits<double>::quiet_NaN();
  std::vector<TensorView> pv = {{p.data(), 2}};
  std::vector<TensorView> gv = {{g.data(), 2}};
  AdamState st = AdamState::like(pv);
  REQUIRE_THROWS_AS(adam_step(pv, gv, st, 1e-3), numerical_error);
}

TEST_CASE("cosine schedule hits endpoints and the midpoint") {
  REQUIRE(cosine_lr(0, 100, 1e-3, 1e-6) == Catch::Approx(1e-3));
  REQUIRE(cosine_lr(100, 100, 1e-3, 1e-6) == Catch::Approx(1e-6));
  REQUIRE(cosine_lr(50, 100, 1e-3, 1e-6) == Catch::Approx(5.005e-4));
  double prev = cosine_lr(0, 100, 1e-3, 1e-6);
  for (int e = 1; e <= 100; ++e) {
    const double lr = cosine_lr(e, 100, 1e-3, 1e-6);
    REQUIRE(lr <= prev);
    prev = lr;
  }
  REQUIRE_THROWS_AS(cosine_lr(101, 100, 1e-3, 1e-6), contract_error);
  REQUIRE_THROWS_AS(cosine_lr(-1, 100, 1e-3, 1e-6), contract_error);
}
