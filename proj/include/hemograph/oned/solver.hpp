#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hemograph/errors.hpp"
#include "hemograph/oned/geometry.hpp"
#include "hemograph/oned/windkessel.hpp"

namespace hemograph {

struct SolverConfig {
  double dt = 1e-3;                      // s
  double newton_tol = 1e-8;              // relative to the initial scaled residual
  int newton_max_iter = 30;
  double kinematic_viscosity = 3.77e-2;  // cm^2/s
  double density = 1.06;                 // g/cm^3
  double newton_atol = 1e-9;             // scaled-residual floor
  double junction_abs_tol = 1e-9;        // cm^3/s, enforced on conservation rows
};

struct SimDiagnostics {
  double max_junction_imbalance = 0.0;  // cm^3/s over all accepted steps
  double max_area_deviation = 0.0;      // max |A - A0| / A0
  int max_newton_iterations = 0;
  double max_scaled_residual = 0.0;     // at accepted states
};

struct SimResult {
  Eigen::VectorXd times;
  Eigen::MatrixXd area;      // n_nodes x n_times (t = 0 included)
  Eigen::MatrixXd flow;
  Eigen::MatrixXd pressure;
  SimDiagnostics diagnostics;
};

/// Implicit-Euler solver for the 1D mass/momentum system on a segment tree,
/// lumped piecewise-linear stencils in space, Newton with a finite-difference
/// Jacobian. Pressure is eliminated through the wall law; capacitor pressures
/// at Windkessel outlets are eliminated per step through the backward-Euler
/// closed form and tracked as auxiliary state.
class Solver1D {
 public:
  Solver1D(const Geometry1D& geometry, const SolverConfig& config)
      : geo_(&geometry), cfg_(config) {
    geometry.validate();
    const int ns = static_cast<int>(geometry.segments.size());
    offset_.resize(ns);
    int acc = 0;
    for (int s = 0; s < ns; ++s) {
      offset_[s] = acc;
      acc += geometry.segments[s].n();
    }
    n_nodes_ = acc;
    root_ = geometry.root_segment();

    roles_.assign(n_nodes_, Role::interior);
    role_aux_.assign(n_nodes_, -1);
    roles_[node_index(root_, 0)] = Role::inlet;
    for (int j = 0; j < static_cast<int>(geometry.junctions.size()); ++j) {
      const auto& jc = geometry.junctions[j];
      roles_[seg_end(jc.parent)] = Role::junction_parent_end;
      role_aux_[seg_end(jc.parent)] = j;
      for (int c : jc.children) {
        roles_[node_index(c, 0)] = Role::junction_child_start;
        role_aux_[node_index(c, 0)] = j;
      }
    }
    for (int leaf : geometry.leaf_segments()) {
      roles_[seg_end(leaf)] = Role::outlet;
      role_aux_[seg_end(leaf)] = leaf;
    }

    A0_.resize(n_nodes_);
    r0_.resize(n_nodes_);
    p0_.resize(n_nodes_);
    for (int s = 0; s < ns; ++s) {
      const auto& seg = geometry.segments[s];
      for (int i = 0; i < seg.n(); ++i) {
        A0_[node_index(s, i)] = seg.A0[i];
        r0_[node_index(s, i)] = seg.r0[i];
        p0_[node_index(s, i)] = seg.p0[i];
      }
    }
  }

  int n_nodes() const { return n_nodes_; }
  int n_unknowns() const { return 2 * n_nodes_; }
  int node_index(int seg, int local) const { return offset_[seg] + local; }
  int seg_end(int seg) const { return offset_[seg] + geo_->segments[seg].n() - 1; }
  static int var_area(int node) { return 2 * node; }
  static int var_flow(int node) { return 2 * node + 1; }
  /// Row carrying the junction flow-conservation equation.
  int conservation_row(int junction) const {
    return var_flow(seg_end(geo_->junctions[junction].parent));
  }

  /// Rest state: A = A0, q = 0 everywhere.
  Eigen::VectorXd rest_state() const {
    Eigen::VectorXd x(n_unknowns());
    for (int g = 0; g < n_nodes_; ++g) {
      x[var_area(g)] = A0_[g];
      x[var_flow(g)] = 0.0;
    }
    return x;
  }

  std::map<int, double> rest_capacitor_pressures() const {
    std::map<int, double> pc;
    for (const auto& [leaf, bc] : geo_->outlet_bcs)
      if (bc.mode == RcrParams::Mode::rcr) pc[leaf] = p0_[seg_end(leaf)];
    return pc;
  }

  double wall_pressure_at(int node, double A) const {
    return wall_pressure(geo_->wall, A, A0_[node], r0_[node], p0_[node]);
  }

  /// Raw residual of the implicit-Euler step from (x_prev, pc_prev) to x with
  /// prescribed inlet flow q_in at the new time level.
  Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                           const std::map<int, double>& pc_prev, double q_in) const {
    require(x.size() == n_unknowns() && x_prev.size() == n_unknowns(),
            "residual: state size mismatch");
    if (!x.allFinite()) throw numerical_error("residual: non-finite state");

    const double dt = cfg_.dt;
    const double nu = cfg_.kinematic_viscosity;
    const double rho = cfg_.density;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n_unknowns());

    auto A = [&](int g) { return x[var_area(g)]; };
    auto q = [&](int g) { return x[var_flow(g)]; };
    auto p = [&](int g) { return wall_pressure_at(g, A(g)); };
    auto flux = [&](int g) { return (4.0 / 3.0) * q(g) * q(g) / A(g); };

    for (int s = 0; s < static_cast<int>(geo_->segments.size()); ++s) {
      const auto& seg = geo_->segments[s];
      const int n = seg.n();
      for (int i = 0; i < n; ++i) {
        const int g = node_index(s, i);
        // continuity, one-sided at segment ends
        double dqdz;
        if (i == 0)
          dqdz = (q(g + 1) - q(g)) / (seg.z[1] - seg.z[0]);
        else if (i == n - 1)
          dqdz = (q(g) - q(g - 1)) / (seg.z[n - 1] - seg.z[n - 2]);
        else
          dqdz = (q(g + 1) - q(g - 1)) / (seg.z[i + 1] - seg.z[i - 1]);
        r[var_area(g)] = (A(g) - x_prev[var_area(g)]) / dt + dqdz;

        if (i > 0 && i < n - 1) {
          const double dz2 = seg.z[i + 1] - seg.z[i - 1];
          const double hl = seg.z[i] - seg.z[i - 1];
          const double hr = seg.z[i + 1] - seg.z[i];
          const double adv = (flux(g + 1) - flux(g - 1)) / dz2;
          const double friction = 8.0 * M_PI * nu * q(g) / A(g);
          const double diff =
              nu * 2.0 / (hl + hr) * ((q(g + 1) - q(g)) / hr - (q(g) - q(g - 1)) / hl);
          const double pgrad = (A(g) / rho) * (p(g + 1) - p(g - 1)) / dz2;
          r[var_flow(g)] =
              (q(g) - x_prev[var_flow(g)]) / dt + adv + friction - diff + pgrad;
        }
      }
    }

    // inlet: prescribed flow at the new time level
    r[var_flow(node_index(root_, 0))] = q(node_index(root_, 0)) - q_in;

    // junctions: conservation at the parent end, pressure continuity at each
    // child start
    for (const auto& jc : geo_->junctions) {
      const int gp = seg_end(jc.parent);
      double imbalance = q(gp);
      for (int c : jc.children) imbalance -= q(node_index(c, 0));
      r[var_flow(gp)] = imbalance;
      for (int c : jc.children) {
        const int gc = node_index(c, 0);
        r[var_flow(gc)] = p(gc) - p(gp);
      }
    }

    // outlets: wall pressure matches the lumped-condition pressure
    for (const auto& [leaf, bc] : geo_->outlet_bcs) {
      const int g = seg_end(leaf);
      double p_bc;
      if (bc.mode == RcrParams::Mode::rcr) {
        const double pc_new = rcr_update(bc, pc_prev.at(leaf), q(g), dt);
        p_bc = outlet_pressure(bc, pc_new, q(g));
      } else {
        p_bc = outlet_pressure(bc, 0.0, q(g));
      }
      r[var_flow(g)] = p(g) - p_bc;
    }
    return r;
  }

  /// Largest junction flow imbalance of a state (raw, cm^3/s).
  double junction_imbalance(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const auto& jc : geo_->junctions) {
      double imbalance = x[var_flow(seg_end(jc.parent))];
      for (int c : jc.children) imbalance -= x[var_flow(node_index(c, 0))];
      worst = std::max(worst, std::abs(imbalance));
    }
    return worst;
  }

  struct StepStats {
    int iterations = 0;
    double scaled_residual = 0.0;
  };

  /// Solves one implicit step with damped Newton on a row-scaled residual.
  Eigen::VectorXd solve_step(const Eigen::VectorXd& x_prev,
                             const std::map<int, double>& pc_prev, double q_in,
                             StepStats* stats = nullptr) const {
    const Eigen::VectorXd scale = row_scales(q_in);
    auto scaled = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return residual(x, x_prev, pc_prev, q_in).cwiseQuotient(scale);
    };

    Eigen::VectorXd x = x_prev;
    Eigen::VectorXd r = scaled(x);
    const double r0n = r.lpNorm<Eigen::Infinity>();
    const double tol = cfg_.newton_tol * r0n + cfg_.newton_atol;

    auto converged = [&](const Eigen::VectorXd& xc, double rn) {
      return rn <= tol && junction_imbalance(xc) < cfg_.junction_abs_tol;
    };

    if (converged(x, r0n)) {
      if (stats) *stats = {0, r0n};
      return x;
    }

    double rn = r0n;
    int stalls = 0;
    for (int it = 1; it <= cfg_.newton_max_iter; ++it) {
      const Eigen::MatrixXd J = fd_jacobian(x, x_prev, pc_prev, q_in, scale);
      const Eigen::VectorXd step = J.partialPivLu().solve(-r);
      if (!step.allFinite()) throw numerical_error("newton: singular or non-finite Jacobian solve");

      double lambda = 1.0;
      bool improved = false;
      Eigen::VectorXd x_best, r_best;
      double rn_best = std::numeric_limits<double>::infinity();
      for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd x_t = x + lambda * step;
        double rn_t = std::numeric_limits<double>::infinity();
        Eigen::VectorXd r_t;
        try {
          r_t = scaled(x_t);
          rn_t = r_t.lpNorm<Eigen::Infinity>();
        } catch (const numerical_error&) {
          // out-of-range trial state (e.g. negative area); shrink the step
        }
        if (rn_t < rn_best) {
          rn_best = rn_t;
          x_best = x_t;
          r_best = r_t;
        }
        if (rn_t < (1.0 - 1e-4 * lambda) * rn) {
          improved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!std::isfinite(rn_best))
        throw solver_error("newton: no evaluable trial state");
      x = x_best;
      r = r_best;
      rn = rn_best;
      stalls = improved ? 0 : stalls + 1;

      if (converged(x, rn)) {
        if (stats) *stats = {it, rn};
        return x;
      }
      if (stalls >= 3) break;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "newton: no convergence (scaled residual %.3e, tol %.3e)", rn,
                  tol);
    throw solver_error(buf);
  }

  /// Time integration over [0, T] from rest, recording pressure/flow/area at
  /// every node and step.
  SimResult simulate(const std::function<double(double)>& inflow, double T) const {
    require(T > 0.0, "simulate: T must be positive");
    const int steps = static_cast<int>(std::llround(T / cfg_.dt));
    require(steps >= 1, "simulate: T shorter than one step");

    SimResult out;
    out.times.resize(steps + 1);
    out.area.resize(n_nodes_, steps + 1);
    out.flow.resize(n_nodes_, steps + 1);
    out.pressure.resize(n_nodes_, steps + 1);

    Eigen::VectorXd x = rest_state();
    std::map<int, double> pc = rest_capacitor_pressures();
    record(out, 0, 0.0, x);

    for (int k = 1; k <= steps; ++k) {
      const double t = k * cfg_.dt;
      StepStats stats;
      try {
        x = solve_step(x, pc, inflow(t), &stats);
      } catch (const error& e) {
        throw solver_error("simulate: step " + std::to_string(k) + " (t=" + std::to_string(t) +
                           "): " + e.what());
      }
      for (auto& [leaf, pcv] : pc)
        pcv = rcr_update(geo_->outlet_bcs.at(leaf), pcv, x[var_flow(seg_end(leaf))], cfg_.dt);

      out.diagnostics.max_junction_imbalance =
          std::max(out.diagnostics.max_junction_imbalance, junction_imbalance(x));
      out.diagnostics.max_newton_iterations =
          std::max(out.diagnostics.max_newton_iterations, stats.iterations);
      out.diagnostics.max_scaled_residual =
          std::max(out.diagnostics.max_scaled_residual, stats.scaled_residual);
      record(out, k, t, x);
    }
    for (int g = 0; g < n_nodes_; ++g) {
      const double dev = (out.area.row(g).array() - A0_[g]).abs().maxCoeff() / A0_[g];
      out.diagnostics.max_area_deviation = std::max(out.diagnostics.max_area_deviation, dev);
    }
    return out;
  }

 private:
  enum class Role { interior, inlet, outlet, junction_parent_end, junction_child_start };

  void record(SimResult& out, int k, double t, const Eigen::VectorXd& x) const {
    out.times[k] = t;
    for (int g = 0; g < n_nodes_; ++g) {
      out.area(g, k) = x[var_area(g)];
      out.flow(g, k) = x[var_flow(g)];
      out.pressure(g, k) = wall_pressure_at(g, x[var_area(g)]);
    }
  }

  /// Characteristic magnitude per residual row; rows are divided by these so
  /// the convergence norm is dimensionless and balanced.
  Eigen::VectorXd row_scales(double q_in) const {
    const double q_char = 1.0 + std::abs(q_in);
    Eigen::VectorXd s(n_unknowns());
    for (int g = 0; g < n_nodes_; ++g) {
      s[var_area(g)] = A0_[g] / cfg_.dt;
      switch (roles_[g]) {
        case Role::interior:
          s[var_flow(g)] = q_char / cfg_.dt;
          break;
        case Role::inlet:
          s[var_flow(g)] = q_char;
          break;
        case Role::junction_parent_end:
          s[var_flow(g)] = q_char;
          break;
        case Role::junction_child_start:
        case Role::outlet:
          s[var_flow(g)] = geo_->wall.stiffness(r0_[g]);
          break;
      }
    }
    return s;
  }

  Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                              const std::map<int, double>& pc_prev, double q_in,
                              const Eigen::VectorXd& scale) const {
    const int n = n_unknowns();
    const Eigen::VectorXd r0 = residual(x, x_prev, pc_prev, q_in).cwiseQuotient(scale);
    Eigen::MatrixXd J(n, n);
    Eigen::VectorXd xp = x;
    for (int j = 0; j < n; ++j) {
      const double typ = (j % 2 == 0) ? 0.01 * A0_[j / 2] : 1.0;
      const double h = 1e-7 * std::max(std::abs(x[j]), typ);
      xp[j] = x[j] + h;
      J.col(j) = (residual(xp, x_prev, pc_prev, q_in).cwiseQuotient(scale) - r0) / h;
      xp[j] = x[j];
    }
    return J;
  }

  const Geometry1D* geo_;
  SolverConfig cfg_;
  int n_nodes_ = 0;
  int root_ = 0;
  std::vector<int> offset_;
  std::vector<Role> roles_;
  std::vector<int> role_aux_;
  Eigen::VectorXd A0_, r0_, p0_;
};

/// Inflow series wrapper: values at multiples of dt, linear in between.
class InflowSeries {
 public:
  InflowSeries(Eigen::VectorXd values, double dt) : values_(std::move(values)), dt_(dt) {
    require(dt_ > 0.0 && values_.size() >= 2, "inflow series: need dt > 0 and >= 2 samples");
  }

  double duration() const { return (values_.size() - 1) * dt_; }

  double operator()(double t) const {
    require(t >= -1e-12 && t <= duration() + 1e-9, "inflow series does not cover requested time");
    const double u = std::clamp(t / dt_, 0.0, static_cast<double>(values_.size() - 1));
    const int k = std::min(static_cast<int>(u), static_cast<int>(values_.size()) - 2);
    const double w = u - k;
    return (1.0 - w) * values_[k] + w * values_[k + 1];
  }

 private:
  Eigen::VectorXd values_;
  double dt_;
};

}  // namespace hemograph
