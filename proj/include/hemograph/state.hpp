#pragma once

#include <Eigen/Dense>
#include <string>

#include "hemograph/errors.hpp"

namespace hemograph {

/// Per-node pressure/flow snapshot at one time index.
struct NodeState {
  Eigen::VectorXd p;  // barye
  Eigen::VectorXd q;  // cm^3/s
  bool loading = false;
  int time_index = 0;

  int n_nodes() const { return static_cast<int>(p.size()); }
};

/// Time series of nodal states at constant dt, plus the prescribed inlet flow
/// series. States with index < loading_steps belong to the loading ramp.
struct Trajectory {
  Eigen::MatrixXd p;          // n_nodes x n_steps
  Eigen::MatrixXd q;          // n_nodes x n_steps
  double dt = 0.0;            // s
  int loading_steps = 0;
  Eigen::VectorXd inlet_flow; // n_steps
  std::string graph_ref;

  int n_nodes() const { return static_cast<int>(p.rows()); }
  int n_steps() const { return static_cast<int>(p.cols()); }
  int cycle_steps() const { return n_steps() - loading_steps; }

  bool is_loading(int k) const { return k < loading_steps; }

  NodeState state_at(int k) const {
    require(k >= 0 && k < n_steps(), "trajectory: time index out of range");
    return NodeState{p.col(k), q.col(k), is_loading(k), k};
  }

  void validate() const {
    require(dt > 0.0, "trajectory: dt must be positive");
    require(p.rows() == q.rows() && p.cols() == q.cols(),
            "trajectory: p/q shapes disagree");
    require(inlet_flow.size() == n_steps(), "trajectory: inlet_flow length mismatch");
    require(loading_steps >= 0 && loading_steps <= n_steps(),
            "trajectory: loading_steps out of range");
  }
};

}  // namespace hemograph
