#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hemograph/features.hpp"

namespace hemograph {

/// Streaming mean/variance (Welford), one accumulator per channel.
class WelfordAccumulator {
 public:
  explicit WelfordAccumulator(int channels)
      : count_(0), mean_(Eigen::VectorXd::Zero(channels)), m2_(Eigen::VectorXd::Zero(channels)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& x) {
    ++count_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(x - mean_);
  }

  long long count() const { return count_; }
  Eigen::VectorXd mean() const { return mean_; }

  /// Population standard deviation, clamped to 1 for (near-)constant channels.
  Eigen::VectorXd stddev() const {
    Eigen::VectorXd s(mean_.size());
    for (int i = 0; i < s.size(); ++i) {
      const double var = count_ > 0 ? m2_[i] / static_cast<double>(count_) : 0.0;
      s[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

 private:
  long long count_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

struct ChannelStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  std::vector<bool> excluded;  // pass-through channels (unit vectors)

  int width() const { return static_cast<int>(mean.size()); }

  static ChannelStats identity(int channels) {
    ChannelStats s;
    s.mean = Eigen::VectorXd::Zero(channels);
    s.stddev = Eigen::VectorXd::Ones(channels);
    s.excluded.assign(channels, false);
    return s;
  }
};

enum class NormDirection { forward, inverse };

/// Per-channel Gaussian standardization stats for node features, edge
/// features and per-step output increments.
struct NormStats {
  ChannelStats node;
  ChannelStats edge;
  ChannelStats increment;  // [dp, dq]

  static NormStats identity() {
    NormStats s;
    s.node = ChannelStats::identity(kNodeFeatureWidth);
    s.edge = ChannelStats::identity(kEdgeFeatureWidth);
    s.increment = ChannelStats::identity(2);
    // unit-vector channels stay excluded even for identity stats
    for (int k = 0; k < 3; ++k) {
      s.node.excluded[nodech::tangent0 + k] = true;
      s.edge.excluded[edgech::dir0 + k] = true;
    }
    return s;
  }
};

inline void apply_normalization(const ChannelStats& stats,
                                Eigen::Ref<Eigen::VectorXd> x,
                                NormDirection dir) {
  require(static_cast<int>(x.size()) == stats.width(),
          "apply_normalization: channel count mismatch");
  for (int i = 0; i < x.size(); ++i) {
    if (stats.excluded[i]) continue;
    x[i] = dir == NormDirection::forward ? (x[i] - stats.mean[i]) / stats.stddev[i]
                                         : x[i] * stats.stddev[i] + stats.mean[i];
  }
}

inline Eigen::VectorXd normalized(const ChannelStats& stats, Eigen::VectorXd x,
                                  NormDirection dir = NormDirection::forward) {
  apply_normalization(stats, x, dir);
  return x;
}

/// Column-wise standardization of a feature matrix (channels are rows).
inline void apply_normalization_columns(const ChannelStats& stats, Eigen::MatrixXd& m,
                                        NormDirection dir) {
  require(static_cast<int>(m.rows()) == stats.width(),
          "apply_normalization: channel count mismatch");
  for (int i = 0; i < m.rows(); ++i) {
    if (stats.excluded[i]) continue;
    if (dir == NormDirection::forward)
      m.row(i) = (m.row(i).array() - stats.mean[i]) / stats.stddev[i];
    else
      m.row(i) = m.row(i).array() * stats.stddev[i] + stats.mean[i];
  }
}

/// Fits standardization statistics over every node, edge and timestep of the
/// dataset. Edge features are static per graph, so each edge is accumulated
/// once per trajectory; increment stats come from consecutive-state
/// differences of p and q.
inline NormStats fit_normalization(const std::vector<const CenterlineGraph*>& graphs,
                                   const std::vector<const Trajectory*>& trajectories,
                                   const std::vector<int>& trajectory_graph) {
  require(!trajectories.empty(), "fit_normalization: empty dataset");
  require(trajectories.size() == trajectory_graph.size(),
          "fit_normalization: trajectory/graph mapping size mismatch");

  WelfordAccumulator node_acc(kNodeFeatureWidth);
  WelfordAccumulator edge_acc(kEdgeFeatureWidth);
  WelfordAccumulator inc_acc(2);

  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const Trajectory& traj = *trajectories[t];
    const CenterlineGraph& g = *graphs.at(trajectory_graph[t]);
    traj.validate();
    require(traj.n_nodes() == g.n_nodes(), "fit_normalization: trajectory/graph node count mismatch");

    for (int k = 0; k < traj.n_steps(); ++k) {
      const NodeState s = traj.state_at(k);
      for (int i = 0; i < g.n_nodes(); ++i) node_acc.add(node_features(g, s, i));
    }
    const Eigen::MatrixXd ef = assemble_edge_features(g);
    for (int e = 0; e < ef.cols(); ++e) edge_acc.add(ef.col(e));
    for (int k = 0; k + 1 < traj.n_steps(); ++k) {
      for (int i = 0; i < g.n_nodes(); ++i) {
        Eigen::Vector2d d(traj.p(i, k + 1) - traj.p(i, k), traj.q(i, k + 1) - traj.q(i, k));
        inc_acc.add(d);
      }
    }
  }

  NormStats stats;
  stats.node.mean = node_acc.mean();
  stats.node.stddev = node_acc.stddev();
  stats.node.excluded.assign(kNodeFeatureWidth, false);
  for (int k = 0; k < 3; ++k) stats.node.excluded[nodech::tangent0 + k] = true;

  stats.edge.mean = edge_acc.mean();
  stats.edge.stddev = edge_acc.stddev();
  stats.edge.excluded.assign(kEdgeFeatureWidth, false);
  for (int k = 0; k < 3; ++k) stats.edge.excluded[edgech::dir0 + k] = true;

  stats.increment.mean = inc_acc.mean();
  stats.increment.stddev = inc_acc.stddev();
  stats.increment.excluded.assign(2, false);
  return stats;
}

}  // namespace hemograph
