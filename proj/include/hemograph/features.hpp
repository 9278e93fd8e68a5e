#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "hemograph/graph.hpp"
#include "hemograph/state.hpp"

namespace hemograph {

// Node feature vector layout (17 channels):
//   [p, q, A, node-type one-hot(4), tangent(3), T_cc, p_min, p_max, Rp, C, Rd, loading]
// Edge feature vector layout (8 channels):
//   [unit displacement(3), physical path length z, edge-type one-hot(4)]
inline constexpr int kNodeFeatureWidth = 17;
inline constexpr int kEdgeFeatureWidth = 8;

namespace nodech {
inline constexpr int p = 0;
inline constexpr int q = 1;
inline constexpr int area = 2;
inline constexpr int type0 = 3;   // one-hot base: branch, junction, inlet, outlet
inline constexpr int tangent0 = 7;
inline constexpr int t_cc = 10;
inline constexpr int p_min = 11;
inline constexpr int p_max = 12;
inline constexpr int rp = 13;
inline constexpr int c = 14;
inline constexpr int rd = 15;
inline constexpr int loading = 16;
}  // namespace nodech

namespace edgech {
inline constexpr int dir0 = 0;
inline constexpr int z = 3;
inline constexpr int type0 = 4;
}  // namespace edgech

inline Eigen::VectorXd node_features(const CenterlineGraph& g, const NodeState& state, int i) {
  require(i >= 0 && i < g.n_nodes(), "node_features: node index out of range");
  require(state.n_nodes() == g.n_nodes(), "node_features: state size mismatch");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kNodeFeatureWidth);
  v[nodech::p] = state.p[i];
  v[nodech::q] = state.q[i];
  v[nodech::area] = g.area[i];
  v[nodech::type0 + static_cast<int>(g.node_type[i])] = 1.0;
  v.segment<3>(nodech::tangent0) = g.tangent[i];
  v[nodech::t_cc] = g.scalars.T_cc;
  v[nodech::p_min] = g.scalars.p_min;
  v[nodech::p_max] = g.scalars.p_max;
  if (g.node_type[i] == NodeType::outlet) {
    auto it = g.outlet_bcs.find(i);
    if (it != g.outlet_bcs.end()) {
      v[nodech::rp] = it->second.Rp;
      v[nodech::c] = it->second.C;
      v[nodech::rd] = it->second.Rd;
    }
  }
  v[nodech::loading] = state.loading ? 1.0 : 0.0;
  return v;
}

inline Eigen::VectorXd edge_features_by_index(const CenterlineGraph& g, int e) {
  require(e >= 0 && e < g.n_edges(), "edge_features: edge index out of range");
  const auto& ed = g.edges[e];
  const Eigen::Vector3d d = g.positions[ed.dst] - g.positions[ed.src];
  const double norm = d.norm();
  if (!(norm > 0.0))
    throw validation_error("edge_features: degenerate edge between coincident nodes");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(kEdgeFeatureWidth);
  w.segment<3>(edgech::dir0) = d / norm;
  w[edgech::z] = path_length(g, ed.src, ed.dst);
  w[edgech::type0 + static_cast<int>(ed.cls)] = 1.0;
  return w;
}

inline Eigen::VectorXd edge_features(const CenterlineGraph& g, std::pair<int, int> edge) {
  for (int e = 0; e < g.n_edges(); ++e) {
    if (g.edges[e].src == edge.first && g.edges[e].dst == edge.second)
      return edge_features_by_index(g, e);
  }
  throw contract_error("edge_features: edge not present in graph");
}

inline Eigen::MatrixXd assemble_node_features(const CenterlineGraph& g, const NodeState& state) {
  Eigen::MatrixXd m(kNodeFeatureWidth, g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) m.col(i) = node_features(g, state, i);
  return m;
}

inline Eigen::MatrixXd assemble_edge_features(const CenterlineGraph& g) {
  Eigen::MatrixXd m(kEdgeFeatureWidth, g.n_edges());
  for (int e = 0; e < g.n_edges(); ++e) m.col(e) = edge_features_by_index(g, e);
  return m;
}

/// Selects which feature channels the surrogate consumes. Ablation variants
/// shrink encoder input widths by dropping channels.
struct FeatureMask {
  std::array<bool, kNodeFeatureWidth> node{};
  std::array<bool, kEdgeFeatureWidth> edge{};
  std::string name = "full";

  static FeatureMask full() {
    FeatureMask m;
    m.node.fill(true);
    m.edge.fill(true);
    m.name = "full";
    return m;
  }

  /// Keeps only p, q and the node-type one-hot on nodes, and only the unit
  /// displacement and path length on edges.
  static FeatureMask no_tau() {
    FeatureMask m;
    m.node.fill(false);
    m.edge.fill(false);
    m.node[nodech::p] = m.node[nodech::q] = true;
    for (int k = 0; k < 4; ++k) m.node[nodech::type0 + k] = true;
    for (int k = 0; k < 3; ++k) m.edge[edgech::dir0 + k] = true;
    m.edge[edgech::z] = true;
    m.name = "no_tau";
    return m;
  }

  /// Drops only the three outlet boundary-condition channels.
  static FeatureMask no_rcr() {
    FeatureMask m = full();
    m.node[nodech::rp] = m.node[nodech::c] = m.node[nodech::rd] = false;
    m.name = "no_rcr";
    return m;
  }

  int node_width() const {
    int w = 0;
    for (bool b : node) w += b;
    return w;
  }
  int edge_width() const {
    int w = 0;
    for (bool b : edge) w += b;
    return w;
  }

  std::vector<int> kept_node_channels() const {
    std::vector<int> v;
    for (int i = 0; i < kNodeFeatureWidth; ++i)
      if (node[i]) v.push_back(i);
    return v;
  }
  std::vector<int> kept_edge_channels() const {
    std::vector<int> v;
    for (int i = 0; i < kEdgeFeatureWidth; ++i)
      if (edge[i]) v.push_back(i);
    return v;
  }

  /// Index of a full-layout channel in the masked layout, -1 if dropped.
  int masked_node_index(int full_channel) const {
    if (!node[full_channel]) return -1;
    int idx = 0;
    for (int i = 0; i < full_channel; ++i) idx += node[i];
    return idx;
  }
};

/// Feature groups used by the sensitivity analysis; multi-channel groups share
/// one noise budget (std divided by the channel count).
struct FeatureGroup {
  std::string name;
  bool on_nodes = true;            // false: edge feature
  std::vector<int> channels;       // full-layout channel ids
};

inline const std::vector<FeatureGroup>& sensitivity_feature_groups() {
  static const std::vector<FeatureGroup> groups = {
      {"pressure", true, {nodech::p}},
      {"flow_rate", true, {nodech::q}},
      {"area", true, {nodech::area}},
      {"node_type", true, {nodech::type0, nodech::type0 + 1, nodech::type0 + 2, nodech::type0 + 3}},
      {"tangent", true, {nodech::tangent0, nodech::tangent0 + 1, nodech::tangent0 + 2}},
      {"cardiac_period", true, {nodech::t_cc}},
      {"min_pressure", true, {nodech::p_min}},
      {"max_pressure", true, {nodech::p_max}},
      {"rcr_params", true, {nodech::rp, nodech::c, nodech::rd}},
      {"loading_flag", true, {nodech::loading}},
      {"rel_position", false, {edgech::dir0, edgech::dir0 + 1, edgech::dir0 + 2}},
      {"path_length", false, {edgech::z}},
      {"edge_type", false, {edgech::type0, edgech::type0 + 1, edgech::type0 + 2, edgech::type0 + 3}},
  };
  return groups;
}

}  // namespace hemograph
