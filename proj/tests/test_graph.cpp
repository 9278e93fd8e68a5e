#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <queue>

#include "hemograph/features.hpp"
#include "hemograph/graph.hpp"

using namespace hemograph;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

CenterlineGraph straight_chain(int n, double spacing = 1.0) {
  std::vector<Vector3d> pos;
  std::vector<NodeType> types;
  std::vector<std::pair<int, int>> segs;
  for (int i = 0; i < n; ++i) {
    pos.push_back({spacing * i, 0.0, 0.0});
    types.push_back(i == 0 ? NodeType::inlet
                           : (i == n - 1 ? NodeType::outlet : NodeType::branch));
    if (i > 0) segs.push_back({i - 1, i});
  }
  return build_graph(pos, segs, types, VectorXd::Ones(n), {0.8, 1e5, 1.5e5});
}

// Independent oracle: all-pairs shortest paths over physical edges by
// Floyd-Warshall on Euclidean weights.
Eigen::MatrixXd brute_force_distances(const CenterlineGraph& g) {
  const int n = g.n_nodes();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0.0;
  for (int e = 0; e < g.n_physical_edges; ++e) {
    const auto& ed = g.edges[e];
    const double w = (g.positions[ed.dst] - g.positions[ed.src]).norm();
    d(ed.src, ed.dst) = std::min(d(ed.src, ed.dst), w);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);
  return d;
}

// Manually constructed 7-node Y-tree: inlet, branch, three junction nodes,
// two outlets.
CenterlineGraph y_tree() {
  std::vector<Vector3d> pos = {
      {0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {2.5, 0.4, 0}, {2.5, -0.4, 0}, {3.5, 1.0, 0}, {3.5, -1.0, 0}};
  std::vector<NodeType> types = {NodeType::inlet,    NodeType::branch,   NodeType::junction,
                                 NodeType::junction, NodeType::junction, NodeType::outlet,
                                 NodeType::outlet};
  std::vector<std::pair<int, int>> segs = {{0, 1}, {1, 2}, {2, 3}, {2, 4}, {3, 5}, {4, 6}};
  VectorXd area(7);
  area << 2.0, 2.0, 1.8, 1.1, 1.1, 1.0, 1.0;
  std::map<int, RcrParams> bcs = {{5, RcrParams::windkessel(100, 1e-5, 900)},
                                  {6, RcrParams::resistance(1200)}};
  return build_graph(pos, segs, types, area, {0.9, 9e4, 1.6e5}, bcs);
}

}  // namespace

TEST_CASE("build_graph creates bidirectional physical edges on a 3-node path") {
  auto g = straight_chain(3);
  REQUIRE(g.n_physical_edges == 4);
  REQUIRE(g.n_boundary_edges() == 0);
  REQUIRE(g.inlet_node() == 0);
  REQUIRE(g.outlet_nodes() == std::vector<int>{2});
  // each undirected segment appears in both directions
  int fwd = 0, rev = 0;
  for (const auto& e : g.edges) {
    if (e.src + 1 == e.dst) ++fwd;
    if (e.src - 1 == e.dst) ++rev;
  }
  REQUIRE(fwd == 2);
  REQUIRE(rev == 2);
}

TEST_CASE("build_graph labels a Y-bifurcation as constructed") {
  auto g = y_tree();
  REQUIRE(g.n_nodes() == 7);
  REQUIRE(g.node_type[2] == NodeType::junction);
  REQUIRE(g.node_type[3] == NodeType::junction);
  REQUIRE(g.node_type[4] == NodeType::junction);
  REQUIRE(g.outlet_nodes().size() == 2);
  NodeState s{VectorXd::Zero(7), VectorXd::Zero(7), false, 0};
  for (int i = 0; i < 7; ++i) {
    const VectorXd v = node_features(g, s, i);
    Eigen::Vector4d onehot = v.segment<4>(nodech::type0);
    REQUIRE(onehot.sum() == 1.0);
    REQUIRE(onehot[static_cast<int>(g.node_type[i])] == 1.0);
  }
}

TEST_CASE("build_graph rejects invalid input") {
  std::vector<Vector3d> pos = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  VectorXd area = VectorXd::Ones(3);
  SECTION("two inlets") {
    std::vector<NodeType> types = {NodeType::inlet, NodeType::inlet, NodeType::outlet};
    REQUIRE_THROWS_AS(build_graph(pos, {{0, 1}, {1, 2}}, types, area, {}), topology_error);
  }
  SECTION("no inlet") {
    std::vector<NodeType> types = {NodeType::branch, NodeType::branch, NodeType::outlet};
    REQUIRE_THROWS_AS(build_graph(pos, {{0, 1}, {1, 2}}, types, area, {}), topology_error);
  }
  SECTION("disconnected segments") {
    std::vector<NodeType> types = {NodeType::inlet, NodeType::branch, NodeType::outlet};
    REQUIRE_THROWS_AS(build_graph(pos, {{0, 1}, {0, 1}}, types, area, {}), topology_error);
  }
  SECTION("non-positive area") {
    std::vector<NodeType> types = {NodeType::inlet, NodeType::branch, NodeType::outlet};
    VectorXd bad = area;
    bad[1] = 0.0;
    REQUIRE_THROWS_AS(build_graph(pos, {{0, 1}, {1, 2}}, types, bad, {}), validation_error);
  }
}

TEST_CASE("tangents are unit central differences along the chain") {
  auto g = straight_chain(5, 0.7);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(std::abs(g.tangent[i].norm() - 1.0) < 1e-12);
    REQUIRE(g.tangent[i].isApprox(Vector3d::UnitX(), 1e-12));
  }
}

TEST_CASE("path_length matches single-edge and additive cases") {
  auto g = straight_chain(3, 1.0);
  REQUIRE(path_length(g, 0, 1) == Catch::Approx(1.0));
  REQUIRE(path_length(g, 0, 2) == Catch::Approx(2.0));
  REQUIRE(path_length(g, 2, 0) == Catch::Approx(2.0));
}

TEST_CASE("path_length agrees with brute force and ignores boundary edges") {
  auto g0 = y_tree();
  const Eigen::MatrixXd ref = brute_force_distances(g0);
  auto g = add_boundary_edges(g0);
  for (int i = 0; i < g.n_nodes(); ++i)
    for (int j = 0; j < g.n_nodes(); ++j) {
      REQUIRE(path_length(g, i, j) == Catch::Approx(ref(i, j)).margin(1e-14));
      REQUIRE(path_length(g, i, j) == Catch::Approx(path_length(g, j, i)).margin(1e-14));
    }
}

TEST_CASE("add_boundary_edges assigns nearest boundary with index tie-break") {
  // 5-node uniform chain: node 1 -> inlet, node 3 -> outlet, node 2 is
  // equidistant and goes to the inlet (lower index, by the tie rule).
  auto g = add_boundary_edges(straight_chain(5));
  REQUIRE(g.n_boundary_edges() == 2 * 3);

  std::map<int, int> assigned;  // interior node -> boundary node
  for (int e = g.n_physical_edges; e < g.n_edges(); ++e) {
    const auto& ed = g.edges[e];
    if (g.is_boundary_node(ed.src)) {
      REQUIRE_FALSE(assigned.count(ed.dst));
      assigned[ed.dst] = ed.src;
      REQUIRE(ed.cls == (g.node_type[ed.src] == NodeType::inlet ? EdgeClass::inlet_edge
                                                                : EdgeClass::outlet_edge));
    }
  }
  REQUIRE(assigned == std::map<int, int>{{1, 0}, {2, 0}, {3, 4}});

  // Brute-force check of the nearest-boundary rule on the Y-tree.
  auto y0 = y_tree();
  const Eigen::MatrixXd ref = brute_force_distances(y0);
  auto y = add_boundary_edges(y0);
  std::vector<int> boundary = {y.inlet_node()};
  for (int o : y.outlet_nodes()) boundary.push_back(o);
  std::sort(boundary.begin(), boundary.end());
  for (int e = y.n_physical_edges; e < y.n_edges(); ++e) {
    const auto& ed = y.edges[e];
    if (!y.is_boundary_node(ed.src)) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int b : boundary)
      if (ref(b, ed.dst) < best_d) {
        best_d = ref(b, ed.dst);
        best = b;
      }
    REQUIRE(ed.src == best);
  }
}

TEST_CASE("add_boundary_edges leaves a 2-node graph unchanged") {
  std::vector<Vector3d> pos = {{0, 0, 0}, {1, 0, 0}};
  std::vector<NodeType> types = {NodeType::inlet, NodeType::outlet};
  auto g = build_graph(pos, {{0, 1}}, types, VectorXd::Ones(2), {});
  auto aug = add_boundary_edges(g);
  REQUIRE(aug.n_edges() == g.n_edges());
  REQUIRE(aug.n_boundary_edges() == 0);
}

TEST_CASE("every interior node gains exactly one boundary-edge pair") {
  auto g = add_boundary_edges(y_tree());
  int interior = 0;
  for (int i = 0; i < g.n_nodes(); ++i) interior += g.is_interior_node(i);
  REQUIRE(g.n_boundary_edges() == 2 * interior);
  for (int i = 0; i < g.n_nodes(); ++i) {
    if (!g.is_interior_node(i)) continue;
    int incident_pairs = 0;
    for (int e = g.n_physical_edges; e < g.n_edges(); ++e)
      if (g.edges[e].dst == i && g.is_boundary_node(g.edges[e].src)) ++incident_pairs;
    REQUIRE(incident_pairs == 1);
  }
}

TEST_CASE("node_features layout and boundary-condition gating") {
  auto g = y_tree();
  VectorXd p = VectorXd::Constant(7, 1.2e5);
  VectorXd q = VectorXd::Constant(7, 30.0);
  NodeState s{p, q, true, 3};

  const VectorXd v_branch = node_features(g, s, 1);
  REQUIRE(v_branch.size() == kNodeFeatureWidth);
  REQUIRE(v_branch[nodech::p] == 1.2e5);
  REQUIRE(v_branch[nodech::q] == 30.0);
  REQUIRE(v_branch[nodech::area] == 2.0);
  REQUIRE(v_branch.segment<3>(nodech::rp).isZero());  // BC channels gated off
  REQUIRE(v_branch[nodech::loading] == 1.0);

  NodeState post = s;
  post.loading = false;
  REQUIRE(node_features(g, post, 1)[nodech::loading] == 0.0);

  const VectorXd v_out = node_features(g, s, 5);
  REQUIRE(v_out[nodech::rp] == 100.0);
  REQUIRE(v_out[nodech::c] == 1e-5);
  REQUIRE(v_out[nodech::rd] == 900.0);
  const VectorXd v_res = node_features(g, s, 6);
  REQUIRE(v_res[nodech::rp] == 1200.0);
  REQUIRE(v_res[nodech::c] == 0.0);
  REQUIRE(v_res[nodech::rd] == 0.0);
}

TEST_CASE("edge_features layout, antisymmetry and boundary classes") {
  auto g = add_boundary_edges(y_tree());
  for (int e = 0; e < g.n_edges(); ++e) {
    const VectorXd w = edge_features_by_index(g, e);
    REQUIRE(w.size() == kEdgeFeatureWidth);
    REQUIRE(std::abs(w.segment<3>(edgech::dir0).norm() - 1.0) < 1e-12);
    REQUIRE(w.segment<4>(edgech::type0).sum() == 1.0);
  }
  const VectorXd fwd = edge_features(g, {0, 1});
  const VectorXd rev = edge_features(g, {1, 0});
  REQUIRE(fwd.segment<3>(edgech::dir0).isApprox(-rev.segment<3>(edgech::dir0), 1e-15));
  REQUIRE(fwd[edgech::z] == rev[edgech::z]);
  REQUIRE(fwd.segment<4>(edgech::type0) == rev.segment<4>(edgech::type0));

  // boundary edge from the inlet carries the inlet one-hot
  for (int e = g.n_physical_edges; e < g.n_edges(); ++e) {
    const auto& ed = g.edges[e];
    if (g.node_type[ed.src] == NodeType::inlet) {
      const VectorXd w = edge_features_by_index(g, e);
      REQUIRE(w[edgech::type0 + static_cast<int>(EdgeClass::inlet_edge)] == 1.0);
    }
  }
  REQUIRE_THROWS_AS(edge_features(g, {0, 6}), contract_error);
}

TEST_CASE("incoming incidence is ordered canonically and covers all edges") {
  auto g = add_boundary_edges(y_tree());
  int total = 0;
  for (const auto& l : g.incoming()) total += static_cast<int>(l.size());
  REQUIRE(total == g.n_edges());
}
