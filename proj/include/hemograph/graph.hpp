#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "hemograph/bc.hpp"
#include "hemograph/errors.hpp"
#include "hemograph/rng.hpp"

namespace hemograph {

enum class NodeType : int { branch = 0, junction = 1, inlet = 2, outlet = 3 };

enum class EdgeClass : int {
  branch_branch = 0,
  junction_junction = 1,
  inlet_edge = 2,
  outlet_edge = 3,
};

inline const char* to_string(NodeType t) {
  switch (t) {
    case NodeType::branch: return "branch";
    case NodeType::junction: return "junction";
    case NodeType::inlet: return "inlet";
    case NodeType::outlet: return "outlet";
  }
  return "?";
}

inline const char* to_string(EdgeClass c) {
  switch (c) {
    case EdgeClass::branch_branch: return "branch_branch";
    case EdgeClass::junction_junction: return "junction_junction";
    case EdgeClass::inlet_edge: return "inlet";
    case EdgeClass::outlet_edge: return "outlet";
  }
  return "?";
}

inline NodeType node_type_from_string(const std::string& s) {
  if (s == "branch") return NodeType::branch;
  if (s == "junction") return NodeType::junction;
  if (s == "inlet") return NodeType::inlet;
  if (s == "outlet") return NodeType::outlet;
  throw validation_error("unknown node type: " + s);
}

inline EdgeClass edge_class_from_string(const std::string& s) {
  if (s == "branch_branch") return EdgeClass::branch_branch;
  if (s == "junction_junction") return EdgeClass::junction_junction;
  if (s == "inlet") return EdgeClass::inlet_edge;
  if (s == "outlet") return EdgeClass::outlet_edge;
  throw validation_error("unknown edge class: " + s);
}

/// Directed edge. Physical edges and boundary edges are both stored in the
/// combined list, physical first; each conceptual connection appears twice
/// (once per direction).
struct GraphEdge {
  int src = -1;
  int dst = -1;
  EdgeClass cls = EdgeClass::branch_branch;
  bool boundary = false;
};

struct GraphScalars {
  double T_cc = 1.0;   // s
  double p_min = 0.0;  // barye
  double p_max = 0.0;  // barye
};

/// Vessel-centerline graph. Immutable after construction/augmentation; all
/// accessors are safe for concurrent reads.
class CenterlineGraph {
 public:
  std::vector<Eigen::Vector3d> positions;
  std::vector<NodeType> node_type;
  Eigen::VectorXd area;                   // cm^2, per node
  std::vector<Eigen::Vector3d> tangent;   // unit vectors
  std::vector<GraphEdge> edges;           // physical edges first, boundary after
  int n_physical_edges = 0;
  GraphScalars scalars;
  std::map<int, RcrParams> outlet_bcs;

  int n_nodes() const { return static_cast<int>(positions.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_boundary_edges() const { return n_edges() - n_physical_edges; }

  int inlet_node() const { return inlet_; }
  const std::vector<int>& outlet_nodes() const { return outlets_; }

  bool is_boundary_node(int i) const {
    return node_type[i] == NodeType::inlet || node_type[i] == NodeType::outlet;
  }
  bool is_interior_node(int i) const { return !is_boundary_node(i); }

  /// Incoming directed edges per node, all classes, in a label-invariant
  /// order (sorted by edge class, then source position).
  const std::vector<std::vector<int>>& incoming() const { return incoming_; }
  /// Incoming boundary edges of inlet type per node (same ordering rule).
  const std::vector<std::vector<int>>& incoming_boundary_inlet() const { return in_bnd_inlet_; }
  /// Incoming boundary edges of outlet type per node.
  const std::vector<std::vector<int>>& incoming_boundary_outlet() const { return in_bnd_outlet_; }

  /// Physical-edge neighbor list: (neighbor, Euclidean edge length).
  const std::vector<std::vector<std::pair<int, double>>>& physical_adjacency() const {
    return phys_adj_;
  }

  /// Rebuilds derived structures and checks the type invariants. Must be
  /// called after any change to nodes or edges.
  void finalize() {
    const int n = n_nodes();
    require(n > 0, "graph: empty node set");
    require(area.size() == n && static_cast<int>(node_type.size()) == n &&
                static_cast<int>(tangent.size()) == n,
            "graph: per-node array sizes disagree");
    for (int i = 0; i < n; ++i) {
      if (!(area[i] > 0.0)) throw validation_error("graph: non-positive area at node " + std::to_string(i));
      if (std::abs(tangent[i].norm() - 1.0) > 1e-12)
        throw validation_error("graph: non-unit tangent at node " + std::to_string(i));
    }

    inlet_ = -1;
    outlets_.clear();
    for (int i = 0; i < n; ++i) {
      if (node_type[i] == NodeType::inlet) {
        if (inlet_ >= 0) throw topology_error("graph: multiple inlet nodes");
        inlet_ = i;
      } else if (node_type[i] == NodeType::outlet) {
        outlets_.push_back(i);
      }
    }
    if (inlet_ < 0) throw topology_error("graph: no inlet node");
    if (outlets_.empty()) throw topology_error("graph: no outlet node");

    phys_adj_.assign(n, {});
    for (int e = 0; e < n_physical_edges; ++e) {
      const auto& ed = edges[e];
      const double len = (positions[ed.dst] - positions[ed.src]).norm();
      if (!(len > 0.0))
        throw validation_error("graph: degenerate edge between coincident nodes " +
                               std::to_string(ed.src) + "," + std::to_string(ed.dst));
      phys_adj_[ed.src].push_back({ed.dst, len});
    }

    incoming_.assign(n, {});
    in_bnd_inlet_.assign(n, {});
    in_bnd_outlet_.assign(n, {});
    for (int e = 0; e < n_edges(); ++e) {
      const auto& ed = edges[e];
      incoming_[ed.dst].push_back(e);
      if (ed.boundary) {
        if (ed.cls == EdgeClass::inlet_edge) in_bnd_inlet_[ed.dst].push_back(e);
        if (ed.cls == EdgeClass::outlet_edge) in_bnd_outlet_[ed.dst].push_back(e);
      }
    }
    auto canon = [&](int a, int b) {
      const auto& ea = edges[a];
      const auto& eb = edges[b];
      if (ea.cls != eb.cls) return static_cast<int>(ea.cls) < static_cast<int>(eb.cls);
      const auto& pa = positions[ea.src];
      const auto& pb = positions[eb.src];
      if (pa.x() != pb.x()) return pa.x() < pb.x();
      if (pa.y() != pb.y()) return pa.y() < pb.y();
      return pa.z() < pb.z();
    };
    for (auto* lists : {&incoming_, &in_bnd_inlet_, &in_bnd_outlet_}) {
      for (auto& l : *lists) std::sort(l.begin(), l.end(), canon);
    }
  }

  /// Copy with the artificial boundary edges dropped (ablation variant).
  CenterlineGraph without_boundary_edges() const {
    CenterlineGraph g = *this;
    g.edges.resize(g.n_physical_edges);
    g.finalize();
    return g;
  }

  /// Fingerprint of node count and directed edge list; equal keys mean the
  /// batched message-passing index structure can be shared.
  std::uint64_t topology_key() const {
    std::uint64_t h = fnv1a64("topo");
    h = hash_mix(h ^ static_cast<std::uint64_t>(n_nodes()));
    for (const auto& e : edges) {
      h = hash_mix(h ^ (static_cast<std::uint64_t>(e.src) << 32 | static_cast<std::uint64_t>(e.dst)));
      h = hash_mix(h ^ static_cast<std::uint64_t>(e.cls));
    }
    return h;
  }

 private:
  int inlet_ = -1;
  std::vector<int> outlets_;
  std::vector<std::vector<int>> incoming_;
  std::vector<std::vector<int>> in_bnd_inlet_;
  std::vector<std::vector<int>> in_bnd_outlet_;
  std::vector<std::vector<std::pair<int, double>>> phys_adj_;
};

namespace detail {

inline EdgeClass classify_edge(NodeType a, NodeType b) {
  if (a == NodeType::inlet || b == NodeType::inlet) return EdgeClass::inlet_edge;
  if (a == NodeType::outlet || b == NodeType::outlet) return EdgeClass::outlet_edge;
  if (a == NodeType::junction && b == NodeType::junction) return EdgeClass::junction_junction;
  // branch-junction edges share the branch-branch class
  return EdgeClass::branch_branch;
}

/// Tangent direction as a central difference over the tree neighborhood,
/// oriented away from the inlet: parent difference plus mean child difference,
/// one-sided at the inlet and at leaves.
inline std::vector<Eigen::Vector3d> compute_tangents(
    const std::vector<Eigen::Vector3d>& pos,
    const std::vector<std::vector<int>>& adj, int inlet) {
  const int n = static_cast<int>(pos.size());
  std::vector<int> parent(n, -1);
  std::vector<std::vector<int>> children(n);
  std::vector<char> seen(n, 0);
  std::queue<int> bfs;
  bfs.push(inlet);
  seen[inlet] = 1;
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    for (int v : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      parent[v] = u;
      children[u].push_back(v);
      bfs.push(v);
    }
  }
  std::vector<Eigen::Vector3d> tang(n);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    if (parent[i] >= 0) d += pos[i] - pos[parent[i]];
    if (!children[i].empty()) {
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (int c : children[i]) mean += pos[c];
      mean /= static_cast<double>(children[i].size());
      d += mean - pos[i];
    }
    const double norm = d.norm();
    if (!(norm > 0.0)) throw validation_error("tangent: degenerate neighborhood at node " + std::to_string(i));
    tang[i] = d / norm;
  }
  return tang;
}

}  // namespace detail

/// Builds a centerline graph from node data and undirected segment pairs.
/// Physical edges are stored in both directions; tangents are derived from
/// neighboring node positions. Boundary edges are not added here.
inline CenterlineGraph build_graph(const std::vector<Eigen::Vector3d>& positions,
                                   const std::vector<std::pair<int, int>>& segments,
                                   const std::vector<NodeType>& node_types,
                                   const Eigen::VectorXd& areas,
                                   const GraphScalars& scalars,
                                   const std::map<int, RcrParams>& outlet_bcs = {}) {
  const int n = static_cast<int>(positions.size());
  require(n >= 2, "build_graph: need at least two nodes");
  require(static_cast<int>(node_types.size()) == n, "build_graph: node_types size mismatch");
  require(areas.size() == n, "build_graph: areas size mismatch");

  int inlet_count = 0;
  for (auto t : node_types)
    if (t == NodeType::inlet) ++inlet_count;
  if (inlet_count != 1)
    throw topology_error("build_graph: expected exactly one inlet, got " + std::to_string(inlet_count));

  if (static_cast<int>(segments.size()) != n - 1)
    throw topology_error("build_graph: segments do not form a tree (need n-1 edges)");

  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : segments) {
    require(a >= 0 && a < n && b >= 0 && b < n && a != b, "build_graph: bad segment indices");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  // connectivity check
  {
    std::vector<char> seen(n, 0);
    std::queue<int> bfs;
    bfs.push(0);
    seen[0] = 1;
    int count = 1;
    while (!bfs.empty()) {
      int u = bfs.front();
      bfs.pop();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          bfs.push(v);
        }
    }
    if (count != n) throw topology_error("build_graph: disconnected segments");
  }

  CenterlineGraph g;
  g.positions = positions;
  g.node_type = node_types;
  g.area = areas;
  g.scalars = scalars;
  g.outlet_bcs = outlet_bcs;

  int inlet = 0;
  for (int i = 0; i < n; ++i)
    if (node_types[i] == NodeType::inlet) inlet = i;
  g.tangent = detail::compute_tangents(positions, adj, inlet);

  for (auto [a, b] : segments) {
    const EdgeClass cls = detail::classify_edge(node_types[a], node_types[b]);
    g.edges.push_back({a, b, cls, false});
    g.edges.push_back({b, a, cls, false});
  }
  g.n_physical_edges = static_cast<int>(g.edges.size());
  g.finalize();
  return g;
}

/// Shortest-path length between two nodes over physical edges only, with
/// Euclidean edge weights. Boundary edges never contribute.
inline double path_length(const CenterlineGraph& g, int i, int j) {
  const int n = g.n_nodes();
  require(i >= 0 && i < n && j >= 0 && j < n, "path_length: node index out of range");
  if (i == j) return 0.0;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[i] = 0.0;
  pq.push({0.0, i});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == j) return d;
    for (auto [v, w] : g.physical_adjacency()[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        pq.push({d + w, v});
      }
    }
  }
  throw topology_error("path_length: nodes are not connected by physical edges");
}

namespace detail {

/// Physical-path distances from one source to every node (Dijkstra).
inline std::vector<double> distances_from(const CenterlineGraph& g, int src) {
  const int n = g.n_nodes();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : g.physical_adjacency()[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        pq.push({d + w, v});
      }
    }
  }
  return dist;
}

}  // namespace detail

/// Adds one bidirectional boundary-edge pair per interior node, to the
/// boundary node with the smallest physical-path distance; ties go to the
/// lowest boundary-node index. A graph without interior nodes is returned
/// unchanged.
inline CenterlineGraph add_boundary_edges(const CenterlineGraph& graph) {
  CenterlineGraph g = graph;
  g.edges.resize(g.n_physical_edges);  // idempotent re-augmentation

  std::vector<int> boundary;
  boundary.push_back(g.inlet_node());
  for (int o : g.outlet_nodes()) boundary.push_back(o);
  std::sort(boundary.begin(), boundary.end());

  std::vector<std::vector<double>> dist;
  dist.reserve(boundary.size());
  for (int b : boundary) dist.push_back(detail::distances_from(g, b));

  for (int i = 0; i < g.n_nodes(); ++i) {
    if (!g.is_interior_node(i)) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < boundary.size(); ++k) {
      if (dist[k][i] < best_d) {
        best_d = dist[k][i];
        best = boundary[k];
      }
    }
    const EdgeClass cls = g.node_type[best] == NodeType::inlet ? EdgeClass::inlet_edge
                                                               : EdgeClass::outlet_edge;
    g.edges.push_back({best, i, cls, true});
    g.edges.push_back({i, best, cls, true});
  }
  g.finalize();
  return g;
}

}  // namespace hemograph
