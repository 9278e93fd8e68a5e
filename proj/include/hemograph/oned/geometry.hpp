#pragma once

#include <Eigen/Dense>
#include <map>
#include <set>
#include <vector>

#include "hemograph/bc.hpp"
#include "hemograph/errors.hpp"
#include "hemograph/oned/wall.hpp"

namespace hemograph {

/// One vessel segment of the 1D geometry: axial coordinates with reference
/// area/radius/pressure profiles.
struct Segment1D {
  Eigen::VectorXd z;   // cm, strictly increasing
  Eigen::VectorXd A0;  // cm^2
  Eigen::VectorXd r0;  // cm
  Eigen::VectorXd p0;  // barye

  int n() const { return static_cast<int>(z.size()); }

  void validate() const {
    require(n() >= 2, "segment: need at least two nodes");
    require(A0.size() == n() && r0.size() == n() && p0.size() == n(),
            "segment: profile sizes disagree");
    for (int i = 0; i < n(); ++i)
      require(A0[i] > 0.0 && r0[i] > 0.0, "segment: non-positive reference area/radius");
    for (int i = 1; i < n(); ++i)
      require(z[i] > z[i - 1], "segment: z must be strictly increasing");
  }
};

/// Junction: the end of one upstream segment feeds the starts of >= 1
/// downstream segments.
struct Junction1D {
  int parent = -1;
  std::vector<int> children;
};

struct Geometry1D {
  std::vector<Segment1D> segments;
  std::vector<Junction1D> junctions;
  WallModel wall;
  std::map<int, RcrParams> outlet_bcs;  // leaf segment id -> outlet condition

  int n_nodes() const {
    int n = 0;
    for (const auto& s : segments) n += s.n();
    return n;
  }

  /// Segment whose start is the model inlet.
  int root_segment() const {
    std::set<int> child_set;
    for (const auto& j : junctions)
      for (int c : j.children) child_set.insert(c);
    int root = -1;
    for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
      if (!child_set.count(s)) {
        require(root < 0, "geometry: multiple root segments");
        root = s;
      }
    }
    require(root >= 0, "geometry: no root segment (junction cycle)");
    return root;
  }

  /// Segments whose end is a model outlet.
  std::vector<int> leaf_segments() const {
    std::set<int> parent_set;
    for (const auto& j : junctions) parent_set.insert(j.parent);
    std::vector<int> leaves;
    for (int s = 0; s < static_cast<int>(segments.size()); ++s)
      if (!parent_set.count(s)) leaves.push_back(s);
    return leaves;
  }

  void validate() const {
    require(!segments.empty(), "geometry: no segments");
    for (const auto& s : segments) s.validate();
    const int ns = static_cast<int>(segments.size());
    std::set<int> seen_children;
    std::set<int> seen_parents;
    for (const auto& j : junctions) {
      require(j.parent >= 0 && j.parent < ns, "geometry: bad junction parent");
      require(!j.children.empty(), "geometry: junction without children");
      require(!seen_parents.count(j.parent), "geometry: segment feeds two junctions");
      seen_parents.insert(j.parent);
      for (int c : j.children) {
        require(c >= 0 && c < ns && c != j.parent, "geometry: bad junction child");
        require(!seen_children.count(c), "geometry: segment is child of two junctions");
        seen_children.insert(c);
      }
    }
    require(static_cast<int>(seen_children.size()) == ns - 1,
            "geometry: junction topology is not a tree");
    root_segment();
    for (int leaf : leaf_segments())
      require(outlet_bcs.count(leaf) > 0,
              "geometry: missing outlet condition for leaf segment " + std::to_string(leaf));
    for (const auto& [seg, bc] : outlet_bcs) {
      require(seg >= 0 && seg < ns, "geometry: outlet condition on unknown segment");
      bc.validate();
    }
  }
};

}  // namespace hemograph
