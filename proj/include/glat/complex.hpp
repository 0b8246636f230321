#pragma once

// Triangulated and cubical meshes of flat domains and tori.
//
// Nodes carry a stable index and a canonical position (inside [0, period) on
// periodic axes). An edge stores its tail, head and the displacement from the
// tail to the head; on a torus several edges may join the same pair of nodes
// and an edge may be a loop, so the displacement is part of its identity.

#include "glat/types.hpp"

#include <array>
#include <memory>
#include <optional>
#include <map>
#include <tuple>
#include <vector>

namespace glat {

enum class ComplexKind { Simplicial, Cubical };
enum class FaceKind { Triangle, Square, Polygon };

struct Edge {
  NodeIndex tail = 0;
  NodeIndex head = 0;
  Point displacement;
  double length = 0.0;
};

struct OrientedEdge {
  EdgeIndex edge = 0;
  bool forward = true;  // traversed tail -> head

  bool operator==(const OrientedEdge&) const = default;
};

struct Face {
  FaceKind kind = FaceKind::Triangle;
  std::vector<OrientedEdge> boundary;  // closed loop, first edge leaves the anchor
  std::vector<NodeIndex> nodes;        // node cycle, nodes[0] == anchor
  double area = 0.0;
  NodeIndex anchor = 0;
};

// Top-dimensional cell: triangles for simplicial complexes, d-cubes for
// lattices. Each cell has exactly one marked node used for node integration.
struct Cell {
  std::vector<NodeIndex> nodes;
  double volume = 0.0;
  NodeIndex anchor = 0;
};

// Hypercube corner on a 4D lattice: the four axis edges leaving `node`.
// faces = {<d1,d2>, <d3,d4>}; planes lists all six coordinate plaquettes at
// the node in the order (01, 02, 03, 12, 13, 23).
struct Cell4 {
  NodeIndex node = 0;
  std::array<EdgeIndex, 4> edge_frame{};
  std::array<FaceIndex, 2> faces{};
  std::array<FaceIndex, 6> planes{};
};

inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

struct LatticeInfo {
  int sites = 0;
  double spacing = 0.0;
  bool periodic = false;
  std::vector<std::array<int, 4>> coords;  // per node
  std::vector<NodeIndex> node_at;          // linear (x fastest) -> node
  std::vector<EdgeIndex> edge_at;          // node * d + mu, kNoIndex if absent
  std::vector<FaceIndex> face_at;          // node * 6 + plane, kNoIndex if absent

  std::size_t linear(const std::array<int, 4>& c, int dim) const;
};

/// Index into the six-entry plane table for axes mu < nu.
int plane_index(int mu, int nu);

class Complex {
 public:
  int dimension() const { return dimension_; }
  ComplexKind kind() const { return kind_; }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Cell4>& cells4() const { return cells4_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t face_count() const { return faces_.size(); }

  const Point& position(NodeIndex i) const { return nodes_.at(i); }

  /// Per-axis period; zero on open axes.
  const Point& periods() const { return periods_; }
  bool periodic() const { return periods_.cwiseAbs().maxCoeff() > 0.0; }
  Point wrap(const Point& x) const;

  const Complex* parent() const { return parent_.get(); }
  std::shared_ptr<const Complex> parent_ptr() const { return parent_; }

  const LatticeInfo* lattice() const { return lattice_ ? &*lattice_ : nullptr; }
  EdgeIndex lattice_edge(NodeIndex node, int mu) const;
  FaceIndex lattice_face(NodeIndex node, int mu, int nu) const;

  const std::vector<EdgeIndex>& incident_edges(NodeIndex i) const { return node_edges_.at(i); }
  const std::vector<std::size_t>& incident_cells(NodeIndex i) const { return node_cells_.at(i); }
  const std::vector<FaceIndex>& faces_anchored_at(NodeIndex i) const { return node_faces_.at(i); }

  /// Edge leaving `tail` with the given displacement (either orientation).
  std::optional<OrientedEdge> find_edge(NodeIndex tail, const Point& displacement) const;

  double max_edge_length() const;
  double length_scale() const { return length_scale_; }

  friend class ComplexBuilder;

 private:
  int dimension_ = 2;
  ComplexKind kind_ = ComplexKind::Simplicial;
  std::vector<Point> nodes_;
  std::vector<Edge> edges_;
  std::vector<Face> faces_;
  std::vector<Cell> cells_;
  std::vector<Cell4> cells4_;
  Point periods_;
  double length_scale_ = 1.0;
  std::shared_ptr<const Complex> parent_;
  std::optional<LatticeInfo> lattice_;

  std::vector<std::vector<EdgeIndex>> node_edges_;
  std::vector<std::vector<std::size_t>> node_cells_;
  std::vector<std::vector<FaceIndex>> node_faces_;
  using EdgeKey = std::tuple<NodeIndex, NodeIndex, std::array<long long, 4>>;
  EdgeKey edge_key(NodeIndex tail, NodeIndex head, const Point& displacement) const;
  std::array<long long, 4> quantize(const Point& x) const;

  std::map<EdgeKey, EdgeIndex> edge_lookup_;
};

/// Assembles a complex from nodes and faces, deduplicating edges by
/// (endpoints, displacement).
class ComplexBuilder {
 public:
  ComplexBuilder(int dimension, ComplexKind kind, Point periods, double length_scale);

  NodeIndex add_node(const Point& position);
  OrientedEdge add_edge(NodeIndex tail, NodeIndex head, const Point& displacement);
  FaceIndex add_face(FaceKind kind, const std::vector<NodeIndex>& cycle,
                     const std::vector<Point>& side_displacements);
  void add_cell(std::vector<NodeIndex> nodes, double volume, NodeIndex anchor);
  void add_cell4(const Cell4& cell);
  void set_lattice(LatticeInfo info);
  void set_parent(std::shared_ptr<const Complex> parent);

  std::size_t node_count() const { return c_.nodes_.size(); }

  /// Finalises incidence tables. When no cells were added, faces become the
  /// top cells.
  Complex build() &&;

 private:
  Complex c_;
};

Complex build_triangulated_torus(int subdivisions, double side);
Complex build_cubical_lattice(int dimension, int sites_per_axis, double spacing, bool periodic);

/// Midpoint subdivision. Old nodes keep their indices, new nodes are appended
/// and the result records `c` as its parent.
Complex refine(const Complex& c);

/// Nodes of every top cell that contains at least one of `nodes`; sorted.
std::vector<NodeIndex> star(const Complex& c, const std::vector<NodeIndex>& nodes);

/// Closed path around `face` starting and ending at `start`. With `reversed`
/// the loop runs against the face orientation.
std::vector<OrientedEdge> boundary_loop(const Complex& c, const Face& face, NodeIndex start,
                                        bool reversed = false);

/// Node at the far end of an oriented edge, and the one it starts from.
inline NodeIndex target_node(const Complex& c, const OrientedEdge& oe) {
  const Edge& e = c.edges()[oe.edge];
  return oe.forward ? e.head : e.tail;
}
inline NodeIndex source_node(const Complex& c, const OrientedEdge& oe) {
  const Edge& e = c.edges()[oe.edge];
  return oe.forward ? e.tail : e.head;
}
inline Point oriented_displacement(const Complex& c, const OrientedEdge& oe) {
  const Edge& e = c.edges()[oe.edge];
  return oe.forward ? Point(e.displacement) : Point(-e.displacement);
}

/// Throws OpenPathError unless consecutive edges chain and the last one returns
/// to the start of the first.
void require_closed(const Complex& c, const std::vector<OrientedEdge>& loop);

/// Two edge vectors leaving the anchor that span the face, in orientation order.
std::pair<Point, Point> face_frame(const Complex& c, const Face& face);

/// Breadth-first enumeration from node 0; neighbours of a node are queued in
/// lexicographic order of their positions. Unreachable nodes are appended in
/// index order.
std::vector<NodeIndex> bfs_order(const Complex& c);

}  // namespace glat
