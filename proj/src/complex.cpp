#include "glat/complex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace glat {

namespace {

Point axis_vector(int dim, int mu, double length) {
  Point v = Point::Zero(dim);
  v(mu) = length;
  return v;
}

double triangle_area(const Point& u, const Point& v) {
  const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
  return 0.5 * std::sqrt(std::max(0.0, uu * vv - uv * uv));
}

bool lexicographic_less(const Point& a, const Point& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a(k) < b(k)) return true;
    if (b(k) < a(k)) return false;
  }
  return false;
}

}  // namespace

int plane_index(int mu, int nu) {
  if (mu > nu) std::swap(mu, nu);
  static constexpr int table[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  if (mu < 0 || nu > 3 || mu == nu) throw InvalidArgument("plane_index: need two distinct axes in 0..3");
  return table[mu][nu];
}

std::size_t LatticeInfo::linear(const std::array<int, 4>& c, int dim) const {
  std::size_t l = 0;
  for (int mu = dim - 1; mu >= 0; --mu) l = l * static_cast<std::size_t>(sites) + static_cast<std::size_t>(c[mu]);
  return l;
}

// ---------------------------------------------------------------------------
// Complex

Point Complex::wrap(const Point& x) const {
  Point y = x;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double p = periods_(k);
    if (p <= 0.0) continue;
    double v = std::fmod(y(k), p);
    if (v < 0.0) v += p;
    if (p - v < 1e-9 * p || v < 1e-12 * p) v = 0.0;
    y(k) = v;
  }
  return y;
}

std::array<long long, 4> Complex::quantize(const Point& x) const {
  const double quantum = 1e-9 * length_scale_;
  std::array<long long, 4> q{0, 0, 0, 0};
  for (Eigen::Index k = 0; k < x.size(); ++k) q[k] = std::llround(x(k) / quantum);
  return q;
}

Complex::EdgeKey Complex::edge_key(NodeIndex tail, NodeIndex head, const Point& displacement) const {
  if (tail < head) return {tail, head, quantize(displacement)};
  if (tail > head) return {head, tail, quantize(-displacement)};
  auto a = quantize(displacement), b = quantize(-displacement);
  return {tail, head, std::max(a, b)};
}

std::optional<OrientedEdge> Complex::find_edge(NodeIndex tail, const Point& displacement) const {
  for (EdgeIndex e : node_edges_.at(tail)) {
    const Edge& edge = edges_[e];
    if (edge.tail == tail && quantize(edge.displacement) == quantize(displacement)) return OrientedEdge{e, true};
    if (edge.head == tail && quantize(-edge.displacement) == quantize(displacement)) return OrientedEdge{e, false};
  }
  return std::nullopt;
}

double Complex::max_edge_length() const {
  double m = 0.0;
  for (const Edge& e : edges_) m = std::max(m, e.length);
  return m;
}

EdgeIndex Complex::lattice_edge(NodeIndex node, int mu) const {
  if (!lattice_) throw InvalidArgument("lattice_edge: complex is not a lattice");
  if (mu < 0 || mu >= dimension_) throw InvalidArgument("lattice_edge: axis out of range");
  const EdgeIndex e = lattice_->edge_at.at(node * static_cast<std::size_t>(dimension_) + mu);
  if (e == kNoIndex) throw MissingLinkError("lattice_edge: no edge along axis " + std::to_string(mu));
  return e;
}

FaceIndex Complex::lattice_face(NodeIndex node, int mu, int nu) const {
  if (!lattice_) throw InvalidArgument("lattice_face: complex is not a lattice");
  if (mu >= dimension_ || nu >= dimension_) throw InvalidArgument("lattice_face: axis out of range");
  const FaceIndex f = lattice_->face_at.at(node * 6 + plane_index(mu, nu));
  if (f == kNoIndex) throw MissingLinkError("lattice_face: no plaquette in that plane");
  return f;
}

// ---------------------------------------------------------------------------
// ComplexBuilder

ComplexBuilder::ComplexBuilder(int dimension, ComplexKind kind, Point periods, double length_scale) {
  if (dimension < 1 || dimension > 4) throw InvalidArgument("complex dimension must be in 1..4");
  if (periods.size() != dimension) throw InvalidArgument("periods must have one entry per axis");
  c_.dimension_ = dimension;
  c_.kind_ = kind;
  c_.periods_ = std::move(periods);
  c_.length_scale_ = length_scale;
}

NodeIndex ComplexBuilder::add_node(const Point& position) {
  if (position.size() != c_.dimension_) throw InvalidArgument("node position has wrong dimension");
  c_.nodes_.push_back(c_.wrap(position));
  c_.node_edges_.emplace_back();
  return c_.nodes_.size() - 1;
}

OrientedEdge ComplexBuilder::add_edge(NodeIndex tail, NodeIndex head, const Point& displacement) {
  if (tail >= c_.nodes_.size() || head >= c_.nodes_.size()) throw InvalidArgument("add_edge: node out of range");
  const auto key = c_.edge_key(tail, head, displacement);
  if (auto it = c_.edge_lookup_.find(key); it != c_.edge_lookup_.end()) {
    const Edge& e = c_.edges_[it->second];
    const bool forward = e.tail == tail && c_.quantize(e.displacement) == c_.quantize(displacement);
    return {it->second, forward};
  }
  const double length = displacement.norm();
  if (!(length > 0.0)) throw InvalidArgument("add_edge: zero-length edge");
  const Point expected = c_.wrap(c_.nodes_[tail] + displacement);
  if ((expected - c_.nodes_[head]).cwiseAbs().maxCoeff() > 1e-9 * c_.length_scale_)
    throw InvalidArgument("add_edge: displacement does not connect the given nodes");
  c_.edges_.push_back(Edge{tail, head, displacement, length});
  const EdgeIndex e = c_.edges_.size() - 1;
  c_.edge_lookup_.emplace(key, e);
  c_.node_edges_[tail].push_back(e);
  if (head != tail) c_.node_edges_[head].push_back(e);
  return {e, true};
}

FaceIndex ComplexBuilder::add_face(FaceKind kind, const std::vector<NodeIndex>& cycle,
                                   const std::vector<Point>& sides) {
  if (cycle.size() < 2 || cycle.size() != sides.size()) throw InvalidArgument("add_face: malformed cycle");
  Face f;
  f.kind = kind;
  f.nodes = cycle;
  f.anchor = cycle.front();
  Point closure = Point::Zero(c_.dimension_);
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    f.boundary.push_back(add_edge(cycle[k], cycle[(k + 1) % cycle.size()], sides[k]));
    closure += sides[k];
  }
  if (closure.cwiseAbs().maxCoeff() > 1e-9 * c_.length_scale_)
    throw InvalidArgument("add_face: boundary displacements do not close");
  switch (kind) {
    case FaceKind::Triangle:
      if (cycle.size() != 3) throw InvalidArgument("add_face: triangle needs 3 nodes");
      f.area = triangle_area(sides[0], sides[0] + sides[1]);
      break;
    case FaceKind::Square:
      if (cycle.size() != 4) throw InvalidArgument("add_face: square needs 4 nodes");
      f.area = sides[0].norm() * sides[1].norm();
      break;
    case FaceKind::Polygon: {
      Point p = sides[0];
      double area = 0.0;
      for (std::size_t k = 1; k + 1 < sides.size(); ++k) {
        const Point q = p + sides[k];
        area += triangle_area(p, q);
        p = q;
      }
      f.area = area;
      break;
    }
  }
  c_.faces_.push_back(std::move(f));
  return c_.faces_.size() - 1;
}

void ComplexBuilder::add_cell(std::vector<NodeIndex> nodes, double volume, NodeIndex anchor) {
  c_.cells_.push_back(Cell{std::move(nodes), volume, anchor});
}

void ComplexBuilder::add_cell4(const Cell4& cell) { c_.cells4_.push_back(cell); }

void ComplexBuilder::set_lattice(LatticeInfo info) { c_.lattice_ = std::move(info); }

void ComplexBuilder::set_parent(std::shared_ptr<const Complex> parent) { c_.parent_ = std::move(parent); }

Complex ComplexBuilder::build() && {
  if (c_.cells_.empty()) {
    for (const Face& f : c_.faces_) c_.cells_.push_back(Cell{f.nodes, f.area, f.anchor});
  }
  const std::size_t n = c_.nodes_.size();
  c_.node_cells_.assign(n, {});
  c_.node_faces_.assign(n, {});
  for (std::size_t k = 0; k < c_.cells_.size(); ++k) {
    std::vector<NodeIndex> unique = c_.cells_[k].nodes;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (NodeIndex v : unique) c_.node_cells_[v].push_back(k);
  }
  for (FaceIndex f = 0; f < c_.faces_.size(); ++f) c_.node_faces_[c_.faces_[f].anchor].push_back(f);
  return std::move(c_);
}

// ---------------------------------------------------------------------------
// Builders

Complex build_triangulated_torus(int subdivisions, double side) {
  if (subdivisions < 1) throw InvalidArgument("build_triangulated_torus: subdivisions must be >= 1");
  if (!(side > 0.0)) throw InvalidArgument("build_triangulated_torus: side must be positive");
  const int n = subdivisions;
  const double h = side / n;
  Point periods(2);
  periods << side, side;
  ComplexBuilder b(2, ComplexKind::Simplicial, periods, side);
  auto id = [n](int a, int c) { return static_cast<NodeIndex>(((c % n + n) % n) * n + ((a % n + n) % n)); };
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      Point p(2);
      p << col * h, row * h;
      b.add_node(p);
    }
  Point ex(2), ey(2), exy(2);
  ex << h, 0.0;
  ey << 0.0, h;
  exy << h, h;
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      b.add_edge(id(col, row), id(col + 1, row), ex);
      b.add_edge(id(col, row), id(col, row + 1), ey);
      b.add_edge(id(col, row), id(col + 1, row + 1), exy);
    }
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const NodeIndex a = id(col, row), r = id(col + 1, row), d = id(col + 1, row + 1), u = id(col, row + 1);
      b.add_face(FaceKind::Triangle, {a, r, d}, {ex, ey, Point(-exy)});
      b.add_face(FaceKind::Triangle, {a, d, u}, {exy, Point(-ex), Point(-ey)});
    }
  return std::move(b).build();
}

namespace {

// `index_of_linear` assigns node indices to linear (x fastest) lattice sites.
Complex build_lattice(int dim, int sites, double spacing, bool periodic,
                      const std::vector<NodeIndex>& index_of_linear, std::shared_ptr<const Complex> parent) {
  std::size_t total = 1;
  for (int mu = 0; mu < dim; ++mu) total *= static_cast<std::size_t>(sites);

  Point periods = Point::Zero(dim);
  if (periodic) periods.setConstant(sites * spacing);
  ComplexBuilder b(dim, ComplexKind::Cubical, periods, sites * spacing);
  b.set_parent(std::move(parent));

  LatticeInfo info;
  info.sites = sites;
  info.spacing = spacing;
  info.periodic = periodic;
  info.node_at = index_of_linear;
  info.coords.resize(total);
  std::vector<std::size_t> linear_of_index(total);
  for (std::size_t l = 0; l < total; ++l) {
    std::array<int, 4> c{0, 0, 0, 0};
    std::size_t rest = l;
    for (int mu = 0; mu < dim; ++mu) {
      c[mu] = static_cast<int>(rest % sites);
      rest /= sites;
    }
    info.coords[index_of_linear[l]] = c;
    linear_of_index[index_of_linear[l]] = l;
  }
  for (NodeIndex i = 0; i < total; ++i) {
    Point p(dim);
    for (int mu = 0; mu < dim; ++mu) p(mu) = info.coords[i][mu] * spacing;
    b.add_node(p);
  }

  // Neighbour one step along +mu, or kNoIndex past an open boundary.
  auto step = [&](NodeIndex i, int mu) -> NodeIndex {
    std::array<int, 4> c = info.coords[i];
    c[mu] += 1;
    if (c[mu] >= sites) {
      if (!periodic) return kNoIndex;
      c[mu] -= sites;
    }
    return info.node_at[info.linear(c, dim)];
  };

  info.edge_at.assign(total * dim, kNoIndex);
  info.face_at.assign(total * 6, kNoIndex);
  for (NodeIndex i = 0; i < total; ++i)
    for (int mu = 0; mu < dim; ++mu) {
      const NodeIndex j = step(i, mu);
      if (j != kNoIndex) info.edge_at[i * dim + mu] = b.add_edge(i, j, axis_vector(dim, mu, spacing)).edge;
    }
  for (NodeIndex i = 0; i < total; ++i)
    for (int mu = 0; mu < dim; ++mu)
      for (int nu = mu + 1; nu < dim; ++nu) {
        const NodeIndex a = step(i, mu), c = step(i, nu);
        if (a == kNoIndex || c == kNoIndex) continue;
        const NodeIndex d = step(a, nu);
        const Point em = axis_vector(dim, mu, spacing), en = axis_vector(dim, nu, spacing);
        info.face_at[i * 6 + plane_index(mu, nu)] =
            b.add_face(FaceKind::Square, {i, a, d, c}, {em, en, Point(-em), Point(-en)});
      }
  const double volume = std::pow(spacing, dim);
  for (NodeIndex i = 0; i < total; ++i) {
    std::vector<NodeIndex> corners{i};
    bool complete = true;
    for (int mu = 0; mu < dim && complete; ++mu) {
      const std::size_t m = corners.size();
      for (std::size_t k = 0; k < m; ++k) {
        const NodeIndex nb = step(corners[k], mu);
        if (nb == kNoIndex) {
          complete = false;
          break;
        }
        corners.push_back(nb);
      }
    }
    if (complete) b.add_cell(std::move(corners), volume, i);
  }
  if (dim == 4) {
    for (NodeIndex i = 0; i < total; ++i) {
      Cell4 cell;
      cell.node = i;
      bool complete = true;
      for (int mu = 0; mu < 4; ++mu) {
        cell.edge_frame[mu] = info.edge_at[i * 4 + mu];
        complete = complete && cell.edge_frame[mu] != kNoIndex;
      }
      for (int p = 0; p < 6; ++p) {
        cell.planes[p] = info.face_at[i * 6 + p];
        complete = complete && cell.planes[p] != kNoIndex;
      }
      if (!complete) continue;
      cell.faces = {cell.planes[plane_index(0, 1)], cell.planes[plane_index(2, 3)]};
      b.add_cell4(cell);
    }
  }
  b.set_lattice(std::move(info));
  return std::move(b).build();
}

Complex refine_lattice(const Complex& c) {
  const LatticeInfo& old = *c.lattice();
  const int dim = c.dimension();
  const int sites = old.periodic ? 2 * old.sites : 2 * old.sites - 1;
  std::size_t total = 1;
  for (int mu = 0; mu < dim; ++mu) total *= static_cast<std::size_t>(sites);

  LatticeInfo fine;
  fine.sites = sites;
  std::vector<NodeIndex> index_of_linear(total, kNoIndex);
  for (NodeIndex i = 0; i < c.node_count(); ++i) {
    std::array<int, 4> doubled = old.coords[i];
    for (int mu = 0; mu < dim; ++mu) doubled[mu] *= 2;
    index_of_linear[fine.linear(doubled, dim)] = i;
  }
  NodeIndex next = c.node_count();
  for (auto& idx : index_of_linear)
    if (idx == kNoIndex) idx = next++;
  return build_lattice(dim, sites, old.spacing / 2, old.periodic, index_of_linear,
                       std::make_shared<const Complex>(c));
}

Complex refine_triangles(const Complex& c) {
  for (const Face& f : c.faces())
    if (f.kind != FaceKind::Triangle) throw InvalidArgument("refine: simplicial complex must consist of triangles");
  ComplexBuilder b(c.dimension(), ComplexKind::Simplicial, c.periods(), c.length_scale());
  b.set_parent(std::make_shared<const Complex>(c));
  for (const Point& p : c.nodes()) b.add_node(p);
  std::vector<NodeIndex> mid(c.edge_count());
  for (EdgeIndex e = 0; e < c.edge_count(); ++e) {
    const Edge& edge = c.edges()[e];
    mid[e] = b.add_node(c.position(edge.tail) + edge.displacement / 2);
  }
  for (const Face& f : c.faces()) {
    const NodeIndex A = f.nodes[0], B = f.nodes[1], C = f.nodes[2];
    const NodeIndex mab = mid[f.boundary[0].edge], mbc = mid[f.boundary[1].edge], mca = mid[f.boundary[2].edge];
    const Point s0 = oriented_displacement(c, f.boundary[0]) / 2;
    const Point s1 = oriented_displacement(c, f.boundary[1]) / 2;
    const Point s2 = oriented_displacement(c, f.boundary[2]) / 2;
    // Corner child at the parent anchor first, so faces anchored at an old node
    // stay nested under refinement.
    b.add_face(FaceKind::Triangle, {A, mab, mca}, {s0, Point(s1), Point(s2)});
    b.add_face(FaceKind::Triangle, {mab, B, mbc}, {s0, s1, Point(s2)});
    b.add_face(FaceKind::Triangle, {mca, mbc, C}, {s0, s1, s2});
    b.add_face(FaceKind::Triangle, {mbc, mca, mab}, {Point(-s0), Point(-s1), Point(-s2)});
  }
  return std::move(b).build();
}

}  // namespace

Complex build_cubical_lattice(int dimension, int sites_per_axis, double spacing, bool periodic) {
  if (dimension < 2 || dimension > 4) throw InvalidArgument("build_cubical_lattice: dimension must be 2, 3 or 4");
  if (sites_per_axis < 1) throw InvalidArgument("build_cubical_lattice: sites_per_axis must be positive");
  if (!periodic && sites_per_axis < 2)
    throw InvalidArgument("build_cubical_lattice: open lattices need at least 2 sites per axis");
  if (!(spacing > 0.0)) throw InvalidArgument("build_cubical_lattice: spacing must be positive");
  std::size_t total = 1;
  for (int mu = 0; mu < dimension; ++mu) total *= static_cast<std::size_t>(sites_per_axis);
  std::vector<NodeIndex> identity(total);
  for (std::size_t l = 0; l < total; ++l) identity[l] = l;
  return build_lattice(dimension, sites_per_axis, spacing, periodic, identity, nullptr);
}

Complex refine(const Complex& c) {
  if (c.lattice()) return refine_lattice(c);
  if (c.kind() == ComplexKind::Simplicial && c.dimension() == 2) return refine_triangles(c);
  throw InvalidArgument("refine: need a 2D simplicial complex or a cubical lattice");
}

// ---------------------------------------------------------------------------
// Queries

std::vector<NodeIndex> star(const Complex& c, const std::vector<NodeIndex>& nodes) {
  if (nodes.empty()) throw InvalidArgument("star: empty node set");
  std::set<NodeIndex> out;
  for (NodeIndex v : nodes) {
    if (v >= c.node_count()) throw InvalidArgument("star: node index " + std::to_string(v) + " out of range");
    for (std::size_t k : c.incident_cells(v))
      for (NodeIndex w : c.cells()[k].nodes) out.insert(w);
  }
  return {out.begin(), out.end()};
}

std::vector<OrientedEdge> boundary_loop(const Complex& c, const Face& face, NodeIndex start, bool reversed) {
  (void)c;
  const auto it = std::find(face.nodes.begin(), face.nodes.end(), start);
  if (it == face.nodes.end()) throw InvalidArgument("boundary_loop: start node does not lie on the face");
  const std::size_t k = static_cast<std::size_t>(it - face.nodes.begin());
  const std::size_t m = face.boundary.size();
  std::vector<OrientedEdge> loop;
  loop.reserve(m);
  if (!reversed) {
    for (std::size_t s = 0; s < m; ++s) loop.push_back(face.boundary[(k + s) % m]);
  } else {
    for (std::size_t s = 1; s <= m; ++s) {
      OrientedEdge oe = face.boundary[(k + m - s) % m];
      oe.forward = !oe.forward;
      loop.push_back(oe);
    }
  }
  return loop;
}

void require_closed(const Complex& c, const std::vector<OrientedEdge>& loop) {
  for (const OrientedEdge& oe : loop)
    if (oe.edge >= c.edge_count()) throw InvalidArgument("loop references an unknown edge");
  for (std::size_t k = 0; k < loop.size(); ++k) {
    const OrientedEdge& next = loop[(k + 1) % loop.size()];
    if (target_node(c, loop[k]) != source_node(c, next)) throw OpenPathError("edge path is not closed");
  }
}

std::pair<Point, Point> face_frame(const Complex& c, const Face& face) {
  return {oriented_displacement(c, face.boundary.front()), Point(-oriented_displacement(c, face.boundary.back()))};
}

std::vector<NodeIndex> bfs_order(const Complex& c) {
  const std::size_t n = c.node_count();
  std::vector<NodeIndex> order;
  if (n == 0) return order;
  order.reserve(n);
  std::vector<bool> seen(n, false);
  std::deque<NodeIndex> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    order.push_back(v);
    std::vector<NodeIndex> next;
    for (EdgeIndex e : c.incident_edges(v)) {
      const Edge& edge = c.edges()[e];
      const NodeIndex w = edge.tail == v ? edge.head : edge.tail;
      if (!seen[w]) {
        seen[w] = true;
        next.push_back(w);
      }
    }
    std::sort(next.begin(), next.end(), [&](NodeIndex a, NodeIndex b) {
      if (lexicographic_less(c.position(a), c.position(b))) return true;
      if (lexicographic_less(c.position(b), c.position(a))) return false;
      return a < b;
    });
    queue.insert(queue.end(), next.begin(), next.end());
  }
  for (NodeIndex v = 0; v < n; ++v)
    if (!seen[v]) order.push_back(v);
  return order;
}

}  // namespace glat
