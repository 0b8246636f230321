#include "catch_amalgamated.hpp"

#include "glat/discretize.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace glat;

namespace {

std::shared_ptr<const Complex> share(Complex c) { return std::make_shared<const Complex>(std::move(c)); }

// Union-find check that the tree edges connect every node without a cycle.
bool is_spanning_tree(const Complex& c, const std::vector<EdgeIndex>& tree) {
  std::vector<std::size_t> root(c.node_count());
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](std::size_t i) {
    while (root[i] != i) i = root[i] = root[root[i]];
    return i;
  };
  if (tree.size() + 1 != c.node_count()) return false;
  for (EdgeIndex e : tree) {
    const auto a = find(c.edges()[e].tail), b = find(c.edges()[e].head);
    if (a == b) return false;
    root[a] = b;
  }
  return true;
}

}  // namespace

TEST_CASE("flat connection discretizes to identities") {
  const auto c = share(build_triangulated_torus(3, 1.0));
  const auto lf = discretize_connection(c, zero_connection<2>(2));
  for (const auto& g : lf.links) CHECK(g == identity<2>());
  for (const auto& h : lf.frames) CHECK(h == identity<2>());
  for (FaceIndex f = 0; f < c->face_count(); ++f) CHECK(plaquette_product(lf, f) == identity<2>());
}

TEST_CASE("spanning tree and tree gauge") {
  const auto c = share(refine(build_triangulated_torus(3, 1.0)));
  const auto lf = discretize_connection(c, su2_polynomial());
  CHECK(is_spanning_tree(*c, lf.tree));
  CHECK(lf.frames[lf.discovery_order[0]] == identity<2>());
  for (EdgeIndex e : lf.tree) CHECK(lf.links[e] == identity<2>());
  for (const auto& g : lf.links) CHECK(is_group_element(g, 1e-12));

  const auto rank = enumeration_rank(lf.discovery_order, c->node_count());
  for (EdgeIndex e = 0; e < c->edge_count(); ++e) {
    const auto d = lf.directed(e, rank);
    CHECK(rank[d.from] <= rank[d.to]);
  }
}

TEST_CASE("tree growth follows the minimum-rank rule") {
  const Complex c = build_triangulated_torus(4, 1.0);
  const auto order = bfs_order(c);
  const auto rank = enumeration_rank(order, c.node_count());
  const auto t = grow_spanning_tree(c, order);
  std::vector<bool> reached(c.node_count(), false);
  reached[t.discovery[0]] = true;
  for (const TreeStep& s : t.steps) {
    // No unreached neighbour of the reached set has a lower rank.
    for (NodeIndex i = 0; i < c.node_count(); ++i) {
      if (!reached[i]) continue;
      for (EdgeIndex e : c.incident_edges(i)) {
        const NodeIndex o = c.edges()[e].tail == i ? c.edges()[e].head : c.edges()[e].tail;
        if (!reached[o]) CHECK(rank[o] >= rank[s.node]);
      }
    }
    // Parent is the lowest-rank reached neighbour.
    for (EdgeIndex e : c.incident_edges(s.node)) {
      const NodeIndex o = c.edges()[e].tail == s.node ? c.edges()[e].head : c.edges()[e].tail;
      if (reached[o]) CHECK(rank[o] >= rank[s.parent]);
    }
    reached[s.node] = true;
  }
}

TEST_CASE("plaquette products match the loop holonomy oracle") {
  const double b = 1.0, h = 0.5;
  const auto c = share(build_cubical_lattice(2, 2, h, true));
  const auto conn = abelian_linear(b);
  const auto lf = discretize_connection(c, conn);
  for (FaceIndex f = 0; f < c->face_count(); ++f) {
    const Face& face = c->faces()[f];
    const auto oracle = loop_holonomy(conn, *c, boundary_loop(*c, face, face.anchor));
    CHECK(std::abs(plaquette_product(lf, f)(0, 0) - oracle(0, 0)) < 1e-9);
  }
  // The plaquette at the origin does not cross the seam.
  CHECK(std::abs(plaquette_product(lf, c->lattice_face(0, 0, 1))(0, 0) - std::polar(1.0, -b * h * h)) < 1e-9);
}

TEST_CASE("plaquette products are covariant under a change of start") {
  const auto c = share(build_triangulated_torus(4, 1.0));
  const auto conn = su2_polynomial();
  const auto lf = discretize_connection(c, conn);
  for (FaceIndex f = 0; f < c->face_count(); ++f) {
    const Face& face = c->faces()[f];
    const auto loop = boundary_loop(*c, face, face.anchor);
    const auto p = plaquette_product(lf, f, face.anchor);
    const auto hol = loop_holonomy(conn, *c, loop);
    const auto& hs = lf.frames[face.anchor];
    CHECK((p - hs.adjoint() * hol * hs).norm() < 1e-9);
    for (std::size_t k = 1; k < loop.size(); ++k) {
      const NodeIndex s2 = source_node(*c, loop[k]);
      const std::vector<OrientedEdge> head(loop.begin(), loop.begin() + k);
      const auto w = path_product(lf, head);
      const auto p2 = plaquette_product(lf, f, s2);
      CHECK((p2 - w * p * w.adjoint()).norm() < 1e-12);
      CHECK(std::abs(p2.trace() - p.trace()) < 1e-12);
    }
  }
}

TEST_CASE("abelian plaquette products equal the line integral oracle") {
  const auto c = share(build_triangulated_torus(4, 1.0));
  const auto conn = abelian_linear(2.0);
  const auto lf = discretize_connection(c, conn);
  // Face 5 sits at (0.25, 0.25), away from the seam.
  const Face& face = c->faces()[5];
  for (NodeIndex s : face.nodes) {
    const auto loop = boundary_loop(*c, face, s);
    const auto oracle = std::exp(-abelian_line_integral(conn, path_segments(*c, loop)));
    CHECK(std::abs(plaquette_product(lf, 5, s)(0, 0) - oracle) < 1e-9);
  }
}

TEST_CASE("discretization is deterministic") {
  const auto c = share(build_triangulated_torus(3, 1.0));
  const auto a = discretize_connection(c, su2_polynomial());
  const auto b = discretize_connection(c, su2_polynomial());
  CHECK(a.tree == b.tree);
  for (EdgeIndex e = 0; e < a.links.size(); ++e) CHECK(a.links[e] == b.links[e]);
}

TEST_CASE("a different enumeration gives a gauge-equivalent field") {
  const auto c = share(build_triangulated_torus(4, 1.0));
  const auto conn = su2_polynomial();
  const auto a = discretize_connection(c, conn);
  std::vector<NodeIndex> order(c->node_count());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin() + 1, order.end());
  const auto b = discretize_connection(c, conn, {}, order);
  CHECK(a.tree != b.tree);
  for (EdgeIndex e = 0; e < c->edge_count(); ++e) {
    const Edge& edge = c->edges()[e];
    // u(i) = h_a(i)^-1 h_b(i); b = u(head)^-1 a u(tail)
    const GroupElement<2> uh = a.frames[edge.head].adjoint() * b.frames[edge.head];
    const GroupElement<2> ut = a.frames[edge.tail].adjoint() * b.frames[edge.tail];
    CHECK((b.links[e] - uh.adjoint() * a.links[e] * ut).norm() < 1e-9);
  }
}

TEST_CASE("discretize errors") {
  ComplexBuilder builder(2, ComplexKind::Simplicial, Point::Zero(2), 1.0);
  builder.add_node(Point::Zero(2));
  builder.add_node(Point::Ones(2));
  const auto split = share(std::move(builder).build());
  CHECK_THROWS_AS(discretize_connection(split, zero_connection<1>(2)), UnreachableNodeError);

  const auto c = share(build_triangulated_torus(2, 1.0));
  CHECK_THROWS_AS(discretize_connection(c, zero_connection<1>(3)), InvalidArgument);
  auto lf = discretize_connection(c, zero_connection<1>(2));
  lf.links.pop_back();
  CHECK_THROWS_AS(require_complete(lf), MissingLinkError);
}

TEST_CASE("Haar and identity fields") {
  const auto c = share(build_cubical_lattice(3, 3, 1.0, true));
  std::mt19937_64 rng(4);
  const auto haar = haar_link_field<3>(c, rng);
  CHECK(haar.links.size() == c->edge_count());
  for (const auto& g : haar.links) CHECK(is_group_element(g));
  for (const auto& g : identity_link_field<3>(c).links) CHECK(g == identity<3>());
}
