#pragma once

// Discretisation of a continuum connection into one group element per mesh
// edge, gauge-fixed to the identity along a spanning tree.
//
// Nodes are visited in an enumeration order (breadth-first by default). Each
// newly reached node j is attached to its lowest-ranked reached neighbour k
// through the lowest-index edge joining them, and receives the frame
// h_j = H(k -> j) h_k with h_first = I. Every edge then carries
// g = h_head^-1 H(tail -> head) h_tail, so tree edges hold the identity and
// the product of links around any closed loop equals h^-1 (loop holonomy) h
// at its start node.

#include "glat/complex.hpp"
#include "glat/connection.hpp"
#include "glat/group.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace glat {

template <int N>
struct LinkField {
  std::shared_ptr<const Complex> complex;
  /// Transport along each complex edge, tail -> head.
  std::vector<GroupElement<N>> links;
  /// Tree edges in the order their far node was reached.
  std::vector<EdgeIndex> tree;
  /// Lift of the identity frame at the first node; empty unless discretised.
  std::vector<GroupElement<N>> frames;
  /// Enumeration actually used; discovery_order[0] is the base node.
  std::vector<NodeIndex> discovery_order;
  HolonomySettings settings;

  const Complex& mesh() const { return *complex; }

  GroupElement<N> transport(const OrientedEdge& oe) const {
    const GroupElement<N>& g = links.at(oe.edge);
    return oe.forward ? g : GroupElement<N>(g.adjoint());
  }

  /// Link read in the direction earlier -> later of the enumeration; for a
  /// loop edge the stored direction is kept.
  struct Directed {
    NodeIndex from = 0;
    NodeIndex to = 0;
    GroupElement<N> value;
  };
  Directed directed(EdgeIndex e, const std::vector<std::size_t>& rank) const {
    const Edge& edge = complex->edges().at(e);
    if (rank.at(edge.tail) <= rank.at(edge.head)) return {edge.tail, edge.head, links.at(e)};
    return {edge.head, edge.tail, links.at(e).adjoint()};
  }
};

/// rank[node] = position of the node in `order`.
inline std::vector<std::size_t> enumeration_rank(const std::vector<NodeIndex>& order, std::size_t node_count) {
  if (order.size() != node_count) throw InvalidArgument("enumeration does not list every node exactly once");
  std::vector<std::size_t> rank(node_count, kNoIndex);
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (order[r] >= node_count || rank[order[r]] != kNoIndex)
      throw InvalidArgument("enumeration does not list every node exactly once");
    rank[order[r]] = r;
  }
  return rank;
}

struct TreeStep {
  NodeIndex node = 0;    // newly reached
  NodeIndex parent = 0;  // already reached neighbour
  EdgeIndex edge = 0;
};

struct SpanningTree {
  std::vector<NodeIndex> discovery;  // discovery[0] is the base node
  std::vector<TreeStep> steps;       // one per non-base node, in discovery order
  std::vector<bool> is_tree_edge;    // per edge
};

/// Grows the spanning tree by edge adjacency. Among unreached nodes adjacent
/// to the reached set, the one with the lowest rank is taken next.
inline SpanningTree grow_spanning_tree(const Complex& c, const std::vector<NodeIndex>& order) {
  const std::size_t n = c.node_count();
  if (n == 0) throw InvalidArgument("complex has no nodes");
  const std::vector<std::size_t> rank = enumeration_rank(order, n);
  SpanningTree t;
  t.is_tree_edge.assign(c.edge_count(), false);
  std::vector<bool> reached(n, false);
  using Entry = std::size_t;  // rank
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  auto reach = [&](NodeIndex j) {
    reached[j] = true;
    t.discovery.push_back(j);
    for (EdgeIndex e : c.incident_edges(j)) {
      const Edge& edge = c.edges()[e];
      const NodeIndex other = edge.tail == j ? edge.head : edge.tail;
      if (!reached[other]) frontier.push(rank[other]);
    }
  };
  reach(order[0]);
  while (t.discovery.size() < n) {
    NodeIndex j = kNoIndex;
    while (!frontier.empty()) {
      const NodeIndex cand = order[frontier.top()];
      frontier.pop();
      if (!reached[cand]) {
        j = cand;
        break;
      }
    }
    if (j == kNoIndex) {
      NodeIndex missing = 0;
      while (reached[missing]) ++missing;
      throw UnreachableNodeError("node " + std::to_string(missing) + " is not reachable from node " +
                                 std::to_string(order[0]));
    }
    TreeStep step{j, kNoIndex, kNoIndex};
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (EdgeIndex e : c.incident_edges(j)) {
      const Edge& edge = c.edges()[e];
      const NodeIndex other = edge.tail == j ? edge.head : edge.tail;
      if (other == j || !reached[other]) continue;
      if (rank[other] < best || (rank[other] == best && e < step.edge)) {
        best = rank[other];
        step.parent = other;
        step.edge = e;
      }
    }
    t.is_tree_edge[step.edge] = true;
    t.steps.push_back(step);
    reach(j);
  }
  return t;
}

inline SpanningTree grow_spanning_tree(const Complex& c) { return grow_spanning_tree(c, bfs_order(c)); }

/// Throws MissingLinkError unless the field has one link per edge.
template <int N>
void require_complete(const LinkField<N>& lf) {
  if (!lf.complex) throw MissingLinkError("link field has no complex");
  if (lf.links.size() != lf.complex->edge_count())
    throw MissingLinkError("link field has " + std::to_string(lf.links.size()) + " links for " +
                           std::to_string(lf.complex->edge_count()) + " edges");
}

template <int N>
LinkField<N> discretize_connection(std::shared_ptr<const Complex> complex, const ContinuumConnection<N>& conn,
                                   const HolonomySettings& settings = {},
                                   std::optional<std::vector<NodeIndex>> enumeration = std::nullopt) {
  if (!complex) throw InvalidArgument("discretize_connection: null complex");
  const Complex& c = *complex;
  if (c.dimension() != conn.dimension)
    throw InvalidArgument("discretize_connection: connection dimension " + std::to_string(conn.dimension) +
                          " does not match complex dimension " + std::to_string(c.dimension()));
  const std::vector<NodeIndex> order = enumeration ? std::move(*enumeration) : bfs_order(c);
  const SpanningTree tree = grow_spanning_tree(c, order);

  LinkField<N> lf;
  lf.complex = complex;
  lf.settings = settings;
  lf.discovery_order = tree.discovery;
  lf.frames.assign(c.node_count(), GroupElement<N>::Identity());
  for (const TreeStep& s : tree.steps) {
    const Edge& e = c.edges()[s.edge];
    const GroupElement<N> h = edge_transport(conn, c, s.edge, settings);
    const GroupElement<N> toward = e.tail == s.parent ? h : GroupElement<N>(h.adjoint());
    lf.frames[s.node] = multiply<N, double>(toward, lf.frames[s.parent]);
    lf.tree.push_back(s.edge);
  }
  lf.links.assign(c.edge_count(), GroupElement<N>::Identity());
  for (EdgeIndex ei = 0; ei < c.edge_count(); ++ei) {
    if (tree.is_tree_edge[ei]) continue;  // exactly the identity
    const Edge& e = c.edges()[ei];
    const GroupElement<N> h = edge_transport(conn, c, ei, settings);
    lf.links[ei] = multiply<N, double>(GroupElement<N>(lf.frames[e.head].adjoint()),
                                       multiply<N, double>(h, lf.frames[e.tail]));
  }
  return lf;
}

template <int N>
LinkField<N> identity_link_field(std::shared_ptr<const Complex> complex) {
  LinkField<N> lf;
  lf.complex = std::move(complex);
  lf.links.assign(lf.complex->edge_count(), GroupElement<N>::Identity());
  return lf;
}

template <int N, typename Rng>
LinkField<N> haar_link_field(std::shared_ptr<const Complex> complex, Rng& rng) {
  LinkField<N> lf;
  lf.complex = std::move(complex);
  lf.links.reserve(lf.complex->edge_count());
  for (std::size_t e = 0; e < lf.complex->edge_count(); ++e) lf.links.push_back(haar_sample<N>(rng));
  return lf;
}

/// Ordered product of links along a path; the last edge sits on the left.
template <int N>
GroupElement<N> path_product(const LinkField<N>& lf, const std::vector<OrientedEdge>& path) {
  GroupElement<N> p = GroupElement<N>::Identity();
  for (const OrientedEdge& oe : path) {
    const GroupElement<N>& g = lf.links[oe.edge];
    if (oe.forward) p = (g * p).eval();
    else p = (g.adjoint() * p).eval();
  }
  return p;
}

/// Plaquette product around a face, starting at its anchor unless `start` is
/// given.
template <int N>
GroupElement<N> plaquette_product(const LinkField<N>& lf, FaceIndex face) {
  return path_product(lf, lf.mesh().faces().at(face).boundary);
}

template <int N>
GroupElement<N> plaquette_product(const LinkField<N>& lf, FaceIndex face, NodeIndex start, bool reversed = false) {
  return path_product(lf, boundary_loop(lf.mesh(), lf.mesh().faces().at(face), start, reversed));
}

}  // namespace glat
