#pragma once

// Local observables of a link field: curvature and connection coefficient
// estimators, node integration, and the action densities built from
// plaquette holonomies.

#include "glat/complex.hpp"
#include "glat/connection.hpp"
#include "glat/discretize.hpp"
#include "glat/group.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace glat {

/// Calibrated so that -(Hol - I)/area -> +F_12 with H = P exp(-int A).
inline constexpr double kCurvatureConstant = -1.0;
inline constexpr double kDegenerateArea = 1e-14;

template <int N>
struct CurvatureEstimate {
  FaceIndex face = 0;
  NodeIndex start = 0;
  AlgebraElement<N> value;
  double area = 0.0;  // |sigma|
};

namespace detail {

inline const Face& checked_face(const Complex& c, FaceIndex f) {
  if (f >= c.face_count()) throw InvalidArgument("face " + std::to_string(f) + " is not in the complex");
  const Face& face = c.faces()[f];
  if (face.area < kDegenerateArea) throw DegenerateFaceError("face " + std::to_string(f) + " has area below 1e-14");
  return face;
}

template <int N>
AlgebraElement<N> curvature_from_holonomy(const GroupElement<N>& hol, double area) {
  return kCurvatureConstant * (hol - GroupElement<N>::Identity()) / area;
}

}  // namespace detail

template <int N>
CurvatureEstimate<N> curvature_estimate(const LinkField<N>& lf, FaceIndex face, NodeIndex start) {
  const Face& f = detail::checked_face(lf.mesh(), face);
  return {face, start, detail::curvature_from_holonomy<N>(plaquette_product(lf, face, start), f.area), f.area};
}

template <int N>
CurvatureEstimate<N> curvature_estimate(const LinkField<N>& lf, FaceIndex face) {
  return curvature_estimate(lf, face, lf.mesh().faces().at(face).anchor);
}

/// Same estimator on the continuum holonomy of the face boundary.
template <int N>
CurvatureEstimate<N> curvature_estimate(const ContinuumConnection<N>& conn, const Complex& c, FaceIndex face,
                                        NodeIndex start, const HolonomySettings& settings = {}) {
  const Face& f = detail::checked_face(c, face);
  const GroupElement<N> hol = loop_holonomy(conn, c, boundary_loop(c, f, start), settings);
  return {face, start, detail::curvature_from_holonomy<N>(hol, f.area), f.area};
}

/// Analytic curvature on the unit bivector of the face: F(d1, d2) / |d1 ^ d2|
/// for the two edge vectors leaving `start`, evaluated at `start`.
template <int N>
AlgebraElement<N> analytic_face_curvature(const ContinuumConnection<N>& conn, const Complex& c, FaceIndex face,
                                          NodeIndex start) {
  if (!conn.has_field_strength()) throw InvalidArgument("connection '" + conn.name + "' has no closed-form curvature");
  const Face& f = c.faces().at(face);
  const std::vector<OrientedEdge> loop = boundary_loop(c, f, start);
  const Point d1 = oriented_displacement(c, loop.front());
  const Point d2 = -oriented_displacement(c, loop.back());
  const Point& x = c.position(start);
  AlgebraElement<N> out = AlgebraElement<N>::Zero();
  for (int mu = 0; mu < conn.dimension; ++mu)
    for (int nu = 0; nu < conn.dimension; ++nu) {
      const double w = d1(mu) * d2(nu);
      if (mu != nu && w != 0.0) out += w * conn.field_strength(x, mu, nu);
    }
  const double span = std::sqrt(std::max(0.0, d1.squaredNorm() * d2.squaredNorm() - d1.dot(d2) * d1.dot(d2)));
  return out / span;
}

/// A nested sequence of edges (each the initial half of the previous one) on
/// successive refinements, all leaving the same node in the same direction.
struct EdgeChainLink {
  std::shared_ptr<const Complex> complex;
  OrientedEdge edge;
};
using EdgeChain = std::vector<EdgeChainLink>;

/// Follows `first` on levels[0] through its initial halves on levels[1..].
inline EdgeChain initial_subedge_chain(const std::vector<std::shared_ptr<const Complex>>& levels, OrientedEdge first) {
  EdgeChain chain;
  if (levels.empty()) return chain;
  chain.push_back({levels[0], first});
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const EdgeChainLink& prev = chain.back();
    const NodeIndex s = source_node(*prev.complex, prev.edge);
    const Point half = 0.5 * oriented_displacement(*prev.complex, prev.edge);
    const auto next = levels[k]->find_edge(s, half);
    if (!next) throw InvalidArgument("refinement level " + std::to_string(k) + " has no initial sub-edge");
    chain.push_back({levels[k], *next});
  }
  return chain;
}

/// (g_p - I)/|sigma_p| for each edge of the chain, where g_p is the
/// transport along the edge measured against the constant frame. Tends to
/// -A(v) for the unit direction v.
template <int N>
std::vector<AlgebraElement<N>> connection_coefficient_estimate(const ContinuumConnection<N>& conn,
                                                               const EdgeChain& chain,
                                                               const HolonomySettings& settings = {}) {
  std::vector<AlgebraElement<N>> out;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const Complex& c = *chain[k].complex;
    const NodeIndex s = source_node(c, chain[k].edge);
    const Point d = oriented_displacement(c, chain[k].edge);
    if (k > 0) {
      const Complex& pc = *chain[k - 1].complex;
      const Point pd = oriented_displacement(pc, chain[k - 1].edge);
      const bool same_start = (c.position(s) - pc.position(source_node(pc, chain[k - 1].edge))).norm() <= 1e-12;
      const bool nested = (2.0 * d - pd).norm() <= 1e-12 * std::max(1.0, pd.norm());
      if (!same_start || !nested) throw InvalidArgument("edge chain is not nested at level " + std::to_string(k));
    }
    const double length = d.norm();
    const GroupElement<N> g = edge_holonomy(conn, c.position(s), Point(c.position(s) + d), settings);
    out.push_back((g - GroupElement<N>::Identity()) / length);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integration over nodes

enum class IntegrationMode { Riemann, Cesaro };

namespace detail {

/// Sum of volume * value in cell order. In Cesaro mode the same sum is
/// obtained as the mean of the partial sums of the sequence extended by its
/// constant tail, taken to its limit.
inline std::complex<double> weighted_sum(const std::vector<double>& volumes,
                                         const std::vector<std::complex<double>>& values, IntegrationMode mode) {
  std::complex<double> s = 0.0;
  if (mode == IntegrationMode::Riemann) {
    for (std::size_t k = 0; k < values.size(); ++k) s += volumes[k] * values[k];
    return s;
  }
  // Cesaro mean of S_1..S_M with S_k = S_K for k >= K:
  // (sum_{k<K} S_k + (M-K+1) S_K) / M -> S_K as M -> infinity.
  std::complex<double> partial = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) partial += volumes[k] * values[k];
  return partial;
}

}  // namespace detail

inline std::complex<double> integrate_nodes(const Complex& c, const std::function<std::complex<double>(NodeIndex)>& f,
                                            IntegrationMode mode = IntegrationMode::Riemann) {
  std::vector<double> volumes;
  std::vector<std::complex<double>> values;
  volumes.reserve(c.cells().size());
  values.reserve(c.cells().size());
  for (std::size_t k = 0; k < c.cells().size(); ++k) {
    const Cell& cell = c.cells()[k];
    if (cell.anchor >= c.node_count()) throw InvalidArgument("cell " + std::to_string(k) + " has no anchor node");
    volumes.push_back(cell.volume);
    values.push_back(f(cell.anchor));
  }
  return detail::weighted_sum(volumes, values, mode);
}

// ---------------------------------------------------------------------------
// Densities

/// Re tr of the plaquette product at the face anchor.
template <int N>
double ym2d_density(const LinkField<N>& lf, FaceIndex face) {
  return plaquette_product(lf, face).trace().real();
}

namespace detail {

inline const Cell4& checked_cell4(const Complex& c, std::size_t cell) {
  if (cell >= c.cells4().size()) throw InvalidArgument("cell " + std::to_string(cell) + " is not a 4-cell");
  const Cell4& k = c.cells4()[cell];
  for (FaceIndex f : k.planes)
    if (f == kNoIndex) throw InvalidArgument("cell " + std::to_string(cell) + " is missing a plaquette");
  return k;
}

}  // namespace detail

/// tr((H1 - I)(H2 - I)) for the two plaquettes <d1,d2>, <d3,d4> at the cell
/// node.
template <int N>
std::complex<double> ym4d_density(const LinkField<N>& lf, const Cell4& cell) {
  for (FaceIndex f : cell.faces)
    if (f == kNoIndex) throw InvalidArgument("4-cell is missing a plaquette");
  const GroupElement<N> id = GroupElement<N>::Identity();
  const GroupElement<N> a = plaquette_product(lf, cell.faces[0], cell.node) - id;
  const GroupElement<N> b = plaquette_product(lf, cell.faces[1], cell.node) - id;
  return (a * b).trace();
}

namespace detail {

/// Sign of a permutation of 0..n-1.
template <std::size_t M>
int permutation_sign(const std::array<int, M>& p) {
  int inversions = 0;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j)
      if (p[i] > p[j]) ++inversions;
  return inversions % 2 ? -1 : 1;
}

/// Sum over permutations p of 0..2q-1 of
///   sign(p) C^q / (2q)! tr(prod_k (P[p(2k-1)][p(2k)] - I)) / prod_k area,
/// where P[a][b] is the loop <d_a, d_b>.
template <int N, std::size_t M>
std::complex<double> permutation_sum(const std::array<std::array<GroupElement<N>, M>, M>& hol,
                                     const std::array<std::array<double, M>, M>& area) {
  static_assert(M == 2 || M == 4);
  constexpr int q = static_cast<int>(M) / 2;
  std::array<int, M> p{};
  std::iota(p.begin(), p.end(), 0);
  double factorial = 1.0;
  for (std::size_t k = 2; k <= M; ++k) factorial *= static_cast<double>(k);
  const double cq = q == 1 ? kCurvatureConstant : kCurvatureConstant * kCurvatureConstant;
  const GroupElement<N> id = GroupElement<N>::Identity();
  std::complex<double> total = 0.0;
  do {
    GroupElement<N> prod = id;
    double denom = 1.0;
    for (int k = 0; k < q; ++k) {
      const int a = p[2 * k], b = p[2 * k + 1];
      prod = (prod * (hol[a][b] - id)).eval();
      denom *= area[a][b];
    }
    total += static_cast<double>(permutation_sign(p)) * prod.trace() / denom;
  } while (std::next_permutation(p.begin(), p.end()));
  return cq / factorial * total;
}

}  // namespace detail

/// q = 1 on a face: the frame (d1, d2) is the face's own orientation, or
/// (d2, d1) when `swapped`.
template <int N>
std::complex<double> trace_power_density(const LinkField<N>& lf, FaceIndex face, bool swapped = false) {
  const Face& f = detail::checked_face(lf.mesh(), face);
  const GroupElement<N> p = plaquette_product(lf, face);
  std::array<std::array<GroupElement<N>, 2>, 2> hol;
  std::array<std::array<double, 2>, 2> area{};
  hol[0][1] = swapped ? GroupElement<N>(p.adjoint()) : p;
  hol[1][0] = swapped ? p : GroupElement<N>(p.adjoint());
  hol[0][0] = hol[1][1] = GroupElement<N>::Identity();
  area[0][1] = area[1][0] = f.area;
  return detail::permutation_sum<N, 2>(hol, area);
}

/// q = 2 on a 4-cell with the given edge frame; each frame edge must leave
/// the cell node along a positive lattice axis.
template <int N>
std::complex<double> trace_power_density(const LinkField<N>& lf, const Cell4& cell,
                                         const std::array<EdgeIndex, 4>& frame) {
  const Complex& c = lf.mesh();
  std::array<int, 4> axis{};
  for (int a = 0; a < 4; ++a) {
    const Edge& e = c.edges().at(frame[a]);
    if (e.tail != cell.node) throw InvalidArgument("frame edge does not leave the cell node");
    int mu = -1;
    for (int k = 0; k < c.dimension(); ++k)
      if (e.displacement(k) > 0.0) mu = k;
    if (mu < 0 || c.lattice_edge(cell.node, mu) != frame[a])
      throw InvalidArgument("frame edge is not a lattice axis edge of the cell");
    axis[a] = mu;
  }
  std::array<std::array<GroupElement<N>, 4>, 4> hol;
  std::array<std::array<double, 4>, 4> area{};
  for (int a = 0; a < 4; ++a) {
    hol[a][a] = GroupElement<N>::Identity();
    for (int b = a + 1; b < 4; ++b) {
      const int lo = std::min(axis[a], axis[b]), hi = std::max(axis[a], axis[b]);
      if (lo == hi) throw InvalidArgument("frame repeats an axis");
      const FaceIndex f = c.lattice_face(cell.node, lo, hi);
      if (f == kNoIndex) throw InvalidArgument("missing plaquette for an edge pair of the frame");
      const GroupElement<N> p = plaquette_product(lf, f, cell.node);
      hol[a][b] = axis[a] < axis[b] ? p : GroupElement<N>(p.adjoint());
      hol[b][a] = hol[a][b].adjoint();
      area[a][b] = area[b][a] = c.faces()[f].area;
    }
  }
  return detail::permutation_sum<N, 4>(hol, area);
}

template <int N>
std::complex<double> trace_power_density(const LinkField<N>& lf, const Cell4& cell) {
  return trace_power_density(lf, cell, cell.edge_frame);
}

// ---------------------------------------------------------------------------
// Actions

enum class ActionForm { YM2D, YM4D, TracePower, Abelian };

inline const char* action_form_name(ActionForm f) {
  switch (f) {
    case ActionForm::YM2D: return "ym2d";
    case ActionForm::YM4D: return "ym4d";
    case ActionForm::TracePower: return "trace_power";
    case ActionForm::Abelian: return "abelian";
  }
  return "?";
}

struct Couplings {
  double beta = 1.0;
  int q = 1;               // trace power order
  bool imaginary = false;  // weight exp(-i beta S) instead of exp(-beta S)
};

struct ActionValue {
  ActionForm form = ActionForm::YM2D;
  std::vector<std::size_t> cell_ids;  // face index or 4-cell index
  std::vector<double> volumes;
  std::vector<std::complex<double>> per_cell;  // density
  std::complex<double> total = 0.0;            // S, without beta
  Couplings couplings;

  std::complex<double> boltzmann_exponent() const {
    const std::complex<double> bs = couplings.beta * total;
    return couplings.imaginary ? std::complex<double>(0.0, -1.0) * bs : -bs;
  }
};

/// Terms of an action on a fixed complex together with the map from each
/// edge to the terms whose density reads it.
template <int N>
class ActionTerms {
 public:
  ActionTerms(std::shared_ptr<const Complex> complex, ActionForm form, Couplings couplings = {})
      : complex_(std::move(complex)), form_(form), couplings_(couplings) {
    const Complex& c = *complex_;
    const bool on_cells4 = form_ == ActionForm::YM4D || (form_ == ActionForm::TracePower && couplings_.q == 2);
    if (form_ == ActionForm::TracePower && couplings_.q != 1 && couplings_.q != 2)
      throw InvalidArgument("trace power order must be 1 or 2");
    if (form_ == ActionForm::Abelian && N != 1) throw InvalidArgument("abelian action needs the group U(1)");
    if (on_cells4 && c.dimension() != 4)
      throw InvalidArgument(std::string(action_form_name(form_)) + " needs a 4-dimensional complex, got dimension " +
                            std::to_string(c.dimension()));
    if (!on_cells4 && c.dimension() < 2) throw InvalidArgument("action needs faces");
    touching_.assign(c.edge_count(), {});
    auto add_term = [&](std::size_t id, double volume, const std::vector<FaceIndex>& faces) {
      const std::size_t t = ids_.size();
      ids_.push_back(id);
      volumes_.push_back(volume);
      std::vector<EdgeIndex> edges;
      for (FaceIndex f : faces)
        for (const OrientedEdge& oe : c.faces()[f].boundary) edges.push_back(oe.edge);
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
      for (EdgeIndex e : edges) touching_[e].push_back(t);
    };
    if (on_cells4) {
      for (std::size_t k = 0; k < c.cells4().size(); ++k) {
        const Cell4& cell = detail::checked_cell4(c, k);
        const double vol = c.faces()[cell.faces[0]].area * c.faces()[cell.faces[1]].area;
        if (form_ == ActionForm::YM4D) add_term(k, vol, {cell.faces[0], cell.faces[1]});
        else add_term(k, vol, std::vector<FaceIndex>(cell.planes.begin(), cell.planes.end()));
      }
    } else {
      for (FaceIndex f = 0; f < c.face_count(); ++f) {
        const Face& face = detail::checked_face(c, f);
        add_term(f, face.area, {f});
      }
    }
  }

  const Complex& mesh() const { return *complex_; }
  ActionForm form() const { return form_; }
  const Couplings& couplings() const { return couplings_; }
  std::size_t size() const { return ids_.size(); }
  std::size_t cell_id(std::size_t t) const { return ids_[t]; }
  double volume(std::size_t t) const { return volumes_[t]; }
  const std::vector<std::size_t>& terms_touching(EdgeIndex e) const { return touching_.at(e); }

  /// Action density of term t; the action is sum volume * density.
  std::complex<double> density(const LinkField<N>& lf, std::size_t t) const {
    const Complex& c = *complex_;
    const std::size_t id = ids_[t];
    switch (form_) {
      case ActionForm::YM2D: {
        const double a = c.faces()[id].area;
        return (static_cast<double>(N) - ym2d_density(lf, id)) / (a * a);
      }
      case ActionForm::Abelian: {
        const double a = c.faces()[id].area;
        const double phi = std::arg(plaquette_product(lf, id)(0, 0));
        return 0.5 * phi * phi / (a * a);
      }
      case ActionForm::YM4D: {
        const Cell4& cell = c.cells4()[id];
        return ym4d_density(lf, cell) / volumes_[t];
      }
      case ActionForm::TracePower:
        if (couplings_.q == 1) return trace_power_density(lf, id);
        return trace_power_density(lf, c.cells4()[id]);
    }
    return 0.0;
  }

 private:
  std::shared_ptr<const Complex> complex_;
  ActionForm form_;
  Couplings couplings_;
  std::vector<std::size_t> ids_;
  std::vector<double> volumes_;
  std::vector<std::vector<std::size_t>> touching_;
};

template <int N>
ActionValue total_action(const LinkField<N>& lf, const ActionTerms<N>& terms,
                         IntegrationMode mode = IntegrationMode::Riemann) {
  require_complete(lf);
  ActionValue v;
  v.form = terms.form();
  v.couplings = terms.couplings();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    v.cell_ids.push_back(terms.cell_id(t));
    v.volumes.push_back(terms.volume(t));
    v.per_cell.push_back(terms.density(lf, t));
  }
  v.total = detail::weighted_sum(v.volumes, v.per_cell, mode);
  return v;
}

template <int N>
ActionValue total_action(const LinkField<N>& lf, ActionForm form, const Couplings& couplings = {}) {
  return total_action(lf, ActionTerms<N>(lf.complex, form, couplings));
}

/// Product of U(1) links around a closed loop.
template <int N>
  requires(N == 1)
GroupElement<N> abelian_loop_holonomy(const LinkField<N>& lf, const std::vector<OrientedEdge>& loop) {
  require_closed(lf.mesh(), loop);
  return path_product(lf, loop);
}

}  // namespace glat
