#pragma once

// Smooth connections on the trivial bundle over a flat domain, and their
// parallel transport along straight segments.
//
// Sign convention: the transport along a path is H = P exp(-int A), with the
// later part of the path composed on the left. A frame h carried along the
// path ends at H h. With this convention the holonomy of a small
// counter-clockwise loop of area a is I - F_12 a + O(a^(3/2)), where
// F = dA + A ^ A, i.e. F_mn = d_m A_n - d_n A_m + [A_m, A_n].

#include "glat/complex.hpp"
#include "glat/group.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace glat {

struct HolonomySettings {
  int steps_per_unit_length = 256;
  double tolerance = 1e-10;  // Richardson check between n and 2n substeps
  int max_doublings = 20;
};

template <int N>
struct ContinuumConnection {
  int dimension = 2;
  std::string name;
  /// A_mu(x), mu in [0, dimension).
  std::function<AlgebraElement<N>(const Point&, int)> coefficient;
  /// Closed-form F_mn(x) when the family has one.
  std::function<AlgebraElement<N>(const Point&, int, int)> field_strength;

  AlgebraElement<N> contract(const Point& x, const Point& v) const {
    AlgebraElement<N> a = AlgebraElement<N>::Zero();
    for (int mu = 0; mu < dimension; ++mu)
      if (v(mu) != 0.0) a += v(mu) * coefficient(x, mu);
    return a;
  }

  bool has_field_strength() const { return static_cast<bool>(field_strength); }
};

namespace detail {

template <int N>
GroupElement<N> midpoint_product(const ContinuumConnection<N>& conn, const Point& from, const Point& d, long steps) {
  GroupElement<N> h = GroupElement<N>::Identity();
  const double dt = 1.0 / static_cast<double>(steps);
  for (long k = 0; k < steps; ++k) {
    const Point x = from + ((static_cast<double>(k) + 0.5) * dt) * d;
    const AlgebraElement<N> step = (-dt) * conn.contract(x, d);
    h = (exp_map(step) * h).eval();
  }
  return h;
}

}  // namespace detail

/// Transport along the straight segment from -> to, by the midpoint product
/// rule; the step count doubles until two successive results agree to the
/// configured tolerance.
template <int N>
GroupElement<N> edge_holonomy(const ContinuumConnection<N>& conn, const Point& from, const Point& to,
                              const HolonomySettings& settings = {}) {
  if (from.size() != conn.dimension || to.size() != conn.dimension)
    throw InvalidArgument("edge_holonomy: point dimension does not match the connection");
  const Point d = to - from;
  const double length = d.norm();
  if (length == 0.0) return GroupElement<N>::Identity();
  long steps = std::max(1L, static_cast<long>(std::ceil(settings.steps_per_unit_length * length)));
  GroupElement<N> coarse = detail::midpoint_product(conn, from, d, steps);
  for (int doubling = 0; doubling < settings.max_doublings; ++doubling) {
    steps *= 2;
    GroupElement<N> fine = detail::midpoint_product(conn, from, d, steps);
    if ((fine - coarse).norm() <= settings.tolerance) {
      if (unitarity_drift(fine) > kReprojectThreshold) fine = reproject(fine);
      return fine;
    }
    coarse = std::move(fine);
  }
  throw AccuracyError("edge_holonomy: no convergence after " + std::to_string(settings.max_doublings) +
                      " step doublings");
}

/// Transport tail -> head along a mesh edge, evaluated in the chart where the
/// tail sits at its canonical position.
template <int N>
GroupElement<N> edge_transport(const ContinuumConnection<N>& conn, const Complex& c, EdgeIndex e,
                               const HolonomySettings& settings = {}) {
  const Edge& edge = c.edges().at(e);
  const Point& from = c.position(edge.tail);
  return edge_holonomy(conn, from, Point(from + edge.displacement), settings);
}

/// Holonomy of a closed edge path; the last edge traversed is composed on the
/// left. Reversing the loop inverts the result.
template <int N>
GroupElement<N> loop_holonomy(const ContinuumConnection<N>& conn, const Complex& c,
                              const std::vector<OrientedEdge>& loop, const HolonomySettings& settings = {}) {
  require_closed(c, loop);
  GroupElement<N> h = GroupElement<N>::Identity();
  for (const OrientedEdge& oe : loop) {
    const GroupElement<N> t = edge_transport(conn, c, oe.edge, settings);
    h = multiply<N, double>(oe.forward ? t : GroupElement<N>(t.adjoint()), h);
  }
  return h;
}

using Segment = std::pair<Point, Point>;

namespace detail {

template <typename F>
std::complex<double> adaptive_simpson(const F& f, double a, double b, std::complex<double> fa,
                                      std::complex<double> fm, std::complex<double> fb, std::complex<double> whole,
                                      double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const std::complex<double> flm = f(lm), frm = f(rm);
  const std::complex<double> left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const std::complex<double> right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const std::complex<double> delta = left + right - whole;
  if (depth <= 0) throw AccuracyError("abelian_line_integral: adaptive quadrature hit its depth limit");
  if (std::abs(delta) <= 15.0 * tol && depth < 48) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace detail

/// int_path A for a U(1) connection, by adaptive Simpson quadrature on each
/// segment. With H = exp(-int A), exp(-result) is the holonomy of the path.
template <int N>
  requires(N == 1)
std::complex<double> abelian_line_integral(const ContinuumConnection<N>& conn, const std::vector<Segment>& path,
                                           double tolerance = 1e-13) {
  std::complex<double> total = 0.0;
  for (const auto& [from, to] : path) {
    const Point d = to - from;
    if (d.norm() == 0.0) continue;
    auto f = [&](double t) { return conn.contract(Point(from + t * d), d)(0, 0); };
    const std::complex<double> fa = f(0.0), fm = f(0.5), fb = f(1.0);
    const std::complex<double> whole = (fa + 4.0 * fm + fb) / 6.0;
    total += detail::adaptive_simpson(f, 0.0, 1.0, fa, fm, fb, whole, tolerance, 60);
  }
  return total;
}

/// Segments of an oriented edge path, each starting at the canonical position
/// of the node it leaves.
inline std::vector<Segment> path_segments(const Complex& c, const std::vector<OrientedEdge>& path) {
  std::vector<Segment> out;
  out.reserve(path.size());
  for (const OrientedEdge& oe : path) {
    const Edge& e = c.edges().at(oe.edge);
    const Point& tail = c.position(e.tail);
    const Point head = tail + e.displacement;
    if (oe.forward) out.emplace_back(tail, head);
    else out.emplace_back(head, tail);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in families

template <int N>
ContinuumConnection<N> zero_connection(int dimension) {
  ContinuumConnection<N> c;
  c.dimension = dimension;
  c.name = "zero";
  c.coefficient = [](const Point&, int) { return AlgebraElement<N>::Zero().eval(); };
  c.field_strength = [](const Point&, int, int) { return AlgebraElement<N>::Zero().eval(); };
  return c;
}

template <int N>
ContinuumConnection<N> constant_connection(std::vector<AlgebraElement<N>> components) {
  if (components.empty() || components.size() > 4)
    throw InvalidArgument("constant_connection: need between 1 and 4 components");
  for (const auto& a : components)
    if (!is_algebra_element<N, double>(a, 1e-12)) throw InvalidArgument("constant_connection: component is not in the Lie algebra");
  ContinuumConnection<N> c;
  c.dimension = static_cast<int>(components.size());
  c.name = "constant";
  c.coefficient = [components](const Point&, int mu) { return components.at(mu); };
  c.field_strength = [components](const Point&, int mu, int nu) {
    const auto& a = components.at(mu);
    const auto& b = components.at(nu);
    return AlgebraElement<N>(a * b - b * a);
  };
  return c;
}

/// U(1) field A = i B x_1 dx_2 (first coordinate times the second
/// differential); constant curvature F_12 = i B.
inline ContinuumConnection<1> abelian_linear(double b, int dimension = 2) {
  if (dimension < 2) throw InvalidArgument("abelian_linear: need at least two dimensions");
  using A = AlgebraElement<1>;
  ContinuumConnection<1> c;
  c.dimension = dimension;
  c.name = "abelian_linear";
  c.coefficient = [b](const Point& x, int mu) {
    A a = A::Zero();
    if (mu == 1) a(0, 0) = std::complex<double>(0.0, b * x(0));
    return a;
  };
  c.field_strength = [b](const Point&, int mu, int nu) {
    A f = A::Zero();
    if (mu == 0 && nu == 1) f(0, 0) = std::complex<double>(0.0, b);
    if (mu == 1 && nu == 0) f(0, 0) = std::complex<double>(0.0, -b);
    return f;
  };
  return c;
}

/// Non-abelian SU(2) test field with polynomial coefficients (sigma_a are the
/// Pauli matrices, x = x_1, y = x_2):
///   A_1 = (i/2) [ (0.3 + y^2) sigma_1 + 0.5 x y sigma_3 ]
///   A_2 = (i/2) [ (0.2 + x^2) sigma_2 - 0.4 x sigma_3 ]
/// and zero along any further axes.
inline ContinuumConnection<2> su2_polynomial(int dimension = 2) {
  if (dimension < 2) throw InvalidArgument("su2_polynomial: need at least two dimensions");
  using A = AlgebraElement<2>;
  struct Basis {
    A s1, s2, s3;
  };
  const auto& basis = algebra_basis<2>();  // i sigma_a
  const Basis half{basis[0] / 2.0, basis[1] / 2.0, basis[2] / 2.0};
  auto a1 = [half](const Point& p) {
    const double x = p(0), y = p(1);
    return A((0.3 + y * y) * half.s1 + 0.5 * x * y * half.s3);
  };
  auto a2 = [half](const Point& p) {
    const double x = p(0);
    return A((0.2 + x * x) * half.s2 - 0.4 * x * half.s3);
  };
  ContinuumConnection<2> c;
  c.dimension = dimension;
  c.name = "su2_polynomial";
  c.coefficient = [a1, a2](const Point& x, int mu) {
    if (mu == 0) return a1(x);
    if (mu == 1) return a2(x);
    return A(A::Zero());
  };
  c.field_strength = [a1, a2, half](const Point& p, int mu, int nu) {
    if (mu == nu || mu > 1 || nu > 1) return A(A::Zero());
    const double x = p(0), y = p(1);
    const A d1_a2 = 2.0 * x * half.s2 - 0.4 * half.s3;
    const A d2_a1 = 2.0 * y * half.s1 + 0.5 * x * half.s3;
    const A u = a1(p), v = a2(p);
    const A f12 = d1_a2 - d2_a1 + u * v - v * u;
    return mu == 0 ? f12 : A(-f12);
  };
  return c;
}

}  // namespace glat
