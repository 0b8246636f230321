#pragma once

// Reference computations written independently of the library code paths
// they check.

#include "glat/discretize.hpp"

#include <array>
#include <cmath>
#include <functional>

namespace oracle {

using glat::GroupElement;
using glat::LinkField;
using glat::NodeIndex;

inline NodeIndex lattice_step(const glat::Complex& c, NodeIndex x, int mu) {
  const glat::LatticeInfo& l = *c.lattice();
  std::array<int, 4> k = l.coords.at(x);
  k[mu] = (k[mu] + 1) % l.sites;
  std::size_t lin = 0;
  for (int a = c.dimension() - 1; a >= 0; --a) lin = lin * l.sites + k[a];
  return l.node_at.at(lin);
}

// x -> x+mu -> x+mu+nu -> x+nu -> x, read straight from the links.
template <int N>
GroupElement<N> lattice_plaquette(const LinkField<N>& lf, NodeIndex x, int mu, int nu) {
  const glat::Complex& c = lf.mesh();
  const NodeIndex xm = lattice_step(c, x, mu), xn = lattice_step(c, x, nu);
  const GroupElement<N>& a = lf.links.at(c.lattice_edge(x, mu));
  const GroupElement<N>& b = lf.links.at(c.lattice_edge(xm, nu));
  const GroupElement<N>& d = lf.links.at(c.lattice_edge(xn, mu));
  const GroupElement<N>& e = lf.links.at(c.lattice_edge(x, nu));
  return e.adjoint() * d.adjoint() * b * a;
}

// 24-term sum over orderings of four distinct axes, with the sign taken from
// the inversion count and C = -1.
template <int N>
std::complex<double> trace_power_q2(const LinkField<N>& lf, NodeIndex x, const std::array<int, 4>& axes) {
  const double spacing = lf.mesh().lattice()->spacing;
  const double area = spacing * spacing;
  const GroupElement<N> id = GroupElement<N>::Identity();
  auto loop = [&](int a, int b) -> GroupElement<N> {
    const int mu = axes[a], nu = axes[b];
    if (mu < nu) return lattice_plaquette(lf, x, mu, nu);
    return lattice_plaquette(lf, x, nu, mu).adjoint();
  };
  std::complex<double> sum = 0.0;
  int terms = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          const int p[4] = {i, j, k, l};
          bool distinct = true;
          int inversions = 0;
          for (int s = 0; s < 4; ++s)
            for (int t = s + 1; t < 4; ++t) {
              distinct = distinct && p[s] != p[t];
              inversions += p[s] > p[t];
            }
          if (!distinct) continue;
          ++terms;
          const double sign = inversions % 2 ? -1.0 : 1.0;
          sum += sign * ((loop(i, j) - id) * (loop(k, l) - id)).trace() / (area * area);
        }
  if (terms != 24) return std::nan("");
  return sum / 24.0;
}

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = f(0.5 * (a + m)), rm = f(0.5 * (m + b));
  const double left = (m - a) / 6 * (fa + 4 * lm + fm), right = (b - m) / 6 * (fm + 4 * rm + fb);
  if (depth == 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, lm, fm, left, tol / 2, depth - 1) + simpson(f, m, b, fm, rm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  return detail::simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 40);
}

// Iterated adaptive Simpson over a rectangle.
inline double integrate_rectangle(const std::function<double(double, double)>& f, double x0, double x1, double y0,
                                  double y1, double tol = 1e-12) {
  return adaptive_simpson(
      [&](double x) { return adaptive_simpson([&](double y) { return f(x, y); }, y0, y1, tol); }, x0, x1, tol);
}

}  // namespace oracle
