#pragma once

// Node-valued gauge transformations and invariance checks.
//
// A transformation u acts on the link of an edge tail -> head by
//   g' = u(head)^-1 g u(tail),
// so every closed path product based at s becomes u(s)^-1 P u(s).

#include "glat/discretize.hpp"
#include "glat/group.hpp"
#include "glat/observables.hpp"

#include <algorithm>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace glat {

inline constexpr double kInvarianceThreshold = 1e-10;

template <int N>
struct GaugeTransform {
  std::vector<GroupElement<N>> values;  // per node

  const GroupElement<N>& operator()(NodeIndex i) const { return values.at(i); }
};

template <int N>
GaugeTransform<N> identity_gauge(const Complex& c) {
  return {std::vector<GroupElement<N>>(c.node_count(), GroupElement<N>::Identity())};
}

template <int N>
GaugeTransform<N> constant_gauge(const Complex& c, const GroupElement<N>& u0) {
  return {std::vector<GroupElement<N>>(c.node_count(), u0)};
}

template <int N, typename Rng>
GaugeTransform<N> random_gauge(const Complex& c, Rng& rng) {
  GaugeTransform<N> u;
  u.values.reserve(c.node_count());
  for (std::size_t i = 0; i < c.node_count(); ++i) u.values.push_back(haar_sample<N>(rng));
  return u;
}

/// Node-wise product (u v)(i) = u(i) v(i); applying u then v equals applying
/// u v.
template <int N>
GaugeTransform<N> compose(const GaugeTransform<N>& u, const GaugeTransform<N>& v) {
  if (u.values.size() != v.values.size()) throw InvalidArgument("gauge transforms cover different node sets");
  GaugeTransform<N> w;
  w.values.reserve(u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i) w.values.push_back(multiply<N, double>(u.values[i], v.values[i]));
  return w;
}

template <int N>
LinkField<N> apply_gauge(const LinkField<N>& lf, const GaugeTransform<N>& u) {
  require_complete(lf);
  const Complex& c = lf.mesh();
  if (u.values.size() < c.node_count())
    throw InvalidArgument("gauge transform has no value for node " + std::to_string(u.values.size()));
  LinkField<N> out = lf;
  for (EdgeIndex e = 0; e < c.edge_count(); ++e) {
    const Edge& edge = c.edges()[e];
    out.links[e] = (u.values[edge.head].adjoint() * lf.links[e] * u.values[edge.tail]).eval();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariance checks

template <int N>
struct GaugeFunctional {
  std::string name;
  bool covariant = false;
  /// Invariant functionals: a list of values compared entrywise.
  std::function<std::vector<std::complex<double>>(const LinkField<N>&)> values;
  /// Covariant functionals: deviation between the transformed value and the
  /// conjugated original.
  std::function<double(const LinkField<N>&, const LinkField<N>&, const GaugeTransform<N>&)> deviation;
};

template <int N>
GaugeFunctional<N> ym2d_functional() {
  GaugeFunctional<N> f;
  f.name = "ym2d";
  f.values = [](const LinkField<N>& lf) {
    std::vector<std::complex<double>> v(lf.mesh().face_count());
    for (FaceIndex i = 0; i < v.size(); ++i) v[i] = ym2d_density(lf, i);
    return v;
  };
  return f;
}

template <int N>
GaugeFunctional<N> ym4d_functional() {
  GaugeFunctional<N> f;
  f.name = "ym4d";
  f.values = [](const LinkField<N>& lf) {
    const auto& cells = lf.mesh().cells4();
    std::vector<std::complex<double>> v(cells.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = ym4d_density(lf, cells[i]);
    return v;
  };
  return f;
}

template <int N>
GaugeFunctional<N> trace_power_functional(int q) {
  if (q != 1 && q != 2) throw InvalidArgument("trace power order must be 1 or 2");
  GaugeFunctional<N> f;
  f.name = q == 1 ? "trace_power_q1" : "trace_power_q2";
  f.values = [q](const LinkField<N>& lf) {
    std::vector<std::complex<double>> v;
    if (q == 1)
      for (FaceIndex i = 0; i < lf.mesh().face_count(); ++i) v.push_back(trace_power_density(lf, i));
    else
      for (const Cell4& cell : lf.mesh().cells4()) v.push_back(trace_power_density(lf, cell));
    return v;
  };
  return f;
}

/// Curvature estimate at each face anchor; compared after conjugation by the
/// gauge value at the anchor.
template <int N>
GaugeFunctional<N> curvature_functional() {
  GaugeFunctional<N> f;
  f.name = "curvature_estimate";
  f.covariant = true;
  f.deviation = [](const LinkField<N>& before, const LinkField<N>& after, const GaugeTransform<N>& u) {
    double worst = 0.0;
    for (FaceIndex i = 0; i < before.mesh().face_count(); ++i) {
      const NodeIndex s = before.mesh().faces()[i].anchor;
      const AlgebraElement<N> expected = u(s).adjoint() * curvature_estimate(before, i).value * u(s);
      worst = std::max(worst, (curvature_estimate(after, i).value - expected).cwiseAbs().maxCoeff());
    }
    return worst;
  };
  return f;
}

struct InvarianceEntry {
  std::string name;
  bool covariant = false;
  int trials = 0;
  double max_deviation = 0.0;
  bool passed = true;
};

struct InvarianceReport {
  std::vector<InvarianceEntry> entries;
  double threshold = kInvarianceThreshold;

  bool passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const InvarianceEntry& e) { return e.passed; });
  }
};

template <int N, typename Rng>
InvarianceReport invariance_report(const LinkField<N>& lf, const std::vector<GaugeFunctional<N>>& functionals,
                                   int trials, Rng& rng) {
  if (trials < 1) throw InvalidArgument("invariance_report needs at least one trial");
  InvarianceReport report;
  std::vector<std::vector<std::complex<double>>> base(functionals.size());
  for (std::size_t k = 0; k < functionals.size(); ++k) {
    report.entries.push_back({functionals[k].name, functionals[k].covariant, trials, 0.0, true});
    if (!functionals[k].covariant) base[k] = functionals[k].values(lf);
  }
  for (int t = 0; t < trials; ++t) {
    const GaugeTransform<N> u = random_gauge<N>(lf.mesh(), rng);
    const LinkField<N> moved = apply_gauge(lf, u);
    for (std::size_t k = 0; k < functionals.size(); ++k) {
      double dev = 0.0;
      if (functionals[k].covariant) {
        dev = functionals[k].deviation(lf, moved, u);
      } else {
        const auto now = functionals[k].values(moved);
        for (std::size_t i = 0; i < now.size(); ++i) dev = std::max(dev, std::abs(now[i] - base[k][i]));
      }
      report.entries[k].max_deviation = std::max(report.entries[k].max_deviation, dev);
    }
  }
  for (auto& e : report.entries) e.passed = e.max_deviation <= report.threshold;
  return report;
}

}  // namespace glat
