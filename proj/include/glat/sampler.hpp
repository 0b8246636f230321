#pragma once

// Metropolis sampling of link fields under the product Haar measure weighted
// by exp(-beta S), loop estimators, and a tensor-product quadrature oracle
// for complexes with very few free links.

#include "glat/discretize.hpp"
#include "glat/group.hpp"
#include "glat/observables.hpp"
#include "glat/stats.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace glat {

struct ChainConfig {
  double beta = 1.0;
  double proposal_step = 0.5;
  int sweeps = 1000;
  int burn_in = 100;
  int thin = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(proposal_step > 0.0)) throw InvalidArgument("proposal_step must be positive");
    if (!std::isfinite(beta)) throw InvalidArgument("beta must be finite");
    if (burn_in < 0 || sweeps <= burn_in) throw InvalidArgument("need sweeps > burn_in >= 0");
    if (thin < 1) throw InvalidArgument("thin must be at least 1");
  }
};

struct ChainStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double acceptance_rate = 0.0;  // accepted / proposed
  std::vector<int> sweep;        // sweep index of each recorded sample
  std::vector<double> sweep_acceptance;
  std::vector<std::vector<std::complex<double>>> series;  // per observable
  double autocorrelation_time = 0.5;                      // of Re series[0]
};

template <int N>
using Observable = std::function<std::complex<double>(const LinkField<N>&)>;

namespace detail {

inline double acceptance_probability(double beta, double delta_s) {
  if (!std::isfinite(delta_s)) throw Error("non-finite action change in Metropolis step");
  const double x = -beta * delta_s;
  return x >= 0.0 ? 1.0 : std::exp(x);
}

template <int N>
double local_action(const LinkField<N>& lf, const ActionTerms<N>& terms, EdgeIndex e) {
  double s = 0.0;
  for (std::size_t t : terms.terms_touching(e)) s += terms.volume(t) * terms.density(lf, t).real();
  return s;
}

}  // namespace detail

/// One pass over all links in index order. Frozen links are skipped. Returns
/// the number of accepted proposals.
template <int N, typename Rng>
std::size_t metropolis_sweep(LinkField<N>& lf, const ActionTerms<N>& terms, double beta, double step, Rng& rng,
                             const std::vector<bool>& frozen = {}) {
  if (terms.couplings().imaginary) throw InvalidArgument("Metropolis sampling needs a real coupling");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::size_t accepted = 0;
  for (EdgeIndex e = 0; e < lf.links.size(); ++e) {
    if (!frozen.empty() && frozen[e]) continue;
    const GroupElement<N> old = lf.links[e];
    const double s_old = detail::local_action(lf, terms, e);
    lf.links[e] = multiply<N, double>(near_identity_sample<N>(step, rng), old);
    const double s_new = detail::local_action(lf, terms, e);
    const double p = detail::acceptance_probability(beta, s_new - s_old);
    if (p >= 1.0 || uniform(rng) < p) ++accepted;
    else lf.links[e] = old;
  }
  return accepted;
}

template <int N>
struct ChainResult {
  LinkField<N> final_state;
  ChainStats stats;
};

template <int N>
ChainResult<N> run_chain(LinkField<N> state, const ActionTerms<N>& terms, const ChainConfig& cfg,
                         const std::vector<Observable<N>>& observables, const std::vector<bool>& frozen = {}) {
  cfg.validate();
  require_complete(state);
  std::mt19937_64 rng(cfg.seed);
  ChainStats st;
  st.series.resize(observables.size());
  std::size_t per_sweep = 0;
  for (EdgeIndex e = 0; e < state.links.size(); ++e)
    if (frozen.empty() || !frozen[e]) ++per_sweep;
  for (int s = 0; s < cfg.sweeps; ++s) {
    const std::size_t acc = metropolis_sweep(state, terms, cfg.beta, cfg.proposal_step, rng, frozen);
    st.accepted += acc;
    st.proposed += per_sweep;
    if (s >= cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0) {
      st.sweep.push_back(s);
      st.sweep_acceptance.push_back(per_sweep ? static_cast<double>(acc) / per_sweep : 0.0);
      for (std::size_t k = 0; k < observables.size(); ++k) st.series[k].push_back(observables[k](state));
    }
  }
  st.acceptance_rate = st.proposed ? static_cast<double>(st.accepted) / st.proposed : 0.0;
  if (!st.series.empty()) {
    std::vector<double> re;
    for (const auto& z : st.series[0]) re.push_back(z.real());
    st.autocorrelation_time = integrated_autocorrelation_time(re);
  }
  return {std::move(state), std::move(st)};
}

struct LoopEstimate {
  std::complex<double> mean;
  std::complex<double> stderr_;  // (error of real part, error of imaginary part)
  double autocorrelation_time = 0.5;
  double effective_samples = 0.0;
};

inline constexpr double kMinEffectiveSamples = 30.0;

/// Batched-means estimate of the mean of a recorded trace series.
inline LoopEstimate wilson_loop_mean(const std::vector<std::complex<double>>& samples, std::size_t batches = 32) {
  std::vector<double> re, im;
  for (const auto& z : samples) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  LoopEstimate e;
  e.autocorrelation_time = integrated_autocorrelation_time(re);
  e.effective_samples = static_cast<double>(samples.size()) / std::max(1.0, 2.0 * e.autocorrelation_time);
  if (e.effective_samples < kMinEffectiveSamples)
    throw InsufficientSamplesError("only " + std::to_string(e.effective_samples) +
                                   " effective samples; at least 30 are needed");
  const BatchEstimate r = batch_means(re, batches), i = batch_means(im, batches);
  e.mean = {r.mean, i.mean};
  e.stderr_ = {r.stderr_, i.stderr_};
  return e;
}

/// Trace of the link product around a closed loop.
template <int N>
Observable<N> wilson_loop_observable(std::vector<OrientedEdge> loop) {
  return [loop = std::move(loop)](const LinkField<N>& lf) { return path_product(lf, loop).trace(); };
}

// ---------------------------------------------------------------------------
// Quadrature oracle

struct OracleSettings {
  int u1_points = 512;    // trapezoid nodes per U(1) link
  int su2_points = 12;    // base resolution per Euler angle for SU(2)
  double tolerance = 1e-8;
  int max_doublings = 3;
  std::size_t max_links = 3;
};

struct OracleResult {
  double value = 0.0;
  double coarse = 0.0;  // same quadrature at half the final resolution
  int resolution = 0;
  std::size_t free_links = 0;
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

template <int N>
struct WeightedElement {
  GroupElement<N> g;
  double w;
};

/// Haar-normalised quadrature rule on the group at resolution n.
template <int N>
std::vector<WeightedElement<N>> group_rule(int n) {
  using std::numbers::pi;
  std::vector<WeightedElement<N>> rule;
  if constexpr (N == 1) {
    for (int k = 0; k < n; ++k) {
      GroupElement<1> g;
      g(0, 0) = std::polar(1.0, 2.0 * pi * k / n);
      rule.push_back({g, 1.0 / n});
    }
  } else {
    // U = e^{i phi s3/2} e^{i theta s2/2} e^{i psi s3/2}; Haar weight
    // sin(theta)/2 dtheta dphi/(2 pi) dpsi/(4 pi).
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const int nphi = n, npsi = 2 * n;
    for (int a = 0; a < nphi; ++a) {
      const double phi = 2.0 * pi * a / nphi;
      for (int b = 0; b < n; ++b) {
        const double theta = 0.5 * pi * (x[b] + 1.0);
        const double wt = 0.5 * pi * w[b] * 0.5 * std::sin(theta);
        for (int c = 0; c < npsi; ++c) {
          const double psi = 4.0 * pi * c / npsi;
          GroupElement<2> rz1 = GroupElement<2>::Zero(), ry = GroupElement<2>::Zero(), rz2 = GroupElement<2>::Zero();
          rz1(0, 0) = std::polar(1.0, phi / 2);
          rz1(1, 1) = std::polar(1.0, -phi / 2);
          ry(0, 0) = ry(1, 1) = std::cos(theta / 2);
          ry(0, 1) = std::sin(theta / 2);
          ry(1, 0) = -std::sin(theta / 2);
          rz2(0, 0) = std::polar(1.0, psi / 2);
          rz2(1, 1) = std::polar(1.0, -psi / 2);
          rule.push_back({GroupElement<2>(rz1 * ry * rz2), wt / nphi / npsi});
        }
      }
    }
  }
  return rule;
}

template <int N>
double oracle_pass(LinkField<N> lf, const std::vector<EdgeIndex>& free_edges,
                   const std::function<double(const LinkField<N>&)>& action, double beta,
                   const std::function<double(const LinkField<N>&)>& observable, int n) {
  const std::vector<WeightedElement<N>> rule = group_rule<N>(n);
  const std::size_t m = free_edges.size();
  std::vector<std::size_t> idx(m, 0);
  // Running sums of w e^{-beta S} and w O e^{-beta S}, both scaled by
  // e^{-shift} with shift the largest exponent seen so far.
  double shift = -std::numeric_limits<double>::infinity();
  double z = 0.0, zo = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      lf.links[free_edges[k]] = rule[idx[k]].g;
      w *= rule[idx[k]].w;
    }
    const double expo = -beta * action(lf);
    if (!std::isfinite(expo)) throw AccuracyError("quadrature oracle: non-finite action");
    if (expo > shift) {
      const double scale = std::exp(shift - expo);
      z *= scale;
      zo *= scale;
      shift = expo;
    }
    const double weight = w * std::exp(expo - shift);
    z += weight;
    zo += weight * observable(lf);
    std::size_t k = 0;
    while (k < m && ++idx[k] == rule.size()) idx[k++] = 0;
    if (k == m) break;
  }
  return zo / z;
}

}  // namespace detail

/// Expectation of `observable` under exp(-beta action) dHaar over the links
/// in `free_edges`, all other links held at their values in `base`. The
/// resolution doubles until two passes agree to the tolerance.
template <int N>
  requires(N == 1 || N == 2)
OracleResult quadrature_oracle(const LinkField<N>& base, const std::vector<EdgeIndex>& free_edges,
                               const std::function<double(const LinkField<N>&)>& action, double beta,
                               const std::function<double(const LinkField<N>&)>& observable,
                               const OracleSettings& settings = {}) {
  require_complete(base);
  if (free_edges.size() > settings.max_links)
    throw InvalidArgument("quadrature oracle: " + std::to_string(free_edges.size()) +
                          " free links exceed the limit of " + std::to_string(settings.max_links));
  OracleResult r;
  r.free_links = free_edges.size();
  if (free_edges.empty()) {
    r.value = r.coarse = observable(base);
    return r;
  }
  int n = N == 1 ? settings.u1_points : settings.su2_points;
  double coarse = detail::oracle_pass(base, free_edges, action, beta, observable, n);
  for (int d = 0; d < settings.max_doublings; ++d) {
    n *= 2;
    const double fine = detail::oracle_pass(base, free_edges, action, beta, observable, n);
    if (std::abs(fine - coarse) <= settings.tolerance) {
      r.value = fine;
      r.coarse = coarse;
      r.resolution = n;
      return r;
    }
    coarse = fine;
  }
  throw AccuracyError("quadrature oracle: no agreement after " + std::to_string(settings.max_doublings) +
                      " resolution doublings");
}

/// Edges left free once a spanning tree is fixed to the identity.
inline std::vector<EdgeIndex> non_tree_edges(const Complex& c) {
  const SpanningTree t = grow_spanning_tree(c);
  std::vector<EdgeIndex> out;
  for (EdgeIndex e = 0; e < c.edge_count(); ++e)
    if (!t.is_tree_edge[e]) out.push_back(e);
  return out;
}

inline std::vector<bool> tree_mask(const Complex& c) { return grow_spanning_tree(c).is_tree_edge; }

template <int N>
std::function<double(const LinkField<N>&)> action_functional(const ActionTerms<N>& terms) {
  return [&terms](const LinkField<N>& lf) {
    double s = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) s += terms.volume(t) * terms.density(lf, t).real();
    return s;
  };
}

}  // namespace glat
