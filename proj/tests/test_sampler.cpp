#include "catch_amalgamated.hpp"

#include "glat/gauge.hpp"
#include "glat/sampler.hpp"
#include "glat/stats.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace glat;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const Complex> share(Complex c) { return std::make_shared<const Complex>(std::move(c)); }

std::shared_ptr<const Complex> single_plaquette_mesh() { return share(build_cubical_lattice(2, 2, 1.0, false)); }

// Two nodes on a circle of circumference 2 joined by two links.
std::shared_ptr<const Complex> two_node_ring() {
  Point period(1), p0(1), p1(1), step(1);
  period << 2.0;
  p0 << 0.0;
  p1 << 1.0;
  step << 1.0;
  ComplexBuilder b(1, ComplexKind::Cubical, period, 2.0);
  b.add_node(p0);
  b.add_node(p1);
  b.add_edge(0, 1, step);
  b.add_edge(1, 0, step);
  return share(std::move(b).build());
}

template <int N>
double plaquette_trace(const LinkField<N>& lf) {
  return plaquette_product(lf, FaceIndex{0}).trace().real() / N;
}

}  // namespace

TEST_CASE("chain configuration is validated") {
  ChainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.burn_in = cfg.sweeps;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.proposal_step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK_THROWS(detail::acceptance_probability(1.0, std::nan("")));
  CHECK(detail::acceptance_probability(2.0, -1.0) == 1.0);
  CHECK(detail::acceptance_probability(2.0, 0.5) == Catch::Approx(std::exp(-1.0)));
}

TEST_CASE("beta zero accepts everything and reaches Haar moments") {
  const auto c = share(build_cubical_lattice(2, 2, 1.0, true));
  const ActionTerms<2> terms(c, ActionForm::YM2D);
  ChainConfig cfg;
  cfg.beta = 0.0;
  cfg.proposal_step = 2.0;
  cfg.sweeps = 20000;
  cfg.burn_in = 100;
  const std::vector<Observable<2>> obs{[](const LinkField<2>& lf) { return lf.links[0].trace(); },
                                       [](const LinkField<2>& lf) { return std::norm(lf.links[3].trace()); }};
  const auto r = run_chain(identity_link_field<2>(c), terms, cfg, obs);
  CHECK(r.stats.accepted == r.stats.proposed);
  CHECK(r.stats.acceptance_rate == 1.0);
  const auto first = wilson_loop_mean(r.stats.series[0]);
  const auto second = wilson_loop_mean(r.stats.series[1]);
  CHECK(std::abs(first.mean.real()) < 3 * first.stderr_.real());
  CHECK(std::abs(second.mean.real() - 1.0) < 3 * second.stderr_.real());
}

TEST_CASE("discretized one-link kernel is stationary for the Boltzmann weight") {
  // U(1) angles 2 pi k / 64, proposals shift by m in [-M, M] uniformly and are
  // accepted with the library's Metropolis rule on a single plaquette.
  const int n = 64, m_max = 5;
  const double beta = 1.7;
  const auto c = single_plaquette_mesh();
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  auto lf = identity_link_field<1>(c);
  const EdgeIndex e = 0;
  std::vector<double> s(n);
  for (int k = 0; k < n; ++k) {
    lf.links[e](0, 0) = std::polar(1.0, 2 * kPi * k / n);
    s[k] = detail::local_action(lf, terms, e);
  }
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int m = -m_max; m <= m_max; ++m) {
      const int j = ((i + m) % n + n) % n;
      const double a = detail::acceptance_probability(beta, s[j] - s[i]) / (2 * m_max + 1);
      p(i, j) += a;
      p(i, i) += 1.0 / (2 * m_max + 1) - a;
    }
  }
  Eigen::RowVectorXd pi(n);
  for (int k = 0; k < n; ++k) pi(k) = std::exp(-beta * s[k]);
  pi /= pi.sum();
  CHECK((pi * p - pi).cwiseAbs().maxCoeff() < 1e-10);
  for (int i = 0; i < n; ++i) CHECK(p.row(i).sum() == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("single-plaquette U(1) oracle equals the Bessel ratio") {
  const auto c = single_plaquette_mesh();
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  const auto base = identity_link_field<1>(c);
  for (double beta : {0.5, 1.0, 2.0}) {
    const auto r = quadrature_oracle<1>(base, {0}, action_functional(terms), beta, plaquette_trace<1>);
    const double bessel = std::cyl_bessel_i(1.0, beta) / std::cyl_bessel_i(0.0, beta);
    CHECK(std::abs(r.value - bessel) < 1e-8);
    CHECK(std::abs(r.value - r.coarse) < 1e-8);
  }
}

TEST_CASE("SU(2) oracle") {
  const auto c = single_plaquette_mesh();
  const ActionTerms<2> terms(c, ActionForm::YM2D);
  const auto base = identity_link_field<2>(c);
  const auto tr = [](const LinkField<2>& lf) { return plaquette_product(lf, FaceIndex{0}).trace().real(); };

  const auto flat = quadrature_oracle<2>(base, {0}, action_functional(terms), 0.0, tr);
  CHECK(std::abs(flat.value) < 1e-12);

  // Weight exp(beta tr U) on the class measure gives <tr U> = 2 I2(2b)/I1(2b).
  for (double beta : {0.5, 1.0}) {
    const auto r = quadrature_oracle<2>(base, {0}, action_functional(terms), beta, tr);
    const double expected = 2.0 * std::cyl_bessel_i(2.0, 2 * beta) / std::cyl_bessel_i(1.0, 2 * beta);
    CHECK(std::abs(r.value - expected) < 1e-8);
  }
}

TEST_CASE("oracle limits") {
  const auto c = share(build_cubical_lattice(2, 3, 1.0, false));
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  const auto base = identity_link_field<1>(c);
  CHECK_THROWS_AS(quadrature_oracle<1>(base, {0, 1, 2, 3}, action_functional(terms), 1.0, plaquette_trace<1>),
                  InvalidArgument);
  OracleSettings strict;
  strict.tolerance = 0.0;
  strict.max_doublings = 1;
  CHECK_THROWS_AS(quadrature_oracle<1>(base, {0}, action_functional(terms), 30.0, plaquette_trace<1>, strict),
                  AccuracyError);
}

TEST_CASE("fixing a tree link leaves the oracle unchanged") {
  const auto ring = two_node_ring();
  REQUIRE(ring->edge_count() == 2);
  const std::vector<OrientedEdge> loop{{0, true}, {1, true}};
  const auto wilson = [loop](const LinkField<1>& lf) { return path_product(lf, loop).trace().real(); };
  const auto action = [wilson](const LinkField<1>& lf) { return 1.0 - wilson(lf); };
  const auto base = identity_link_field<1>(ring);
  const auto free_links = non_tree_edges(*ring);
  REQUIRE(free_links.size() == 1);
  for (double beta : {0.5, 2.0}) {
    const auto full = quadrature_oracle<1>(base, {0, 1}, action, beta, wilson);
    const auto reduced = quadrature_oracle<1>(base, free_links, action, beta, wilson);
    CHECK(std::abs(full.value - reduced.value) < 1e-10);
  }
}

TEST_CASE("Metropolis agrees with the Bessel oracle at beta 2") {
  const auto c = single_plaquette_mesh();
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  ChainConfig cfg;
  cfg.beta = 2.0;
  cfg.proposal_step = 1.0;
  cfg.sweeps = 20000;
  cfg.burn_in = 500;
  cfg.seed = 12;
  const auto r = run_chain(identity_link_field<1>(c), terms, cfg, {wilson_loop_observable<1>(c->faces()[0].boundary)});
  const auto est = wilson_loop_mean(r.stats.series[0]);
  const double bessel = std::cyl_bessel_i(1.0, 2.0) / std::cyl_bessel_i(0.0, 2.0);
  CHECK(std::abs(est.mean.real() - bessel) < 3 * est.stderr_.real());
  CHECK(r.stats.acceptance_rate == Catch::Approx(static_cast<double>(r.stats.accepted) / r.stats.proposed));
  CHECK(r.stats.acceptance_rate > 0.0);
  CHECK(r.stats.acceptance_rate < 1.0);
  CHECK(r.stats.sweep.size() == static_cast<std::size_t>(cfg.sweeps - cfg.burn_in));
}

TEST_CASE("uniform phase at beta zero") {
  const auto c = single_plaquette_mesh();
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  ChainConfig cfg;
  cfg.beta = 0.0;
  cfg.proposal_step = 3.0;
  cfg.sweeps = 5000;
  cfg.burn_in = 10;
  const auto r = run_chain(identity_link_field<1>(c), terms, cfg, {wilson_loop_observable<1>(c->faces()[0].boundary)});
  const auto est = wilson_loop_mean(r.stats.series[0]);
  CHECK(std::abs(est.mean.real()) < 3 * est.stderr_.real());
  CHECK(std::abs(est.mean.imag()) < 3 * est.stderr_.imag());
}

TEST_CASE("too few effective samples are refused") {
  std::vector<std::complex<double>> few(20, 1.0);
  CHECK_THROWS_AS(wilson_loop_mean(few), InsufficientSamplesError);
  // A slowly drifting series has a long autocorrelation time.
  std::vector<std::complex<double>> drift;
  for (int k = 0; k < 200; ++k) drift.push_back(std::sin(k / 40.0));
  CHECK_THROWS_AS(wilson_loop_mean(drift), InsufficientSamplesError);
}

TEST_CASE("frozen links stay at the identity") {
  const auto c = share(build_cubical_lattice(2, 2, 1.0, true));
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  const auto mask = tree_mask(*c);
  ChainConfig cfg;
  cfg.sweeps = 200;
  cfg.burn_in = 0;
  const auto r = run_chain(identity_link_field<1>(c), terms, cfg, {}, mask);
  for (EdgeIndex e = 0; e < c->edge_count(); ++e) {
    if (mask[e]) CHECK(r.final_state.links[e] == identity<1>());
    else CHECK(r.final_state.links[e] != identity<1>());
  }
  CHECK(r.stats.proposed == 200 * non_tree_edges(*c).size());
}

TEST_CASE("a gauge-transformed start gives the same distribution") {
  const auto c = share(build_cubical_lattice(2, 2, 1.0, true));
  const ActionTerms<2> terms(c, ActionForm::YM2D);
  std::mt19937_64 rng(13);
  const auto start = haar_link_field<2>(c, rng);
  const auto moved = apply_gauge(start, random_gauge<2>(*c, rng));
  ChainConfig cfg;
  cfg.beta = 1.0;
  cfg.proposal_step = 1.5;
  cfg.sweeps = 40000;
  cfg.burn_in = 200;
  cfg.thin = 20;
  const std::vector<Observable<2>> obs{[](const LinkField<2>& lf) { return plaquette_product(lf, FaceIndex{1}).trace(); }};
  const auto a = run_chain(start, terms, cfg, obs);
  const auto b = run_chain(moved, terms, cfg, obs);
  std::vector<double> sa, sb;
  for (const auto& z : a.stats.series[0]) sa.push_back(z.real());
  for (const auto& z : b.stats.series[0]) sb.push_back(z.real());
  CHECK(ks_two_sample(sa, sb).same);
}

TEST_CASE("imaginary coupling is refused by the sampler") {
  const auto c = single_plaquette_mesh();
  Couplings k;
  k.imaginary = true;
  const ActionTerms<1> terms(c, ActionForm::YM2D, k);
  auto lf = identity_link_field<1>(c);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(metropolis_sweep(lf, terms, 1.0, 0.5, rng), InvalidArgument);
}
