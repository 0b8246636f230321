// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion. Exit status is nonzero when any criterion fails.

#include "glat/gauge.hpp"
#include "glat/harness.hpp"
#include "glat/sampler.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

using namespace glat;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::shared_ptr<const Complex> share(Complex c) { return std::make_shared<const Complex>(std::move(c)); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Point point2(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

double log_slope(const std::vector<double>& h, const std::vector<double>& err) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < h.size(); ++k) {
    lx.push_back(std::log(h[k]));
    ly.push_back(std::log(err[k]));
  }
  return fit_line(lx, ly).slope;
}

bool spans(const Complex& c, const std::vector<EdgeIndex>& tree) {
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

// 1. Exact gauge invariance of the Yang-Mills densities.
Verdict gauge_invariance() {
  const auto c = share(build_cubical_lattice(4, 4, 1.0, true));
  const std::vector<GaugeFunctional<2>> fs{ym2d_functional<2>(), ym4d_functional<2>()};
  std::mt19937_64 rng(20240601);
  double d2 = 0.0, d4 = 0.0;
  for (int field = 0; field < 100; ++field) {
    const auto lf = haar_link_field<2>(c, rng);
    const auto r = invariance_report(lf, fs, 1000, rng);
    d2 = std::max(d2, r.entries[0].max_deviation);
    d4 = std::max(d4, r.entries[1].max_deviation);
  }
  return {d2 <= 1e-10 && d4 <= 1e-10, fmt("max |dYM2D| = %.2e, max |dYM4D| = %.2e", d2, d4)};
}

// 2. Tree links are the identity for every built-in family.
Verdict tree_gauge() {
  double worst = 0.0;
  bool spanning = true;
  int fields = 0;
  auto check = [&](const auto& lf) {
    spanning = spanning && spans(lf.mesh(), lf.tree);
    for (EdgeIndex e : lf.tree)
      worst = std::max(worst, (lf.links[e] - std::decay_t<decltype(lf.links[e])>::Identity()).norm());
    ++fields;
  };
  const auto basis = algebra_basis<2>();
  for (const auto& c : {share(build_triangulated_torus(5, 1.0)), share(refine(build_triangulated_torus(3, 1.0))),
                        share(build_cubical_lattice(2, 4, 0.25, true)), share(build_cubical_lattice(2, 5, 0.25, false))}) {
    check(discretize_connection(c, zero_connection<2>(2)));
    check(discretize_connection(c, zero_connection<3>(2)));
    check(discretize_connection(c, abelian_linear(1.0)));
    check(discretize_connection(c, su2_polynomial()));
    check(discretize_connection(
        c, constant_connection<2>({AlgebraElement<2>(0.7 * basis[0]), AlgebraElement<2>(0.3 * basis[1] - 0.4 * basis[2])})));
  }
  const auto c3 = share(build_cubical_lattice(3, 3, 0.5, true));
  check(discretize_connection(c3, su2_polynomial(3)));
  check(discretize_connection(c3, abelian_linear(2.0, 3)));
  return {spanning && worst < 1e-9, fmt("%d fields, max |g - I| on tree = %.2e, spanning = %s", fields, worst,
                                        spanning ? "yes" : "no")};
}

// 3. Curvature of abelian_linear(B = 1) against i B on a torus.
Verdict curvature_limit() {
  const double b = 1.0;
  const auto levels = refinement_levels(build_triangulated_torus(4, 1.0), 5);
  const NodeIndex probe = node_at_position(*levels[0], point2(0.5, 0.5));
  const auto conn = abelian_linear(b);
  std::vector<double> h, err;
  for (const auto& c : levels) {
    const auto lf = discretize_connection(c, conn);
    double e = 0.0;
    for (FaceIndex f : c->faces_anchored_at(probe)) {
      // Orientation of the face from its boundary walk (shoelace).
      const auto loop = boundary_loop(*c, c->faces()[f], probe);
      Point p = Point::Zero(2);
      double twice_area = 0.0;
      for (const auto& oe : loop) {
        const Point d = oriented_displacement(*c, oe);
        twice_area += p(0) * d(1) - p(1) * d(0);
        p += d;
      }
      const std::complex<double> target(0.0, twice_area > 0 ? b : -b);
      e = std::max(e, std::abs(curvature_estimate(lf, f, probe).value(0, 0) - target));
    }
    h.push_back(c->max_edge_length());
    err.push_back(e);
  }
  const double slope = log_slope(h, err);
  const auto study = convergence_study<1>(conn, levels, probe);
  const bool ok = slope >= 0.9 && err.back() < 5e-3 && study.curvature.fit.slope >= 0.9;
  return {ok, fmt("slope %.4f (library study %.4f), finest error %.2e", slope, study.curvature.fit.slope, err.back())};
}

// 4. Connection coefficient estimate against -A(v) for constant SU(2) A.
Verdict coefficient_limit() {
  const auto basis = algebra_basis<2>();
  const AlgebraElement<2> a1 = 0.7 * basis[0], a2 = 0.3 * basis[1] - 0.4 * basis[2];
  const auto conn = constant_connection<2>({a1, a2});
  const auto levels = refinement_levels(build_triangulated_torus(4, 1.0), 5);
  const NodeIndex probe = node_at_position(*levels[0], point2(0.5, 0.5));
  const auto first = levels[0]->faces()[levels[0]->faces_anchored_at(probe).at(0)].boundary[0];
  const auto chain = initial_subedge_chain(levels, first);
  const auto est = connection_coefficient_estimate(conn, chain);
  std::vector<double> h, err;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const Point d = oriented_displacement(*chain[k].complex, chain[k].edge);
    const Point v = d / d.norm();
    const AlgebraElement<2> target = -(v(0) * a1 + v(1) * a2);
    h.push_back(d.norm());
    err.push_back((est[k] - target).norm());
  }
  const double slope = log_slope(h, err);
  const auto study = convergence_study<2>(conn, levels, probe);
  const bool ok = slope >= 0.9 && study.coefficient.fit.slope >= 0.9;
  return {ok, fmt("slope %.4f (library study %.4f), finest error %.2e", slope, study.coefficient.fit.slope, err.back())};
}

// 5. Abelian loops: line-integral quadrature against link products.
Verdict abelian_consistency() {
  const int n = 9;
  const double spacing = 1.0 / (n - 1);
  const auto c = share(build_cubical_lattice(2, n, spacing, false));
  ContinuumConnection<1> bumpy;
  bumpy.name = "bumpy";
  bumpy.coefficient = [](const Point& x, int mu) {
    AlgebraElement<1> a;
    a(0, 0) = mu == 0 ? std::complex<double>(0.0, std::sin(2.0 * x(1)) + 0.5 * x(0) * x(1))
                      : std::complex<double>(0.0, x(0) * x(0) * std::cos(x(1)) - 0.3);
    return a;
  };
  const std::vector<ContinuumConnection<1>> conns{abelian_linear(1.5), bumpy};
  std::vector<LinkField<1>> fields;
  for (const auto& conn : conns) fields.push_back(discretize_connection(c, conn));

  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> site(0, n - 1), dir(0, 3), len(3, 16);
  auto step = [&](NodeIndex at, int d, std::vector<OrientedEdge>& loop) -> std::optional<NodeIndex> {
    Point disp = Point::Zero(2);
    disp(d % 2) = d < 2 ? spacing : -spacing;
    const auto oe = c->find_edge(at, disp);
    if (!oe) return std::nullopt;
    loop.push_back(*oe);
    const Edge& e = c->edges()[oe->edge];
    return oe->forward ? e.head : e.tail;
  };
  double worst = 0.0;
  int loops = 0;
  while (loops < 50) {
    const NodeIndex start = c->lattice()->node_at.at(site(rng) + n * site(rng));
    std::vector<OrientedEdge> loop;
    NodeIndex at = start;
    for (int k = len(rng); k > 0; --k)
      if (auto next = step(at, dir(rng), loop)) at = *next;
    // Close the walk: first along axis 0, then axis 1.
    for (int axis = 0; axis < 2; ++axis)
      while (c->lattice()->coords.at(at)[axis] != c->lattice()->coords.at(start)[axis]) {
        const int d = c->lattice()->coords.at(at)[axis] < c->lattice()->coords.at(start)[axis] ? axis : axis + 2;
        at = *step(at, d, loop);
      }
    if (loop.empty()) continue;
    const auto segments = path_segments(*c, loop);
    for (std::size_t k = 0; k < conns.size(); ++k) {
      const std::complex<double> quad = std::exp(-abelian_line_integral(conns[k], segments));
      worst = std::max(worst, std::abs(abelian_loop_holonomy(fields[k], loop)(0, 0) - quad));
    }
    ++loops;
  }
  return {worst <= 1e-8, fmt("%d loops x %zu fields, max deviation %.2e", loops, conns.size(), worst)};
}

// 6. q = 2 permutation sum against the 24-term brute force.
Verdict permutation_oracle() {
  const auto c = share(build_cubical_lattice(4, 3, 1.0, true));
  std::mt19937_64 rng(66);
  std::uniform_int_distribution<std::size_t> pick(0, c->cells4().size() - 1);
  double worst = 0.0, scale = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto lf = haar_link_field<2>(c, rng);
    const Cell4& cell = c->cells4()[pick(rng)];
    const auto lib = trace_power_density(lf, cell);
    const auto ref = oracle::trace_power_q2(lf, cell.node, {0, 1, 2, 3});
    worst = std::max(worst, std::abs(lib - ref));
    scale = std::max(scale, std::abs(ref));
  }
  return {worst <= 1e-12, fmt("20 cells, max deviation %.2e (largest value %.2f)", worst, scale)};
}

// 7. Metropolis against quadrature on a single U(1) plaquette.
Verdict quantization_oracle() {
  const auto c = share(build_cubical_lattice(2, 2, 1.0, false));
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  const auto loop = c->faces()[0].boundary;
  const auto cos_phi = [loop](const LinkField<1>& lf) { return path_product(lf, loop)(0, 0).real(); };
  bool ok = true;
  std::ostringstream detail;
  for (double beta : {0.5, 1.0, 2.0}) {
    const auto q = quadrature_oracle<1>(identity_link_field<1>(c), non_tree_edges(*c), action_functional(terms), beta,
                                        cos_phi);
    const double bessel = std::cyl_bessel_i(1.0, beta) / std::cyl_bessel_i(0.0, beta);
    const bool stable = std::abs(q.value - q.coarse) <= 1e-8 && std::abs(q.value - bessel) <= 1e-8;
    int within = 0;
    for (int seed = 1; seed <= 20; ++seed) {
      ChainConfig cfg;
      cfg.beta = beta;
      cfg.proposal_step = 1.0;
      cfg.sweeps = 20000;
      cfg.burn_in = 1000;
      cfg.seed = static_cast<std::uint64_t>(seed);
      const auto r = run_chain(identity_link_field<1>(c), terms, cfg, {wilson_loop_observable<1>(loop)});
      const auto est = wilson_loop_mean(r.stats.series[0]);
      within += std::abs(est.mean.real() - q.value) <= 3.0 * est.stderr_.real();
    }
    ok = ok && stable && within >= 18;
    detail << (beta == 0.5 ? "" : "; ") << fmt("beta %.1f: %d/20 within 3se, oracle %.10f", beta, within, q.value);
  }
  return {ok, detail.str()};
}

// 8. Freezing tree links leaves invariant expectations unchanged.
Verdict gauge_fixing() {
  const auto c = share(build_cubical_lattice(2, 2, 1.0, true));
  const ActionTerms<1> terms(c, ActionForm::YM2D);
  const Observable<1> mean_plaquette = [](const LinkField<1>& lf) {
    double s = 0.0;
    for (FaceIndex f = 0; f < lf.mesh().face_count(); ++f) s += plaquette_product(lf, f)(0, 0).real();
    return std::complex<double>(s / lf.mesh().face_count());
  };
  ChainConfig cfg;
  cfg.beta = 1.0;
  cfg.proposal_step = 1.0;
  cfg.sweeps = 100000;
  cfg.burn_in = 2000;
  cfg.seed = 81;
  const auto free_run = run_chain(identity_link_field<1>(c), terms, cfg, {mean_plaquette});
  cfg.seed = 82;
  const auto frozen_run = run_chain(identity_link_field<1>(c), terms, cfg, {mean_plaquette}, tree_mask(*c));
  const auto a = wilson_loop_mean(free_run.stats.series[0]);
  const auto b = wilson_loop_mean(frozen_run.stats.series[0]);
  const double diff = std::abs(a.mean.real() - b.mean.real());
  const double bound = 3.0 * std::hypot(a.stderr_.real(), b.stderr_.real());
  return {diff <= bound, fmt("unconstrained %.5f +- %.5f, tree frozen %.5f +- %.5f, |diff| %.5f <= %.5f", a.mean.real(),
                             a.stderr_.real(), b.mean.real(), b.stderr_.real(), diff, bound)};
}

// 9. Node integration: exact area and convergence on a smooth bump.
Verdict integration() {
  const auto one = [](NodeIndex) { return std::complex<double>(1.0); };
  double area_err = 0.0;
  area_err = std::max(area_err, std::abs(integrate_nodes(build_triangulated_torus(5, 1.3), one) - 1.69));
  area_err = std::max(area_err, std::abs(integrate_nodes(build_cubical_lattice(2, 17, 1.0 / 16, false), one) - 1.0));
  area_err = std::max(area_err, std::abs(integrate_nodes(build_cubical_lattice(2, 4, 0.5, true), one) - 4.0));
  area_err = std::max(area_err, std::abs(integrate_nodes(refine(build_triangulated_torus(3, 2.0)), one) - 4.0));

  const auto bump = [](double x, double y) { return std::exp(-((x - 0.3) * (x - 0.3) + (y - 0.6) * (y - 0.6)) / 0.5); };
  const double exact = oracle::integrate_rectangle(bump, 0.0, 1.0, 0.0, 1.0);
  std::vector<double> h, err;
  for (int n = 16; n <= 256; n *= 2) {
    const Complex c = build_cubical_lattice(2, n + 1, 1.0 / n, false);
    const auto f = [&](NodeIndex i) { return std::complex<double>(bump(c.position(i)(0), c.position(i)(1))); };
    h.push_back(1.0 / n);
    err.push_back(std::abs(integrate_nodes(c, f).real() - exact));
  }
  const double slope = log_slope(h, err);
  return {area_err <= 1e-12 && slope >= 0.9, fmt("area error %.2e, bump slope %.4f", area_err, slope)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gauge invariance of YM2D and YM4D", gauge_invariance},
      {"tree gauge", tree_gauge},
      {"continuum limit of curvature", curvature_limit},
      {"connection coefficient limit", coefficient_limit},
      {"abelian loop consistency", abelian_consistency},
      {"permutation-sum oracle", permutation_oracle},
      {"quantization vs quadrature oracle", quantization_oracle},
      {"gauge-fixing of tree links", gauge_fixing},
      {"node integration", integration},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu (%s): %s  %s  [%.1f s]\n", k + 1, criteria[k].first, v.pass ? "PASS" : "FAIL",
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
