#pragma once

// Experiment orchestration behind the `glat` command line tool.

#include "glat/complex.hpp"
#include "glat/connection.hpp"
#include "glat/discretize.hpp"
#include "glat/io.hpp"
#include "glat/observables.hpp"
#include "glat/stats.hpp"

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace glat {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2 };

// ---------------------------------------------------------------------------
// Convergence of the local estimators

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  double curvature_error = 0.0;
  double coefficient_error = 0.0;
};

struct SlopeSummary {
  bool exact = false;  // every error is exactly zero
  std::size_t usable = 0;
  LinearFit fit;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  SlopeSummary curvature;
  SlopeSummary coefficient;
};

/// Log-log fit of error against h over the levels with a positive error.
/// Throws AccuracyError when fewer than four levels are usable.
SlopeSummary fit_convergence(const std::vector<double>& h, const std::vector<double>& error);

/// tau_0 and `levels - 1` successive refinements.
std::vector<std::shared_ptr<const Complex>> refinement_levels(Complex base, int levels);

/// Node of `c` at position `x`, or throws InvalidArgument.
NodeIndex node_at_position(const Complex& c, const Point& x);

/// Discretises `conn` on every level and measures, at the faces anchored at
/// `probe` and along the first edge of the first such face,
///  - the curvature estimate against h_p^-1 F h_p (h_p the frame at probe),
///  - the connection coefficient estimate against -A(v) for the unit
///    direction v.
/// Errors are Frobenius norms; the probe keeps its index under refinement.
template <int N>
ConvergenceReport convergence_study(const ContinuumConnection<N>& conn,
                                    const std::vector<std::shared_ptr<const Complex>>& levels, NodeIndex probe,
                                    const HolonomySettings& settings = {}) {
  if (levels.empty()) throw InvalidArgument("convergence_study: no levels");
  const auto& anchored = levels[0]->faces_anchored_at(probe);
  if (anchored.empty()) throw InvalidArgument("convergence_study: no face is anchored at the probe node");
  const EdgeChain chain = initial_subedge_chain(levels, levels[0]->faces()[anchored[0]].boundary[0]);
  const std::vector<AlgebraElement<N>> coeff = connection_coefficient_estimate(conn, chain, settings);

  ConvergenceReport report;
  std::vector<double> hs, ec, ek;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const Complex& c = *levels[k];
    const LinkField<N> lf = discretize_connection(levels[k], conn, settings);
    const GroupElement<N>& hp = lf.frames[probe];
    double err = 0.0;
    for (FaceIndex f : c.faces_anchored_at(probe)) {
      const AlgebraElement<N> target = hp.adjoint() * analytic_face_curvature(conn, c, f, probe) * hp;
      err = std::max(err, (curvature_estimate(lf, f, probe).value - target).norm());
    }
    const Point d = oriented_displacement(c, chain[k].edge);
    const AlgebraElement<N> a = -conn.contract(c.position(probe), Point(d / d.norm()));
    ConvergenceRow row{static_cast<int>(k), c.max_edge_length(), err, (coeff[k] - a).norm()};
    report.rows.push_back(row);
    hs.push_back(row.h);
    ec.push_back(row.curvature_error);
    ek.push_back(row.coefficient_error);
  }
  report.curvature = fit_convergence(hs, ec);
  report.coefficient = fit_convergence(hs, ek);
  return report;
}

// ---------------------------------------------------------------------------
// Configuration and experiments

/// Defaults for an experiment kind (converge, invariance, mc, oracle-compare).
Json default_config(const std::string& kind);

/// Sets a dotted path ("chain.beta=2"); the value is parsed as JSON when it
/// can be and kept as a string otherwise.
void apply_override(Json& cfg, const std::string& assignment);

/// Defaults, overlaid by the user document, overlaid by the overrides.
Json resolve_config(const std::string& kind, const Json& user, const std::vector<std::string>& overrides);

struct ExperimentOutcome {
  int exit_code = kExitPass;
  Json summary;
};

/// Runs a resolved configuration and writes its artifacts into `out`.
/// Configuration problems raise ConfigError.
ExperimentOutcome run_experiment(const std::string& kind, const Json& cfg, const std::filesystem::path& out);

ExperimentOutcome run_convergence(const Json& cfg, const std::filesystem::path& out);
ExperimentOutcome run_invariance(const Json& cfg, const std::filesystem::path& out);
ExperimentOutcome run_mc(const Json& cfg, const std::filesystem::path& out);
ExperimentOutcome run_oracle_compare(const Json& cfg, const std::filesystem::path& out);

}  // namespace glat
