#include "glat/harness.hpp"

#include "glat/gauge.hpp"
#include "glat/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <type_traits>

namespace glat {

// ---------------------------------------------------------------------------
// Convergence helpers

SlopeSummary fit_convergence(const std::vector<double>& h, const std::vector<double>& error) {
  SlopeSummary s;
  if (std::all_of(error.begin(), error.end(), [](double e) { return e == 0.0; })) {
    s.exact = true;
    return s;
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < h.size(); ++k)
    if (error[k] > 0.0 && std::isfinite(error[k]) && h[k] > 0.0) {
      lx.push_back(std::log(h[k]));
      ly.push_back(std::log(error[k]));
    }
  s.usable = lx.size();
  if (s.usable < 4)
    throw AccuracyError("fewer than 4 usable refinement levels (" + std::to_string(s.usable) + " have a positive error)");
  s.fit = fit_line(lx, ly);
  return s;
}

std::vector<std::shared_ptr<const Complex>> refinement_levels(Complex base, int levels) {
  if (levels < 1) throw InvalidArgument("refinement_levels: need at least one level");
  std::vector<std::shared_ptr<const Complex>> out;
  out.push_back(std::make_shared<const Complex>(std::move(base)));
  for (int k = 1; k < levels; ++k) out.push_back(std::make_shared<const Complex>(refine(*out.back())));
  return out;
}

NodeIndex node_at_position(const Complex& c, const Point& x) {
  if (x.size() != c.dimension()) throw InvalidArgument("probe point has the wrong dimension");
  const Point y = c.wrap(x);
  for (NodeIndex i = 0; i < c.node_count(); ++i)
    if ((c.position(i) - y).norm() <= 1e-9 * c.length_scale()) return i;
  throw InvalidArgument("no mesh node at the probe point");
}

namespace {

// ---------------------------------------------------------------------------
// Configuration access

const Json& at_path(const Json& cfg, const std::string& path) {
  const Json* node = &cfg;
  std::stringstream ss(path);
  std::string key;
  while (std::getline(ss, key, '.')) {
    if (!node->is_object() || !node->contains(key)) throw ConfigError("missing config key '" + path + "'");
    node = &(*node)[key];
  }
  return *node;
}

template <typename T>
T get(const Json& cfg, const std::string& path) {
  const Json& v = at_path(cfg, path);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!v.is_number()) throw ConfigError("");
      if constexpr (std::is_integral_v<T>)
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + path + "' has the wrong type: " + v.dump());
  }
}

int get_int_in(const Json& cfg, const std::string& path, int lo, int hi) {
  const int v = get<int>(cfg, path);
  if (v < lo || v > hi)
    throw ConfigError("config key '" + path + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "], got " + std::to_string(v));
  return v;
}

double get_positive(const Json& cfg, const std::string& path) {
  const double v = get<double>(cfg, path);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("config key '" + path + "' must be positive");
  return v;
}

void merge_into(Json& base, const Json& over) {
  if (!over.is_object()) {
    base = over;
    return;
  }
  if (!base.is_object()) base = Json::object();
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void fill_missing(Json& block, const Json& defaults) {
  for (auto it = defaults.begin(); it != defaults.end(); ++it)
    if (!block.contains(it.key())) block[it.key()] = it.value();
}

Json holonomy_defaults() {
  HolonomySettings s;
  return {{"steps_per_unit_length", s.steps_per_unit_length}, {"tolerance", s.tolerance},
          {"max_doublings", s.max_doublings}};
}

Json oracle_defaults() {
  OracleSettings s;
  return {{"u1_points", s.u1_points},   {"su2_points", s.su2_points}, {"tolerance", s.tolerance},
          {"max_doublings", s.max_doublings}, {"max_links", s.max_links}};
}

Json single_plaquette_mesh() {
  return {{"type", "lattice"}, {"dimension", 2}, {"sites", 2}, {"spacing", 1.0}, {"periodic", false}};
}

/// Per-type defaults for the mesh and connection blocks.
void normalize(Json& cfg) {
  if (cfg.contains("mesh")) {
    Json& m = cfg["mesh"];
    const std::string type = get<std::string>(cfg, "mesh.type");
    if (type == "torus") fill_missing(m, {{"subdivisions", 4}, {"side", 1.0}});
    else if (type == "lattice") fill_missing(m, {{"dimension", 2}, {"sites", 4}, {"spacing", 1.0}, {"periodic", true}});
    else if (type == "file") get<std::string>(cfg, "mesh.path");
    else throw ConfigError("mesh.type must be torus, lattice or file; got '" + type + "'");
  }
  if (cfg.contains("connection")) {
    Json& c = cfg["connection"];
    const std::string name = get<std::string>(cfg, "connection.name");
    if (name == "abelian_linear") fill_missing(c, {{"B", 1.0}});
    else if (name == "constant") get<Json>(cfg, "connection.components");
    else if (name != "zero" && name != "su2_polynomial")
      throw ConfigError("connection.name must be zero, constant, abelian_linear or su2_polynomial; got '" + name + "'");
  }
}

// ---------------------------------------------------------------------------
// Building blocks from configuration

Complex build_mesh(const Json& cfg) {
  const std::string type = get<std::string>(cfg, "mesh.type");
  if (type == "torus")
    return build_triangulated_torus(get_int_in(cfg, "mesh.subdivisions", 1, 4096), get_positive(cfg, "mesh.side"));
  if (type == "lattice")
    return build_cubical_lattice(get_int_in(cfg, "mesh.dimension", 1, 4), get_int_in(cfg, "mesh.sites", 1, 1 << 16),
                                 get_positive(cfg, "mesh.spacing"), get<bool>(cfg, "mesh.periodic"));
  const std::string path = get<std::string>(cfg, "mesh.path");
  try {
    return complex_from_json(Json::parse(read_file(path)));
  } catch (const Json::exception& e) {
    throw ConfigError("mesh file " + path + " is not valid JSON: " + e.what());
  }
}

HolonomySettings holonomy_settings(const Json& cfg) {
  HolonomySettings s;
  s.steps_per_unit_length = get_int_in(cfg, "holonomy.steps_per_unit_length", 1, 1 << 24);
  s.tolerance = get_positive(cfg, "holonomy.tolerance");
  s.max_doublings = get_int_in(cfg, "holonomy.max_doublings", 0, 40);
  return s;
}

OracleSettings oracle_settings(const Json& cfg) {
  OracleSettings s;
  s.u1_points = get_int_in(cfg, "oracle.u1_points", 2, 1 << 20);
  s.su2_points = get_int_in(cfg, "oracle.su2_points", 2, 1024);
  s.tolerance = get_positive(cfg, "oracle.tolerance");
  s.max_doublings = get_int_in(cfg, "oracle.max_doublings", 1, 10);
  s.max_links = static_cast<std::size_t>(get_int_in(cfg, "oracle.max_links", 0, 3));
  return s;
}

ActionForm action_form(const Json& cfg) {
  const std::string f = get<std::string>(cfg, "action.form");
  if (f == "ym2d") return ActionForm::YM2D;
  if (f == "ym4d") return ActionForm::YM4D;
  if (f == "trace_power") return ActionForm::TracePower;
  if (f == "abelian") return ActionForm::Abelian;
  throw ConfigError("action.form must be ym2d, ym4d, trace_power or abelian; got '" + f + "'");
}

Couplings couplings(const Json& cfg, double beta) {
  Couplings c;
  c.beta = beta;
  c.q = get_int_in(cfg, "action.q", 1, 2);
  c.imaginary = get<bool>(cfg, "action.imaginary");
  return c;
}

ChainConfig chain_config(const Json& cfg) {
  ChainConfig c;
  c.beta = get<double>(cfg, "chain.beta");
  c.proposal_step = get_positive(cfg, "chain.proposal_step");
  c.sweeps = get_int_in(cfg, "chain.sweeps", 1, 1 << 30);
  c.burn_in = get_int_in(cfg, "chain.burn_in", 0, 1 << 30);
  c.thin = get_int_in(cfg, "chain.thin", 1, 1 << 30);
  c.seed = get<std::uint64_t>(cfg, "chain.seed");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("chain: ") + e.what());
  }
  return c;
}

template <typename F>
decltype(auto) dispatch_group(const Json& cfg, F&& f) {
  const std::string g = get<std::string>(cfg, "group");
  if (g == "U1") return f(std::integral_constant<int, 1>{});
  if (g == "SU2") return f(std::integral_constant<int, 2>{});
  if (g == "SU3") return f(std::integral_constant<int, 3>{});
  throw ConfigError("group must be U1, SU2 or SU3; got '" + g + "'");
}

template <int N>
ContinuumConnection<N> make_connection(const Json& cfg, int dim) {
  const std::string name = get<std::string>(cfg, "connection.name");
  if (name == "zero") return zero_connection<N>(dim);
  if (name == "abelian_linear") {
    if constexpr (N == 1) return abelian_linear(get<double>(cfg, "connection.B"), dim);
    else throw ConfigError("connection abelian_linear needs group U1");
  }
  if (name == "su2_polynomial") {
    if constexpr (N == 2) return su2_polynomial(dim);
    else throw ConfigError("connection su2_polynomial needs group SU2");
  }
  const Json& comps = at_path(cfg, "connection.components");
  if (!comps.is_array() || comps.size() != static_cast<std::size_t>(dim))
    throw ConfigError("connection.components needs one coordinate list per axis (" + std::to_string(dim) + ")");
  std::vector<AlgebraElement<N>> a;
  for (const Json& c : comps) {
    if (!c.is_array() || c.size() != static_cast<std::size_t>(algebra_dimension<N>))
      throw ConfigError("each entry of connection.components needs " + std::to_string(algebra_dimension<N>) +
                        " algebra coordinates");
    std::vector<double> x;
    for (const Json& v : c) {
      if (!v.is_number()) throw ConfigError("connection.components must hold numbers");
      x.push_back(v.get<double>());
    }
    a.push_back(algebra_element<N, double>(std::span<const double>(x)));
  }
  return constant_connection<N>(std::move(a));
}

/// Mean over faces of Re tr(P)/N.
template <int N>
double plaquette_mean(const LinkField<N>& lf) {
  const std::size_t n = lf.mesh().face_count();
  if (n == 0) return 0.0;
  double s = 0.0;
  for (FaceIndex f = 0; f < n; ++f) s += ym2d_density(lf, f);
  return s / (static_cast<double>(N) * n);
}

template <int N>
std::function<double(const LinkField<N>&)> make_observable(const Json& cfg) {
  const std::string name = get<std::string>(cfg, "observable");
  if (name == "plaquette") return [](const LinkField<N>& lf) { return plaquette_mean(lf); };
  throw ConfigError("observable must be 'plaquette'; got '" + name + "'");
}

Json base_summary(const std::string& kind, const Json& cfg) {
  Json s;
  s["tool"] = "glat";
  s["version"] = kToolVersion;
  s["experiment"] = kind;
  s["config"] = cfg;
  return s;
}

void write_summary(const std::filesystem::path& out, const Json& summary) {
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
}

Json null_or(double x, bool valid) { return valid ? Json(x) : Json(nullptr); }

Json slope_json(const SlopeSummary& s) {
  Json j;
  j["status"] = s.exact ? "exact" : "fitted";
  j["usable_levels"] = s.usable;
  j["slope"] = null_or(s.fit.slope, !s.exact);
  j["ci95"] = s.exact ? Json(nullptr) : Json::array({s.fit.ci_low, s.fit.ci_high});
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

Json default_config(const std::string& kind) {
  Json c;
  c["experiment"] = kind;
  if (kind == "converge") {
    c["group"] = "U1";
    c["mesh"] = {{"type", "torus"}, {"subdivisions", 4}, {"side", 1.0}};
    c["connection"] = {{"name", "abelian_linear"}, {"B", 1.0}};
    c["levels"] = 5;
    c["probe"] = {0.5, 0.5};
    c["holonomy"] = holonomy_defaults();
    c["criteria"] = {{"min_slope", 0.9}, {"max_final_error", nullptr}};
  } else if (kind == "invariance") {
    c["group"] = "SU2";
    c["mesh"] = {{"type", "lattice"}, {"dimension", 4}, {"sites", 4}, {"spacing", 1.0}, {"periodic", true}};
    c["connection"] = {{"name", "zero"}};
    c["field"] = "haar";
    c["fields"] = 1;
    c["trials"] = 1000;
    c["functionals"] = {"ym2d", "ym4d", "curvature"};
    c["seed"] = 1;
    c["holonomy"] = holonomy_defaults();
    c["threshold"] = kInvarianceThreshold;
  } else if (kind == "mc") {
    c["group"] = "U1";
    c["mesh"] = single_plaquette_mesh();
    c["action"] = {{"form", "ym2d"}, {"q", 1}, {"imaginary", false}};
    c["chain"] = {{"beta", 1.0}, {"proposal_step", 1.0}, {"sweeps", 20000}, {"burn_in", 1000}, {"thin", 1}, {"seed", 1}};
    c["chains"] = 20;
    c["start"] = "cold";
    c["observable"] = "plaquette";
    c["oracle"] = oracle_defaults();
    c["criteria"] = {{"sigma", 3.0}, {"min_pass_fraction", 0.9}};
    c["gauge_fixing_check"] = false;
    c["lebesgue"] = {{"samples", 20000}, {"radius", std::numbers::pi}, {"seed", 7}};
  } else if (kind == "oracle-compare") {
    c["group"] = "U1";
    c["mesh"] = single_plaquette_mesh();
    c["action"] = {{"form", "ym2d"}, {"q", 1}, {"imaginary", false}};
    c["beta"] = 1.0;
    c["observable"] = "plaquette";
    c["oracle"] = oracle_defaults();
    c["tolerance"] = 1e-7;
  } else {
    throw ConfigError("unknown experiment '" + kind + "'; use converge, invariance, mc or oracle-compare");
  }
  return c;
}

void apply_override(Json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::exception&) {
    value = text;
  }
  Json* node = &cfg;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) {
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    keys.push_back(key);
  }
  for (std::size_t k = 0; k + 1 < keys.size(); ++k) {
    if (!node->is_object()) throw ConfigError("override '" + assignment + "' descends into a non-object");
    node = &(*node)[keys[k]];
    if (node->is_null()) *node = Json::object();
  }
  if (!node->is_object()) throw ConfigError("override '" + assignment + "' descends into a non-object");
  (*node)[keys.back()] = std::move(value);
}

Json resolve_config(const std::string& kind, const Json& user, const std::vector<std::string>& overrides) {
  Json cfg = default_config(kind);
  if (!user.is_null()) {
    if (!user.is_object()) throw ConfigError("config document must be a JSON object");
    if (user.contains("experiment") && user["experiment"] != kind)
      throw ConfigError("config is for experiment " + user["experiment"].dump() + ", not '" + kind + "'");
    // A mesh or connection block names its type; a new type replaces the
    // defaults of the old one instead of mixing keys.
    Json u = user;
    for (const char* block : {"mesh", "connection"})
      if (u.contains(block) && cfg.contains(block) && u[block].is_object()) {
        const char* tag = std::string(block) == "mesh" ? "type" : "name";
        if (u[block].contains(tag) && u[block][tag] != cfg[block][tag]) cfg[block] = Json::object();
      }
    merge_into(cfg, u);
  }
  for (const std::string& o : overrides) apply_override(cfg, o);
  normalize(cfg);
  return cfg;
}

ExperimentOutcome run_experiment(const std::string& kind, const Json& cfg, const std::filesystem::path& out) {
  if (kind == "converge") return run_convergence(cfg, out);
  if (kind == "invariance") return run_invariance(cfg, out);
  if (kind == "mc") return run_mc(cfg, out);
  if (kind == "oracle-compare") return run_oracle_compare(cfg, out);
  throw ConfigError("unknown experiment '" + kind + "'");
}

// ---------------------------------------------------------------------------
// converge

ExperimentOutcome run_convergence(const Json& cfg, const std::filesystem::path& out) {
  ExperimentOutcome res;
  res.summary = base_summary("converge", cfg);
  Complex base = build_mesh(cfg);
  const int levels = get_int_in(cfg, "levels", 4, 12);
  const Json& probe_json = at_path(cfg, "probe");
  if (!probe_json.is_array() || probe_json.size() != static_cast<std::size_t>(base.dimension()))
    throw ConfigError("probe must list " + std::to_string(base.dimension()) + " coordinates");
  Point probe_x(base.dimension());
  for (int k = 0; k < base.dimension(); ++k) probe_x(k) = probe_json[k].get<double>();
  NodeIndex probe = 0;
  try {
    probe = node_at_position(base, probe_x);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("probe: ") + e.what());
  }
  const HolonomySettings hs = holonomy_settings(cfg);
  const double min_slope = get<double>(cfg, "criteria.min_slope");
  const Json& max_final = at_path(cfg, "criteria.max_final_error");
  const int dim = base.dimension();
  const auto meshes = refinement_levels(std::move(base), levels);

  ConvergenceReport report;
  try {
    report = dispatch_group(cfg, [&](auto tag) {
      constexpr int N = decltype(tag)::value;
      return convergence_study<N>(make_connection<N>(cfg, dim), meshes, probe, hs);
    });
  } catch (const AccuracyError& e) {
    res.summary["error"] = e.what();
    res.summary["verdict"] = "FAIL";
    res.exit_code = kExitFail;
    write_summary(out, res.summary);
    return res;
  }

  std::string csv = "level,h,curvature_error,coefficient_error\n";
  std::string curv = "# h curvature_error\n", coef = "# h coefficient_error\n";
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    csv += std::to_string(r.level) + "," + format_number(r.h) + "," + format_number(r.curvature_error) + "," +
           format_number(r.coefficient_error) + "\n";
    curv += format_number(r.h) + " " + format_number(r.curvature_error) + "\n";
    coef += format_number(r.h) + " " + format_number(r.coefficient_error) + "\n";
    rows.push_back({{"level", r.level}, {"h", r.h}, {"curvature_error", r.curvature_error},
                    {"coefficient_error", r.coefficient_error}});
  }
  write_file_atomic(out / "convergence.csv", csv);
  write_file_atomic(out / "curvature.dat", curv);
  write_file_atomic(out / "coefficient.dat", coef);

  auto ok = [&](const SlopeSummary& s) { return s.exact || s.fit.slope >= min_slope; };
  bool pass = ok(report.curvature) && ok(report.coefficient);
  if (!max_final.is_null()) {
    if (!max_final.is_number()) throw ConfigError("criteria.max_final_error must be a number or null");
    pass = pass && report.rows.back().curvature_error < max_final.get<double>();
  }
  res.summary["mesh_hash"] = complex_content_hash(*meshes.front());
  res.summary["rows"] = rows;
  res.summary["curvature"] = slope_json(report.curvature);
  res.summary["coefficient"] = slope_json(report.coefficient);
  res.summary["verdict"] = pass ? "PASS" : "FAIL";
  res.exit_code = pass ? kExitPass : kExitFail;
  write_summary(out, res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// invariance

ExperimentOutcome run_invariance(const Json& cfg, const std::filesystem::path& out) {
  ExperimentOutcome res;
  res.summary = base_summary("invariance", cfg);
  auto mesh = std::make_shared<const Complex>(build_mesh(cfg));
  const int fields = get_int_in(cfg, "fields", 1, 1 << 20);
  const int trials = get_int_in(cfg, "trials", 1, 1 << 24);
  const std::uint64_t seed = get<std::uint64_t>(cfg, "seed");
  const std::string field = get<std::string>(cfg, "field");
  if (field != "haar" && field != "connection") throw ConfigError("field must be 'haar' or 'connection'");
  const double threshold = get_positive(cfg, "threshold");
  const Json& names = at_path(cfg, "functionals");
  if (!names.is_array() || names.empty()) throw ConfigError("functionals must be a non-empty list");

  const InvarianceReport merged = dispatch_group(cfg, [&](auto tag) {
    constexpr int N = decltype(tag)::value;
    std::vector<GaugeFunctional<N>> fs;
    for (const Json& n : names) {
      const std::string name = n.is_string() ? n.get<std::string>() : n.dump();
      if (name == "ym2d") fs.push_back(ym2d_functional<N>());
      else if (name == "ym4d" || name == "trace_power_q2") {
        if (mesh->cells4().empty()) throw ConfigError("functional " + name + " needs a 4D lattice");
        fs.push_back(name == "ym4d" ? ym4d_functional<N>() : trace_power_functional<N>(2));
      } else if (name == "trace_power_q1") fs.push_back(trace_power_functional<N>(1));
      else if (name == "curvature") fs.push_back(curvature_functional<N>());
      else throw ConfigError("unknown functional '" + name + "'");
    }
    std::optional<ContinuumConnection<N>> conn;
    if (field == "connection") conn = make_connection<N>(cfg, mesh->dimension());
    const HolonomySettings hs = holonomy_settings(cfg);
    InvarianceReport total;
    for (int f = 0; f < fields; ++f) {
      std::mt19937_64 rng(seed + static_cast<std::uint64_t>(f));
      const LinkField<N> lf = conn ? discretize_connection(mesh, *conn, hs) : haar_link_field<N>(mesh, rng);
      InvarianceReport r = invariance_report(lf, fs, trials, rng);
      if (total.entries.empty()) total = r;
      else
        for (std::size_t k = 0; k < r.entries.size(); ++k)
          total.entries[k].max_deviation = std::max(total.entries[k].max_deviation, r.entries[k].max_deviation);
    }
    return total;
  });

  Json entries = Json::array();
  bool pass = true;
  for (const auto& e : merged.entries) {
    const bool ok = e.max_deviation <= threshold;
    pass = pass && ok;
    entries.push_back({{"name", e.name},
                       {"kind", e.covariant ? "covariant" : "invariant"},
                       {"fields", fields},
                       {"trials", e.trials},
                       {"max_deviation", e.max_deviation},
                       {"verdict", ok ? "PASS" : "FAIL"}});
  }
  res.summary["mesh_hash"] = complex_content_hash(*mesh);
  res.summary["functionals"] = entries;
  res.summary["verdict"] = pass ? "PASS" : "FAIL";
  res.exit_code = pass ? kExitPass : kExitFail;
  write_summary(out, res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// mc

namespace {

struct Pooled {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Pooled pool(const std::vector<LoopEstimate>& es) {
  Pooled p;
  if (es.empty()) return p;
  double var = 0.0;
  for (const auto& e : es) {
    p.mean += e.mean.real();
    var += e.stderr_.real() * e.stderr_.real();
  }
  p.mean /= static_cast<double>(es.size());
  p.stderr_ = std::sqrt(var) / static_cast<double>(es.size());
  return p;
}

/// Expectation under exp(-beta S) of links drawn as exp(X), X uniform in the
/// coordinate box of half-width `radius` (the Lebesgue push-forward).
template <int N>
double lebesgue_estimate(const LinkField<N>& base, const std::function<double(const LinkField<N>&)>& action,
                         double beta, const std::function<double(const LinkField<N>&)>& observable, int samples,
                         double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LinkField<N> lf = base;
  double shift = -std::numeric_limits<double>::infinity(), z = 0.0, zo = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (auto& g : lf.links) g = near_identity_sample<N>(radius, rng);
    const double e = -beta * action(lf);
    if (e > shift) {
      const double scale = std::exp(shift - e);
      z *= scale;
      zo *= scale;
      shift = e;
    }
    const double w = std::exp(e - shift);
    z += w;
    zo += w * observable(lf);
  }
  return zo / z;
}

}  // namespace

ExperimentOutcome run_mc(const Json& cfg, const std::filesystem::path& out) {
  ExperimentOutcome res;
  res.summary = base_summary("mc", cfg);
  auto mesh = std::make_shared<const Complex>(build_mesh(cfg));
  const ChainConfig chain = chain_config(cfg);
  const int chains = get_int_in(cfg, "chains", 1, 1 << 16);
  const std::string start = get<std::string>(cfg, "start");
  if (start != "cold" && start != "hot") throw ConfigError("start must be 'cold' or 'hot'");
  const double sigma = get_positive(cfg, "criteria.sigma");
  const double min_fraction = get<double>(cfg, "criteria.min_pass_fraction");
  const bool gauge_check = get<bool>(cfg, "gauge_fixing_check");
  const int leb_samples = get_int_in(cfg, "lebesgue.samples", 0, 1 << 30);
  const double leb_radius = get_positive(cfg, "lebesgue.radius");
  const std::uint64_t leb_seed = get<std::uint64_t>(cfg, "lebesgue.seed");
  const OracleSettings os = oracle_settings(cfg);
  const ActionForm form = action_form(cfg);
  const Couplings cp = couplings(cfg, chain.beta);
  if (cp.imaginary) throw ConfigError("mc needs action.imaginary = false");

  bool pass = true;
  dispatch_group(cfg, [&](auto tag) {
    constexpr int N = decltype(tag)::value;
    std::unique_ptr<ActionTerms<N>> terms;
    try {
      terms = std::make_unique<ActionTerms<N>>(mesh, form, cp);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("action: ") + e.what());
    }
    const auto obs = make_observable<N>(cfg);
    const std::vector<Observable<N>> observables{[&](const LinkField<N>& lf) { return std::complex<double>(obs(lf)); }};
    const std::vector<bool> frozen = tree_mask(*mesh);

    auto initial = [&](std::uint64_t seed) {
      if (start == "cold") return identity_link_field<N>(mesh);
      std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
      return haar_link_field<N>(mesh, rng);
    };

    std::vector<LoopEstimate> free_est, frozen_est;
    std::string csv = "sweep,observable,acceptance\n";
    for (int k = 0; k < chains; ++k) {
      ChainConfig c = chain;
      c.seed = chain.seed + static_cast<std::uint64_t>(k);
      const ChainResult<N> r = run_chain(initial(c.seed), *terms, c, observables);
      free_est.push_back(wilson_loop_mean(r.stats.series[0]));
      if (k == 0)
        for (std::size_t i = 0; i < r.stats.sweep.size(); ++i)
          csv += std::to_string(r.stats.sweep[i]) + "," + format_number(r.stats.series[0][i].real()) + "," +
                 format_number(r.stats.sweep_acceptance[i]) + "\n";
      if (gauge_check) {
        LinkField<N> s0 = initial(c.seed);
        for (EdgeIndex e = 0; e < frozen.size(); ++e)
          if (frozen[e]) s0.links[e] = GroupElement<N>::Identity();
        const ChainResult<N> z = run_chain(std::move(s0), *terms, c, observables, frozen);
        frozen_est.push_back(wilson_loop_mean(z.stats.series[0]));
      }
    }
    write_file_atomic(out / "chain0.csv", csv);

    Json per_chain = Json::array();
    std::optional<OracleResult> oracle;
    if constexpr (N <= 2) {
      const std::vector<EdgeIndex> free_edges = non_tree_edges(*mesh);
      if (free_edges.size() <= os.max_links)
        oracle = quadrature_oracle(identity_link_field<N>(mesh), free_edges, action_functional(*terms), chain.beta,
                                   obs, os);
    }
    int within = 0;
    for (int k = 0; k < chains; ++k) {
      const auto& e = free_est[k];
      Json row = {{"seed", chain.seed + static_cast<std::uint64_t>(k)},
                  {"mean", e.mean.real()},
                  {"stderr", e.stderr_.real()},
                  {"autocorrelation_time", e.autocorrelation_time}};
      if (oracle) {
        const bool ok = std::abs(e.mean.real() - oracle->value) <= sigma * e.stderr_.real();
        within += ok;
        row["within"] = ok;
      }
      per_chain.push_back(row);
    }
    res.summary["chains"] = per_chain;
    const Pooled haar = pool(free_est);
    res.summary["haar_mean"] = {{"mean", haar.mean}, {"stderr", haar.stderr_}};
    if (oracle) {
      const double fraction = static_cast<double>(within) / chains;
      const bool ok = fraction >= min_fraction;
      pass = pass && ok;
      res.summary["oracle"] = {{"value", oracle->value},
                               {"half_resolution_value", oracle->coarse},
                               {"resolution", oracle->resolution},
                               {"free_links", oracle->free_links},
                               {"chains_within", within},
                               {"verdict", ok ? "PASS" : "FAIL"}};
    } else {
      res.summary["oracle"] = nullptr;
    }
    if (gauge_check) {
      const Pooled fz = pool(frozen_est);
      const double bound = sigma * std::hypot(haar.stderr_, fz.stderr_);
      const bool ok = std::abs(haar.mean - fz.mean) <= bound;
      pass = pass && ok;
      res.summary["gauge_fixing"] = {{"unconstrained", haar.mean}, {"tree_frozen", fz.mean}, {"bound", bound},
                                     {"verdict", ok ? "PASS" : "FAIL"}};
    }
    if (leb_samples > 0)
      res.summary["lebesgue_mean"] = lebesgue_estimate<N>(identity_link_field<N>(mesh), action_functional(*terms),
                                                          chain.beta, obs, leb_samples, leb_radius, leb_seed);
    return 0;
  });

  Json manifest = {{"tool", "glat"},
                   {"version", kToolVersion},
                   {"config", cfg},
                   {"seed", chain.seed},
                   {"mesh_hash", complex_content_hash(*mesh)}};
  write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  res.summary["mesh_hash"] = complex_content_hash(*mesh);
  res.summary["verdict"] = pass ? "PASS" : "FAIL";
  res.exit_code = pass ? kExitPass : kExitFail;
  write_summary(out, res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// oracle-compare

ExperimentOutcome run_oracle_compare(const Json& cfg, const std::filesystem::path& out) {
  ExperimentOutcome res;
  res.summary = base_summary("oracle-compare", cfg);
  auto mesh = std::make_shared<const Complex>(build_mesh(cfg));
  const double beta = get<double>(cfg, "beta");
  const double tol = get_positive(cfg, "tolerance");
  const OracleSettings os = oracle_settings(cfg);
  const ActionForm form = action_form(cfg);
  const Couplings cp = couplings(cfg, beta);

  bool pass = true;
  dispatch_group(cfg, [&](auto tag) {
    constexpr int N = decltype(tag)::value;
    if constexpr (N > 2) {
      throw ConfigError("the quadrature oracle supports U1 and SU2 only");
    } else {
      std::unique_ptr<ActionTerms<N>> terms;
      try {
        terms = std::make_unique<ActionTerms<N>>(mesh, form, cp);
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("action: ") + e.what());
      }
      const auto obs = make_observable<N>(cfg);
      const auto action = action_functional(*terms);
      const LinkField<N> base = identity_link_field<N>(mesh);
      const std::vector<EdgeIndex> reduced_edges = non_tree_edges(*mesh);
      if (reduced_edges.size() > os.max_links)
        throw ConfigError("mesh has " + std::to_string(reduced_edges.size()) +
                          " free links after tree reduction; the oracle handles at most " +
                          std::to_string(os.max_links));
      const OracleResult reduced = quadrature_oracle(base, reduced_edges, action, beta, obs, os);
      res.summary["tree_reduced"] = {{"value", reduced.value}, {"half_resolution_value", reduced.coarse},
                                     {"free_links", reduced.free_links}};
      std::vector<EdgeIndex> all(mesh->edge_count());
      std::iota(all.begin(), all.end(), EdgeIndex{0});
      if (all.size() <= os.max_links) {
        const OracleResult full = quadrature_oracle(base, all, action, beta, obs, os);
        const bool ok = std::abs(full.value - reduced.value) <= tol;
        pass = pass && ok;
        res.summary["unreduced"] = {{"value", full.value}, {"free_links", full.free_links}};
        res.summary["difference"] = std::abs(full.value - reduced.value);
      } else {
        res.summary["unreduced"] = nullptr;
        res.summary["note"] = "unreduced quadrature skipped: more links than the oracle limit";
      }
    }
    return 0;
  });
  res.summary["mesh_hash"] = complex_content_hash(*mesh);
  res.summary["verdict"] = pass ? "PASS" : "FAIL";
  res.exit_code = pass ? kExitPass : kExitFail;
  write_summary(out, res.summary);
  return res;
}

}  // namespace glat
