// glat: convergence, gauge invariance and Monte Carlo experiments on link
// fields.
//
//   glat converge|invariance|mc|oracle-compare --config <file> [--set key=value ...] --out <dir>
//
// Exit status: 0 when every verdict passes, 1 on a failed verdict, 2 on a
// usage or configuration error.

#include "glat/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Lattice discretisation and quantisation experiments for gauge fields"};
  app.require_subcommand(1);
  app.set_version_flag("--version", glat::kToolVersion);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  bool print_config = false;
  for (const char* kind : {"converge", "invariance", "mc", "oracle-compare"}) {
    CLI::App* sub = app.add_subcommand(kind, std::string("run the ") + kind + " experiment");
    sub->add_option("--config", config_path, "JSON configuration; defaults apply to missing keys");
    sub->add_option("--set", overrides, "override one key by dotted path, e.g. chain.beta=2")->take_all();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : glat::kExitUsage;
  }

  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    glat::Json user;
    if (!config_path.empty()) {
      try {
        user = glat::Json::parse(glat::read_file(config_path));
      } catch (const glat::Json::exception& e) {
        throw glat::ConfigError(config_path + " is not valid JSON: " + e.what());
      }
    }
    const glat::Json cfg = glat::resolve_config(kind, user, overrides);
    if (print_config) {
      std::cout << cfg.dump(2) << "\n";
      return glat::kExitPass;
    }
    const glat::ExperimentOutcome outcome = glat::run_experiment(kind, cfg, out_dir);
    std::cout << kind << ": " << outcome.summary.value("verdict", "FAIL") << " (" << out_dir << "/summary.json)\n";
    return outcome.exit_code;
  } catch (const glat::ConfigError& e) {
    std::cerr << "glat: configuration error: " << e.what() << "\n";
    return glat::kExitUsage;
  } catch (const glat::Json::exception& e) {
    std::cerr << "glat: configuration error: " << e.what() << "\n";
    return glat::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "glat: " << e.what() << "\n";
    return glat::kExitFail;
  }
}
