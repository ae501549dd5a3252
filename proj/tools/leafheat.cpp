#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "leafheat/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace leafheat;
  CLI::App app{"Leafwise Dirichlet forms and heat semigroups on hyperbolic attractors"};
  app.set_version_flag("--version", std::string(LEAFHEAT_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string cache_dir;
  unsigned threads = 0;
  std::string out;
  int n = 0;

  for (const std::string& name : experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--cache-dir", cache_dir, "SRB table cache directory (empty disables)");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_option("--out", out, "Output CSV path (default: stdout)");
    if (name == "quasi-invariance" || name == "srb-estimate") {
      sub->add_option("--n", n, "Power of f, or SRB product order")->check(CLI::NonNegativeNumber);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string experiment = sub->get_name();
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
    nlohmann::json raw;
    try {
      raw = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Overrides o;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--cache-dir")) o.cache_dir = cache_dir;
    if (sub->count("--threads")) o.threads = threads;
    if (sub->count("--out")) o.out = out;
    if (sub->get_option_no_throw("--n") && sub->count("--n")) o.n = n;
    apply_overrides(raw, o, experiment);
    const ExperimentConfig cfg = parse_config(raw, experiment);
    const RunOutput r = run(cfg);
    if (cfg.output.empty()) std::cout << r.csv;
    std::cerr << "leafheat: " << experiment << " done"
              << (r.cache_hit ? " (SRB table from cache)" : "") << '\n';
    return 0;
  } catch (const InvalidArgument& e) {
    std::cerr << "leafheat: invalid config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "leafheat: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "leafheat: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
