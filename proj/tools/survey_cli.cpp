// Command-line front end: map generation, surveying experiments and a
// loopback estimator stub.

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include "survey/bridge.hpp"
#include "survey/error.hpp"
#include "survey/experiment.hpp"

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, bridge_error = 3, io_error = 4 };

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> workers;
  std::optional<std::string> bridge;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--runs", f.runs, "number of Monte Carlo runs (or maps)");
  cmd->add_option("--workers", f.workers, "parallel workers (0 = all cores)");
  cmd->add_option("--bridge-endpoint", f.bridge, "external estimator host:port");
}

survey::ExperimentSpec resolve(const CommonFlags& f) {
  survey::ExperimentSpec spec;
  if (!f.config.empty()) spec = survey::load_experiment_spec(f.config);
  if (f.seed) spec.survey.seed = *f.seed;
  if (f.out) spec.output_dir = *f.out;
  if (f.runs) spec.n_runs = *f.runs;
  if (f.workers) spec.workers = *f.workers;
  std::optional<std::string> endpoint = f.bridge;
  if (!endpoint) {
    if (const char* env = std::getenv("SURVEY_BRIDGE_ENDPOINT"); env && *env) endpoint = env;
  }
  if (endpoint) spec.survey.estimator_options.bridge_endpoint = survey::parse_endpoint(*endpoint);
  survey::validate(spec);
  return spec;
}

void report(const survey::ExperimentOutputs& out) {
  for (const auto& f : out.files) std::cout << f.string() << '\n';
  std::cout << out.manifest.string() << '\n';
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radio map surveying simulator"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("generate-maps", "write synthetic or imported maps");
  add_common(gen, gen_flags);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run-experiment", "run Monte Carlo surveying campaigns");
  add_common(run, run_flags);

  std::uint16_t stub_port = 0;
  auto* stub = app.add_subcommand("serve-stub", "serve an echo estimator over the bridge protocol");
  stub->add_option("--port", stub_port, "TCP port on 127.0.0.1 (0 = any)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::config_error;
  }

  try {
    if (*gen) {
      report(survey::generate_maps(resolve(gen_flags)));
    } else if (*run) {
      report(survey::run_experiment(resolve(run_flags)));
    } else if (*stub) {
      survey::StubEstimatorServer server(survey::echo_estimate, stub_port);
      std::cout << survey::to_string(server.endpoint()) << std::endl;
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  } catch (const survey::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return Exit::config_error;
  } catch (const survey::BridgeError& e) {
    std::cerr << "bridge error: " << e.what() << '\n';
    return Exit::bridge_error;
  } catch (const survey::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return Exit::io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Exit::failure;
  }
  return Exit::ok;
}
