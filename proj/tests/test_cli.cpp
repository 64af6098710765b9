#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "survey/bridge.hpp"
#include "survey/map_io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("survey_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SURVEY_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> column(const fs::path& csv, std::size_t index) {
  std::vector<std::string> out;
  const auto rows = lines(slurp(csv));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::istringstream in(rows[r]);
    std::string cell;
    for (std::size_t c = 0; c <= index; ++c) std::getline(in, cell, ',');
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TEST_CASE("generate-maps writes reproducible 32x32 maps") {
  const fs::path dir = scratch("generate");
  CHECK(cli("generate-maps --runs 2 --seed 5 --out " + (dir / "a").string(), dir / "log") == 0);
  CHECK(cli("generate-maps --runs 2 --seed 5 --out " + (dir / "b").string(), dir / "log") == 0);
  CHECK(cli("generate-maps --runs 2 --seed 6 --out " + (dir / "c").string(), dir / "log") == 0);
  const auto a = dir / "a" / "experiment_map_000.txt";
  REQUIRE(fs::exists(a));
  const survey::RadioMap m = survey::load_map(a);
  CHECK(m.grid.rows() == 32);
  CHECK(m.grid.cols() == 32);
  CHECK(m.num_transmitters() == 2);
  CHECK(slurp(a) == slurp(dir / "b" / "experiment_map_000.txt"));
  CHECK(slurp(dir / "a" / "experiment_map_001.txt") == slurp(dir / "b" / "experiment_map_001.txt"));
  CHECK(slurp(a) != slurp(dir / "c" / "experiment_map_000.txt"));
  CHECK(fs::exists(dir / "a" / "experiment_manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");

  SUBCASE("missing imported maps is an I/O error") {
    const auto cfg = write_config(dir, {{"dataset", "imported"}, {"imported_maps", {"/nonexistent/maps"}}});
    CHECK(cli("generate-maps --config " + cfg.string() + " --out " + dir.string(), dir / "log") == 4);
    CHECK(slurp(dir / "log").find("/nonexistent/maps") != std::string::npos);
  }
  SUBCASE("missing config file is an I/O error") {
    CHECK(cli("run-experiment --config /nonexistent/config.json", dir / "log") == 4);
  }
  SUBCASE("bad configs are config errors") {
    auto cfg = write_config(dir, {{"planners", {"zigzag"}}});
    CHECK(cli("run-experiment --config " + cfg.string(), dir / "log") == 2);
    cfg = write_config(dir, {{"estimators", {"knn"}}, {"planners", {"min_cost"}}});
    CHECK(cli("run-experiment --config " + cfg.string(), dir / "log") == 2);
    CHECK(cli("run-experiment --runs many", dir / "log") == 2);
    CHECK(cli("no-such-command", dir / "log") == 2);
    CHECK(cli("run-experiment --bridge-endpoint nowhere", dir / "log") == 2);
  }
  SUBCASE("unreachable bridge is a bridge error") {
    std::uint16_t port = 0;
    {
      survey::StubEstimatorServer probe(survey::echo_estimate);
      port = probe.endpoint().port;
    }
    const auto cfg = write_config(dir, {{"estimators", {"bridge"}},
                                        {"planners", {"grid"}},
                                        {"max_measurements", 5},
                                        {"output_dir", dir.string()}});
    CHECK(cli("run-experiment --config " + cfg.string() + " --bridge-endpoint 127.0.0.1:" +
                  std::to_string(port),
              dir / "log") == 3);
  }
  SUBCASE("bridge endpoint from the environment") {
    survey::StubEstimatorServer server(survey::echo_estimate);
    const auto cfg = write_config(dir, {{"estimators", {"bridge"}},
                                        {"planners", {"grid"}},
                                        {"max_measurements", 5},
                                        {"output_dir", dir.string()}});
    const std::string env = "SURVEY_BRIDGE_ENDPOINT=" + survey::to_string(server.endpoint()) + " ";
    const int status = std::system((env + SURVEY_CLI_PATH + " run-experiment --config " + cfg.string() +
                                    " > " + (dir / "log").string() + " 2>&1")
                                       .c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(server.requests_served() == 5);
  }
  fs::remove_all(dir);
}

TEST_CASE("run-experiment fans out over planners") {
  const fs::path dir = scratch("planners");
  const auto cfg = write_config(dir, {{"name", "cmp"},
                                      {"planners", {"min_cost", "grid", "spiral", "uniform"}},
                                      {"max_measurements", 30},
                                      {"scenario", {{"rows", 16}, {"cols", 16}}}});
  CHECK(cli("run-experiment --config " + cfg.string() + " --runs 1 --out " + dir.string(), dir / "log") == 0);
  std::size_t aggregates = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().string().ends_with("_aggregate.csv")) {
      ++aggregates;
      CHECK(lines(slurp(e.path())).front() == "t,mean_rmse,std_rmse,mean_U,std_U");
      for (const auto& v : column(e.path(), 2)) CHECK(v == "0");
      for (const auto& v : column(e.path(), 4)) CHECK(v == "0");
    }
  }
  CHECK(aggregates == 4);
  const auto printed = lines(slurp(dir / "log"));
  CHECK(printed.size() == 9);
  fs::remove_all(dir);
}

TEST_CASE("beta sweep and manifest rerun") {
  const fs::path dir = scratch("sweep");
  const auto cfg = write_config(dir, {{"name", "beta"},
                                      {"n_runs", 2},
                                      {"max_measurements", 20},
                                      {"scenario", {{"rows", 12}, {"cols", 12}}},
                                      {"sweep", {{"parameter", "beta"}, {"values", {0, 0.25, 0.5, 0.75, 1}}}}});
  CHECK(cli("run-experiment --config " + cfg.string() + " --seed 3 --out " + (dir / "a").string(), dir / "log") ==
        0);
  std::vector<fs::path> aggregates;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().string().ends_with("_aggregate.csv")) aggregates.push_back(e.path());
  }
  CHECK(aggregates.size() == 5);
  CHECK(fs::exists(dir / "a" / "beta__online_bayes__min_cost__beta=0.75_aggregate.csv"));

  const fs::path manifest = dir / "a" / "beta_manifest.json";
  REQUIRE(fs::exists(manifest));
  CHECK(json::parse(slurp(manifest))["seed"] == 3);
  CHECK(cli("run-experiment --config " + manifest.string() + " --out " + (dir / "b").string(), dir / "log") == 0);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().extension() != ".csv") continue;
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    ++compared;
  }
  CHECK(compared == 10);
  fs::remove_all(dir);
}
