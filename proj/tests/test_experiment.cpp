#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "survey/error.hpp"
#include "survey/experiment.hpp"
#include "survey/map_io.hpp"

using namespace survey;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("survey_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json small(const fs::path& out) {
  return json{{"name", "t"},
              {"n_runs", 2},
              {"workers", 1},
              {"max_measurements", 8},
              {"output_dir", out.string()},
              {"scenario", {{"rows", 8}, {"cols", 8}}}};
}

}  // namespace

TEST_CASE("spec defaults") {
  const ExperimentSpec s = parse_experiment_spec(json::object());
  CHECK(s.name == "experiment");
  CHECK(s.dataset == "gudmundson");
  CHECK(s.scenario.rows == 32);
  CHECK(s.scenario.num_transmitters == 2);
  CHECK(s.survey.planner_config.beta == 0.75);
  CHECK(s.survey.planner_config.n_update == 7);
  CHECK(s.survey.planner_config.measurement_spacing_m == 7.0);
  CHECK(s.survey.model_params.shadow_var == 10.0);
  CHECK(s.survey.max_measurements == 100);
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("spec round trip through json") {
  const json j = {{"name", "fig9"},
                  {"estimators", {"online_bayes", "batch"}},
                  {"planners", {"min_cost", "spiral"}},
                  {"n_runs", 12},
                  {"seed", 123456789012345ULL},
                  {"bridge_endpoint", "localhost:6000"},
                  {"bridge_timeout_s", 2.5},
                  {"scenario", {{"rows", 20}, {"buildings", {3, 4}}}},
                  {"model", {{"noise_var", 0.25}, {"shadow_corr_dist_m", 30.0}}},
                  {"planner", {{"h", "exponential"}, {"solver", "bellman_ford"}, {"alpha", 0.5}}},
                  {"survey", {{"on_grid", true}, {"start_index", 7}, {"interpolation", "bilinear"}}},
                  {"sweep", {{"parameter", "beta"}, {"values", {0, 0.5, 1}}}}};
  const ExperimentSpec s = parse_experiment_spec(j);
  CHECK(s.name == "fig9");
  CHECK(s.estimators == std::vector<EstimatorKind>{EstimatorKind::online_bayes, EstimatorKind::batch});
  CHECK(s.planners == std::vector<PlannerKind>{PlannerKind::min_cost, PlannerKind::spiral});
  CHECK(s.survey.seed == 123456789012345ULL);
  CHECK(s.survey.estimator_options.bridge_endpoint->port == 6000);
  CHECK(s.survey.estimator_options.bridge_timeout == std::chrono::milliseconds(2500));
  CHECK(s.scenario.buildings == std::vector<std::size_t>{3, 4});
  CHECK(s.survey.model_params.noise_var == 0.25);
  CHECK(s.survey.planner_config.h == CostShape::exponential);
  CHECK(s.survey.planner_config.solver == PathSolver::bellman_ford);
  CHECK(s.survey.start_index == 7u);
  CHECK(s.survey.interpolation == Interpolation::bilinear);
  REQUIRE(s.sweep);
  CHECK(s.sweep->values.size() == 3);

  const json once = to_json(s);
  const json twice = to_json(parse_experiment_spec(once));
  CHECK(once == twice);
  CHECK(to_json(parse_experiment_spec(json::object())) ==
        to_json(parse_experiment_spec(to_json(parse_experiment_spec(json::object())))));
}

TEST_CASE("spec errors") {
  CHECK_THROWS_WITH_AS(parse_experiment_spec(json{{"n_rnus", 3}}), doctest::Contains("n_rnus"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(json{{"planner", {{"gamma", 1}}}}), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(json{{"n_runs", "many"}}), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(json{{"planners", {"zigzag"}}}), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(json{{"kind", "training"}}), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(json{{"bridge_endpoint", "nowhere"}}), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(json::array()), ConfigError);

  ExperimentSpec s = parse_experiment_spec(json{{"estimators", {"bridge"}}, {"planners", {"grid"}}});
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("bridge"), ConfigError);
  s = parse_experiment_spec(json{{"estimators", {"knn"}}});
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = parse_experiment_spec(json{{"sweep", {{"parameter", "seed"}, {"values", {1}}}}});
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = parse_experiment_spec(json{{"sweep", {{"parameter", "beta"}, {"values", {2.0}}}}});
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = parse_experiment_spec(json{{"dataset", "imported"}});
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = parse_experiment_spec(json{{"n_runs", 0}});
  CHECK_THROWS_AS(validate(s), ConfigError);

  CHECK_THROWS_AS(load_experiment_spec("/nonexistent/config.json"), IoError);
  const fs::path dir = scratch("errors");
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_experiment_spec(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("survey experiment output files") {
  const fs::path dir = scratch("survey");
  json j = small(dir);
  j["planners"] = {"min_cost", "grid"};
  j["sweep"] = {{"parameter", "beta"}, {"values", {0, 0.5}}};
  const ExperimentOutputs out = run_experiment(parse_experiment_spec(j));
  std::vector<std::string> names;
  for (const auto& f : out.files) {
    CHECK(fs::exists(f));
    names.push_back(f.filename().string());
  }
  CHECK(names == std::vector<std::string>{
                     "t__online_bayes__min_cost__beta=0_runs.csv",
                     "t__online_bayes__min_cost__beta=0_aggregate.csv",
                     "t__online_bayes__min_cost__beta=0.5_runs.csv",
                     "t__online_bayes__min_cost__beta=0.5_aggregate.csv",
                     "t__online_bayes__grid__beta=0_runs.csv",
                     "t__online_bayes__grid__beta=0_aggregate.csv",
                     "t__online_bayes__grid__beta=0.5_runs.csv",
                     "t__online_bayes__grid__beta=0.5_aggregate.csv",
                 });
  CHECK(out.manifest == dir / "t_manifest.json");
  const json manifest = json::parse(slurp(out.manifest));
  CHECK(manifest["command"] == "run-experiment");
  CHECK(manifest["outputs"].size() == 8);

  // Re-running from the manifest reproduces every file byte for byte.
  std::vector<std::string> before;
  for (const auto& f : out.files) before.push_back(slurp(f));
  const ExperimentOutputs again = run_experiment(parse_experiment_spec(manifest));
  REQUIRE(again.files.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(slurp(again.files[i]) == before[i]);
  fs::remove_all(dir);
}

TEST_CASE("reconstruction experiment output") {
  const fs::path dir = scratch("reconstruction");
  json j = small(dir);
  j["kind"] = "reconstruction";
  j["estimators"] = {"batch", "knn"};
  j["checkpoints"] = {0, 4, 8};
  const ExperimentOutputs out = run_experiment(parse_experiment_spec(j));
  REQUIRE(out.files.size() == 1);
  CHECK(out.files[0].filename() == "t_reconstruction.csv");
  std::istringstream lines(slurp(out.files[0]));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 7);
  fs::remove_all(dir);
}

TEST_CASE("map generation and import") {
  const fs::path dir = scratch("maps");
  json j = small(dir);
  j["n_runs"] = 3;
  const ExperimentSpec spec = parse_experiment_spec(j);
  const ExperimentOutputs out = generate_maps(spec);
  REQUIRE(out.files.size() == 3);
  CHECK(out.files[1].filename() == "t_map_001.txt");
  const RadioMap m = load_map(out.files[0]);
  CHECK(m.grid.rows() == 8);
  CHECK(m.num_transmitters() == 2);
  CHECK(slurp(generate_maps(spec).files[2]) == slurp(out.files[2]));
  CHECK(slurp(out.files[0]) != slurp(out.files[1]));

  json imp = small(dir / "run");
  imp["dataset"] = "imported";
  imp["imported_maps"] = {dir.string()};
  imp["planners"] = {"spiral"};
  const ExperimentSpec ispec = parse_experiment_spec(imp);
  CHECK(load_imported_maps(ispec).size() == 3);
  CHECK_NOTHROW(run_experiment(ispec));

  imp["imported_maps"] = {(dir / "missing").string()};
  CHECK_THROWS_AS(run_experiment(parse_experiment_spec(imp)), IoError);
  fs::remove_all(dir);
}
