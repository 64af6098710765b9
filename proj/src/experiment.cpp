#include "survey/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "survey/error.hpp"
#include "survey/map_io.hpp"

namespace survey {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }

  void ignore(const char* key) { seen_.insert(key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + where_ + "." + item.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename T, typename Parse>
std::vector<T> parse_names(Section& s, const char* key, std::vector<T> fallback, Parse parse) {
  std::vector<std::string> names;
  s.get(key, names);
  if (names.empty()) return fallback;
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

std::string interpolation_name(Interpolation k) {
  return k == Interpolation::bicubic ? "bicubic" : "bilinear";
}

Interpolation parse_interpolation(const std::string& name) {
  if (name == "bicubic") return Interpolation::bicubic;
  if (name == "bilinear") return Interpolation::bilinear;
  throw ConfigError("unknown interpolation '" + name + "'");
}

std::string solver_name(PathSolver s) {
  return s == PathSolver::dijkstra ? "dijkstra" : "bellman_ford";
}

PathSolver parse_solver(const std::string& name) {
  if (name == "dijkstra") return PathSolver::dijkstra;
  if (name == "bellman_ford") return PathSolver::bellman_ford;
  throw ConfigError("unknown path solver '" + name + "'");
}

const std::set<std::string> kSweepable{"beta", "alpha", "n_update", "epsilon", "h"};

void apply_sweep(SurveyConfig& cfg, const std::string& parameter, const json& value) {
  try {
    PlannerConfig& pc = cfg.planner_config;
    if (parameter == "beta") {
      pc.beta = value.get<double>();
    } else if (parameter == "alpha") {
      pc.alpha = value.get<double>();
    } else if (parameter == "n_update") {
      pc.n_update = value.get<std::size_t>();
    } else if (parameter == "epsilon") {
      pc.epsilon = value.get<double>();
    } else if (parameter == "h") {
      pc.h = parse_cost_shape(value.get<std::string>());
    } else {
      throw ConfigError("parameter '" + parameter + "' cannot be swept");
    }
  } catch (const json::exception& e) {
    throw ConfigError("sweep value for " + parameter + ": " + e.what());
  }
}

std::string sweep_label(const std::string& parameter, const json& value) {
  return parameter + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_manifest(const ExperimentSpec& spec, ExperimentOutputs& out, const std::string& command) {
  json j = to_json(spec);
  j["command"] = command;
  json files = json::array();
  for (const auto& f : out.files) files.push_back(f.filename().string());
  j["outputs"] = files;
  out.manifest = spec.output_dir / (spec.name + "_manifest.json");
  std::ofstream f(out.manifest, std::ios::binary);
  if (!f) throw IoError("cannot write " + out.manifest.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("error writing " + out.manifest.string());
}

}  // namespace

ExperimentSpec parse_experiment_spec(const json& j) {
  ExperimentSpec spec;
  Section top(j, "config");
  top.get("name", spec.name);
  std::string kind = "survey";
  top.get("kind", kind);
  if (kind == "survey") {
    spec.kind = ExperimentKind::survey;
  } else if (kind == "reconstruction") {
    spec.kind = ExperimentKind::reconstruction;
  } else {
    throw ConfigError("unknown experiment kind '" + kind + "'");
  }
  top.get("dataset", spec.dataset);
  std::vector<std::string> maps;
  top.get("imported_maps", maps);
  spec.imported_maps.assign(maps.begin(), maps.end());
  spec.estimators = parse_names(top, "estimators", spec.estimators, parse_estimator_kind);
  spec.planners = parse_names(top, "planners", spec.planners, parse_planner_kind);
  top.get("n_runs", spec.n_runs);
  top.get("workers", spec.workers);
  top.get("seed", spec.survey.seed);
  top.get("max_measurements", spec.survey.max_measurements);
  top.get("checkpoints", spec.checkpoints);
  std::string out_dir = spec.output_dir.string();
  top.get("output_dir", out_dir);
  spec.output_dir = out_dir;
  top.ignore("outputs");
  top.ignore("command");

  EstimatorOptions& eo = spec.survey.estimator_options;
  if (top.has("bridge_endpoint") && !top.at("bridge_endpoint").is_null()) {
    std::string ep;
    top.get("bridge_endpoint", ep);
    eo.bridge_endpoint = parse_endpoint(ep);
  }
  double timeout_s = static_cast<double>(eo.bridge_timeout.count()) / 1000.0;
  top.get("bridge_timeout_s", timeout_s);
  if (!(timeout_s > 0.0)) throw ConfigError("bridge_timeout_s must be positive");
  eo.bridge_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));

  if (top.has("scenario")) {
    Section s(top.at("scenario"), "scenario");
    ScenarioConfig& sc = spec.scenario;
    s.get("rows", sc.rows);
    s.get("cols", sc.cols);
    s.get("spacing_m", sc.spacing_m);
    s.get("buildings", sc.buildings);
    s.get("num_transmitters", sc.num_transmitters);
    s.get("tx_power_dbm", sc.tx_power_dbm);
    s.get("tx_height_m", sc.tx_height_m);
    s.get("carrier_hz", sc.carrier_hz);
    s.finish();
  }
  if (top.has("model")) {
    Section s(top.at("model"), "model");
    GaussianModelParams& p = spec.survey.model_params;
    s.get("shadow_var", p.shadow_var);
    s.get("shadow_corr_dist_m", p.shadow_corr_dist_m);
    s.get("shadow_mean", p.shadow_mean);
    s.get("fading_var", p.fading_var);
    s.get("noise_var", p.noise_var);
    s.get("pathloss_exponent", p.pathloss_exponent);
    s.get("survey_height_m", p.survey_height_m);
    s.finish();
  }
  if (top.has("planner")) {
    Section s(top.at("planner"), "planner");
    PlannerConfig& pc = spec.survey.planner_config;
    s.get("beta", pc.beta);
    s.get("speed_mps", pc.speed_mps);
    s.get("n_update", pc.n_update);
    s.get("alpha", pc.alpha);
    s.get("measurement_spacing_m", pc.measurement_spacing_m);
    s.get("epsilon", pc.epsilon);
    std::string h = to_string(pc.h);
    s.get("h", h);
    pc.h = parse_cost_shape(h);
    std::string solver = solver_name(pc.solver);
    s.get("solver", solver);
    pc.solver = parse_solver(solver);
    s.finish();
  }
  if (top.has("survey")) {
    Section s(top.at("survey"), "survey");
    SurveyConfig& sv = spec.survey;
    s.get("on_grid", sv.on_grid);
    std::string interp = interpolation_name(sv.interpolation);
    s.get("interpolation", interp);
    sv.interpolation = parse_interpolation(interp);
    std::string target = to_string(sv.rmse_target);
    s.get("rmse_target", target);
    sv.rmse_target = parse_rmse_target(target);
    s.get("known_mean", eo.known_mean);
    s.get("robust", eo.robust);
    s.get("knn_k", eo.knn_k);
    if (s.has("start_index") && !s.at("start_index").is_null()) {
      std::size_t start = 0;
      s.get("start_index", start);
      sv.start_index = start;
    }
    s.finish();
  }
  if (top.has("sweep") && !top.at("sweep").is_null()) {
    Section s(top.at("sweep"), "sweep");
    Sweep sweep;
    s.get("parameter", sweep.parameter);
    std::vector<json> values;
    s.get("values", values);
    sweep.values = std::move(values);
    s.finish();
    spec.sweep = std::move(sweep);
  }
  top.finish();
  return spec;
}

ExperimentSpec load_experiment_spec(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_spec(j);
}

json to_json(const ExperimentSpec& spec) {
  const SurveyConfig& sv = spec.survey;
  const EstimatorOptions& eo = sv.estimator_options;
  const PlannerConfig& pc = sv.planner_config;
  const GaussianModelParams& p = sv.model_params;
  const ScenarioConfig& sc = spec.scenario;
  json j;
  j["name"] = spec.name;
  j["kind"] = spec.kind == ExperimentKind::survey ? "survey" : "reconstruction";
  j["dataset"] = spec.dataset;
  json maps = json::array();
  for (const auto& m : spec.imported_maps) maps.push_back(m.string());
  j["imported_maps"] = maps;
  json est = json::array();
  for (auto e : spec.estimators) est.push_back(to_string(e));
  j["estimators"] = est;
  json pl = json::array();
  for (auto e : spec.planners) pl.push_back(to_string(e));
  j["planners"] = pl;
  j["n_runs"] = spec.n_runs;
  j["workers"] = spec.workers;
  j["seed"] = sv.seed;
  j["max_measurements"] = sv.max_measurements;
  j["checkpoints"] = spec.checkpoints;
  j["output_dir"] = spec.output_dir.string();
  j["bridge_endpoint"] = eo.bridge_endpoint ? json(to_string(*eo.bridge_endpoint)) : json(nullptr);
  j["bridge_timeout_s"] = static_cast<double>(eo.bridge_timeout.count()) / 1000.0;
  j["scenario"] = {{"rows", sc.rows},
                   {"cols", sc.cols},
                   {"spacing_m", sc.spacing_m},
                   {"buildings", sc.buildings},
                   {"num_transmitters", sc.num_transmitters},
                   {"tx_power_dbm", sc.tx_power_dbm},
                   {"tx_height_m", sc.tx_height_m},
                   {"carrier_hz", sc.carrier_hz}};
  j["model"] = {{"shadow_var", p.shadow_var},
                {"shadow_corr_dist_m", p.shadow_corr_dist_m},
                {"shadow_mean", p.shadow_mean},
                {"fading_var", p.fading_var},
                {"noise_var", p.noise_var},
                {"pathloss_exponent", p.pathloss_exponent},
                {"survey_height_m", p.survey_height_m}};
  j["planner"] = {{"beta", pc.beta},
                  {"speed_mps", pc.speed_mps},
                  {"n_update", pc.n_update},
                  {"alpha", pc.alpha},
                  {"measurement_spacing_m", pc.measurement_spacing_m},
                  {"epsilon", pc.epsilon},
                  {"h", to_string(pc.h)},
                  {"solver", solver_name(pc.solver)}};
  j["survey"] = {{"on_grid", sv.on_grid},
                 {"interpolation", interpolation_name(sv.interpolation)},
                 {"rmse_target", to_string(sv.rmse_target)},
                 {"known_mean", eo.known_mean},
                 {"robust", eo.robust},
                 {"knn_k", eo.knn_k},
                 {"start_index", sv.start_index ? json(*sv.start_index) : json(nullptr)}};
  j["sweep"] = spec.sweep ? json{{"parameter", spec.sweep->parameter}, {"values", spec.sweep->values}}
                          : json(nullptr);
  return j;
}

void validate(const ExperimentSpec& spec) {
  if (spec.name.empty() || spec.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("experiment name must be a plain file name");
  }
  if (spec.dataset != "gudmundson" && spec.dataset != "imported") {
    throw ConfigError("unknown dataset '" + spec.dataset + "'");
  }
  if (spec.dataset == "imported" && spec.imported_maps.empty()) {
    throw ConfigError("imported dataset needs imported_maps");
  }
  if (spec.n_runs < 1) throw ConfigError("n_runs must be >= 1");
  if (spec.estimators.empty()) throw ConfigError("no estimators given");
  validate(spec.survey.model_params);
  if (spec.sweep) {
    if (!kSweepable.count(spec.sweep->parameter)) {
      throw ConfigError("parameter '" + spec.sweep->parameter + "' cannot be swept");
    }
    if (spec.sweep->values.empty()) throw ConfigError("sweep has no values");
  }
  if (spec.kind == ExperimentKind::reconstruction) {
    if (spec.checkpoints.empty() || !std::is_sorted(spec.checkpoints.begin(), spec.checkpoints.end())) {
      throw ConfigError("checkpoints must be a non-empty ascending list");
    }
    return;
  }
  if (spec.planners.empty()) throw ConfigError("no planners given");
  const std::vector<json> none{json(nullptr)};
  for (auto e : spec.estimators) {
    for (auto p : spec.planners) {
      for (const json& v : spec.sweep ? spec.sweep->values : none) {
        SurveyConfig cfg = spec.survey;
        cfg.estimator = e;
        cfg.planner = p;
        if (spec.sweep) apply_sweep(cfg, spec.sweep->parameter, v);
        validate(cfg);
        if (e == EstimatorKind::bridge && !cfg.estimator_options.bridge_endpoint) {
          throw ConfigError("the bridge estimator needs --bridge-endpoint");
        }
      }
    }
  }
}

std::vector<RadioMap> load_imported_maps(const ExperimentSpec& spec) {
  std::vector<fs::path> files;
  for (const auto& p : spec.imported_maps) {
    if (!fs::exists(p)) throw IoError("imported map path does not exist: " + p.string());
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      if (found.empty()) throw IoError("no .txt maps in " + p.string());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  std::vector<RadioMap> maps;
  for (const auto& f : files) maps.push_back(load_map(f));
  return maps;
}

ExperimentOutputs generate_maps(const ExperimentSpec& spec) {
  validate(spec.survey.model_params);
  ensure_dir(spec.output_dir);
  ExperimentOutputs out;
  char name[64];
  if (spec.dataset == "imported") {
    const auto maps = load_imported_maps(spec);
    for (std::size_t r = 0; r < maps.size(); ++r) {
      std::snprintf(name, sizeof name, "_map_%03zu.txt", r);
      out.files.push_back(spec.output_dir / (spec.name + name));
      save_map(out.files.back(), maps[r]);
    }
  } else {
    const GridGeometry grid = make_grid(spec.scenario);
    const MapGenerator generator(make_prior_model(grid, spec.survey.model_params));
    for (std::size_t r = 0; r < spec.n_runs; ++r) {
      std::snprintf(name, sizeof name, "_map_%03zu.txt", r);
      out.files.push_back(spec.output_dir / (spec.name + name));
      save_map(out.files.back(), scenario_map(spec.scenario, generator, run_seed(spec.survey.seed, r)));
    }
  }
  write_manifest(spec, out, "generate-maps");
  return out;
}

ExperimentOutputs run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  ensure_dir(spec.output_dir);
  std::vector<RadioMap> imported;
  if (spec.dataset == "imported") imported = load_imported_maps(spec);
  ExperimentOutputs out;

  if (spec.kind == ExperimentKind::reconstruction) {
    ReconstructionConfig rc;
    rc.estimators = spec.estimators;
    rc.checkpoints = spec.checkpoints;
    rc.model_params = spec.survey.model_params;
    rc.seed = spec.survey.seed;
    rc.rmse_target = spec.survey.rmse_target;
    rc.estimator_options = spec.survey.estimator_options;
    rc.interpolation = spec.survey.interpolation;
    rc.on_grid = spec.survey.on_grid;
    const auto result = reconstruction_experiment(spec.scenario, rc, spec.n_runs, spec.workers, imported);
    out.files.push_back(spec.output_dir / (spec.name + "_reconstruction.csv"));
    write_reconstruction_csv(out.files.back(), result);
    write_manifest(spec, out, "run-experiment");
    return out;
  }

  const std::vector<json> none{json(nullptr)};
  for (auto e : spec.estimators) {
    for (auto p : spec.planners) {
      for (const json& v : spec.sweep ? spec.sweep->values : none) {
        SurveyConfig cfg = spec.survey;
        cfg.estimator = e;
        cfg.planner = p;
        std::string stem = spec.name + "__" + to_string(e) + "__" + to_string(p);
        if (spec.sweep) {
          apply_sweep(cfg, spec.sweep->parameter, v);
          stem += "__" + sweep_label(spec.sweep->parameter, v);
        }
        const auto mc = monte_carlo(spec.scenario, cfg, spec.n_runs, spec.workers, imported);
        out.files.push_back(spec.output_dir / (stem + "_runs.csv"));
        write_runs_csv(out.files.back(), mc.runs);
        out.files.push_back(spec.output_dir / (stem + "_aggregate.csv"));
        write_aggregate_csv(out.files.back(), mc.curves);
      }
    }
  }
  write_manifest(spec, out, "run-experiment");
  return out;
}

}  // namespace survey
