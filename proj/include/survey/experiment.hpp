#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "survey/survey.hpp"

namespace survey {

/// One parameter varied across otherwise identical Monte Carlo campaigns.
/// Supported parameters: beta, alpha, n_update, epsilon, h.
struct Sweep {
  std::string parameter;
  std::vector<nlohmann::json> values;
};

enum class ExperimentKind { survey, reconstruction };

struct ExperimentSpec {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::survey;
  std::string dataset = "gudmundson";  ///< or "imported"
  std::vector<std::filesystem::path> imported_maps;
  std::vector<EstimatorKind> estimators{EstimatorKind::online_bayes};
  std::vector<PlannerKind> planners{PlannerKind::min_cost};
  std::size_t n_runs = 1;
  std::size_t workers = 0;
  ScenarioConfig scenario;
  SurveyConfig survey;  ///< estimator and planner fields are set per campaign
  std::optional<Sweep> sweep;
  std::vector<std::size_t> checkpoints{0, 10, 20, 50, 100};
  std::filesystem::path output_dir = "out";
};

/// Reads a spec from JSON. Missing keys keep their defaults; unknown keys are
/// rejected with ConfigError. Cross-field checks are left to validate().
ExperimentSpec parse_experiment_spec(const nlohmann::json& j);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
/// Fully resolved spec; parse_experiment_spec(to_json(s)) reproduces s.
nlohmann::json to_json(const ExperimentSpec& spec);

void validate(const ExperimentSpec& spec);

/// Maps of the imported dataset, in listed order (directories expand to their
/// .txt files sorted by name).
std::vector<RadioMap> load_imported_maps(const ExperimentSpec& spec);

struct ExperimentOutputs {
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest;
};

/// Writes n_runs maps (one per run seed) in the text map format.
ExperimentOutputs generate_maps(const ExperimentSpec& spec);

/// Fans out over estimators x planners x sweep values. Survey experiments
/// write <name>__<estimator>__<planner>[__<param>=<value>]_runs.csv and
/// _aggregate.csv; reconstruction experiments write <name>_reconstruction.csv.
ExperimentOutputs run_experiment(const ExperimentSpec& spec);

}  // namespace survey
