#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survey/estimators.hpp"
#include "survey/model.hpp"
#include "survey/planner.hpp"
#include "survey/radio_map.hpp"

namespace survey {

enum class PlannerKind { min_cost, grid, spiral, uniform };

PlannerKind parse_planner_kind(const std::string& name);
std::string to_string(PlannerKind kind);

/// Which map the RMSE is measured against.
enum class RmseTarget { combined, per_transmitter };

RmseTarget parse_rmse_target(const std::string& name);
std::string to_string(RmseTarget target);

struct SurveyConfig {
  EstimatorKind estimator = EstimatorKind::online_bayes;
  PlannerKind planner = PlannerKind::min_cost;
  PlannerConfig planner_config;
  GaussianModelParams model_params;
  std::size_t max_measurements = 100;
  std::uint64_t seed = 0;
  /// Snap every measurement to the nearest free grid point.
  bool on_grid = false;
  /// Start grid index; defaults to the first free point in flat order.
  std::optional<std::size_t> start_index;
  Interpolation interpolation = Interpolation::bicubic;
  RmseTarget rmse_target = RmseTarget::combined;
  EstimatorOptions estimator_options;
};

void validate(const SurveyConfig& config);

/// Metrics after each measurement; entry t - 1 describes the state after t
/// measurements.
struct SurveyRecord {
  std::vector<double> rmse_db;
  std::vector<double> total_uncertainty;  ///< NaN if the estimator gives none
  std::vector<double> x_m;
  std::vector<double> y_m;
  std::vector<double> cum_dist_m;
  std::vector<double> wall_time_s;

  std::size_t size() const { return rmse_db.size(); }
};

struct SampledPath {
  std::vector<Position2> positions;
  std::vector<double> arc_m;  ///< arc length of each position from the path start
  double length_m = 0.0;
  /// Arc length into the next path at which the following sample falls.
  double next_offset_m = 0.0;
};

/// Positions at arc lengths first_offset, first_offset + spacing, ... along
/// the polyline through `waypoints`.
SampledPath sample_along_path(std::span<const Position2> waypoints, double spacing_m,
                              double first_offset_m = 0.0);

/// One surveying episode over `map`. The prior model is built from the map
/// grid and config.model_params unless one is supplied.
SurveyRecord run_survey(const RadioMap& map, const SurveyConfig& config,
                        PriorModelPtr model = nullptr);

/// How Monte Carlo maps are produced.
struct ScenarioConfig {
  std::size_t rows = 32;
  std::size_t cols = 32;
  double spacing_m = 3.0;
  std::vector<std::size_t> buildings;
  std::size_t num_transmitters = 2;
  double tx_power_dbm = 10.0;
  double tx_height_m = 20.0;
  double carrier_hz = 2.4e9;
};

GridGeometry make_grid(const ScenarioConfig& scenario);

/// Fresh transmitter placement and map for one run seed.
RadioMap scenario_map(const ScenarioConfig& scenario, const MapGenerator& generator,
                      std::uint64_t run_seed);

/// Seed of Monte Carlo run r.
std::uint64_t run_seed(std::uint64_t seed, std::size_t r);

struct CurveStats {
  std::vector<double> mean;
  std::vector<double> std;  ///< population standard deviation
};

/// Point-wise statistics of equally long curves.
CurveStats curve_stats(std::span<const std::vector<double>> curves);

struct AggregateCurves {
  CurveStats rmse;
  CurveStats uncertainty;
};

AggregateCurves aggregate(std::span<const SurveyRecord> runs);

struct MonteCarloResult {
  std::vector<SurveyRecord> runs;
  AggregateCurves curves;
};

/// Runs n_runs independent surveys, each on a fresh map and placement drawn
/// from run_seed(config.seed, r), or on imported[r % size] when maps are given.
/// Results do not depend on the worker count (0 = hardware concurrency).
MonteCarloResult monte_carlo(const ScenarioConfig& scenario, const SurveyConfig& config,
                             std::size_t n_runs, std::size_t workers = 0,
                             std::span<const RadioMap> imported = {});

/// Map reconstruction from uniformly random measurement locations.
struct ReconstructionConfig {
  std::vector<EstimatorKind> estimators{EstimatorKind::batch, EstimatorKind::online_bayes,
                                        EstimatorKind::knn};
  std::vector<std::size_t> checkpoints;  ///< numbers of measurements, ascending
  GaussianModelParams model_params;
  std::uint64_t seed = 0;
  RmseTarget rmse_target = RmseTarget::per_transmitter;
  EstimatorOptions estimator_options;
  Interpolation interpolation = Interpolation::bicubic;
  /// Draw distinct grid points instead of continuous locations.
  bool on_grid = false;
};

struct ReconstructionResult {
  std::vector<EstimatorKind> estimators;
  std::vector<std::size_t> checkpoints;
  /// rmse[e][r][c]: estimator e, run r, checkpoint c.
  std::vector<std::vector<std::vector<double>>> rmse;
  std::vector<CurveStats> stats;
};

ReconstructionResult reconstruction_experiment(const ScenarioConfig& scenario,
                                               const ReconstructionConfig& config,
                                               std::size_t n_runs, std::size_t workers = 0,
                                               std::span<const RadioMap> imported = {});

/// RMSE of an estimator's current estimate under the chosen target.
double estimator_rmse(Estimator& estimator, const RadioMap& map, RmseTarget target);

void write_runs_csv(const std::filesystem::path& path, std::span<const SurveyRecord> runs);
void write_aggregate_csv(const std::filesystem::path& path, const AggregateCurves& curves);
void write_reconstruction_csv(const std::filesystem::path& path,
                              const ReconstructionResult& result);

}  // namespace survey
