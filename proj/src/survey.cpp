#include "survey/survey.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "survey/error.hpp"
#include "survey/rng.hpp"

namespace survey {

PlannerKind parse_planner_kind(const std::string& name) {
  if (name == "min_cost") return PlannerKind::min_cost;
  if (name == "grid") return PlannerKind::grid;
  if (name == "spiral") return PlannerKind::spiral;
  if (name == "uniform") return PlannerKind::uniform;
  throw ConfigError("unknown planner '" + name + "'");
}

std::string to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::min_cost: return "min_cost";
    case PlannerKind::grid: return "grid";
    case PlannerKind::spiral: return "spiral";
    case PlannerKind::uniform: return "uniform";
  }
  return "unknown";
}

RmseTarget parse_rmse_target(const std::string& name) {
  if (name == "combined") return RmseTarget::combined;
  if (name == "per_transmitter") return RmseTarget::per_transmitter;
  throw ConfigError("unknown rmse target '" + name + "'");
}

std::string to_string(RmseTarget target) {
  return target == RmseTarget::combined ? "combined" : "per_transmitter";
}

void validate(const SurveyConfig& config) {
  if (config.max_measurements < 1) throw ConfigError("max_measurements must be >= 1");
  validate(config.planner_config);
  validate(config.model_params);
  if (config.planner == PlannerKind::min_cost && config.estimator == EstimatorKind::knn) {
    throw ConfigError("the min_cost planner needs an estimator that reports uncertainty");
  }
  if (config.estimator == EstimatorKind::bridge && config.rmse_target == RmseTarget::per_transmitter) {
    throw ConfigError("the bridge estimator only reports the combined map");
  }
}

SampledPath sample_along_path(std::span<const Position2> waypoints, double spacing_m,
                              double first_offset_m) {
  if (!(spacing_m > 0.0)) throw ConfigError("measurement spacing must be positive");
  if (waypoints.empty()) throw ConfigError("path needs at least one waypoint");
  if (first_offset_m < 0.0) throw ConfigError("sample offset must be non-negative");
  SampledPath out;
  double next = first_offset_m;
  double cum = 0.0;
  const double tol = 1e-9 * spacing_m;
  if (next <= tol) {
    out.positions.push_back(waypoints.front());
    out.arc_m.push_back(0.0);
    next = spacing_m;
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Position2& a = waypoints[i - 1];
    const Position2& b = waypoints[i];
    const double len = distance(a, b);
    while (len > 0.0 && next <= cum + len + tol) {
      const double f = std::min(1.0, (next - cum) / len);
      out.positions.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
      out.arc_m.push_back(next);
      next += spacing_m;
    }
    cum += len;
  }
  out.length_m = cum;
  out.next_offset_m = std::max(0.0, next - cum);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

// Re-raises the active exception with the measurement index in the message,
// keeping its type.
[[noreturn]] void rethrow_at(std::size_t index) {
  const std::string at = "measurement " + std::to_string(index) + ": ";
  try {
    throw;
  } catch (const BridgeConnectionError& e) {
    throw BridgeConnectionError(at + e.what());
  } catch (const BridgeTimeoutError& e) {
    throw BridgeTimeoutError(at + e.what());
  } catch (const BridgeFrameError& e) {
    throw BridgeFrameError(at + e.what());
  } catch (const BridgeContractError& e) {
    throw BridgeContractError(at + e.what());
  } catch (const BridgeRemoteError& e) {
    throw BridgeRemoteError(at + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(at + e.what());
  } catch (const GeometryError& e) {
    throw GeometryError(at + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(at + e.what());
  }
}

std::unique_ptr<WaypointPlanner> make_baseline(PlannerKind kind, const GridGeometry& grid,
                                               std::uint64_t seed) {
  switch (kind) {
    case PlannerKind::grid: return make_grid_planner(grid);
    case PlannerKind::spiral: return make_spiral_planner(grid);
    case PlannerKind::uniform:
      return make_uniform_planner(grid, derive_seed(seed, SeedPurpose::planner));
    case PlannerKind::min_cost: break;
  }
  return nullptr;
}

std::size_t first_free(const GridGeometry& grid) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.is_building(k)) return k;
  }
  throw GeometryError("all grid points are buildings");
}

double current_uncertainty(Estimator& est, const GridGeometry& grid) {
  const auto u = est.uncertainty();
  if (!u) return std::numeric_limits<double>::quiet_NaN();
  return total_uncertainty(*u, grid.buildings());
}

}  // namespace

double estimator_rmse(Estimator& estimator, const RadioMap& map, RmseTarget target) {
  if (target == RmseTarget::combined) return rmse(map, estimator.combined_estimate());
  const auto per_tx = estimator.per_tx_estimate();
  if (per_tx.empty()) throw ConfigError("estimator provides no per-transmitter estimate");
  return rmse_per_transmitter(map, per_tx);
}

SurveyRecord run_survey(const RadioMap& map, const SurveyConfig& config, PriorModelPtr model) {
  validate(config);
  const GridGeometry& grid = map.grid;
  if (!model) model = make_prior_model(grid, config.model_params);
  const PlannerConfig& pc = config.planner_config;
  auto est = make_estimator(config.estimator, model, map, config.estimator_options);
  auto baseline = make_baseline(config.planner, grid, config.seed);

  std::size_t current = config.start_index.value_or(first_free(grid));
  if (current >= grid.size() || grid.is_building(current)) {
    throw GeometryError("start point must be a free grid point");
  }
  double offset = 0.0;
  double travelled = 0.0;
  std::optional<UncertaintyMap> umap;
  SurveyRecord rec;
  const auto t0 = Clock::now();

  while (rec.size() < config.max_measurements) {
    const std::size_t i = rec.size();
    std::vector<std::size_t> leg;
    if (baseline) {
      leg = baseline->next_leg(current);
    } else {
      try {
        const auto fresh = est->uncertainty();
        if (!fresh) throw ConfigError("estimator reports no uncertainty");
        umap = umap ? smooth(*umap, *fresh, pc.alpha)
                    : make_uncertainty_map(*fresh, est->uncertainty_source());
        leg = plan_receding(current, *umap, grid, pc, offset).plan.waypoints;
      } catch (const Error&) {
        rethrow_at(i);
      }
    }
    if (leg.size() < 2) throw GeometryError("planner produced an empty leg");

    std::vector<Position2> points;
    points.reserve(leg.size());
    for (std::size_t k : leg) points.push_back(grid.position(k));
    const SampledPath sp = sample_along_path(points, pc.measurement_spacing_m, offset);

    for (std::size_t s = 0; s < sp.positions.size() && rec.size() < config.max_measurements; ++s) {
      const std::size_t index = rec.size();
      Position2 x = sp.positions[s];
      if (config.on_grid) x = grid.position(grid.nearest_free(x));
      try {
        const Measurement m = measure(map, x, config.model_params,
                                      derive_seed(config.seed, SeedPurpose::noise, index), index,
                                      config.interpolation);
        est->add(m);
        rec.rmse_db.push_back(estimator_rmse(*est, map, config.rmse_target));
        rec.total_uncertainty.push_back(current_uncertainty(*est, grid));
      } catch (const Error&) {
        rethrow_at(index);
      }
      rec.x_m.push_back(x.x);
      rec.y_m.push_back(x.y);
      rec.cum_dist_m.push_back(travelled + sp.arc_m[s]);
      rec.wall_time_s.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
    travelled += sp.length_m;
    offset = sp.next_offset_m;
    current = leg.back();
  }
  return rec;
}

GridGeometry make_grid(const ScenarioConfig& scenario) {
  return GridGeometry(scenario.rows, scenario.cols, scenario.spacing_m, {}, scenario.buildings);
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t r) {
  return derive_seed(seed, SeedPurpose::run, r);
}

RadioMap scenario_map(const ScenarioConfig& scenario, const MapGenerator& generator,
                      std::uint64_t seed) {
  const auto txs = place_transmitters(generator.model().grid(), scenario.num_transmitters,
                                      scenario.tx_power_dbm, scenario.tx_height_m,
                                      scenario.carrier_hz, derive_seed(seed, SeedPurpose::placement));
  return generator.generate(txs, seed);
}

CurveStats curve_stats(std::span<const std::vector<double>> curves) {
  CurveStats out;
  if (curves.empty()) return out;
  const std::size_t len = curves.front().size();
  out.mean.assign(len, 0.0);
  out.std.assign(len, 0.0);
  for (const auto& c : curves) {
    if (c.size() != len) throw ConfigError("curves differ in length");
  }
  const auto n = static_cast<double>(curves.size());
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c[t];
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& c : curves) sq += (c[t] - mean) * (c[t] - mean);
    out.mean[t] = mean;
    out.std[t] = std::sqrt(sq / n);
  }
  return out;
}

AggregateCurves aggregate(std::span<const SurveyRecord> runs) {
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> u;
  for (const auto& rec : runs) {
    r.push_back(rec.rmse_db);
    u.push_back(rec.total_uncertainty);
  }
  return {curve_stats(r), curve_stats(u)};
}

namespace {

std::size_t resolve_workers(std::size_t workers, std::size_t jobs) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(workers, jobs));
}

// Runs job(r) for r in [0, n). The error of the lowest failing index wins.
template <typename Job>
void parallel_for(std::size_t n, std::size_t workers, Job job) {
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_at = n;
  std::exception_ptr error;
  auto work = [&] {
    while (true) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n) return;
      {
        std::lock_guard lock(mutex);
        if (failed_at < r) return;
      }
      try {
        job(r);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (r < failed_at) {
          failed_at = r;
          error = std::current_exception();
        }
      }
    }
  };
  const std::size_t count = resolve_workers(workers, n);
  if (count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

GridGeometry common_grid(const ScenarioConfig& scenario, std::span<const RadioMap> imported) {
  if (imported.empty()) return make_grid(scenario);
  for (const auto& m : imported) {
    if (m.grid.rows() != imported.front().grid.rows() ||
        m.grid.cols() != imported.front().grid.cols()) {
      throw ConfigError("imported maps must share one grid");
    }
  }
  return imported.front().grid;
}

}  // namespace

MonteCarloResult monte_carlo(const ScenarioConfig& scenario, const SurveyConfig& config,
                             std::size_t n_runs, std::size_t workers,
                             std::span<const RadioMap> imported) {
  if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
  validate(config);
  const GridGeometry grid = common_grid(scenario, imported);
  const PriorModelPtr model = make_prior_model(grid, config.model_params);
  const MapGenerator generator(model);
  MonteCarloResult out;
  out.runs.resize(n_runs);
  parallel_for(n_runs, workers, [&](std::size_t r) {
    SurveyConfig cfg = config;
    cfg.seed = run_seed(config.seed, r);
    if (imported.empty()) {
      out.runs[r] = run_survey(scenario_map(scenario, generator, cfg.seed), cfg, model);
    } else {
      out.runs[r] = run_survey(imported[r % imported.size()], cfg, model);
    }
  });
  out.curves = aggregate(out.runs);
  return out;
}

namespace {

std::vector<Position2> random_locations(const GridGeometry& grid, std::size_t count, bool on_grid,
                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Position2> out;
  if (on_grid) {
    std::vector<std::size_t> free;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!grid.is_building(k)) free.push_back(k);
    }
    if (count > free.size()) throw ConfigError("more on-grid measurements than free grid points");
    // Partial Fisher-Yates: distinct points in random order.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, free.size() - 1);
      std::swap(free[i], free[pick(rng)]);
      out.push_back(grid.position(free[i]));
    }
    return out;
  }
  if (grid.free_count() == 0) throw GeometryError("all grid points are buildings");
  std::uniform_real_distribution<double> ux(0.0, grid.width());
  std::uniform_real_distribution<double> uy(0.0, grid.height());
  while (out.size() < count) {
    const Position2 p{grid.origin().x + ux(rng), grid.origin().y + uy(rng)};
    if (!grid.in_building(p)) out.push_back(p);
  }
  return out;
}

}  // namespace

ReconstructionResult reconstruction_experiment(const ScenarioConfig& scenario,
                                               const ReconstructionConfig& config,
                                               std::size_t n_runs, std::size_t workers,
                                               std::span<const RadioMap> imported) {
  if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
  if (config.checkpoints.empty()) throw ConfigError("no checkpoints given");
  if (!std::is_sorted(config.checkpoints.begin(), config.checkpoints.end())) {
    throw ConfigError("checkpoints must be ascending");
  }
  validate(config.model_params);
  const GridGeometry grid = common_grid(scenario, imported);
  const PriorModelPtr model = make_prior_model(grid, config.model_params);
  const MapGenerator generator(model);
  const std::size_t max_t = config.checkpoints.back();

  ReconstructionResult out;
  out.estimators = config.estimators;
  out.checkpoints = config.checkpoints;
  out.rmse.assign(config.estimators.size(), std::vector<std::vector<double>>(n_runs));
  parallel_for(n_runs, workers, [&](std::size_t r) {
    const std::uint64_t seed = run_seed(config.seed, r);
    const RadioMap map = imported.empty() ? scenario_map(scenario, generator, seed)
                                          : imported[r % imported.size()];
    const auto locs = random_locations(map.grid, max_t, config.on_grid,
                                       derive_seed(seed, SeedPurpose::locations));
    std::vector<Measurement> meas;
    meas.reserve(max_t);
    for (std::size_t i = 0; i < max_t; ++i) {
      meas.push_back(measure(map, locs[i], config.model_params,
                             derive_seed(seed, SeedPurpose::noise, i), i, config.interpolation));
    }
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      auto est = make_estimator(config.estimators[e], model, map, config.estimator_options);
      std::vector<double>& curve = out.rmse[e][r];
      std::size_t c = 0;
      for (std::size_t i = 0; i <= max_t; ++i) {
        while (c < config.checkpoints.size() && config.checkpoints[c] == i) {
          curve.push_back(estimator_rmse(*est, map, config.rmse_target));
          ++c;
        }
        if (i < max_t && c < config.checkpoints.size()) est->add(meas[i]);
      }
    }
  });
  for (const auto& runs : out.rmse) out.stats.push_back(curve_stats(runs));
  return out;
}

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

void finish(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  if (!f) throw IoError("error writing " + path.string());
}

}  // namespace

void write_runs_csv(const std::filesystem::path& path, std::span<const SurveyRecord> runs) {
  auto f = open_csv(path);
  f << "run,t,rmse_db,total_uncertainty,x_m,y_m,cum_dist_m\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const SurveyRecord& rec = runs[r];
    for (std::size_t i = 0; i < rec.size(); ++i) {
      f << r << ',' << i + 1 << ',' << number(rec.rmse_db[i]) << ','
        << number(rec.total_uncertainty[i]) << ',' << number(rec.x_m[i]) << ','
        << number(rec.y_m[i]) << ',' << number(rec.cum_dist_m[i]) << '\n';
    }
  }
  finish(f, path);
}

void write_aggregate_csv(const std::filesystem::path& path, const AggregateCurves& curves) {
  auto f = open_csv(path);
  f << "t,mean_rmse,std_rmse,mean_U,std_U\n";
  for (std::size_t i = 0; i < curves.rmse.mean.size(); ++i) {
    f << i + 1 << ',' << number(curves.rmse.mean[i]) << ',' << number(curves.rmse.std[i]) << ','
      << number(curves.uncertainty.mean[i]) << ',' << number(curves.uncertainty.std[i]) << '\n';
  }
  finish(f, path);
}

void write_reconstruction_csv(const std::filesystem::path& path,
                              const ReconstructionResult& result) {
  auto f = open_csv(path);
  f << "estimator,t,mean_rmse,std_rmse\n";
  for (std::size_t e = 0; e < result.estimators.size(); ++e) {
    for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
      f << to_string(result.estimators[e]) << ',' << result.checkpoints[c] << ','
        << number(result.stats[e].mean[c]) << ',' << number(result.stats[e].std[c]) << '\n';
    }
  }
  finish(f, path);
}

}  // namespace survey
