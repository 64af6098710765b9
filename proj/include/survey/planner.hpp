#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "survey/grid.hpp"
#include "survey/rng.hpp"
#include "survey/uncertainty.hpp"

namespace survey {

/// Decreasing map from uncertainty to location cost.
enum class CostShape {
  reciprocal,   ///< 1 / (phi + epsilon)
  exponential,  ///< exp(-phi)
  constant,     ///< 1: plain shortest path
};

CostShape parse_cost_shape(const std::string& name);
std::string to_string(CostShape shape);

enum class PathSolver { bellman_ford, dijkstra };

struct CostField {
  Eigen::VectorXd node_cost;
  CostShape shape = CostShape::reciprocal;
  double epsilon = 1e-2;
};

struct TrajectoryPlan {
  std::vector<std::size_t> waypoints;
  double total_cost = 0.0;
  double total_time_s = 0.0;
};

struct PlannerConfig {
  double beta = 0.75;  ///< weight of the uncertainty cost against travel time
  double speed_mps = 1.0;
  std::size_t n_update = 7;  ///< measurements between replans
  double alpha = 0.25;       ///< uncertainty smoothing factor
  double measurement_spacing_m = 7.0;
  CostShape h = CostShape::reciprocal;
  double epsilon = 1e-2;
  PathSolver solver = PathSolver::dijkstra;
};

void validate(const PlannerConfig& config);

/// Free grid point with the highest smoothed uncertainty, lowest index on
/// ties. If `current` is the maximiser, the runner-up is returned instead.
std::size_t select_destination(const UncertaintyMap& umap, const GridGeometry& grid,
                               std::optional<std::size_t> current = std::nullopt);

CostField cost_field(const UncertaintyMap& umap, CostShape shape, double epsilon);
/// Cost field with every entry equal to `value`.
CostField constant_cost_field(std::size_t n, double value = 1.0);

/// Trapezoidal integral of (1 - beta) / v + beta * c along the straight edge a-b.
double edge_cost(std::size_t a, std::size_t b, const GridGeometry& grid, const CostField& field,
                 const PlannerConfig& config);

/// Minimum-cost 8-connected path from start to dest through free points.
/// Both solvers return the same path: among predecessors that attain the
/// optimum (to 1e-12 relative), the lowest flat index wins.
TrajectoryPlan shortest_path(const GridGeometry& grid, const CostField& field,
                             const PlannerConfig& config, std::size_t start, std::size_t dest);

/// Sum of edge costs and travel time along an arbitrary waypoint list.
TrajectoryPlan evaluate_path(std::vector<std::size_t> waypoints, const GridGeometry& grid,
                             const CostField& field, const PlannerConfig& config);

struct RecedingPlan {
  TrajectoryPlan plan;  ///< possibly truncated
  std::size_t destination = 0;
  bool truncated = false;
};

/// Destination selection + shortest path, truncated to the shortest prefix
/// that covers n_update measurements. Measurements fall at arc lengths
/// first_sample_m, first_sample_m + spacing, ... from `current`.
RecedingPlan plan_receding(std::size_t current, const UncertaintyMap& umap,
                           const GridGeometry& grid, const PlannerConfig& config,
                           std::optional<double> first_sample_m = std::nullopt);

/// Column-by-column (boustrophedon) visiting order over free points.
std::vector<std::size_t> grid_pattern(const GridGeometry& grid);
/// Inward rectangular spiral from the top-left corner over free points.
std::vector<std::size_t> spiral_pattern(const GridGeometry& grid);
/// 8-connected approximation of the straight segment between two points.
std::vector<std::size_t> line_cells(const GridGeometry& grid, std::size_t from, std::size_t to);

/// Non-adaptive planner emitting legs of waypoints, each starting at the
/// current position. Obstacles are avoided with constant-cost shortest paths.
class WaypointPlanner {
 public:
  virtual ~WaypointPlanner() = default;
  virtual std::vector<std::size_t> next_leg(std::size_t current) = 0;
};

/// Visits a fixed pattern in order, cycling once it is exhausted.
class PatternPlanner : public WaypointPlanner {
 public:
  PatternPlanner(const GridGeometry& grid, std::vector<std::size_t> pattern);
  std::vector<std::size_t> next_leg(std::size_t current) override;

 private:
  const GridGeometry& grid_;
  std::vector<std::size_t> pattern_;
  std::size_t next_ = 0;
};

/// Independent uniform planner: straight lines to uniformly drawn free points.
class UniformPlanner : public WaypointPlanner {
 public:
  UniformPlanner(const GridGeometry& grid, std::uint64_t seed);
  std::vector<std::size_t> next_leg(std::size_t current) override;

 private:
  const GridGeometry& grid_;
  std::vector<std::size_t> free_;
  Rng rng_;
};

std::unique_ptr<WaypointPlanner> make_grid_planner(const GridGeometry& grid);
std::unique_ptr<WaypointPlanner> make_spiral_planner(const GridGeometry& grid);
std::unique_ptr<WaypointPlanner> make_uniform_planner(const GridGeometry& grid, std::uint64_t seed);

}  // namespace survey
