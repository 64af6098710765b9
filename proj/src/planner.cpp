#include "survey/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "survey/error.hpp"

namespace survey {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-12;

double step_length(const GridGeometry& grid, std::size_t a, std::size_t b) {
  return distance(grid.position(a), grid.position(b));
}

void check_free(const GridGeometry& grid, std::size_t k, const char* what) {
  if (k >= grid.size()) throw GeometryError(std::string(what) + " outside grid");
  if (grid.is_building(k)) throw GeometryError(std::string(what) + " inside a building");
}

using Adjacency = std::vector<std::vector<std::size_t>>;

Adjacency build_adjacency(const GridGeometry& grid) {
  Adjacency adj(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.is_building(k)) adj[k] = grid.free_neighbors(k);
  }
  return adj;
}

// Edge weights in adjacency order.
std::vector<std::vector<double>> build_weights(const GridGeometry& grid, const Adjacency& adj,
                                               const CostField& field, const PlannerConfig& config) {
  std::vector<std::vector<double>> w(adj.size());
  for (std::size_t u = 0; u < adj.size(); ++u) {
    w[u].reserve(adj[u].size());
    for (std::size_t v : adj[u]) w[u].push_back(edge_cost(u, v, grid, field, config));
  }
  return w;
}

struct Distances {
  std::vector<double> dist;
  std::vector<std::ptrdiff_t> pred;
};

Distances bellman_ford(const Adjacency& adj, const std::vector<std::vector<double>>& w,
                       std::size_t start) {
  const std::size_t n = adj.size();
  Distances d{std::vector<double>(n, kInf), std::vector<std::ptrdiff_t>(n, -1)};
  d.dist[start] = 0.0;
  for (std::size_t round = 0; round + 1 < n; ++round) {
    bool changed = false;
    for (std::size_t u = 0; u < n; ++u) {
      if (d.dist[u] == kInf) continue;
      for (std::size_t e = 0; e < adj[u].size(); ++e) {
        const std::size_t v = adj[u][e];
        const double cand = d.dist[u] + w[u][e];
        if (cand < d.dist[v]) {
          d.dist[v] = cand;
          d.pred[v] = static_cast<std::ptrdiff_t>(u);
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return d;
}

Distances dijkstra(const Adjacency& adj, const std::vector<std::vector<double>>& w,
                   std::size_t start, std::size_t dest) {
  const std::size_t n = adj.size();
  Distances d{std::vector<double>(n, kInf), std::vector<std::ptrdiff_t>(n, -1)};
  std::vector<bool> settled(n, false);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  d.dist[start] = 0.0;
  queue.emplace(0.0, start);
  while (!queue.empty()) {
    const auto [du, u] = queue.top();
    queue.pop();
    if (settled[u]) continue;
    settled[u] = true;
    if (u == dest) break;
    for (std::size_t e = 0; e < adj[u].size(); ++e) {
      const std::size_t v = adj[u][e];
      if (settled[v]) continue;
      const double cand = du + w[u][e];
      if (cand < d.dist[v]) {
        d.dist[v] = cand;
        d.pred[v] = static_cast<std::ptrdiff_t>(u);
        queue.emplace(cand, v);
      }
    }
  }
  return d;
}

// Walks back from dest choosing, at every node, the lowest-index neighbour
// that attains the optimum. Predecessors must be strictly closer to the start,
// so the walk cannot cycle; zero-cost plateaus fall back to the solver's tree.
std::vector<std::size_t> extract_path(const Distances& d, const Adjacency& adj,
                                      const std::vector<std::vector<double>>& w,
                                      std::size_t start, std::size_t dest) {
  std::vector<std::size_t> path{dest};
  std::size_t v = dest;
  while (v != start) {
    std::ptrdiff_t best = -1;
    const double tol = kTieTolerance * std::max(1.0, std::abs(d.dist[v]));
    for (std::size_t e = 0; e < adj[v].size(); ++e) {
      const std::size_t u = adj[v][e];
      if (!(d.dist[u] < d.dist[v])) continue;
      // Edge weights are symmetric, so w[v][e] is also the weight of u -> v.
      if (d.dist[u] + w[v][e] <= d.dist[v] + tol) {
        best = static_cast<std::ptrdiff_t>(u);
        break;  // adjacency is sorted by index
      }
    }
    if (best < 0) best = d.pred[v];
    if (best < 0 || path.size() > adj.size()) {
      throw NumericalError("shortest path reconstruction failed");
    }
    v = static_cast<std::size_t>(best);
    path.push_back(v);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

CostShape parse_cost_shape(const std::string& name) {
  if (name == "reciprocal") return CostShape::reciprocal;
  if (name == "exponential") return CostShape::exponential;
  if (name == "constant") return CostShape::constant;
  throw ConfigError("unknown cost function '" + name + "'");
}

std::string to_string(CostShape shape) {
  switch (shape) {
    case CostShape::reciprocal: return "reciprocal";
    case CostShape::exponential: return "exponential";
    case CostShape::constant: return "constant";
  }
  return "unknown";
}

void validate(const PlannerConfig& c) {
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");
  if (!(c.speed_mps > 0.0)) throw ConfigError("speed must be positive");
  if (c.n_update < 1) throw ConfigError("n_update must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  if (!(c.measurement_spacing_m > 0.0)) throw ConfigError("measurement spacing must be positive");
  if (c.h == CostShape::reciprocal && !(c.epsilon > 0.0)) {
    throw ConfigError("epsilon must be positive for the reciprocal cost");
  }
}

std::size_t select_destination(const UncertaintyMap& umap, const GridGeometry& grid,
                               std::optional<std::size_t> current) {
  if (umap.size() != grid.size()) throw ConfigError("uncertainty map does not match grid");
  if (grid.free_count() == 0) throw GeometryError("all grid points are buildings");
  auto best_excluding = [&](std::ptrdiff_t skip) {
    std::ptrdiff_t best = -1;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid.is_building(k) || static_cast<std::ptrdiff_t>(k) == skip) continue;
      if (best < 0 || umap.smoothed[static_cast<Eigen::Index>(k)] > umap.smoothed[best]) {
        best = static_cast<std::ptrdiff_t>(k);
      }
    }
    return best;
  };
  const std::ptrdiff_t best = best_excluding(-1);
  if (current && static_cast<std::ptrdiff_t>(*current) == best && grid.free_count() > 1) {
    return static_cast<std::size_t>(best_excluding(best));
  }
  return static_cast<std::size_t>(best);
}

CostField cost_field(const UncertaintyMap& umap, CostShape shape, double epsilon) {
  if (shape == CostShape::reciprocal && !(epsilon > 0.0)) {
    throw ConfigError("epsilon must be positive for the reciprocal cost");
  }
  CostField f;
  f.shape = shape;
  f.epsilon = epsilon;
  const Eigen::VectorXd& phi = umap.smoothed;
  switch (shape) {
    case CostShape::reciprocal: f.node_cost = (phi.array() + epsilon).inverse(); break;
    case CostShape::exponential: f.node_cost = (-phi.array()).exp(); break;
    case CostShape::constant: f.node_cost = Eigen::VectorXd::Ones(phi.size()); break;
  }
  return f;
}

CostField constant_cost_field(std::size_t n, double value) {
  CostField f;
  f.shape = CostShape::constant;
  f.node_cost = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), value);
  return f;
}

double edge_cost(std::size_t a, std::size_t b, const GridGeometry& grid, const CostField& field,
                 const PlannerConfig& config) {
  check_free(grid, a, "edge start");
  check_free(grid, b, "edge end");
  if (!grid.adjacent(a, b)) throw GeometryError("edge endpoints are not adjacent");
  const double len = step_length(grid, a, b);
  const double ca = field.node_cost[static_cast<Eigen::Index>(a)];
  const double cb = field.node_cost[static_cast<Eigen::Index>(b)];
  return len * ((1.0 - config.beta) / config.speed_mps + 0.5 * config.beta * (ca + cb));
}

TrajectoryPlan evaluate_path(std::vector<std::size_t> waypoints, const GridGeometry& grid,
                             const CostField& field, const PlannerConfig& config) {
  TrajectoryPlan plan;
  double length = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    plan.total_cost += edge_cost(waypoints[i - 1], waypoints[i], grid, field, config);
    length += step_length(grid, waypoints[i - 1], waypoints[i]);
  }
  plan.total_time_s = length / config.speed_mps;
  plan.waypoints = std::move(waypoints);
  return plan;
}

TrajectoryPlan shortest_path(const GridGeometry& grid, const CostField& field,
                             const PlannerConfig& config, std::size_t start, std::size_t dest) {
  check_free(grid, start, "start");
  check_free(grid, dest, "destination");
  if (static_cast<std::size_t>(field.node_cost.size()) != grid.size()) {
    throw ConfigError("cost field does not match grid");
  }
  if (start == dest) return TrajectoryPlan{{start}, 0.0, 0.0};
  const Adjacency adj = build_adjacency(grid);
  const auto w = build_weights(grid, adj, field, config);
  const Distances d = config.solver == PathSolver::bellman_ford ? bellman_ford(adj, w, start)
                                                                 : dijkstra(adj, w, start, dest);
  if (d.dist[dest] == kInf) throw GeometryError("destination disconnected");
  return evaluate_path(extract_path(d, adj, w, start, dest), grid, field, config);
}

RecedingPlan plan_receding(std::size_t current, const UncertaintyMap& umap,
                           const GridGeometry& grid, const PlannerConfig& config,
                           std::optional<double> first_sample_m) {
  validate(config);
  RecedingPlan out;
  out.destination = select_destination(umap, grid, current);
  const CostField field = cost_field(umap, config.h, config.epsilon);
  TrajectoryPlan full = shortest_path(grid, field, config, current, out.destination);

  const double first = first_sample_m.value_or(config.measurement_spacing_m);
  const double cover = first + static_cast<double>(config.n_update - 1) * config.measurement_spacing_m;
  double arc = 0.0;
  std::size_t keep = full.waypoints.size();
  for (std::size_t i = 1; i < full.waypoints.size(); ++i) {
    arc += step_length(grid, full.waypoints[i - 1], full.waypoints[i]);
    if (arc >= cover - 1e-9) {
      keep = i + 1;
      break;
    }
  }
  if (keep < full.waypoints.size()) {
    full.waypoints.resize(keep);
    full = evaluate_path(std::move(full.waypoints), grid, field, config);
    out.truncated = true;
  }
  out.plan = std::move(full);
  return out;
}

std::vector<std::size_t> grid_pattern(const GridGeometry& grid) {
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < grid.cols(); ++j) {
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      const std::size_t i = j % 2 == 0 ? r : grid.rows() - 1 - r;
      const std::size_t k = grid.index({i, j});
      if (!grid.is_building(k)) order.push_back(k);
    }
  }
  return order;
}

std::vector<std::size_t> spiral_pattern(const GridGeometry& grid) {
  std::vector<std::size_t> order;
  auto push = [&](std::size_t i, std::size_t j) {
    const std::size_t k = grid.index({i, j});
    if (!grid.is_building(k)) order.push_back(k);
  };
  std::ptrdiff_t top = 0;
  std::ptrdiff_t left = 0;
  auto bottom = static_cast<std::ptrdiff_t>(grid.rows()) - 1;
  auto right = static_cast<std::ptrdiff_t>(grid.cols()) - 1;
  auto at = [](std::ptrdiff_t v) { return static_cast<std::size_t>(v); };
  while (top <= bottom && left <= right) {
    for (std::ptrdiff_t j = left; j <= right; ++j) push(at(top), at(j));
    for (std::ptrdiff_t i = top + 1; i <= bottom; ++i) push(at(i), at(right));
    if (top < bottom) {
      for (std::ptrdiff_t j = right - 1; j >= left; --j) push(at(bottom), at(j));
    }
    if (left < right) {
      for (std::ptrdiff_t i = bottom - 1; i > top; --i) push(at(i), at(left));
    }
    ++top;
    ++left;
    --bottom;
    --right;
  }
  return order;
}

std::vector<std::size_t> line_cells(const GridGeometry& grid, std::size_t from, std::size_t to) {
  const Cell a = grid.cell(from);
  const Cell b = grid.cell(to);
  auto r = static_cast<std::ptrdiff_t>(a.row);
  auto c = static_cast<std::ptrdiff_t>(a.col);
  const auto r1 = static_cast<std::ptrdiff_t>(b.row);
  const auto c1 = static_cast<std::ptrdiff_t>(b.col);
  const std::ptrdiff_t dr = std::abs(r1 - r);
  const std::ptrdiff_t dc = std::abs(c1 - c);
  const std::ptrdiff_t sr = r < r1 ? 1 : -1;
  const std::ptrdiff_t sc = c < c1 ? 1 : -1;
  std::ptrdiff_t err = dc - dr;
  std::vector<std::size_t> cells{from};
  while (r != r1 || c != c1) {
    // Bresenham: both coordinates may advance, giving 8-connected steps.
    const std::ptrdiff_t e2 = 2 * err;
    if (e2 > -dr) {
      err -= dr;
      c += sc;
    }
    if (e2 < dc) {
      err += dc;
      r += sr;
    }
    cells.push_back(grid.index({static_cast<std::size_t>(r), static_cast<std::size_t>(c)}));
  }
  return cells;
}

namespace {

bool traversable(const GridGeometry& grid, const std::vector<std::size_t>& cells) {
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    const auto nb = grid.free_neighbors(cells[i]);
    if (!std::binary_search(nb.begin(), nb.end(), cells[i + 1])) return false;
  }
  return true;
}

std::vector<std::size_t> route(const GridGeometry& grid, std::size_t from, std::size_t to) {
  PlannerConfig distance_only;
  distance_only.beta = 0.0;
  return shortest_path(grid, constant_cost_field(grid.size()), distance_only, from, to).waypoints;
}

}  // namespace

PatternPlanner::PatternPlanner(const GridGeometry& grid, std::vector<std::size_t> pattern)
    : grid_(grid), pattern_(std::move(pattern)) {
  if (pattern_.empty()) throw GeometryError("planner pattern is empty");
}

std::vector<std::size_t> PatternPlanner::next_leg(std::size_t current) {
  std::size_t target = pattern_[next_];
  if (target == current && pattern_.size() > 1) {
    next_ = (next_ + 1) % pattern_.size();
    target = pattern_[next_];
  }
  next_ = (next_ + 1) % pattern_.size();
  const auto nb = grid_.free_neighbors(current);
  if (std::binary_search(nb.begin(), nb.end(), target)) return {current, target};
  return route(grid_, current, target);
}

UniformPlanner::UniformPlanner(const GridGeometry& grid, std::uint64_t seed)
    : grid_(grid), rng_(seed) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.is_building(k)) free_.push_back(k);
  }
  if (free_.size() < 2) throw GeometryError("uniform planner needs two free points");
}

std::vector<std::size_t> UniformPlanner::next_leg(std::size_t current) {
  std::uniform_int_distribution<std::size_t> pick(0, free_.size() - 1);
  std::size_t target = current;
  while (target == current) target = free_[pick(rng_)];
  auto line = line_cells(grid_, current, target);
  if (traversable(grid_, line)) return line;
  return route(grid_, current, target);
}

std::unique_ptr<WaypointPlanner> make_grid_planner(const GridGeometry& grid) {
  return std::make_unique<PatternPlanner>(grid, grid_pattern(grid));
}

std::unique_ptr<WaypointPlanner> make_spiral_planner(const GridGeometry& grid) {
  return std::make_unique<PatternPlanner>(grid, spiral_pattern(grid));
}

std::unique_ptr<WaypointPlanner> make_uniform_planner(const GridGeometry& grid, std::uint64_t seed) {
  return std::make_unique<UniformPlanner>(grid, seed);
}

}  // namespace survey
