#include "survey/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survey/error.hpp"

namespace survey {

UncertaintyMap make_uncertainty_map(Eigen::VectorXd values, UncertaintySource source) {
  if (values.size() > 0 && values.minCoeff() < 0.0) {
    if (values.minCoeff() < -1e-9 * std::max(1.0, values.cwiseAbs().maxCoeff())) {
      throw NumericalError("negative uncertainty");
    }
    // Round-off in a downdated covariance can leave tiny negative variances.
    values = values.cwiseMax(0.0);
  }
  UncertaintyMap m;
  m.smoothed = values;
  m.values = std::move(values);
  m.source = source;
  return m;
}

UncertaintyMap bayes_uncertainty(std::span<const Posterior> posteriors) {
  if (posteriors.empty()) throw ConfigError("bayes_uncertainty needs at least one posterior");
  Eigen::VectorXd acc = posteriors.front().cov.diagonal();
  for (std::size_t t = 1; t < posteriors.size(); ++t) {
    if (posteriors[t].cov.rows() != acc.size()) throw ConfigError("posterior sizes differ");
    acc += posteriors[t].cov.diagonal();
  }
  acc /= static_cast<double>(posteriors.size());
  return make_uncertainty_map(std::move(acc), UncertaintySource::bayesian);
}

UncertaintyMap bayes_uncertainty(const OnlineSession& session) {
  // Every transmitter shares the session covariance, so the average is its diagonal.
  return make_uncertainty_map(session.cov().diagonal(), UncertaintySource::bayesian);
}

namespace {

std::vector<bool> building_mask(std::size_t n, std::span<const std::size_t> buildings) {
  std::vector<bool> mask(n, false);
  for (std::size_t b : buildings) {
    if (b >= n) throw ConfigError("building index outside grid");
    mask[b] = true;
  }
  return mask;
}

}  // namespace

double total_uncertainty(const Eigen::VectorXd& values, std::span<const std::size_t> buildings) {
  const auto mask = building_mask(static_cast<std::size_t>(values.size()), buildings);
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) continue;
    sum += values[k];
    ++count;
  }
  if (count == 0) throw GeometryError("all grid points are buildings");
  return sum / static_cast<double>(count);
}

double total_uncertainty(const UncertaintyMap& umap, std::span<const std::size_t> buildings) {
  return total_uncertainty(umap.values, buildings);
}

UncertaintyMap smooth(const UncertaintyMap& prev, const Eigen::VectorXd& fresh, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("smoothing factor must be in (0, 1]");
  if (fresh.size() != prev.smoothed.size()) throw ConfigError("uncertainty sizes differ");
  UncertaintyMap next;
  next.values = fresh.cwiseMax(0.0);
  next.source = prev.source;
  if (alpha == 1.0) {
    next.smoothed = next.values;
  } else {
    next.smoothed = alpha * next.values + (1.0 - alpha) * prev.smoothed;
  }
  return next;
}

double masked_rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate,
                   std::span<const std::size_t> buildings) {
  if (truth.size() != estimate.size()) throw ConfigError("estimate size does not match map");
  const auto mask = building_mask(static_cast<std::size_t>(truth.size()), buildings);
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index k = 0; k < truth.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) continue;
    const double e = truth[k] - estimate[k];
    sum += e * e;
    ++count;
  }
  if (count == 0) throw GeometryError("all grid points are buildings");
  return std::sqrt(sum / static_cast<double>(count));
}

double rmse(const RadioMap& true_map, const Eigen::VectorXd& estimate) {
  return masked_rmse(flat(true_map.combined_power_db), estimate, true_map.grid.buildings());
}

double rmse_per_transmitter(const RadioMap& true_map, std::span<const Eigen::VectorXd> estimates) {
  if (estimates.size() != true_map.num_transmitters()) {
    throw ConfigError("one estimate per transmitter required");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const double r = masked_rmse(flat(true_map.per_tx_power_db[t]), estimates[t],
                                 true_map.grid.buildings());
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

Eigen::VectorXd knn_estimate(std::span<const Position2> locations, std::span<const double> values,
                             const GridGeometry& grid, std::size_t k) {
  if (locations.size() != values.size()) throw ConfigError("locations and values differ in length");
  if (k == 0) throw ConfigError("K must be positive");
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (locations.empty()) return out;
  const std::size_t use = std::min(k, locations.size());
  std::vector<std::size_t> order(locations.size());
  std::vector<double> d2(locations.size());
  for (Eigen::Index g = 0; g < n; ++g) {
    const Position2 p = grid.position(static_cast<std::size_t>(g));
    for (std::size_t i = 0; i < locations.size(); ++i) {
      const double dx = locations[i].x - p.x;
      const double dy = locations[i].y - p.y;
      d2[i] = dx * dx + dy * dy;
    }
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(use), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
                      });
    double sum = 0.0;
    for (std::size_t i = 0; i < use; ++i) sum += values[order[i]];
    out[g] = sum / static_cast<double>(use);
  }
  return out;
}

}  // namespace survey
