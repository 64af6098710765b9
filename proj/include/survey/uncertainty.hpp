#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "survey/grid.hpp"
#include "survey/online_bayes.hpp"
#include "survey/posterior.hpp"
#include "survey/radio_map.hpp"

namespace survey {

enum class UncertaintySource { bayesian, network };

/// Per-grid-point uncertainty: raw values and their running average.
/// Bayesian values are variances (dB^2), network values dB.
struct UncertaintyMap {
  Eigen::VectorXd values;
  Eigen::VectorXd smoothed;
  UncertaintySource source = UncertaintySource::bayesian;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Wraps fresh values; smoothed starts equal to values. Round-off negatives
/// are clamped to 0; anything clearly negative throws NumericalError.
UncertaintyMap make_uncertainty_map(Eigen::VectorXd values, UncertaintySource source);

/// Average over transmitters of the posterior variances.
UncertaintyMap bayes_uncertainty(std::span<const Posterior> posteriors);
UncertaintyMap bayes_uncertainty(const OnlineSession& session);

/// Mean of the values outside buildings.
double total_uncertainty(const Eigen::VectorXd& values, std::span<const std::size_t> buildings);
double total_uncertainty(const UncertaintyMap& umap, std::span<const std::size_t> buildings);

/// smoothed = alpha * fresh + (1 - alpha) * prev.smoothed, element-wise.
UncertaintyMap smooth(const UncertaintyMap& prev, const Eigen::VectorXd& fresh, double alpha);

/// Root mean squared error over grid points outside buildings.
double masked_rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate,
                   std::span<const std::size_t> buildings);
/// RMSE of a combined-power estimate against the map's combined power.
double rmse(const RadioMap& true_map, const Eigen::VectorXd& estimate);
/// RMSE pooled over every transmitter's power map.
double rmse_per_transmitter(const RadioMap& true_map, std::span<const Eigen::VectorXd> estimates);

/// K-nearest-neighbour estimate: each grid point takes the plain average of
/// its K nearest measurement values (ties broken by acquisition order).
Eigen::VectorXd knn_estimate(std::span<const Position2> locations, std::span<const double> values,
                             const GridGeometry& grid, std::size_t k = 5);

}  // namespace survey
