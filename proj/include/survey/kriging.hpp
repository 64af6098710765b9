#pragma once

#include <span>

#include "survey/model.hpp"
#include "survey/posterior.hpp"
#include "survey/radio_map.hpp"

namespace survey {

struct KrigingOptions {
  /// Use the known base power as prior mean; otherwise assume a zero-mean map
  /// (for imported maps whose transmitters are unknown).
  bool known_mean = true;
  /// Skip the N x N posterior covariance when only the estimate is needed.
  bool compute_cov = true;
};

/// Prior mean of the grid power vector under the chosen mean mode.
Eigen::VectorXd prior_mean(const PriorModel& model, const Transmitter* tx, bool known_mean);

/// Batch (kriging) posterior of transmitter `tx_index`'s grid powers given all
/// measurements at once. `tx` may be null only in zero-mean mode.
Posterior batch_posterior(std::span<const Measurement> measurements, std::size_t tx_index,
                          const PriorModel& model, const Transmitter* tx,
                          const KrigingOptions& options = {});

Posterior batch_posterior(std::span<const Measurement> measurements, const GridGeometry& grid,
                          const Transmitter& tx, const GaussianModelParams& params,
                          std::size_t tx_index = 0);

}  // namespace survey
