#pragma once

#include <Eigen/Core>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "survey/bridge.hpp"
#include "survey/online_bayes.hpp"
#include "survey/radio_map.hpp"
#include "survey/uncertainty.hpp"

namespace survey {

enum class EstimatorKind { online_bayes, batch, knn, bridge };

EstimatorKind parse_estimator_kind(const std::string& name);
std::string to_string(EstimatorKind kind);

struct EstimatorOptions {
  bool known_mean = true;
  bool robust = true;
  std::size_t knn_k = 5;
  std::optional<Endpoint> bridge_endpoint;
  std::chrono::milliseconds bridge_timeout = std::chrono::seconds(30);
};

/// Sequential map estimator fed one measurement at a time.
class Estimator {
 public:
  virtual ~Estimator() = default;

  virtual void add(const Measurement& m) = 0;
  virtual std::size_t num_measurements() const = 0;

  /// Estimate of the combined power over the grid (dB).
  virtual Eigen::VectorXd combined_estimate() = 0;
  /// One grid estimate per transmitter; empty if the estimator only sees the
  /// combined power.
  virtual std::vector<Eigen::VectorXd> per_tx_estimate() = 0;
  /// Per-point uncertainty, or nothing if the estimator provides none.
  virtual std::optional<Eigen::VectorXd> uncertainty() = 0;
  virtual UncertaintySource uncertainty_source() const = 0;
};

/// Builds an estimator for surveying `map`. The prior model must match the
/// map grid; it is ignored by the KNN and bridge estimators.
std::unique_ptr<Estimator> make_estimator(EstimatorKind kind, const PriorModelPtr& model,
                                          const RadioMap& map, const EstimatorOptions& options);

}  // namespace survey
