#include "survey/estimators.hpp"

#include "survey/error.hpp"
#include "survey/kriging.hpp"

namespace survey {

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "online_bayes") return EstimatorKind::online_bayes;
  if (name == "batch" || name == "kriging") return EstimatorKind::batch;
  if (name == "knn") return EstimatorKind::knn;
  if (name == "bridge") return EstimatorKind::bridge;
  throw ConfigError("unknown estimator '" + name + "'");
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::online_bayes: return "online_bayes";
    case EstimatorKind::batch: return "batch";
    case EstimatorKind::knn: return "knn";
    case EstimatorKind::bridge: return "bridge";
  }
  return "unknown";
}

namespace {

class OnlineEstimator : public Estimator {
 public:
  OnlineEstimator(PriorModelPtr model, const RadioMap& map, const EstimatorOptions& opt)
      : session_(std::move(model), opt.known_mean ? map.transmitters : std::vector<Transmitter>{},
                 OnlineOptions{opt.known_mean, opt.robust}, map.num_transmitters()) {}

  void add(const Measurement& m) override { session_.add(m); }
  std::size_t num_measurements() const override { return session_.num_measurements(); }

  Eigen::VectorXd combined_estimate() override { return combine_db(per_tx_estimate()); }

  std::vector<Eigen::VectorXd> per_tx_estimate() override {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t t = 0; t < session_.num_transmitters(); ++t) out.push_back(session_.mean(t));
    return out;
  }

  std::optional<Eigen::VectorXd> uncertainty() override {
    return bayes_uncertainty(session_).values;
  }
  UncertaintySource uncertainty_source() const override { return UncertaintySource::bayesian; }

 private:
  OnlineSession session_;
};

class BatchEstimator : public Estimator {
 public:
  BatchEstimator(PriorModelPtr model, const RadioMap& map, const EstimatorOptions& opt)
      : model_(std::move(model)), txs_(map.transmitters), count_(map.num_transmitters()),
        known_mean_(opt.known_mean) {
    if (known_mean_ && txs_.size() != count_) {
      throw ConfigError("known-mean estimation needs the map transmitters");
    }
  }

  void add(const Measurement& m) override { measurements_.push_back(m); }
  std::size_t num_measurements() const override { return measurements_.size(); }

  Eigen::VectorXd combined_estimate() override { return combine_db(per_tx_estimate()); }

  std::vector<Eigen::VectorXd> per_tx_estimate() override {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t t = 0; t < count_; ++t) {
      out.push_back(solve(t, false).mean);
    }
    return out;
  }

  std::optional<Eigen::VectorXd> uncertainty() override {
    // The covariance does not depend on the measured values.
    const Posterior post = solve(0, true);
    return bayes_uncertainty(std::span<const Posterior>(&post, 1)).values;
  }
  UncertaintySource uncertainty_source() const override { return UncertaintySource::bayesian; }

 private:
  Posterior solve(std::size_t t, bool cov) const {
    const Transmitter* tx = known_mean_ ? &txs_[t] : nullptr;
    return batch_posterior(measurements_, t, *model_, tx, KrigingOptions{known_mean_, cov});
  }

  PriorModelPtr model_;
  std::vector<Transmitter> txs_;
  std::size_t count_;
  bool known_mean_;
  std::vector<Measurement> measurements_;
};

class KnnEstimator : public Estimator {
 public:
  KnnEstimator(const RadioMap& map, const EstimatorOptions& opt)
      : grid_(map.grid), count_(map.num_transmitters()), k_(opt.knn_k), values_(count_) {}

  void add(const Measurement& m) override {
    if (m.per_tx_power_db.size() != count_) throw ConfigError("measurement transmitter count mismatch");
    locations_.push_back(m.location);
    combined_.push_back(m.combined_db());
    for (std::size_t t = 0; t < count_; ++t) values_[t].push_back(m.per_tx_power_db[t]);
  }
  std::size_t num_measurements() const override { return locations_.size(); }

  Eigen::VectorXd combined_estimate() override {
    return knn_estimate(locations_, combined_, grid_, k_);
  }

  std::vector<Eigen::VectorXd> per_tx_estimate() override {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t t = 0; t < count_; ++t) {
      out.push_back(knn_estimate(locations_, values_[t], grid_, k_));
    }
    return out;
  }

  std::optional<Eigen::VectorXd> uncertainty() override { return std::nullopt; }
  UncertaintySource uncertainty_source() const override { return UncertaintySource::network; }

 private:
  GridGeometry grid_;
  std::size_t count_;
  std::size_t k_;
  std::vector<Position2> locations_;
  std::vector<double> combined_;
  std::vector<std::vector<double>> values_;
};

// Sends the combined-power observation planes after every measurement.
class BridgeEstimator : public Estimator {
 public:
  BridgeEstimator(const RadioMap& map, const EstimatorOptions& opt)
      : grid_(map.grid), client_(*opt.bridge_endpoint, opt.bridge_timeout) {}

  void add(const Measurement& m) override {
    locations_.push_back(m.location);
    values_.push_back(m.combined_db());
    stale_ = true;
  }
  std::size_t num_measurements() const override { return locations_.size(); }

  Eigen::VectorXd combined_estimate() override {
    refresh();
    return mean_;
  }
  std::vector<Eigen::VectorXd> per_tx_estimate() override { return {}; }
  std::optional<Eigen::VectorXd> uncertainty() override {
    refresh();
    return sigma_;
  }
  UncertaintySource uncertainty_source() const override { return UncertaintySource::network; }

 private:
  void refresh() {
    if (!stale_) return;
    const EstimateResponse resp =
        client_.request_estimate(build_observation_planes(locations_, values_, grid_));
    mean_ = Eigen::Map<const Eigen::VectorXd>(resp.mean_map.data(),
                                              static_cast<Eigen::Index>(resp.mean_map.size()));
    sigma_ = Eigen::Map<const Eigen::VectorXd>(resp.uncertainty_map.data(),
                                               static_cast<Eigen::Index>(resp.uncertainty_map.size()));
    stale_ = false;
  }

  GridGeometry grid_;
  BridgeClient client_;
  std::vector<Position2> locations_;
  std::vector<double> values_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd sigma_;
  bool stale_ = true;
};

}  // namespace

std::unique_ptr<Estimator> make_estimator(EstimatorKind kind, const PriorModelPtr& model,
                                          const RadioMap& map, const EstimatorOptions& options) {
  if ((kind == EstimatorKind::online_bayes || kind == EstimatorKind::batch) &&
      (!model || model->grid().size() != map.grid.size())) {
    throw ConfigError("prior model does not match the map grid");
  }
  if (options.known_mean && map.transmitters.size() != map.num_transmitters() &&
      (kind == EstimatorKind::online_bayes || kind == EstimatorKind::batch)) {
    throw ConfigError("map has no transmitter metadata; use the zero-mean prior");
  }
  switch (kind) {
    case EstimatorKind::online_bayes: return std::make_unique<OnlineEstimator>(model, map, options);
    case EstimatorKind::batch: return std::make_unique<BatchEstimator>(model, map, options);
    case EstimatorKind::knn: return std::make_unique<KnnEstimator>(map, options);
    case EstimatorKind::bridge:
      if (!options.bridge_endpoint) throw ConfigError("bridge estimator needs an endpoint");
      return std::make_unique<BridgeEstimator>(map, options);
  }
  throw ConfigError("unknown estimator");
}

}  // namespace survey
