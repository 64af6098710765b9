#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "survey/model.hpp"
#include "survey/posterior.hpp"
#include "survey/radio_map.hpp"

namespace survey {

/// Gaussian likelihood of one measurement given the grid power vector:
/// E[y | rho] = a^T rho + b, Var[y | rho] = lik_var.
struct UpdateTerms {
  Eigen::VectorXd a;
  double b = 0.0;
  double lik_var = 0.0;
  /// Grid index when the measurement sits on a grid point; a is then e_k.
  std::ptrdiff_t grid_index = -1;
};

struct OnlineOptions {
  bool known_mean = true;
  /// Clamp lik_var below at 1e-12 instead of raising on degenerate updates.
  bool robust = false;
};

/// Prior posterior: mean = base power (or 0), cov = C_s + fading_var * I.
Posterior init_posterior(const PriorModel& model, const Transmitter* tx, bool known_mean = true);
Posterior init_posterior(const GridGeometry& grid, const Transmitter& tx,
                         const GaussianModelParams& params);

/// Likelihood terms for a measurement at x. On grid points these are exact
/// closed forms (a = e_k, b = 0, lik_var = noise_var); elsewhere they come
/// from one solve against the prior covariance factor.
UpdateTerms compute_update_terms(const Position2& x, const PriorModel& model,
                                 const Transmitter* tx, bool known_mean = true);
UpdateTerms compute_update_terms(const Position2& x, const GridGeometry& grid,
                                 const Transmitter& tx, const GaussianModelParams& params);

/// Rank-one conditioning of prev on y.
Posterior update_posterior(const Posterior& prev, const UpdateTerms& terms, double y,
                           bool robust = false);

/// Sequential estimator for all transmitters of one map.
///
/// The posterior covariance depends only on measurement locations and the
/// shared model, so one covariance serves every transmitter and only the
/// means are kept per transmitter. Each update costs O(N^2) regardless of how
/// many measurements came before.
class OnlineSession {
 public:
  /// `txs` gives the known-mean prior; in zero-mean mode pass the transmitter
  /// count through `num_tx` and leave `txs` empty.
  OnlineSession(PriorModelPtr model, std::vector<Transmitter> txs, OnlineOptions options = {},
                std::size_t num_tx = 0);

  void add(const Measurement& m);

  std::size_t num_transmitters() const { return means_.size(); }
  std::size_t num_measurements() const { return count_; }
  const Eigen::VectorXd& mean(std::size_t tx) const { return means_[tx]; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  Posterior posterior(std::size_t tx) const;
  const PriorModel& model() const { return *model_; }

 private:
  PriorModelPtr model_;
  std::vector<Transmitter> txs_;
  OnlineOptions options_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::VectorXd> prior_means_;
  Eigen::MatrixXd cov_;
  std::size_t count_ = 0;
};

}  // namespace survey
