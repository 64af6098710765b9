#include "survey/model.hpp"

#include <cmath>
#include <numbers>

#include "survey/error.hpp"

namespace survey {

void validate(const Transmitter& tx) {
  if (!(tx.carrier_hz > 0.0)) throw ConfigError("carrier frequency must be positive");
  if (tx.position.z < 0.0) throw ConfigError("transmitter height must be non-negative");
}

void validate(const GaussianModelParams& p) {
  if (!(p.shadow_var >= 0.0)) throw ConfigError("shadow_var must be >= 0");
  if (!(p.shadow_corr_dist_m > 0.0)) throw ConfigError("shadow_corr_dist_m must be > 0");
  if (!(p.fading_var >= 0.0)) throw ConfigError("fading_var must be >= 0");
  if (!(p.noise_var >= 0.0)) throw ConfigError("noise_var must be >= 0");
  if (!(p.pathloss_exponent > 0.0)) throw ConfigError("pathloss_exponent must be > 0");
}

double shadowing_covariance(const Position2& a, const Position2& b,
                            const GaussianModelParams& params) {
  return params.shadow_var * std::exp2(-distance(a, b) / params.shadow_corr_dist_m);
}

double base_power(const Transmitter& tx, const Position2& x,
                  const GaussianModelParams& params) {
  const double dx = x.x - tx.position.x;
  const double dy = x.y - tx.position.y;
  const double dz = params.survey_height_m - tx.position.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(d > 0.0)) throw GeometryError("singular transmitter colocation");
  // Friis for exponent 2; the exponent scales the distance term only.
  const double loss = 10.0 * params.pathloss_exponent * std::log10(d) +
                      20.0 * std::log10(4.0 * std::numbers::pi * tx.carrier_hz / kSpeedOfLight);
  return tx.power_dbm - loss - params.shadow_mean;
}

std::vector<Position2> grid_positions(const GridGeometry& grid) {
  std::vector<Position2> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = grid.position(k);
  return out;
}

Eigen::MatrixXd shadowing_covariance_matrix(std::span<const Position2> a,
                                            std::span<const Position2> b,
                                            const GaussianModelParams& params) {
  Eigen::MatrixXd m(a.size(), b.size());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = shadowing_covariance(a[i], b[j], params);
    }
  }
  return m;
}

Eigen::VectorXd base_power_vector(const GridGeometry& grid, const Transmitter& tx,
                                  const GaussianModelParams& params) {
  Eigen::VectorXd v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = base_power(tx, grid.position(k), params);
  }
  return v;
}

double covariance_jitter(const GaussianModelParams& params) {
  return 1e-9 * params.shadow_var;
}

PriorModel::PriorModel(GridGeometry grid, GaussianModelParams params)
    : grid_(std::move(grid)), params_(params) {
  validate(params_);
  positions_ = grid_positions(grid_);
  shadow_cov_ = shadowing_covariance_matrix(positions_, positions_, params_);
  prior_cov_ = shadow_cov_;
  prior_cov_.diagonal().array() += params_.fading_var;

  const double jitter = covariance_jitter(params_);
  if (params_.shadow_var > 0.0) {
    Eigen::MatrixXd a = shadow_cov_;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance not PSD");
    shadow_factor_ = llt.matrixL();
    if (params_.fading_var == 0.0) prior_llt_ = std::move(llt);
  }
  degenerate_ = params_.shadow_var == 0.0 && params_.fading_var == 0.0;
  if (!degenerate_ && !(params_.shadow_var > 0.0 && params_.fading_var == 0.0)) {
    Eigen::MatrixXd a = prior_cov_;
    a.diagonal().array() += jitter;
    prior_llt_.compute(a);
    if (prior_llt_.info() != Eigen::Success) throw NumericalError("covariance not PSD");
  }
}

Eigen::VectorXd PriorModel::solve_prior(const Eigen::VectorXd& rhs) const {
  if (degenerate_) return Eigen::VectorXd::Zero(rhs.size());
  return prior_llt_.solve(rhs);
}

Eigen::VectorXd PriorModel::cross_cov(const Position2& x) const {
  Eigen::VectorXd c(static_cast<Eigen::Index>(positions_.size()));
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    c[k] = shadowing_covariance(x, positions_[static_cast<std::size_t>(k)], params_);
  }
  return c;
}

PriorModelPtr make_prior_model(const GridGeometry& grid,
                               const GaussianModelParams& params) {
  return std::make_shared<const PriorModel>(grid, params);
}

}  // namespace survey
