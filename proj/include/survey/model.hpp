#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <memory>
#include <span>
#include <vector>

#include "survey/grid.hpp"

namespace survey {

inline constexpr double kSpeedOfLight = 299'792'458.0;

struct Position3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Transmitter {
  Position3 position;
  double power_dbm = 10.0;
  double carrier_hz = 2.4e9;
};

void validate(const Transmitter& tx);

/// Constants of the log-normal shadowing model. Variances are in dB^2.
struct GaussianModelParams {
  double shadow_var = 10.0;          ///< variance of the shadowing loss
  double shadow_corr_dist_m = 50.0;  ///< distance at which correlation halves
  double shadow_mean = 0.0;          ///< mean shadowing loss (dB)
  double fading_var = 0.0;
  double noise_var = 0.0;
  double pathloss_exponent = 2.0;
  double survey_height_m = 0.0;  ///< UAV altitude above the map plane
};

void validate(const GaussianModelParams& params);

/// Gudmundson covariance sigma^2 * 2^(-d / delta).
double shadowing_covariance(const Position2& a, const Position2& b,
                            const GaussianModelParams& params);

/// Deterministic part of the received power at x: transmit power plus
/// free-space gain minus the mean shadowing loss. Isotropic antennas.
double base_power(const Transmitter& tx, const Position2& x,
                  const GaussianModelParams& params);

std::vector<Position2> grid_positions(const GridGeometry& grid);

Eigen::MatrixXd shadowing_covariance_matrix(std::span<const Position2> a,
                                            std::span<const Position2> b,
                                            const GaussianModelParams& params);

Eigen::VectorXd base_power_vector(const GridGeometry& grid, const Transmitter& tx,
                                  const GaussianModelParams& params);

/// Diagonal jitter added before every factorization of a shadowing
/// covariance: 1e-9 * shadow_var.
double covariance_jitter(const GaussianModelParams& params);

/// Prior second-order statistics of the grid power vector, shared by the map
/// generator and the estimators. Immutable once built.
class PriorModel {
 public:
  PriorModel(GridGeometry grid, GaussianModelParams params);

  const GridGeometry& grid() const { return grid_; }
  const GaussianModelParams& params() const { return params_; }
  std::span<const Position2> positions() const { return positions_; }

  /// C_s: shadowing covariance over the grid.
  const Eigen::MatrixXd& shadow_cov() const { return shadow_cov_; }
  /// C_s + fading_var * I: prior covariance of the grid power vector.
  const Eigen::MatrixXd& prior_cov() const { return prior_cov_; }

  /// Lower Cholesky factor of C_s + jitter * I. Empty when shadow_var is 0.
  const Eigen::MatrixXd& shadow_factor() const { return shadow_factor_; }

  /// Solves (C_s + fading_var * I + jitter * I) x = rhs.
  Eigen::VectorXd solve_prior(const Eigen::VectorXd& rhs) const;

  /// True if the prior covariance is identically zero (deterministic map).
  bool degenerate() const { return degenerate_; }

  /// Shadowing covariance between an arbitrary point and every grid point.
  Eigen::VectorXd cross_cov(const Position2& x) const;

 private:
  GridGeometry grid_;
  GaussianModelParams params_;
  std::vector<Position2> positions_;
  Eigen::MatrixXd shadow_cov_;
  Eigen::MatrixXd prior_cov_;
  Eigen::MatrixXd shadow_factor_;
  Eigen::LLT<Eigen::MatrixXd> prior_llt_;
  bool degenerate_ = false;
};

using PriorModelPtr = std::shared_ptr<const PriorModel>;

PriorModelPtr make_prior_model(const GridGeometry& grid,
                               const GaussianModelParams& params);

}  // namespace survey
