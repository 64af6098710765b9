#pragma once

#include <Eigen/Core>
#include <cstddef>

namespace survey {

/// Gaussian posterior over the grid power vector of one transmitter.
struct Posterior {
  Eigen::VectorXd mean;  ///< dB
  Eigen::MatrixXd cov;   ///< dB^2
  std::size_t num_measurements = 0;

  std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
};

/// max |cov - cov^T|.
double asymmetry(const Eigen::MatrixXd& cov);
/// Smallest eigenvalue of the symmetric part of cov.
double min_eigenvalue(const Eigen::MatrixXd& cov);

/// Symmetry to 1e-8 * max|cov| and eigenvalues >= -1e-6 * trace / N.
bool is_valid_covariance(const Eigen::MatrixXd& cov);

}  // namespace survey
