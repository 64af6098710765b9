#include "survey/posterior.hpp"

#include <Eigen/Eigenvalues>

namespace survey {

double asymmetry(const Eigen::MatrixXd& cov) {
  return (cov - cov.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_valid_covariance(const Eigen::MatrixXd& cov) {
  if (cov.size() == 0) return true;
  const double scale = cov.cwiseAbs().maxCoeff();
  if (asymmetry(cov) > 1e-8 * scale) return false;
  const double n = static_cast<double>(cov.rows());
  return min_eigenvalue(cov) >= -1e-6 * cov.trace() / n;
}

}  // namespace survey
