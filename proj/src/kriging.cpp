#include "survey/kriging.hpp"

#include <Eigen/Cholesky>

#include "survey/error.hpp"

namespace survey {

Eigen::VectorXd prior_mean(const PriorModel& model, const Transmitter* tx, bool known_mean) {
  if (!known_mean) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.grid().size()));
  if (tx == nullptr) throw ConfigError("known-mean estimation needs the transmitter");
  return base_power_vector(model.grid(), *tx, model.params());
}

Posterior batch_posterior(std::span<const Measurement> measurements, std::size_t tx_index,
                          const PriorModel& model, const Transmitter* tx,
                          const KrigingOptions& options) {
  const GaussianModelParams& params = model.params();
  Posterior post;
  post.mean = prior_mean(model, tx, options.known_mean);
  post.num_measurements = measurements.size();
  // Without shadowing, measurements carry no information about the grid.
  if (measurements.empty() || params.shadow_var == 0.0) {
    if (options.compute_cov) post.cov = model.prior_cov();
    return post;
  }

  const double noise = params.fading_var + params.noise_var;
  std::vector<Position2> locs;
  Eigen::VectorXd innovation(static_cast<Eigen::Index>(measurements.size()));
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    const Measurement& m = measurements[i];
    if (tx_index >= m.per_tx_power_db.size()) throw ConfigError("measurement lacks transmitter value");
    locs.push_back(m.location);
    const double mean_at = options.known_mean ? base_power(*tx, m.location, params) : 0.0;
    innovation[static_cast<Eigen::Index>(i)] = m.per_tx_power_db[tx_index] - mean_at;
  }
  if (noise == 0.0) {
    const double tol = 1e-9 * model.grid().spacing();
    for (std::size_t i = 0; i < locs.size(); ++i) {
      for (std::size_t j = i + 1; j < locs.size(); ++j) {
        if (distance(locs[i], locs[j]) <= tol) {
          throw NumericalError("duplicate noiseless measurements");
        }
      }
    }
  }

  Eigen::MatrixXd gram = shadowing_covariance_matrix(locs, locs, params);
  gram.diagonal().array() += noise + covariance_jitter(params);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("duplicate noiseless measurements");

  // cross: C_{s_t, s^G}, one row per measurement.
  const Eigen::MatrixXd cross = shadowing_covariance_matrix(locs, model.positions(), params);
  // mean = rho_bar^G + C_{sG,st} (C_st + s2 I)^{-1} (y - rho_bar_t)
  post.mean.noalias() += cross.transpose() * llt.solve(innovation);
  if (options.compute_cov) {
    const Eigen::MatrixXd w = llt.matrixL().solve(cross);
    post.cov = model.prior_cov();
    post.cov.noalias() -= w.transpose() * w;
  }
  return post;
}

Posterior batch_posterior(std::span<const Measurement> measurements, const GridGeometry& grid,
                          const Transmitter& tx, const GaussianModelParams& params,
                          std::size_t tx_index) {
  const PriorModel model(grid, params);
  return batch_posterior(measurements, tx_index, model, &tx);
}

}  // namespace survey
