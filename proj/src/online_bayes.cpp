#include "survey/online_bayes.hpp"

#include <algorithm>
#include <cmath>

#include "survey/error.hpp"
#include "survey/kriging.hpp"

namespace survey {

namespace {

constexpr double kMinLikVar = 1e-12;

// Location-only part of the update terms; b is filled in per transmitter.
UpdateTerms geometry_terms(const Position2& x, const PriorModel& model) {
  const GaussianModelParams& p = model.params();
  const auto n = static_cast<Eigen::Index>(model.grid().size());
  UpdateTerms terms;
  const std::ptrdiff_t k = model.grid().exact_index(x);
  if (model.degenerate()) {
    terms.a = Eigen::VectorXd::Zero(n);
    terms.lik_var = p.noise_var;
    return terms;
  }
  if (k >= 0) {
    // C_{y,rho} is row k of the prior covariance, so a = e_k exactly.
    terms.a = Eigen::VectorXd::Unit(n, k);
    terms.lik_var = p.noise_var;
    terms.grid_index = k;
    return terms;
  }
  // Off grid the fading cross-covariance vanishes.
  const Eigen::VectorXd c = model.cross_cov(x);
  terms.a = model.solve_prior(c);
  terms.lik_var = std::max(0.0, p.shadow_var + p.fading_var + p.noise_var - c.dot(terms.a));
  return terms;
}

double offset_for(const UpdateTerms& terms, const Position2& x, const PriorModel& model,
                  const Transmitter* tx, const Eigen::VectorXd& prior) {
  if (terms.grid_index >= 0) return 0.0;
  const double at_x = tx ? base_power(*tx, x, model.params()) : 0.0;
  return at_x - terms.a.dot(prior);
}

struct Gain {
  Eigen::VectorXd g;  // C_prev a
  double s = 0.0;     // lik_var + a^T C_prev a
};

Gain gain(const Eigen::MatrixXd& cov, const UpdateTerms& terms, bool robust) {
  Gain out;
  if (terms.grid_index >= 0) {
    out.g = cov.col(terms.grid_index);
  } else {
    out.g.noalias() = cov * terms.a;
  }
  double q = terms.a.dot(out.g);
  double lik = terms.lik_var;
  if (robust) {
    lik = std::max(lik, kMinLikVar);
    q = std::max(q, 0.0);
  } else {
    const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
    if (lik <= 0.0 && q <= 1e-12 * scale) {
      throw NumericalError("degenerate repeated noiseless measurement");
    }
  }
  out.s = lik + q;
  if (!(out.s > 0.0)) throw NumericalError("degenerate repeated noiseless measurement");
  return out;
}

// C <- C - g g^T / s, written as h h^T so the result stays exactly symmetric.
void downdate(Eigen::MatrixXd& cov, const Gain& gain) {
  const Eigen::VectorXd h = gain.g / std::sqrt(gain.s);
  cov.noalias() -= h * h.transpose();
}

}  // namespace

Posterior init_posterior(const PriorModel& model, const Transmitter* tx, bool known_mean) {
  return Posterior{prior_mean(model, tx, known_mean), model.prior_cov(), 0};
}

Posterior init_posterior(const GridGeometry& grid, const Transmitter& tx,
                         const GaussianModelParams& params) {
  return init_posterior(PriorModel(grid, params), &tx);
}

UpdateTerms compute_update_terms(const Position2& x, const PriorModel& model,
                                 const Transmitter* tx, bool known_mean) {
  UpdateTerms terms = geometry_terms(x, model);
  if (known_mean && tx == nullptr) throw ConfigError("known-mean estimation needs the transmitter");
  const Transmitter* mean_tx = known_mean ? tx : nullptr;
  if (terms.grid_index < 0) {
    terms.b = offset_for(terms, x, model, mean_tx, prior_mean(model, mean_tx, known_mean));
  }
  return terms;
}

UpdateTerms compute_update_terms(const Position2& x, const GridGeometry& grid,
                                 const Transmitter& tx, const GaussianModelParams& params) {
  return compute_update_terms(x, PriorModel(grid, params), &tx);
}

Posterior update_posterior(const Posterior& prev, const UpdateTerms& terms, double y, bool robust) {
  const Gain k = gain(prev.cov, terms, robust);
  Posterior next;
  const double innovation = y - terms.b - terms.a.dot(prev.mean);
  next.mean = prev.mean + k.g * (innovation / k.s);
  next.cov = prev.cov;
  downdate(next.cov, k);
  next.cov = 0.5 * (next.cov + next.cov.transpose()).eval();
  next.num_measurements = prev.num_measurements + 1;
  return next;
}

OnlineSession::OnlineSession(PriorModelPtr model, std::vector<Transmitter> txs,
                             OnlineOptions options, std::size_t num_tx)
    : model_(std::move(model)), txs_(std::move(txs)), options_(options) {
  const std::size_t count = options_.known_mean ? txs_.size() : std::max(num_tx, txs_.size());
  if (count == 0) throw ConfigError("online session needs at least one transmitter");
  for (std::size_t t = 0; t < count; ++t) {
    const Transmitter* tx = options_.known_mean ? &txs_[t] : nullptr;
    prior_means_.push_back(prior_mean(*model_, tx, options_.known_mean));
  }
  means_ = prior_means_;
  cov_ = model_->prior_cov();
}

void OnlineSession::add(const Measurement& m) {
  if (m.per_tx_power_db.size() != means_.size()) {
    throw ConfigError("measurement transmitter count does not match session");
  }
  const UpdateTerms terms = geometry_terms(m.location, *model_);
  const Gain k = gain(cov_, terms, options_.robust);
  for (std::size_t t = 0; t < means_.size(); ++t) {
    const Transmitter* tx = options_.known_mean ? &txs_[t] : nullptr;
    const double b = offset_for(terms, m.location, *model_, tx, prior_means_[t]);
    const double innovation = m.per_tx_power_db[t] - b - terms.a.dot(means_[t]);
    means_[t] += k.g * (innovation / k.s);
  }
  downdate(cov_, k);
  ++count_;
}

Posterior OnlineSession::posterior(std::size_t tx) const {
  return Posterior{means_.at(tx), cov_, count_};
}

}  // namespace survey
