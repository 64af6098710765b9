#include <doctest.h>

#include <random>

#include "survey/error.hpp"
#include "survey/online_bayes.hpp"
#include "survey/uncertainty.hpp"

using namespace survey;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Posterior diag_posterior(const Eigen::VectorXd& d) {
  Posterior p;
  p.mean = Eigen::VectorXd::Zero(d.size());
  p.cov = d.asDiagonal();
  return p;
}

RadioMap flat_map(const GridGeometry& g, double value) {
  return make_radio_map(g, {}, {GridMatrix::Constant(static_cast<Eigen::Index>(g.rows()),
                                                     static_cast<Eigen::Index>(g.cols()), value)});
}

}  // namespace

TEST_CASE("bayes_uncertainty examples") {
  const std::vector<Posterior> one{diag_posterior(vec({1, 2, 3}))};
  CHECK(bayes_uncertainty(one).values == vec({1, 2, 3}));
  CHECK(bayes_uncertainty(one).smoothed == vec({1, 2, 3}));
  CHECK(bayes_uncertainty(one).source == UncertaintySource::bayesian);

  const std::vector<Posterior> two{diag_posterior(vec({4, 0})), diag_posterior(vec({6, 0}))};
  CHECK(bayes_uncertainty(two).values[0] == doctest::Approx(5.0));

  GridGeometry g(3, 3, 3.0);
  const auto model = make_prior_model(g, GaussianModelParams{});
  const std::vector<Posterior> prior{init_posterior(*model, nullptr, false)};
  CHECK(bayes_uncertainty(prior).values.cwiseAbs().minCoeff() == doctest::Approx(10.0));
  CHECK(bayes_uncertainty(prior).values.maxCoeff() == doctest::Approx(10.0));

  CHECK_THROWS_AS(bayes_uncertainty(std::span<const Posterior>{}), ConfigError);
  const std::vector<Posterior> mismatched{diag_posterior(vec({1, 2})), diag_posterior(vec({1}))};
  CHECK_THROWS_AS(bayes_uncertainty(mismatched), ConfigError);
}

TEST_CASE("total_uncertainty examples") {
  const std::vector<std::size_t> none;
  CHECK(total_uncertainty(Eigen::VectorXd::Ones(6), none) == 1.0);
  CHECK(total_uncertainty(Eigen::VectorXd::Zero(6), none) == 0.0);
  const std::vector<std::size_t> b0{0};
  CHECK(total_uncertainty(vec({2, 4, 6, 8}), b0) == doctest::Approx(6.0));
  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK_THROWS_AS(total_uncertainty(vec({2, 4, 6, 8}), all), GeometryError);
}

TEST_CASE("total uncertainty is invariant to transmitter order") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Posterior> posts;
  for (int t = 0; t < 4; ++t) {
    Eigen::VectorXd d(20);
    for (auto& x : d) x = u(rng);
    posts.push_back(diag_posterior(d));
  }
  const std::vector<std::size_t> b{3, 7};
  const double a = total_uncertainty(bayes_uncertainty(posts), b);
  std::reverse(posts.begin(), posts.end());
  CHECK(total_uncertainty(bayes_uncertainty(posts), b) == doctest::Approx(a).epsilon(1e-12));
  CHECK(a >= 0.0);
}

TEST_CASE("smooth examples") {
  const UncertaintyMap prev = make_uncertainty_map(vec({4, 4}), UncertaintySource::bayesian);
  CHECK(smooth(prev, vec({8, 1}), 1.0).smoothed == vec({8, 1}));
  CHECK(smooth(prev, vec({8, 4}), 0.25).smoothed[0] == doctest::Approx(5.0));
  CHECK(smooth(prev, vec({4, 4}), 0.25).smoothed == vec({4, 4}));
  CHECK(smooth(prev, vec({8, 1}), 0.25).values == vec({8, 1}));
  CHECK_THROWS_AS(smooth(prev, vec({8, 1}), 0.0), ConfigError);
  CHECK_THROWS_AS(smooth(prev, vec({8, 1}), 1.5), ConfigError);
  CHECK_THROWS_AS(make_uncertainty_map(vec({1, -1}), UncertaintySource::network), NumericalError);
  CHECK(make_uncertainty_map(vec({1, -1e-15}), UncertaintySource::bayesian).values[1] == 0.0);
}

TEST_CASE("smoothing is a convex combination") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::uniform_real_distribution<double> ua(1e-3, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd a(10), b(10);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const UncertaintyMap prev = make_uncertainty_map(a, UncertaintySource::network);
    const Eigen::VectorXd s = smooth(prev, b, ua(rng)).smoothed;
    for (Eigen::Index k = 0; k < 10; ++k) {
      CHECK(s[k] >= std::min(a[k], b[k]) - 1e-12);
      CHECK(s[k] <= std::max(a[k], b[k]) + 1e-12);
    }
  }
}

TEST_CASE("total uncertainty decreases along on-grid measurements") {
  GridGeometry g(8, 8, 3.0, {}, {9, 10});
  GaussianModelParams p;
  p.noise_var = 0.3;
  const auto model = make_prior_model(g, p);
  const std::vector<Transmitter> txs{{{3.0, 3.0, 20.0}, 10.0, 2.4e9}, {{20.0, 5.0, 20.0}, 10.0, 2.4e9}};
  OnlineSession session(model, txs);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  double prev = total_uncertainty(bayes_uncertainty(session), g.buildings());
  CHECK(prev == doctest::Approx(10.0));
  for (std::size_t i = 0; i < 80; ++i) {
    session.add({g.position(pick(rng)), {-50.0, -55.0}, i});
    const double cur = total_uncertainty(bayes_uncertainty(session), g.buildings());
    CHECK(cur <= prev + 1e-8);
    prev = cur;
  }
}

TEST_CASE("rmse examples") {
  GridGeometry g(3, 4, 3.0, {}, {5});
  const RadioMap map = flat_map(g, -50.0);
  const Eigen::VectorXd truth = flat(map.combined_power_db);
  CHECK(rmse(map, truth) == 0.0);
  CHECK(rmse(map, truth.array() + 3.0) == doctest::Approx(3.0));
  Eigen::VectorXd off = truth;
  off[5] += 40.0;
  CHECK(rmse(map, off) == 0.0);
  CHECK_THROWS_AS(rmse(map, Eigen::VectorXd::Zero(3)), ConfigError);

  const std::vector<Eigen::VectorXd> per{truth.array() + 2.0};
  CHECK(rmse_per_transmitter(map, per) == doctest::Approx(2.0));
  CHECK_THROWS_AS(rmse_per_transmitter(map, std::span<const Eigen::VectorXd>{}), ConfigError);

  const std::vector<std::size_t> all{0, 1};
  CHECK_THROWS_AS(masked_rmse(vec({1, 2}), vec({1, 2}), all), GeometryError);
}

TEST_CASE("knn estimate") {
  GridGeometry g(3, 3, 1.0);
  SUBCASE("fewer measurements than K average everything") {
    const std::vector<Position2> loc{{0, 0}, {2, 2}};
    const std::vector<double> val{1.0, 3.0};
    const Eigen::VectorXd est = knn_estimate(loc, val, g, 5);
    CHECK(est.minCoeff() == doctest::Approx(2.0));
    CHECK(est.maxCoeff() == doctest::Approx(2.0));
  }
  SUBCASE("K = 1 picks the nearest, ties by acquisition order") {
    const std::vector<Position2> loc{{0, 0}, {2, 0}};
    const std::vector<double> val{1.0, 3.0};
    const Eigen::VectorXd est = knn_estimate(loc, val, g, 1);
    CHECK(est[g.index({0, 0})] == 1.0);
    CHECK(est[g.index({0, 2})] == 3.0);
    CHECK(est[g.index({1, 1})] == 1.0);
  }
  SUBCASE("constant measurements give a constant map") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<Position2> loc;
    for (int i = 0; i < 12; ++i) loc.push_back({u(rng), u(rng)});
    const std::vector<double> val(12, -61.0);
    const Eigen::VectorXd est = knn_estimate(loc, val, g);
    CHECK((est.array() + 61.0).abs().maxCoeff() <= 1e-12);
  }
  SUBCASE("errors") {
    const std::vector<Position2> loc{{0, 0}};
    const std::vector<double> val{1.0, 2.0};
    CHECK_THROWS_AS(knn_estimate(loc, val, g), ConfigError);
    CHECK_THROWS_AS(knn_estimate(loc, std::span(val).first(1), g, 0), ConfigError);
  }
}
