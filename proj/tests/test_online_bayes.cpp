#include <doctest.h>

#include <Eigen/LU>
#include <chrono>
#include <random>

#include "survey/error.hpp"
#include "survey/kriging.hpp"
#include "survey/online_bayes.hpp"
#include "survey/rng.hpp"

using namespace survey;

namespace {

const Transmitter kTx{{12.0, 30.0, 20.0}, 10.0, 2.4e9};

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Posterior run_online(const std::vector<Measurement>& m, const PriorModel& model,
                     bool robust = false) {
  Posterior post = init_posterior(model, &kTx);
  for (const auto& x : m) {
    post = update_posterior(post, compute_update_terms(x.location, model, &kTx),
                            x.per_tx_power_db[0], robust);
  }
  return post;
}

}  // namespace

TEST_CASE("initial posterior is the prior") {
  GridGeometry g(4, 5, 3.0);
  GaussianModelParams p;
  const Posterior post = init_posterior(g, kTx, p);
  CHECK(post.cov.diagonal().minCoeff() == 10.0);
  CHECK(post.cov.diagonal().maxCoeff() == 10.0);
  CHECK(post.mean == base_power_vector(g, kTx, p));
  const Posterior batch = batch_posterior({}, g, kTx, p);
  CHECK(post.mean == batch.mean);
  CHECK(post.cov == batch.cov);
}

TEST_CASE("update terms on a grid point are exact") {
  GridGeometry g(4, 4, 3.0);
  const GaussianModelParams p;
  const UpdateTerms t = compute_update_terms(g.position(9), g, kTx, p);
  CHECK(t.grid_index == 9);
  CHECK(max_abs(t.a - Eigen::VectorXd::Unit(16, 9)) <= 1e-6);
  CHECK(std::abs(t.b) <= 1e-6);
  CHECK(t.lik_var <= 1e-6);
}

TEST_CASE("update terms decorrelate far from the grid") {
  GridGeometry g(4, 4, 3.0);
  GaussianModelParams p;
  p.noise_var = 0.5;
  const Position2 far{1e5, -1e5};
  const UpdateTerms t = compute_update_terms(far, g, kTx, p);
  CHECK(max_abs(t.a) <= 1e-12);
  CHECK(t.lik_var == doctest::Approx(10.5));
  CHECK(t.b == doctest::Approx(base_power(kTx, far, p)));
}

TEST_CASE("off-grid update terms match an explicit inverse") {
  GridGeometry g(2, 2, 40.0);
  GaussianModelParams p;
  p.fading_var = 0.7;
  p.noise_var = 0.2;
  const Position2 x{13.0, 29.0};
  const auto pts = grid_positions(g);
  Eigen::Matrix4d c;
  Eigen::Vector4d r;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) c(i, j) = shadowing_covariance(pts[i], pts[j], p) + (i == j ? 0.7 : 0.0);
    r[i] = shadowing_covariance(x, pts[i], p);
  }
  const Eigen::Matrix4d inv = c.inverse();
  const Eigen::Vector4d a = inv * r;
  const Eigen::VectorXd base = base_power_vector(g, kTx, p);
  const UpdateTerms t = compute_update_terms(x, g, kTx, p);
  CHECK(t.grid_index == -1);
  CHECK(max_abs(t.a - a) <= 1e-9);
  CHECK(t.b == doctest::Approx(base_power(kTx, x, p) - r.dot(inv * base)));
  CHECK(t.lik_var == doctest::Approx(10.0 + 0.7 + 0.2 - r.dot(a)));
}

TEST_CASE("update_posterior examples") {
  GridGeometry g(3, 3, 5.0);
  const GaussianModelParams p;
  const PriorModel model(g, p);
  const Posterior prior = init_posterior(model, &kTx);

  SUBCASE("coordinate observation") {
    UpdateTerms t{Eigen::VectorXd::Unit(9, 4), 0.0, 0.0, 4};
    const Posterior post = update_posterior(prior, t, -42.0);
    CHECK(std::abs(post.cov(4, 4)) <= 1e-12);
    CHECK(post.mean[4] == doctest::Approx(-42.0));
    CHECK(post.cov.trace() <= prior.cov.trace());
    CHECK(post.num_measurements == 1);
  }
  SUBCASE("uninformative measurement") {
    UpdateTerms t{Eigen::VectorXd::Zero(9), 0.0, 3.0};
    const Posterior post = update_posterior(prior, t, 100.0);
    CHECK(post.mean == prior.mean);
    CHECK(post.cov == prior.cov);
  }
  SUBCASE("one on-grid measurement equals the batch posterior") {
    const double y = base_power(kTx, g.position(2), p) + 3.0;
    const std::vector<Measurement> m{{g.position(2), {y}, 0}};
    const Posterior online = run_online(m, model);
    const Posterior batch = batch_posterior(m, 0, model, &kTx);
    CHECK(max_abs(online.mean - batch.mean) <= 1e-8);
    CHECK(max_abs(online.cov - batch.cov) <= 1e-8);
  }
  SUBCASE("repeated noiseless measurement") {
    const std::vector<Measurement> m{{g.position(2), {-47.5}, 0}, {g.position(2), {-47.5}, 1}};
    CHECK_THROWS_WITH_AS(run_online(m, model), "degenerate repeated noiseless measurement",
                         NumericalError);
    const Posterior robust = run_online(m, model, true);
    CHECK(robust.mean[2] == doctest::Approx(-47.5));
    CHECK(is_valid_covariance(robust.cov));
  }
}

TEST_CASE("online equals batch for on-grid measurement sequences") {
  GridGeometry g(16, 16, 50.0);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  std::normal_distribution<double> n01;

  SUBCASE("noiseless, distinct points") {
    const GaussianModelParams p;
    const PriorModel model(g, p);
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Measurement> m;
    for (std::size_t i = 0; i < 50; ++i) {
      const Position2 x = g.position(order[i]);
      m.push_back({x, {base_power(kTx, x, p) + 3.0 * n01(rng)}, i});
    }
    const Posterior online = run_online(m, model);
    const Posterior batch = batch_posterior(m, 0, model, &kTx);
    CHECK(max_abs(online.mean - batch.mean) <= 1e-6);
    CHECK(max_abs(online.cov - batch.cov) <= 1e-6);
  }
  SUBCASE("noisy, with repeats") {
    GaussianModelParams p;
    p.noise_var = 0.5;
    const PriorModel model(g, p);
    std::vector<Measurement> m;
    for (std::size_t i = 0; i < 60; ++i) {
      const Position2 x = g.position(pick(rng) % 40);
      m.push_back({x, {base_power(kTx, x, p) + 3.0 * n01(rng)}, i});
    }
    const Posterior online = run_online(m, model);
    const Posterior batch = batch_posterior(m, 0, model, &kTx);
    CHECK(max_abs(online.mean - batch.mean) <= 1e-6);
    CHECK(max_abs(online.cov - batch.cov) <= 1e-6);
  }
}

TEST_CASE("off-grid online estimates stay close to batch") {
  GridGeometry g(16, 16, 3.0);
  const GaussianModelParams p;
  const auto model = make_prior_model(g, p);
  const MapGenerator gen(model);
  const std::vector<Transmitter> txs{kTx};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, g.width());
  for (int trial = 0; trial < 5; ++trial) {
    const RadioMap map = gen.generate(txs, 100 + trial);
    std::vector<Measurement> m;
    for (std::size_t i = 0; i < 50; ++i) m.push_back(measure(map, {u(rng), u(rng)}, p, i, i));
    const Posterior online = run_online(m, *model, true);
    const Posterior batch = batch_posterior(m, 0, *model, &kTx);
    const double rmse = std::sqrt((online.mean - batch.mean).squaredNorm() / 256.0);
    CAPTURE(trial);
    CHECK(rmse <= 0.5);
  }
}

TEST_CASE("covariance stays symmetric PSD over 1000 updates") {
  GridGeometry g(10, 10, 3.0);
  GaussianModelParams p;
  p.noise_var = 0.1;
  const PriorModel model(g, p);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, g.width());
  Posterior post = init_posterior(model, &kTx);
  for (int i = 0; i < 1000; ++i) {
    const Position2 x = i % 3 == 0 ? g.position(static_cast<std::size_t>(i) % 100)
                                   : Position2{u(rng), u(rng)};
    post = update_posterior(post, compute_update_terms(x, model, &kTx), -50.0, true);
  }
  CHECK(asymmetry(post.cov) <= 1e-8 * max_abs(post.cov));
  CHECK(is_valid_covariance(post.cov));
  CHECK(post.num_measurements == 1000);
}

TEST_CASE("update cost does not grow with the number of measurements") {
  GridGeometry g(16, 16, 3.0);
  const GaussianModelParams p;
  const PriorModel model(g, p);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, g.width());
  std::vector<Position2> xs;
  for (int i = 0; i < 501; ++i) xs.push_back({u(rng), u(rng)});
  Posterior post = init_posterior(model, &kTx);
  Posterior at5;
  Posterior at500;
  for (int i = 0; i < 500; ++i) {
    if (i == 4) at5 = post;
    if (i == 499) at500 = post;
    post = update_posterior(post, compute_update_terms(xs[i], model, &kTx), -50.0, true);
  }
  auto time_step = [&](const Posterior& from, const Position2& x) {
    using Clock = std::chrono::steady_clock;
    double total = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      const auto t0 = Clock::now();
      const Posterior next = update_posterior(from, compute_update_terms(x, model, &kTx), -50.0, true);
      const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
      CHECK(next.num_measurements == from.num_measurements + 1);
      total += dt;
    }
    return total / 100.0;
  };
  const double early = time_step(at5, xs[4]);
  const double late = time_step(at500, xs[499]);
  CHECK(late <= 2.0 * early);
}

TEST_CASE("online session shares one covariance across transmitters") {
  GridGeometry g(5, 5, 6.0);
  GaussianModelParams p;
  p.noise_var = 0.3;
  const auto model = make_prior_model(g, p);
  const std::vector<Transmitter> txs{kTx, {{1.0, 2.0, 20.0}, 10.0, 2.4e9}};
  OnlineSession session(model, txs, {true, false});
  std::vector<Posterior> ref{init_posterior(*model, &txs[0]), init_posterior(*model, &txs[1])};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, g.width());
  for (std::size_t i = 0; i < 20; ++i) {
    const Position2 x = i % 2 ? g.position(i) : Position2{u(rng), u(rng)};
    const Measurement m{x, {-50.0 + static_cast<double>(i % 4), -60.0 - static_cast<double>(i % 3)}, i};
    session.add(m);
    for (std::size_t t = 0; t < 2; ++t) {
      ref[t] = update_posterior(ref[t], compute_update_terms(x, *model, &txs[t]), m.per_tx_power_db[t]);
    }
  }
  CHECK(session.num_measurements() == 20);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(max_abs(session.mean(t) - ref[t].mean) <= 1e-9);
    CHECK(max_abs(session.cov() - ref[t].cov) <= 1e-9);
  }
  CHECK_THROWS_AS(session.add(Measurement{{0, 0}, {-50.0}, 0}), ConfigError);

  OnlineSession zero_mean(model, {}, {false, true}, 2);
  CHECK(zero_mean.num_transmitters() == 2);
  CHECK(zero_mean.mean(1).cwiseAbs().maxCoeff() == 0.0);
}
