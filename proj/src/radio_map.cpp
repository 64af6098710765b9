#include "survey/radio_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "survey/error.hpp"
#include "survey/rng.hpp"

namespace survey {

GridMatrix to_grid_matrix(const Eigen::VectorXd& v, const GridGeometry& grid) {
  if (static_cast<std::size_t>(v.size()) != grid.size()) {
    throw ConfigError("vector length does not match grid size");
  }
  GridMatrix m(grid.rows(), grid.cols());
  std::copy(v.data(), v.data() + v.size(), m.data());
  return m;
}

double combine_db(std::span<const double> values_db) {
  if (values_db.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values_db.begin(), values_db.end());
  double sum = 0.0;
  for (double v : values_db) sum += std::pow(10.0, (v - top) / 10.0);
  return top + 10.0 * std::log10(sum);
}

Eigen::VectorXd combine_db(const std::vector<Eigen::VectorXd>& maps_db) {
  if (maps_db.empty()) throw ConfigError("no maps to combine");
  if (maps_db.size() == 1) return maps_db.front();
  const Eigen::Index n = maps_db.front().size();
  Eigen::VectorXd out(n);
  std::vector<double> column(maps_db.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    for (std::size_t t = 0; t < maps_db.size(); ++t) column[t] = maps_db[t][k];
    out[k] = combine_db(column);
  }
  return out;
}

RadioMap make_radio_map(GridGeometry grid, std::vector<Transmitter> txs,
                        std::vector<GridMatrix> per_tx_power_db,
                        std::vector<GridMatrix> shadowing_fields) {
  if (per_tx_power_db.empty()) throw ConfigError("radio map needs at least one transmitter");
  std::vector<Eigen::VectorXd> flat_maps;
  for (const auto& m : per_tx_power_db) {
    if (static_cast<std::size_t>(m.rows()) != grid.rows() ||
        static_cast<std::size_t>(m.cols()) != grid.cols()) {
      throw ConfigError("power matrix shape does not match grid");
    }
    flat_maps.emplace_back(flat(m));
  }
  GridMatrix combined = to_grid_matrix(combine_db(flat_maps), grid);
  return RadioMap{std::move(grid), std::move(txs), std::move(per_tx_power_db),
                  std::move(combined), std::move(shadowing_fields)};
}

GridMatrix sample_shadowing_field(const PriorModel& model, std::uint64_t seed) {
  const GridGeometry& grid = model.grid();
  if (model.params().shadow_var == 0.0) return GridMatrix::Zero(grid.rows(), grid.cols());
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
  const Eigen::VectorXd s = model.shadow_factor().triangularView<Eigen::Lower>() * z;
  return to_grid_matrix(s, grid);
}

GridMatrix sample_shadowing_field(const GridGeometry& grid,
                                  const GaussianModelParams& params, std::uint64_t seed) {
  return sample_shadowing_field(PriorModel(grid, params), seed);
}

MapGenerator::MapGenerator(PriorModelPtr model) : model_(std::move(model)) {}

MapGenerator::MapGenerator(const GridGeometry& grid, const GaussianModelParams& params)
    : model_(make_prior_model(grid, params)) {}

RadioMap MapGenerator::generate(std::span<const Transmitter> txs, std::uint64_t seed) const {
  if (txs.empty()) throw ConfigError("generate_map needs at least one transmitter");
  const GridGeometry& grid = model_->grid();
  const GaussianModelParams& params = model_->params();
  std::vector<GridMatrix> powers;
  std::vector<GridMatrix> fields;
  for (std::size_t t = 0; t < txs.size(); ++t) {
    validate(txs[t]);
    GridMatrix s = sample_shadowing_field(*model_, derive_seed(seed, SeedPurpose::shadowing, t));
    GridMatrix p = to_grid_matrix(base_power_vector(grid, txs[t], params), grid) - s;
    if (params.fading_var > 0.0) {
      Rng rng = make_rng(seed, SeedPurpose::fading, t);
      std::normal_distribution<double> fading(0.0, std::sqrt(params.fading_var));
      for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] += fading(rng);
    }
    powers.push_back(std::move(p));
    fields.push_back(std::move(s));
  }
  return make_radio_map(grid, {txs.begin(), txs.end()}, std::move(powers), std::move(fields));
}

RadioMap generate_map(const GridGeometry& grid, std::span<const Transmitter> txs,
                      const GaussianModelParams& params, std::uint64_t seed) {
  return MapGenerator(grid, params).generate(txs, seed);
}

std::vector<Transmitter> place_transmitters(const GridGeometry& grid, std::size_t count,
                                            double power_dbm, double height_m,
                                            double carrier_hz, std::uint64_t seed) {
  Rng rng(derive_seed(seed, SeedPurpose::placement));
  std::uniform_real_distribution<double> ux(grid.origin().x, grid.origin().x + grid.width());
  std::uniform_real_distribution<double> uy(grid.origin().y, grid.origin().y + grid.height());
  std::vector<Transmitter> txs(count);
  for (auto& tx : txs) {
    const double x = ux(rng);
    const double y = uy(rng);
    tx = Transmitter{{x, y, height_m}, power_dbm, carrier_hz};
  }
  return txs;
}

namespace {

// Field value with linearly extrapolated ghost nodes one step outside the grid.
double extended(const GridMatrix& f, std::ptrdiff_t i, std::ptrdiff_t j) {
  const auto rows = static_cast<std::ptrdiff_t>(f.rows());
  const auto cols = static_cast<std::ptrdiff_t>(f.cols());
  if (i < 0) return 2.0 * extended(f, 0, j) - extended(f, 1, j);
  if (i >= rows) return 2.0 * extended(f, rows - 1, j) - extended(f, rows - 2, j);
  if (j < 0) return 2.0 * f(i, 0) - f(i, 1);
  if (j >= cols) return 2.0 * f(i, cols - 1) - f(i, cols - 2);
  return f(i, j);
}

void catmull_rom_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

// Base cell index in [0, n-2] and fractional offset in [0, 1].
std::pair<std::ptrdiff_t, double> locate(double u, std::size_t n) {
  const double hi = static_cast<double>(n - 1);
  u = std::clamp(u, 0.0, hi);
  auto i0 = static_cast<std::ptrdiff_t>(std::floor(u));
  i0 = std::min<std::ptrdiff_t>(i0, static_cast<std::ptrdiff_t>(n) - 2);
  return {i0, u - static_cast<double>(i0)};
}

}  // namespace

double interpolate(const GridMatrix& field, const GridGeometry& grid, const Position2& p,
                   Interpolation kind) {
  const auto [j0, tx] = locate((p.x - grid.origin().x) / grid.spacing(), grid.cols());
  const auto [i0, ty] = locate((p.y - grid.origin().y) / grid.spacing(), grid.rows());
  if (kind == Interpolation::bilinear) {
    return (1 - ty) * ((1 - tx) * field(i0, j0) + tx * field(i0, j0 + 1)) +
           ty * ((1 - tx) * field(i0 + 1, j0) + tx * field(i0 + 1, j0 + 1));
  }
  double wx[4];
  double wy[4];
  catmull_rom_weights(tx, wx);
  catmull_rom_weights(ty, wy);
  double value = 0.0;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0;
    for (int b = 0; b < 4; ++b) row += wx[b] * extended(field, i0 - 1 + a, j0 - 1 + b);
    value += wy[a] * row;
  }
  return value;
}

Measurement measure(const RadioMap& map, const Position2& x,
                    const GaussianModelParams& params, std::uint64_t seed,
                    std::size_t index, Interpolation kind) {
  if (!map.grid.contains(x)) throw GeometryError("measurement location outside the grid area");
  if (map.grid.in_building(x)) throw GeometryError("indoor measurement forbidden");
  Measurement m{x, {}, index};
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(params.noise_var));
  const std::ptrdiff_t node = map.grid.exact_index(x);
  for (const auto& p : map.per_tx_power_db) {
    double v = node >= 0 ? p.data()[node] : interpolate(p, map.grid, x, kind);
    if (params.noise_var > 0.0) v += noise(rng);
    m.per_tx_power_db.push_back(v);
  }
  return m;
}

}  // namespace survey
