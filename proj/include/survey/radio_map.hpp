#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "survey/grid.hpp"
#include "survey/model.hpp"

namespace survey {

/// Row-major so that the flat grid index k = i * cols + j addresses data()[k].
using GridMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const Eigen::VectorXd> flat(const GridMatrix& m) {
  return {m.data(), m.size()};
}
GridMatrix to_grid_matrix(const Eigen::VectorXd& v, const GridGeometry& grid);

/// Sum of powers in the linear domain, returned in dB.
double combine_db(std::span<const double> values_db);
Eigen::VectorXd combine_db(const std::vector<Eigen::VectorXd>& maps_db);

struct RadioMap {
  GridGeometry grid;
  std::vector<Transmitter> transmitters;  ///< may be empty for imported maps
  std::vector<GridMatrix> per_tx_power_db;
  GridMatrix combined_power_db;
  std::vector<GridMatrix> shadowing_fields;  ///< empty for imported maps

  std::size_t num_transmitters() const { return per_tx_power_db.size(); }
};

/// Builds a RadioMap from per-transmitter power matrices, computing the
/// combined map.
RadioMap make_radio_map(GridGeometry grid, std::vector<Transmitter> txs,
                        std::vector<GridMatrix> per_tx_power_db,
                        std::vector<GridMatrix> shadowing_fields = {});

struct Measurement {
  Position2 location;
  std::vector<double> per_tx_power_db;
  std::size_t index = 0;

  double combined_db() const { return combine_db(per_tx_power_db); }
};

/// One draw of the zero-mean shadowing field s(x) = u(x) - mean over the grid.
GridMatrix sample_shadowing_field(const PriorModel& model, std::uint64_t seed);
GridMatrix sample_shadowing_field(const GridGeometry& grid,
                                  const GaussianModelParams& params, std::uint64_t seed);

/// Map generator bound to one grid and model so the covariance factor is
/// computed once and reused across seeds.
class MapGenerator {
 public:
  explicit MapGenerator(PriorModelPtr model);
  MapGenerator(const GridGeometry& grid, const GaussianModelParams& params);

  /// Per transmitter: base power - shadowing + fading, with independent
  /// shadowing fields and fading draws.
  RadioMap generate(std::span<const Transmitter> txs, std::uint64_t seed) const;

  const PriorModel& model() const { return *model_; }
  const PriorModelPtr& model_ptr() const { return model_; }

 private:
  PriorModelPtr model_;
};

RadioMap generate_map(const GridGeometry& grid, std::span<const Transmitter> txs,
                      const GaussianModelParams& params, std::uint64_t seed);

/// Transmitters with uniformly random horizontal positions over the grid area.
std::vector<Transmitter> place_transmitters(const GridGeometry& grid, std::size_t count,
                                            double power_dbm, double height_m,
                                            double carrier_hz, std::uint64_t seed);

enum class Interpolation { bicubic, bilinear };

/// Interpolates a grid field at p. Bicubic uses Catmull-Rom weights with
/// linearly extrapolated ghost nodes, so affine fields are reproduced exactly.
double interpolate(const GridMatrix& field, const GridGeometry& grid, const Position2& p,
                   Interpolation kind = Interpolation::bicubic);

/// Noisy power measurement at x: interpolated true power per transmitter plus
/// independent N(0, noise_var) noise.
Measurement measure(const RadioMap& map, const Position2& x,
                    const GaussianModelParams& params, std::uint64_t seed,
                    std::size_t index = 0, Interpolation kind = Interpolation::bicubic);

}  // namespace survey
