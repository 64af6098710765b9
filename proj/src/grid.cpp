#include "survey/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "survey/error.hpp"

namespace survey {

double distance(const Position2& a, const Position2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

GridGeometry::GridGeometry(std::size_t rows, std::size_t cols, double spacing_m,
                           Position2 origin, std::vector<std::size_t> buildings)
    : rows_(rows), cols_(cols), spacing_(spacing_m), origin_(origin) {
  if (rows < 2 || cols < 2) {
    throw ConfigError("grid needs at least 2 rows and 2 columns");
  }
  if (!(spacing_m > 0.0) || !std::isfinite(spacing_m)) {
    throw ConfigError("grid spacing must be positive");
  }
  std::sort(buildings.begin(), buildings.end());
  buildings.erase(std::unique(buildings.begin(), buildings.end()), buildings.end());
  building_mask_.assign(size(), false);
  for (std::size_t k : buildings) {
    if (k >= size()) {
      throw ConfigError("building index " + std::to_string(k) + " outside grid");
    }
    building_mask_[k] = true;
  }
  buildings_ = std::move(buildings);
}

Position2 GridGeometry::position(std::size_t k) const {
  const Cell c = cell(k);
  return {origin_.x + static_cast<double>(c.col) * spacing_,
          origin_.y + static_cast<double>(c.row) * spacing_};
}

bool GridGeometry::contains(const Position2& p) const {
  const double tol = 1e-9 * spacing_;
  return p.x >= origin_.x - tol && p.x <= origin_.x + width() + tol &&
         p.y >= origin_.y - tol && p.y <= origin_.y + height() + tol;
}

namespace {

// Nearest integer in [0, n-1]; exact halves round down so that ties resolve to
// the lower index.
std::size_t nearest_coordinate(double u, std::size_t n) {
  const double r = std::ceil(u - 0.5);
  if (r <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(r), n - 1);
}

}  // namespace

std::size_t GridGeometry::nearest(const Position2& p) const {
  const std::size_t j = nearest_coordinate((p.x - origin_.x) / spacing_, cols_);
  const std::size_t i = nearest_coordinate((p.y - origin_.y) / spacing_, rows_);
  return index({i, j});
}

std::size_t GridGeometry::nearest_free(const Position2& p) const {
  const std::size_t k = nearest(p);
  if (!building_mask_[k]) return k;
  if (buildings_.size() == size()) {
    throw GeometryError("grid has no free points");
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < size(); ++q) {
    if (building_mask_[q]) continue;
    const Position2 g = position(q);
    const double d = (g.x - p.x) * (g.x - p.x) + (g.y - p.y) * (g.y - p.y);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

std::ptrdiff_t GridGeometry::exact_index(const Position2& p) const {
  const std::size_t k = nearest(p);
  const Position2 g = position(k);
  const double tol = 1e-9 * spacing_;
  if (std::abs(g.x - p.x) <= tol && std::abs(g.y - p.y) <= tol) {
    return static_cast<std::ptrdiff_t>(k);
  }
  return -1;
}

bool GridGeometry::in_building(const Position2& p) const {
  return building_mask_[nearest(p)];
}

std::vector<std::size_t> GridGeometry::free_neighbors(std::size_t k) const {
  std::vector<std::size_t> out;
  const Cell c = cell(k);
  const auto r0 = static_cast<std::ptrdiff_t>(c.row);
  const auto c0 = static_cast<std::ptrdiff_t>(c.col);
  const auto nr = static_cast<std::ptrdiff_t>(rows_);
  const auto nc = static_cast<std::ptrdiff_t>(cols_);
  auto free_at = [&](std::ptrdiff_t r, std::ptrdiff_t q) {
    return !building_mask_[static_cast<std::size_t>(r * nc + q)];
  };
  for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
    for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const std::ptrdiff_t r = r0 + dr;
      const std::ptrdiff_t q = c0 + dc;
      if (r < 0 || q < 0 || r >= nr || q >= nc) continue;
      if (!free_at(r, q)) continue;
      // No corner clipping: both orthogonal cells of a diagonal move are free.
      if (dr != 0 && dc != 0 && (!free_at(r0 + dr, c0) || !free_at(r0, c0 + dc))) {
        continue;
      }
      out.push_back(static_cast<std::size_t>(r * nc + q));
    }
  }
  return out;
}

bool GridGeometry::adjacent(std::size_t a, std::size_t b) const {
  if (a == b) return false;
  const Cell ca = cell(a);
  const Cell cb = cell(b);
  const auto dr = static_cast<std::ptrdiff_t>(ca.row) - static_cast<std::ptrdiff_t>(cb.row);
  const auto dc = static_cast<std::ptrdiff_t>(ca.col) - static_cast<std::ptrdiff_t>(cb.col);
  return std::abs(dr) <= 1 && std::abs(dc) <= 1;
}

GridGeometry GridGeometry::with_buildings(std::vector<std::size_t> buildings) const {
  return GridGeometry(rows_, cols_, spacing_, origin_, std::move(buildings));
}

}  // namespace survey
