#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace survey {

struct Position2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position2&, const Position2&) = default;
};

double distance(const Position2& a, const Position2& b);

/// Row/column address of a grid point. Row i runs along y, column j along x.
struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Rectangular grid of candidate measurement locations plus the set of
/// indices that lie inside buildings or no-fly zones.
///
/// Grid point (i, j) sits at origin + (j * spacing, i * spacing) and has flat
/// index k = i * cols + j.
class GridGeometry {
 public:
  GridGeometry(std::size_t rows, std::size_t cols, double spacing_m,
               Position2 origin = {}, std::vector<std::size_t> buildings = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  double spacing() const { return spacing_; }
  const Position2& origin() const { return origin_; }

  /// Sorted, de-duplicated building indices.
  std::span<const std::size_t> buildings() const { return buildings_; }
  bool is_building(std::size_t k) const { return building_mask_[k]; }
  /// Number of grid points outside buildings.
  std::size_t free_count() const { return size() - buildings_.size(); }

  std::size_t index(Cell c) const { return c.row * cols_ + c.col; }
  Cell cell(std::size_t k) const { return {k / cols_, k % cols_}; }
  Position2 position(std::size_t k) const;

  /// Extent of the bounding box of all grid points.
  double width() const { return static_cast<double>(cols_ - 1) * spacing_; }
  double height() const { return static_cast<double>(rows_ - 1) * spacing_; }
  bool contains(const Position2& p) const;

  /// Nearest grid point; ties go to the lowest flat index.
  std::size_t nearest(const Position2& p) const;
  /// Nearest grid point outside buildings; ties go to the lowest flat index.
  std::size_t nearest_free(const Position2& p) const;
  /// Grid index if p coincides with a grid point (within 1e-9 spacings).
  std::ptrdiff_t exact_index(const Position2& p) const;

  /// True if p lies in a building footprint, i.e. its nearest grid point is
  /// a building.
  bool in_building(const Position2& p) const;

  /// 8-connected neighbours of k, excluding buildings and diagonal moves that
  /// would clip a building corner. Returned in increasing index order.
  std::vector<std::size_t> free_neighbors(std::size_t k) const;
  /// Geometric 8-adjacency of distinct points, ignoring buildings.
  bool adjacent(std::size_t a, std::size_t b) const;

  GridGeometry with_buildings(std::vector<std::size_t> buildings) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  double spacing_;
  Position2 origin_;
  std::vector<std::size_t> buildings_;
  std::vector<bool> building_mask_;
};

}  // namespace survey
