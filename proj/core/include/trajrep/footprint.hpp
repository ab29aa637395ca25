#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "trajrep/representative.hpp"
#include "trajrep/trajectory_io.hpp"

namespace trajrep {

/// Ground grid of nx * ny square cells; `origin` is the south-west corner.
struct GridSpec {
  double origin_east = 0.0;
  double origin_north = 0.0;
  double cell = 1.0;
  int nx = 100;
  int ny = 100;

  void validate() const;
  Eigen::Vector2d cell_center(int i, int j) const {
    return {origin_east + (i + 0.5) * cell, origin_north + (j + 0.5) * cell};
  }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  bool operator==(const GridSpec&) const = default;

  /// Square cells covering the ground bounding box of `trajectories`
  /// expanded by `margin`, with the larger side split into max(nx, ny) cells.
  static GridSpec covering(std::span<const Trajectory> trajectories, double margin, int nx = 100,
                           int ny = 100);
};

/// Points: distance to the recorded samples. Segments: distance to the
/// straight segments joining consecutive samples.
enum class Proximity { Points, Segments };

/// Percentage of traffic within range of each cell, row-major with the east
/// index varying fastest.
struct FootprintGrid {
  GridSpec spec;
  double range_m = 300.0;
  std::vector<double> values;

  double at(int i, int j) const { return values[index(i, j)]; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(spec.nx) +
           static_cast<std::size_t>(i);
  }
};

/// True when the ground point (east, north, 0) lies within `range_m` (3-D) of p.
inline bool within_range(const Eigen::Vector2d& ground, const Eigen::Vector3d& p, double range_m) {
  const double de = p.x() - ground.x();
  const double dn = p.y() - ground.y();
  return de * de + dn * dn + p.z() * p.z() <= range_m * range_m;
}

/// Squared 3-D distance from the ground point to segment [a, b].
double ground_segment_distance2(const Eigen::Vector2d& ground, const Eigen::Vector3d& a,
                                const Eigen::Vector3d& b);

/// 100 * (trajectories within range of the cell) / total_count, where
/// total_count defaults to trajectories.size().
FootprintGrid footprint_raw(std::span<const Trajectory> trajectories, const GridSpec& spec,
                            double range_m, std::size_t total_count = 0,
                            Proximity proximity = Proximity::Points, unsigned threads = 1);

/// 100 * sum of weight * cluster_size / total_count over representatives
/// within range of the cell.
FootprintGrid footprint_weighted(std::span<const WeightedTrajectory> reps,
                                 const std::map<int, std::size_t>& cluster_sizes,
                                 std::size_t total_count, const GridSpec& spec, double range_m,
                                 Proximity proximity = Proximity::Points, unsigned threads = 1);

/// The cells of `spec` within range of one polyline, as a 0/1 mask.
std::vector<char> coverage_mask(std::span<const Eigen::Vector3d> polyline, const GridSpec& spec,
                                double range_m, Proximity proximity);

struct FootprintComparison {
  double min_deviation = 0.0;  // percentage points, candidate - reference
  double max_deviation = 0.0;
  std::size_t n_active = 0;    // cells nonzero in either grid
  std::size_t n_under = 0;
  std::size_t n_over = 0;
  std::size_t n_under_gt5 = 0;  // deviation < -5 points
  std::size_t n_over_gt5 = 0;   // deviation > +5 points
};

FootprintComparison compare_footprints(const FootprintGrid& candidate,
                                       const FootprintGrid& reference);

/// CSV `east_m,north_m,value_pct`, one row per cell centre, row-major.
void write_grid(std::ostream& out, const FootprintGrid& grid);
/// Recovers the grid spec from the cell centres; `range_m` is not stored.
FootprintGrid read_grid(std::istream& in, double range_m = 300.0);

/// Key-value text using the comparison metric names.
void write_comparison(std::ostream& out, const FootprintComparison& c);

}  // namespace trajrep
