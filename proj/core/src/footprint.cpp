#include "trajrep/footprint.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "trajrep/parallel.hpp"
#include "trajrep/text.hpp"

namespace trajrep {
namespace {

struct IndexRange {
  int lo = 0;
  int hi = -1;  // inclusive
};

// Cells whose centre coordinate may lie in [a, b]; one cell of slack on each
// side so that the exact predicate alone decides membership.
IndexRange cells_between(double a, double b, double origin, double cell, int n) {
  const double lo = std::floor((a - origin) / cell - 0.5) - 1.0;
  const double hi = std::ceil((b - origin) / cell - 0.5) + 1.0;
  IndexRange r;
  r.lo = static_cast<int>(std::clamp(lo, 0.0, static_cast<double>(n)));
  r.hi = static_cast<int>(std::clamp(hi, -1.0, static_cast<double>(n - 1)));
  return r;
}

void mark_point(std::vector<char>& mask, const Eigen::Vector3d& p, const GridSpec& spec,
                double range_m) {
  if (std::abs(p.z()) > range_m) return;
  const double reach = std::sqrt(range_m * range_m - p.z() * p.z());
  const auto is = cells_between(p.x() - reach, p.x() + reach, spec.origin_east, spec.cell, spec.nx);
  const auto js =
      cells_between(p.y() - reach, p.y() + reach, spec.origin_north, spec.cell, spec.ny);
  for (int j = js.lo; j <= js.hi; ++j)
    for (int i = is.lo; i <= is.hi; ++i)
      if (within_range(spec.cell_center(i, j), p, range_m))
        mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(spec.nx) +
             static_cast<std::size_t>(i)] = 1;
}

void mark_segment(std::vector<char>& mask, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                  const GridSpec& spec, double range_m) {
  const double zmin = a.z() * b.z() <= 0.0 ? 0.0 : std::min(std::abs(a.z()), std::abs(b.z()));
  if (zmin > range_m) return;
  const auto is = cells_between(std::min(a.x(), b.x()) - range_m, std::max(a.x(), b.x()) + range_m,
                                spec.origin_east, spec.cell, spec.nx);
  const auto js = cells_between(std::min(a.y(), b.y()) - range_m, std::max(a.y(), b.y()) + range_m,
                                spec.origin_north, spec.cell, spec.ny);
  const double r2 = range_m * range_m;
  for (int j = js.lo; j <= js.hi; ++j)
    for (int i = is.lo; i <= is.hi; ++i)
      if (ground_segment_distance2(spec.cell_center(i, j), a, b) <= r2)
        mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(spec.nx) +
             static_cast<std::size_t>(i)] = 1;
}

}  // namespace

void GridSpec::validate() const {
  if (!(cell > 0.0) || !std::isfinite(cell)) throw Error("grid cell size must be positive");
  if (nx < 1 || ny < 1) throw Error("grid must have at least one cell per axis");
  if (!std::isfinite(origin_east) || !std::isfinite(origin_north))
    throw Error("grid origin must be finite");
}

GridSpec GridSpec::covering(std::span<const Trajectory> trajectories, double margin, int nx,
                            int ny) {
  if (trajectories.empty()) throw Error("GridSpec::covering: no trajectories");
  double e0 = std::numeric_limits<double>::infinity(), e1 = -e0, n0 = e0, n1 = -e0;
  for (const auto& t : trajectories)
    for (const auto& p : t.points) {
      e0 = std::min(e0, p.east), e1 = std::max(e1, p.east);
      n0 = std::min(n0, p.north), n1 = std::max(n1, p.north);
    }
  e0 -= margin, e1 += margin, n0 -= margin, n1 += margin;
  GridSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.cell = std::max((e1 - e0) / nx, (n1 - n0) / ny);
  if (!(spec.cell > 0.0)) spec.cell = 1.0;
  // Centre the box in the grid.
  spec.origin_east = 0.5 * (e0 + e1) - 0.5 * nx * spec.cell;
  spec.origin_north = 0.5 * (n0 + n1) - 0.5 * ny * spec.cell;
  return spec;
}

double ground_segment_distance2(const Eigen::Vector2d& ground, const Eigen::Vector3d& a,
                                const Eigen::Vector3d& b) {
  const Eigen::Vector3d g(ground.x(), ground.y(), 0.0);
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((g - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (g - (a + s * ab)).squaredNorm();
}

std::vector<char> coverage_mask(std::span<const Eigen::Vector3d> polyline, const GridSpec& spec,
                                double range_m, Proximity proximity) {
  std::vector<char> mask(spec.size(), 0);
  if (proximity == Proximity::Points || polyline.size() == 1) {
    for (const auto& p : polyline) mark_point(mask, p, spec, range_m);
  } else {
    for (std::size_t k = 1; k < polyline.size(); ++k)
      mark_segment(mask, polyline[k - 1], polyline[k], spec, range_m);
  }
  return mask;
}

FootprintGrid footprint_raw(std::span<const Trajectory> trajectories, const GridSpec& spec,
                            double range_m, std::size_t total_count, Proximity proximity,
                            unsigned threads) {
  spec.validate();
  if (!(range_m > 0.0)) throw Error("footprint: range_m must be positive");
  const std::size_t total = total_count == 0 ? trajectories.size() : total_count;
  if (total < trajectories.size()) throw Error("footprint: total count below trajectory count");

  std::vector<std::vector<char>> masks(trajectories.size());
  parallel_for(trajectories.size(), threads, [&](std::size_t n) {
    std::vector<Eigen::Vector3d> polyline;
    polyline.reserve(trajectories[n].points.size());
    for (const auto& p : trajectories[n].points) polyline.push_back(p.position());
    masks[n] = coverage_mask(polyline, spec, range_m, proximity);
  });

  std::vector<std::size_t> counts(spec.size(), 0);
  for (const auto& mask : masks)
    for (std::size_t c = 0; c < counts.size(); ++c) counts[c] += static_cast<std::size_t>(mask[c]);

  FootprintGrid grid{spec, range_m, std::vector<double>(spec.size(), 0.0)};
  if (total == 0) return grid;
  for (std::size_t c = 0; c < counts.size(); ++c)
    grid.values[c] = 100.0 * static_cast<double>(counts[c]) / static_cast<double>(total);
  return grid;
}

FootprintGrid footprint_weighted(std::span<const WeightedTrajectory> reps,
                                 const std::map<int, std::size_t>& cluster_sizes,
                                 std::size_t total_count, const GridSpec& spec, double range_m,
                                 Proximity proximity, unsigned threads) {
  spec.validate();
  if (!(range_m > 0.0)) throw Error("footprint: range_m must be positive");
  if (total_count == 0) throw Error("footprint: total trajectory count must be positive");
  std::size_t sum = 0;
  for (const auto& [cluster, size] : cluster_sizes) sum += size;
  if (sum > total_count) throw Error("footprint: cluster sizes exceed the total count");

  std::vector<double> contribution(reps.size());
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto it = cluster_sizes.find(reps[k].cluster);
    if (it == cluster_sizes.end())
      throw Error("footprint: no size for cluster " + std::to_string(reps[k].cluster));
    if (!(reps[k].weight > 0.0 && reps[k].weight <= 1.0))
      throw Error("footprint: representative weight outside (0, 1]");
    contribution[k] = reps[k].weight * static_cast<double>(it->second) /
                      static_cast<double>(total_count);
  }

  std::vector<std::vector<char>> masks(reps.size());
  parallel_for(reps.size(), threads, [&](std::size_t k) {
    masks[k] = coverage_mask(reps[k].points, spec, range_m, proximity);
  });

  FootprintGrid grid{spec, range_m, std::vector<double>(spec.size(), 0.0)};
  for (std::size_t k = 0; k < reps.size(); ++k)
    for (std::size_t c = 0; c < grid.values.size(); ++c)
      if (masks[k][c]) grid.values[c] += contribution[k];
  for (auto& v : grid.values) v *= 100.0;
  return grid;
}

FootprintComparison compare_footprints(const FootprintGrid& candidate,
                                       const FootprintGrid& reference) {
  if (!(candidate.spec == reference.spec) || candidate.values.size() != reference.values.size())
    throw Error("compare_footprints: grid specs differ");
  FootprintComparison out;
  bool any = false;
  for (std::size_t c = 0; c < candidate.values.size(); ++c) {
    const double a = candidate.values[c];
    const double b = reference.values[c];
    if (a == 0.0 && b == 0.0) continue;
    const double dev = a - b;
    ++out.n_active;
    if (!any) {
      out.min_deviation = out.max_deviation = dev;
      any = true;
    } else {
      out.min_deviation = std::min(out.min_deviation, dev);
      out.max_deviation = std::max(out.max_deviation, dev);
    }
    if (dev < 0.0) ++out.n_under;
    if (dev > 0.0) ++out.n_over;
    if (dev < -5.0) ++out.n_under_gt5;
    if (dev > 5.0) ++out.n_over_gt5;
  }
  return out;
}

void write_grid(std::ostream& out, const FootprintGrid& grid) {
  out << "east_m,north_m,value_pct\n";
  for (int j = 0; j < grid.spec.ny; ++j)
    for (int i = 0; i < grid.spec.nx; ++i) {
      const auto c = grid.spec.cell_center(i, j);
      out << format_double(c.x()) << ',' << format_double(c.y()) << ','
          << format_double(grid.at(i, j)) << '\n';
    }
}

FootprintGrid read_grid(std::istream& in, double range_m) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "east_m,north_m,value_pct")
    throw ParseError(1, "expected header 'east_m,north_m,value_pct'");
  std::vector<Eigen::Vector3d> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != 3) throw ParseError(line_number, "expected 3 fields");
    Eigen::Vector3d v;
    for (int k = 0; k < 3; ++k) {
      const auto parsed = parse_double(fields[static_cast<std::size_t>(k)]);
      if (!parsed || !std::isfinite(*parsed)) throw ParseError(line_number, "bad number");
      v[k] = *parsed;
    }
    if (v.z() < 0.0 || v.z() > 100.0 + 1e-9) throw ParseError(line_number, "value out of [0, 100]");
    rows.push_back(v);
  }
  if (rows.empty()) throw ParseError(line_number, "grid has no rows");

  std::set<double> easts, norths;
  for (const auto& r : rows) easts.insert(r.x()), norths.insert(r.y());
  FootprintGrid grid;
  grid.range_m = range_m;
  grid.spec.nx = static_cast<int>(easts.size());
  grid.spec.ny = static_cast<int>(norths.size());
  if (rows.size() != grid.spec.size()) throw ParseError(0, "grid rows do not form a full lattice");
  if (easts.size() > 1)
    grid.spec.cell = (*easts.rbegin() - *easts.begin()) / static_cast<double>(easts.size() - 1);
  else if (norths.size() > 1)
    grid.spec.cell = (*norths.rbegin() - *norths.begin()) / static_cast<double>(norths.size() - 1);
  grid.spec.origin_east = *easts.begin() - 0.5 * grid.spec.cell;
  grid.spec.origin_north = *norths.begin() - 0.5 * grid.spec.cell;

  const std::vector<double> east_list(easts.begin(), easts.end());
  const std::vector<double> north_list(norths.begin(), norths.end());
  grid.values.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = k % static_cast<std::size_t>(grid.spec.nx);
    const auto j = k / static_cast<std::size_t>(grid.spec.nx);
    if (rows[k].x() != east_list[i] || rows[k].y() != north_list[j])
      throw ParseError(k + 2, "grid rows are not in row-major order");
    grid.values[k] = rows[k].z();
  }
  return grid;
}

void write_comparison(std::ostream& out, const FootprintComparison& c) {
  const auto pct = [&](std::size_t n) {
    return format_double(c.n_active == 0 ? 0.0
                                         : 100.0 * static_cast<double>(n) /
                                               static_cast<double>(c.n_active));
  };
  out << "minimum_deviation_pct = " << format_double(c.min_deviation) << '\n'
      << "maximum_deviation_pct = " << format_double(c.max_deviation) << '\n'
      << "active_grid_points = " << c.n_active << '\n'
      << "grid_points_underestimated = " << c.n_under << '\n'
      << "grid_points_underestimated_pct = " << pct(c.n_under) << '\n'
      << "grid_points_overestimated = " << c.n_over << '\n'
      << "grid_points_overestimated_pct = " << pct(c.n_over) << '\n'
      << "grid_points_underestimated_gt5 = " << c.n_under_gt5 << '\n'
      << "grid_points_underestimated_gt5_pct = " << pct(c.n_under_gt5) << '\n'
      << "grid_points_overestimated_gt5 = " << c.n_over_gt5 << '\n'
      << "grid_points_overestimated_gt5_pct = " << pct(c.n_over_gt5) << '\n';
}

}  // namespace trajrep
