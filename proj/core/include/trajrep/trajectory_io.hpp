#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace trajrep {

/// One radar sample in a local projected frame (metres, seconds).
struct TrajectoryPoint {
  double time = 0.0;
  double east = 0.0;
  double north = 0.0;
  double altitude = 0.0;

  Eigen::Vector3d position() const { return {east, north, altitude}; }
  bool operator==(const TrajectoryPoint&) const = default;
};

/// A single aircraft track: at least two points, strictly increasing time.
struct Trajectory {
  std::string id;
  std::vector<TrajectoryPoint> points;

  double duration() const { return points.back().time - points.front().time; }
  bool operator==(const Trajectory&) const = default;
};

/// Throws Error when `t` breaks the Trajectory invariants.
void validate_trajectory(const Trajectory& t);

struct Runway {
  std::string id;
  Eigen::Vector2d end_a;
  Eigen::Vector2d end_b;
};

struct AirportGeometry {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  std::vector<Runway> runways;

  void validate() const;
};

enum class Phase { Approach, Departure };

const char* to_string(Phase phase);

struct ParseResult {
  std::vector<Trajectory> trajectories;  // in order of first appearance
  std::size_t rejected_short = 0;        // ids with fewer than 2 points
};

/// Reads the `traj_id,time_s,east_m,north_m,alt_m` CSV format. Rows of one id
/// may be interleaved with other ids but must appear in increasing time.
ParseResult parse_trajectories(std::istream& in);
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);

/// Reads `airport_center = e,n` and repeated `runway = id,ea,na,eb,nb` lines.
AirportGeometry parse_airport(std::istream& in);
void write_airport(std::ostream& out, const AirportGeometry& geometry);

/// Departure iff the first point is strictly closer (ground distance) to the
/// airport centre than the last point.
Phase classify_phase(const Trajectory& t, const AirportGeometry& geometry);

/// Runway whose centre-line segment is nearest the airport-side endpoint of
/// the track; ties go to the lexicographically smallest id.
std::string assign_runway(const Trajectory& t, const AirportGeometry& geometry, Phase phase);

/// Keeps the airport-side contiguous run of points at or below `max_altitude`
/// (prefix for departures, suffix for approaches). Empty when fewer than two
/// points survive.
std::optional<Trajectory> filter_altitude(const Trajectory& t, Phase phase, double max_altitude);

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b);

}  // namespace trajrep
