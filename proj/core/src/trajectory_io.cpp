#include "trajrep/trajectory_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "trajrep/text.hpp"

namespace trajrep {
namespace {

constexpr std::string_view kTrajectoryHeader = "traj_id,time_s,east_m,north_m,alt_m";

bool getline_stripped(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

double require_number(std::string_view field, std::size_t line, const char* name) {
  const auto value = parse_double(field);
  if (!value) throw ParseError(line, std::string("non-numeric ") + name + " '" +
                                         std::string(trim(field)) + "'");
  if (!std::isfinite(*value)) throw ParseError(line, std::string("non-finite ") + name);
  return *value;
}

}  // namespace

const char* to_string(Phase phase) {
  return phase == Phase::Departure ? "departure" : "approach";
}

void validate_trajectory(const Trajectory& t) {
  if (t.points.size() < 2) throw Error("trajectory '" + t.id + "' has fewer than 2 points");
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const auto& p = t.points[i];
    if (!std::isfinite(p.time) || !std::isfinite(p.east) || !std::isfinite(p.north) ||
        !std::isfinite(p.altitude))
      throw Error("trajectory '" + t.id + "' has a non-finite value");
    if (i > 0 && !(p.time > t.points[i - 1].time))
      throw Error("trajectory '" + t.id + "' has non-increasing time");
  }
}

void AirportGeometry::validate() const {
  if (!center.allFinite()) throw Error("airport_center is not finite");
  if (runways.empty()) throw Error("airport geometry has no runway");
  for (const auto& r : runways) {
    if (r.id.empty()) throw Error("runway with empty id");
    if (!r.end_a.allFinite() || !r.end_b.allFinite())
      throw Error("runway '" + r.id + "' has non-finite endpoints");
    if (r.end_a == r.end_b) throw Error("runway '" + r.id + "' endpoints coincide");
  }
}

ParseResult parse_trajectories(std::istream& in) {
  std::string line;
  if (!getline_stripped(in, line)) throw ParseError(1, "missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (trim(line) != kTrajectoryHeader)
    throw ParseError(1, "expected header '" + std::string(kTrajectoryHeader) + "'");

  ParseResult result;
  std::unordered_map<std::string, std::size_t> index_of;
  std::size_t line_number = 1;
  while (getline_stripped(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    if (!is_valid_utf8(line)) throw ParseError(line_number, "invalid UTF-8");
    const auto fields = split(line, ',');
    if (fields.size() != 5)
      throw ParseError(line_number, "expected 5 fields, found " + std::to_string(fields.size()));
    const std::string id(trim(fields[0]));
    if (id.empty()) throw ParseError(line_number, "empty traj_id");
    TrajectoryPoint p;
    p.time = require_number(fields[1], line_number, "time_s");
    p.east = require_number(fields[2], line_number, "east_m");
    p.north = require_number(fields[3], line_number, "north_m");
    p.altitude = require_number(fields[4], line_number, "alt_m");
    if (p.time < 0.0) throw ParseError(line_number, "negative time_s");

    auto [it, inserted] = index_of.try_emplace(id, result.trajectories.size());
    if (inserted) result.trajectories.push_back({id, {}});
    auto& track = result.trajectories[it->second];
    if (!track.points.empty() && !(p.time > track.points.back().time))
      throw Error("trajectory '" + id + "': time not strictly increasing (line " +
                  std::to_string(line_number) + ")");
    track.points.push_back(p);
  }

  const auto before = result.trajectories.size();
  std::erase_if(result.trajectories, [](const Trajectory& t) { return t.points.size() < 2; });
  result.rejected_short = before - result.trajectories.size();
  return result;
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
  out << kTrajectoryHeader << '\n';
  for (const auto& t : trajectories)
    for (const auto& p : t.points)
      out << t.id << ',' << format_double(p.time) << ',' << format_double(p.east) << ','
          << format_double(p.north) << ',' << format_double(p.altitude) << '\n';
}

AirportGeometry parse_airport(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  AirportGeometry geometry;
  bool have_center = false;
  for (const auto& kv : parse_key_values(buffer.str())) {
    const auto fields = split(kv.value, ',');
    auto number = [&](std::size_t i) {
      const auto v = parse_double(fields[i]);
      if (!v || !std::isfinite(*v))
        throw ParseError(kv.line, "bad number in '" + kv.key + "'");
      return *v;
    };
    if (kv.key == "airport_center") {
      if (fields.size() != 2) throw ParseError(kv.line, "airport_center expects <e>,<n>");
      geometry.center = {number(0), number(1)};
      have_center = true;
    } else if (kv.key == "runway") {
      if (fields.size() != 5)
        throw ParseError(kv.line, "runway expects <id>,<ea>,<na>,<eb>,<nb>");
      geometry.runways.push_back({std::string(trim(fields[0])),
                                  {number(1), number(2)},
                                  {number(3), number(4)}});
    } else {
      throw ParseError(kv.line, "unknown key '" + kv.key + "'");
    }
  }
  if (!have_center) throw ParseError(0, "airport geometry lacks airport_center");
  geometry.validate();
  return geometry;
}

void write_airport(std::ostream& out, const AirportGeometry& geometry) {
  out << "airport_center = " << format_double(geometry.center.x()) << ','
      << format_double(geometry.center.y()) << '\n';
  for (const auto& r : geometry.runways)
    out << "runway = " << r.id << ',' << format_double(r.end_a.x()) << ','
        << format_double(r.end_a.y()) << ',' << format_double(r.end_b.x()) << ','
        << format_double(r.end_b.y()) << '\n';
}

Phase classify_phase(const Trajectory& t, const AirportGeometry& geometry) {
  const auto ground = [](const TrajectoryPoint& p) { return Eigen::Vector2d(p.east, p.north); };
  const double first = (ground(t.points.front()) - geometry.center).norm();
  const double last = (ground(t.points.back()) - geometry.center).norm();
  return first < last ? Phase::Departure : Phase::Approach;
}

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

std::string assign_runway(const Trajectory& t, const AirportGeometry& geometry, Phase phase) {
  geometry.validate();
  const auto& end = phase == Phase::Departure ? t.points.front() : t.points.back();
  const Eigen::Vector2d p(end.east, end.north);
  const Runway* best = nullptr;
  double best_distance = 0.0;
  for (const auto& r : geometry.runways) {
    const double d = point_segment_distance(p, r.end_a, r.end_b);
    const double tie = 1e-9 * std::max(1.0, std::max(d, best_distance));
    if (best == nullptr || d < best_distance - tie ||
        (std::abs(d - best_distance) <= tie && r.id < best->id)) {
      best = &r;
      best_distance = d;
    }
  }
  return best->id;
}

std::optional<Trajectory> filter_altitude(const Trajectory& t, Phase phase, double max_altitude) {
  if (!(max_altitude > 0.0)) throw Error("filter_altitude: max_altitude must be positive");
  const auto& pts = t.points;
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
  if (phase == Phase::Departure) {
    while (last < pts.size() && pts[last].altitude <= max_altitude) ++last;
  } else {
    first = last = pts.size();
    while (first > 0 && pts[first - 1].altitude <= max_altitude) --first;
  }
  if (last - first < 2) return std::nullopt;
  return Trajectory{t.id, {pts.begin() + static_cast<std::ptrdiff_t>(first),
                           pts.begin() + static_cast<std::ptrdiff_t>(last)}};
}

}  // namespace trajrep
