#include "trajrep/representative.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "trajrep/parallel.hpp"
#include "trajrep/text.hpp"

namespace trajrep {
namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

// Ellipsoid prepared for repeated plane sections: `whiten` maps the ellipsoid
// onto the sphere of radius `radius` about the origin.
struct WhitenedEllipsoid {
  Eigen::Vector3d center;
  Eigen::Matrix3d whiten;  // shape^{-1/2}
  double radius = 0.0;
};

WhitenedEllipsoid prepare(const Eigen::Vector3d& center, const Eigen::Matrix3d& shape,
                          double radius) {
  const auto frame = eigendecompose(shape);
  WhitenedEllipsoid w;
  w.center = center;
  w.whiten = frame.axes * frame.values.cwiseSqrt().cwiseInverse().asDiagonal() *
             frame.axes.transpose();
  w.radius = radius;
  return w;
}

std::optional<SectionEllipse> intersect(const WhitenedEllipsoid& e, const SectionPlane& plane) {
  Eigen::Matrix<double, 3, 2> basis;
  basis << plane.lateral, plane.vertical;
  const Eigen::Matrix<double, 3, 2> a = e.whiten * basis;
  const Eigen::Vector3d z0 = e.whiten * (plane.point - e.center);

  // The whitened plane is z0 + a x; its closest point to the origin is the
  // centre of the section circle.
  const Eigen::Matrix2d ata = a.transpose() * a;
  const Eigen::Matrix<double, 2, 3> pinv = ata.inverse() * a.transpose();
  const Eigen::Vector2d x_center = -pinv * z0;
  const double dist2 = (z0 + a * x_center).squaredNorm();
  const double r2 = e.radius * e.radius;
  double rho2 = r2 - dist2;
  if (rho2 < 0.0) {
    if (rho2 < -1e-12 * std::max(r2, 1e-300)) return std::nullopt;
    rho2 = 0.0;
  }

  Eigen::Vector3d e1 = a.col(0).normalized();
  Eigen::Vector3d e2 = (a.col(1) - a.col(1).dot(e1) * e1).normalized();
  Eigen::Matrix<double, 3, 2> circle;
  circle << e1, e2;

  SectionEllipse out;
  out.center = x_center;
  out.axes = std::sqrt(rho2) * (pinv * circle);
  return out;
}

// Section point at `angle` that lies farthest from the plane origin m(tau).
Eigen::Vector2d farthest_point(const SectionPlane& plane, double angle_deg,
                               std::span<const WhitenedEllipsoid> candidates) {
  double best = -1.0;
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (const auto& e : candidates) {
    const auto section = intersect(e, plane);
    if (!section) continue;
    const Eigen::Vector2d p = section->at_angle(angle_deg);
    if (p.squaredNorm() > best) best = p.squaredNorm(), out = p;
  }
  if (best < 0.0) throw Error("representative_point: the plane misses every ellipsoid");
  return out;
}

}  // namespace

double chi_square_cdf(int dof, double x) {
  if (x <= 0.0) return 0.0;
  switch (dof) {
    case 1:
      return std::erf(std::sqrt(x / 2.0));
    case 2:
      return -std::expm1(-x / 2.0);
    default:
      throw Error("chi_square_cdf: only 1 or 2 degrees of freedom are supported");
  }
}

double chi_square_ring_weight(int dof, double lower_radius, double upper_radius, int count) {
  if (!(lower_radius >= 0.0) || !(upper_radius > lower_radius))
    throw Error("chi_square_ring_weight: need 0 <= lower < upper");
  if (count < 1) throw Error("chi_square_ring_weight: count must be >= 1");
  return (chi_square_cdf(dof, upper_radius * upper_radius) -
          chi_square_cdf(dof, lower_radius * lower_radius)) /
         count;
}

EigenFrame eigendecompose(const Eigen::Matrix3d& shape) {
  const double scale = std::max(1.0, shape.cwiseAbs().maxCoeff());
  if (!shape.allFinite() || (shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error("eigendecompose: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(0.5 * (shape + shape.transpose()));
  if (solver.info() != Eigen::Success) throw Error("eigendecompose: solver failed");
  EigenFrame frame;
  frame.values = solver.eigenvalues().reverse();
  frame.axes = solver.eigenvectors().rowwise().reverse();
  if (!(frame.values[2] > 0.0)) throw Error("eigendecompose: matrix is not positive definite");
  return frame;
}

double mahalanobis_squared(const Eigen::Vector3d& p, const Eigen::Vector3d& center,
                           const Eigen::Matrix3d& shape) {
  const Eigen::Vector3d d = p - center;
  return d.dot(shape.ldlt().solve(d));
}

Eigen::Vector3d SectionPlane::direction(double angle_deg) const {
  const double a = angle_deg * kDegree;
  return std::cos(a) * lateral + std::sin(a) * vertical;
}

Eigen::Vector2d SectionEllipse::semi_axes() const {
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(axes);
  return svd.singularValues();
}

Eigen::Matrix2d SectionEllipse::shape() const { return axes * axes.transpose(); }

Eigen::Vector2d SectionEllipse::at_angle(double angle_deg) const {
  // Closed-form symmetric square root of the 2x2 shape matrix.
  const Eigen::Matrix2d q = shape();
  const double s = std::sqrt(std::max(0.0, q.determinant()));
  const double t = std::sqrt(std::max(0.0, q.trace() + 2.0 * s));
  if (!(t > 0.0)) return center;
  const Eigen::Matrix2d root = (q + s * Eigen::Matrix2d::Identity()) / t;
  const double a = angle_deg * kDegree;
  return center + root * Eigen::Vector2d(std::cos(a), std::sin(a));
}

std::optional<SectionEllipse> plane_ellipsoid_intersection(const Ellipsoid& e,
                                                           const SectionPlane& plane) {
  if (!(e.radius > 0.0)) throw Error("plane_ellipsoid_intersection: radius must be positive");
  return intersect(prepare(e.center, e.shape, e.radius), plane);
}

SectionField real_space_field(const TrajectoryModel& model) {
  return [model](double tau) { return model_section_real(model, tau); };
}

SectionPlane section_plane(const SectionField& field, double tau, double d_tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error("section_plane: tau outside [0, 1]");
  if (!(d_tau > 0.0 && d_tau <= 0.1)) throw Error("section_plane: d_tau must lie in (0, 0.1]");
  const double lo = std::max(0.0, tau - d_tau / 2.0);
  const double hi = std::min(1.0, tau + d_tau / 2.0);
  const Eigen::Vector3d diff = (field(hi).mean - field(lo).mean) / (hi - lo);
  if (diff.norm() < 1e-12) throw Error("section_plane: stationary mean");

  SectionPlane plane;
  plane.point = field(tau).mean;
  plane.normal = diff.normalized();
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d lateral = up.cross(plane.normal);
  if (lateral.norm() < 1e-9) {
    const Eigen::Vector3d east = Eigen::Vector3d::UnitX();
    lateral = east - east.dot(plane.normal) * plane.normal;
  }
  plane.lateral = lateral.normalized();
  plane.vertical = plane.normal.cross(plane.lateral).normalized();
  return plane;
}

SectionPlane section_plane(const TrajectoryModel& model, double tau, double d_tau) {
  return section_plane(real_space_field(model), tau, d_tau);
}

Eigen::Vector3d representative_point(const SectionField& field, double tau, double radius,
                                     double angle_deg, std::span<const double> search_taus,
                                     double d_tau) {
  if (!(radius >= 0.0)) throw Error("representative_point: radius must be >= 0");
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error("representative_point: tau outside [0, 1]");
  if (radius == 0.0) return field(tau).mean;

  const auto plane = section_plane(field, tau, d_tau);
  std::vector<WhitenedEllipsoid> candidates;
  candidates.reserve(search_taus.size() + 1);
  const auto self = field(tau);
  candidates.push_back(prepare(self.mean, self.cov, radius));
  for (double other : search_taus) {
    if (other == tau) continue;
    const auto s = field(other);
    candidates.push_back(prepare(s.mean, s.cov, radius));
  }
  return plane.to_world(farthest_point(plane, angle_deg, candidates));
}

Eigen::Vector3d representative_point(const TrajectoryModel& model, double tau, double radius,
                                     double angle_deg, std::span<const double> search_taus,
                                     double d_tau) {
  return representative_point(real_space_field(model), tau, radius, angle_deg, search_taus, d_tau);
}

// ---------------------------------------------------------------------------
// Schemes

RepresentativeScheme RepresentativeScheme::flat() {
  return {"flat", 1, {{0.0, 0.0, 0.5, {0.0}}, {1.0, 0.5, 1.5, {0.0, 180.0}},
                      {2.0, 1.5, 2.5, {0.0, 180.0}}}};
}

RepresentativeScheme RepresentativeScheme::round() {
  std::vector<double> compass;
  for (int k = 0; k < 8; ++k) compass.push_back(45.0 * k);
  return {"round", 2, {{0.0, 0.0, 0.5, {0.0}}, {1.0, 0.5, 1.5, compass}, {2.0, 1.5, 2.5, compass}}};
}

void RepresentativeScheme::validate() const {
  if (dof != 1 && dof != 2) throw Error("scheme '" + name + "': dof must be 1 or 2");
  if (rings.empty()) throw Error("scheme '" + name + "' has no rings");
  for (std::size_t k = 0; k < rings.size(); ++k) {
    const auto& r = rings[k];
    if (!(r.lower >= 0.0) || !(r.upper > r.lower))
      throw Error("scheme '" + name + "': ring bounds must satisfy 0 <= lower < upper");
    if (!(r.radius >= 0.0)) throw Error("scheme '" + name + "': negative ring radius");
    if (r.angles_deg.empty()) throw Error("scheme '" + name + "': ring without angles");
    if (r.radius == 0.0 && r.angles_deg.size() != 1)
      throw Error("scheme '" + name + "': the centre ring takes exactly one angle");
    if (k > 0 && r.lower < rings[k - 1].upper)
      throw Error("scheme '" + name + "': rings overlap or are out of order");
  }
}

std::size_t RepresentativeScheme::trajectory_count() const {
  std::size_t n = 0;
  for (const auto& r : rings) n += r.angles_deg.size();
  return n;
}

double RepresentativeScheme::total_weight() const {
  double total = 0.0;
  for (const auto& r : rings)
    total += chi_square_ring_weight(dof, r.lower, r.upper, 1);
  return total;
}

void GenerationOptions::validate() const {
  if (steps < 2) throw Error("representative.steps must be >= 2");
  if (!(d_tau > 0.0 && d_tau <= 0.1)) throw Error("representative.d_tau must lie in (0, 0.1]");
  if (search_window < 0) throw Error("representative.search_window must be >= 0");
}

std::vector<WeightedTrajectory> generate_representatives(const SectionField& field,
                                                         const RepresentativeScheme& scheme,
                                                         int cluster,
                                                         const GenerationOptions& options) {
  scheme.validate();
  options.validate();
  const auto steps = static_cast<std::size_t>(options.steps);

  std::vector<double> taus(steps);
  std::vector<GaussianSection> sections(steps);
  std::vector<SectionPlane> planes(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    taus[i] = static_cast<double>(i) / static_cast<double>(steps - 1);
    sections[i] = field(taus[i]);
  }
  parallel_for(steps, options.threads,
               [&](std::size_t i) { planes[i] = section_plane(field, taus[i], options.d_tau); });

  struct Entry {
    double radius, weight, angle;
  };
  std::vector<Entry> entries;
  for (const auto& ring : scheme.rings) {
    const int count = static_cast<int>(ring.angles_deg.size());
    const double weight = chi_square_ring_weight(scheme.dof, ring.lower, ring.upper, count);
    for (double angle : ring.angles_deg) entries.push_back({ring.radius, weight, angle});
  }

  std::vector<WeightedTrajectory> out(entries.size());
  parallel_for(entries.size(), options.threads, [&](std::size_t k) {
    const auto& entry = entries[k];
    auto& rep = out[k];
    rep.weight = entry.weight;
    rep.cluster = cluster;
    rep.radius = entry.radius;
    rep.angle_deg = entry.angle;
    rep.points.resize(steps);
    if (entry.radius == 0.0) {
      for (std::size_t i = 0; i < steps; ++i) rep.points[i] = sections[i].mean;
      return;
    }
    std::vector<WhitenedEllipsoid> ellipsoids(steps);
    for (std::size_t j = 0; j < steps; ++j)
      ellipsoids[j] = prepare(sections[j].mean, sections[j].cov, entry.radius);
    for (std::size_t i = 0; i < steps; ++i) {
      std::size_t first = 0;
      std::size_t last = steps;
      if (options.search_window > 0) {
        const auto w = static_cast<std::size_t>(options.search_window);
        first = i > w ? i - w : 0;
        last = std::min(steps, i + w + 1);
      }
      const std::span<const WhitenedEllipsoid> window(ellipsoids.data() + first, last - first);
      rep.points[i] = planes[i].to_world(farthest_point(planes[i], entry.angle, window));
    }
  });
  return out;
}

std::vector<WeightedTrajectory> generate_representatives(const TrajectoryModel& model,
                                                         const RepresentativeScheme& scheme,
                                                         const GenerationOptions& options) {
  return generate_representatives(real_space_field(model), scheme, model.cluster_id, options);
}

// ---------------------------------------------------------------------------
// CSV

void write_representatives(std::ostream& out, std::span<const WeightedTrajectory> reps) {
  out << "cluster,radius,angle_deg,weight,step,east_m,north_m,alt_m\n";
  for (const auto& r : reps)
    for (std::size_t i = 0; i < r.points.size(); ++i)
      out << r.cluster << ',' << format_double(r.radius) << ',' << format_double(r.angle_deg)
          << ',' << format_double(r.weight) << ',' << i << ',' << format_double(r.points[i].x())
          << ',' << format_double(r.points[i].y()) << ',' << format_double(r.points[i].z())
          << '\n';
}

std::vector<WeightedTrajectory> read_representatives(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  if (trim(line) != "cluster,radius,angle_deg,weight,step,east_m,north_m,alt_m")
    throw ParseError(1, "unexpected representative CSV header");
  std::vector<WeightedTrajectory> reps;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != 8) throw ParseError(line_number, "expected 8 fields");
    double v[8];
    for (std::size_t k = 0; k < 8; ++k) {
      const auto parsed = parse_double(fields[k]);
      if (!parsed || !std::isfinite(*parsed)) throw ParseError(line_number, "bad number");
      v[k] = *parsed;
    }
    const int cluster = static_cast<int>(v[0]);
    const auto step = static_cast<std::size_t>(v[4]);
    const bool continues = !reps.empty() && reps.back().cluster == cluster &&
                           reps.back().radius == v[1] && reps.back().angle_deg == v[2] &&
                           reps.back().points.size() == step;
    if (!continues) {
      if (step != 0) throw ParseError(line_number, "trajectory does not start at step 0");
      reps.push_back({{}, v[3], cluster, v[1], v[2]});
    }
    reps.back().points.emplace_back(v[5], v[6], v[7]);
  }
  return reps;
}

}  // namespace trajrep
