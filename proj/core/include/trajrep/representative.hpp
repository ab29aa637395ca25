#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajrep/gp_model.hpp"

namespace trajrep {

/// CDF of the chi-square distribution for 1 or 2 degrees of freedom.
double chi_square_cdf(int dof, double x);

/// Probability mass of the Mahalanobis-radius ring [lower, upper] (chi-square
/// evaluated at the squared radii), split evenly over `count` trajectories.
double chi_square_ring_weight(int dof, double lower_radius, double upper_radius, int count);

/// Eigen-decomposition of a 3x3 SPD matrix, eigenvalues descending.
struct EigenFrame {
  Eigen::Matrix3d axes;    // columns are unit eigenvectors
  Eigen::Vector3d values;  // lambda_1 >= lambda_2 >= lambda_3 > 0

  Eigen::Matrix3d reconstruct() const { return axes * values.asDiagonal() * axes.transpose(); }
};

EigenFrame eigendecompose(const Eigen::Matrix3d& shape);

/// Points p with (p - center)^T shape^{-1} (p - center) = radius^2.
struct Ellipsoid {
  Eigen::Vector3d center;
  Eigen::Matrix3d shape;
  double radius = 1.0;
};

double mahalanobis_squared(const Eigen::Vector3d& p, const Eigen::Vector3d& center,
                           const Eigen::Matrix3d& shape);

/// Plane normal to the mean path. In-plane angle 0 deg points along
/// `lateral`, 90 deg along `vertical`; (normal, lateral, vertical) is right-handed.
struct SectionPlane {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
  Eigen::Vector3d lateral;
  Eigen::Vector3d vertical;

  Eigen::Vector3d to_world(const Eigen::Vector2d& xy) const {
    return point + xy.x() * lateral + xy.y() * vertical;
  }
  Eigen::Vector3d direction(double angle_deg) const;
};

/// A (possibly degenerate) ellipse in plane coordinates:
/// x(phi) = center + axes * (cos phi, sin phi).
struct SectionEllipse {
  Eigen::Vector2d center;
  Eigen::Matrix2d axes;  // conjugate semi-diameters as columns

  Eigen::Vector2d at(double phi) const {
    return center + axes * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  }
  /// Principal semi-axis lengths, largest first.
  Eigen::Vector2d semi_axes() const;
  /// axes * axes^T, independent of which conjugate pair `axes` holds.
  Eigen::Matrix2d shape() const;
  /// center + shape^{1/2} (cos a, sin a): the angle is measured in whitened
  /// coordinates, so equal angle steps carry equal Gaussian mass. For an
  /// ellipse aligned with the plane axes this is (a cos, b sin).
  Eigen::Vector2d at_angle(double angle_deg) const;
};

/// Intersection of an ellipsoid with a plane, by whitening the ellipsoid into
/// a sphere. nullopt when the plane lies farther than `radius` (Mahalanobis)
/// from the centre.
std::optional<SectionEllipse> plane_ellipsoid_intersection(const Ellipsoid& e,
                                                           const SectionPlane& plane);

/// Real-space Gaussian section as a function of normalized time.
using SectionField = std::function<GaussianSection(double tau)>;

SectionField real_space_field(const TrajectoryModel& model);

inline constexpr double kDefaultDTau = 1e-4;

/// Plane through m(tau) normal to the finite-difference tangent of the mean;
/// the difference is central inside (0, 1) and one-sided at the ends.
SectionPlane section_plane(const SectionField& field, double tau, double d_tau = kDefaultDTau);
SectionPlane section_plane(const TrajectoryModel& model, double tau, double d_tau = kDefaultDTau);

/// Point at Mahalanobis radius `radius` and in-plane angle `angle_deg` on the
/// section at `tau`: each radius-scaled ellipsoid centred at m(tau') for tau'
/// in `search_taus` (and tau itself) that the plane cuts is evaluated at the
/// angle, and the point farthest from m(tau) wins. Radius 0 returns m(tau).
Eigen::Vector3d representative_point(const SectionField& field, double tau, double radius,
                                     double angle_deg, std::span<const double> search_taus,
                                     double d_tau = kDefaultDTau);
Eigen::Vector3d representative_point(const TrajectoryModel& model, double tau, double radius,
                                     double angle_deg, std::span<const double> search_taus,
                                     double d_tau = kDefaultDTau);

struct Ring {
  double radius = 0.0;  // Mahalanobis radius of the emitted trajectories
  double lower = 0.0;   // ring bounds, as radii
  double upper = 0.0;
  std::vector<double> angles_deg;
};

struct RepresentativeScheme {
  std::string name;
  int dof = 1;
  std::vector<Ring> rings;

  /// Centre plus +-1 and +-2 lateral offsets, 1 degree of freedom.
  static RepresentativeScheme flat();
  /// Centre plus 8 directions at radii 1 and 2, 2 degrees of freedom.
  static RepresentativeScheme round();

  void validate() const;
  std::size_t trajectory_count() const;
  double total_weight() const;
};

struct WeightedTrajectory {
  std::vector<Eigen::Vector3d> points;
  double weight = 0.0;
  int cluster = -1;
  double radius = 0.0;
  double angle_deg = 0.0;
};

struct GenerationOptions {
  int steps = 100;
  double d_tau = kDefaultDTau;
  int search_window = 0;  // 0 searches every step; k > 0 searches |i - j| <= k
  unsigned threads = 1;

  void validate() const;
};

std::vector<WeightedTrajectory> generate_representatives(const SectionField& field,
                                                         const RepresentativeScheme& scheme,
                                                         int cluster,
                                                         const GenerationOptions& options = {});
std::vector<WeightedTrajectory> generate_representatives(const TrajectoryModel& model,
                                                         const RepresentativeScheme& scheme,
                                                         const GenerationOptions& options = {});

/// CSV `cluster,radius,angle_deg,weight,step,east_m,north_m,alt_m`.
void write_representatives(std::ostream& out, std::span<const WeightedTrajectory> reps);
std::vector<WeightedTrajectory> read_representatives(std::istream& in);

}  // namespace trajrep
