#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajrep/gp_model.hpp"
#include "trajrep/trajectory_io.hpp"

namespace trajrep {

/// A departure corridor: a smooth nominal ground track with a constant climb
/// gradient and three Gaussian dispersion modes around it.
struct CorridorSpec {
  std::string name;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  double heading_deg = 0.0;  // counter-clockwise from east
  double turn_deg = 0.0;     // positive turns left
  double turn_start_m = 0.0;
  double turn_end_m = 0.0;
  double length_m = 40000.0;
  double climb_gradient = 0.05;
  double offset_sigma_m = 500.0;  // lateral offset, 1 - exp(-s / offset_scale_m) shape
  double offset_scale_m = 3000.0;
  double fan_sigma_m = 500.0;      // lateral, growing linearly to the far end
  double vertical_sigma_m = 20.0;  // climb-rate spread, linear in distance
  double noise_m = 10.0;           // white noise per sample and axis
  double start_spread_m = 300.0;   // first detection uniform over this much of the path

  void validate() const;
};

/// Corridor: real-space nominal path plus dispersion modes. Model: weights
/// drawn from the corridor's basis projection (mu*, Sigma*, beta*).
enum class Sampler { Corridor, Model };

struct SynthOptions {
  std::uint64_t seed = 1;
  Sampler sampler = Sampler::Corridor;
  int per_corridor = 162;
  double outlier_fraction = 0.19;  // of the whole dataset
  double speed_mps = 80.0;
  double sample_interval_s = 2.0;
  int basis_count = 18;
  std::vector<CorridorSpec> corridors = default_corridors();

  /// Four departures, one from each end of two parallel east-west runways:
  /// two straight out and two turning right.
  static std::vector<CorridorSpec> default_corridors();
  static AirportGeometry default_airport();
  void validate() const;
};

struct SyntheticDataset {
  AirportGeometry airport;
  std::vector<Trajectory> trajectories;
  std::vector<int> labels;                 // corridor index, or -1 for random tracks
  std::vector<TrajectoryModel> truths;     // basis projection per corridor
};

/// Basis projection of a corridor: mu is the least-squares fit of the
/// nominal path, Sigma the projection of the dispersion modes and beta the
/// per-sample noise, all in the corridor's normalized frame. Corridor tracks
/// are drawn in real space, so this is a reference rather than the sampler.
TrajectoryModel corridor_truth(const CorridorSpec& corridor, int basis_count, int cluster_id);

/// Normalized coordinates (M x 3) at `tau` for w ~ N(mu, Sigma) plus noise.
Eigen::MatrixXd sample_normalized(const ModelParams& params, const BasisSet& basis,
                                  std::span<const double> tau, std::mt19937_64& rng);

/// One trajectory drawn from a weight-space model, with `points` samples over
/// `duration_s`.
Trajectory sample_trajectory(const TrajectoryModel& truth, int points, double duration_s,
                             std::string id, std::mt19937_64& rng);

/// One corridor track drawn in real space from the nominal path and modes.
Trajectory sample_corridor(const CorridorSpec& corridor, double speed_mps,
                           double sample_interval_s, double duration_scale, std::string id,
                           std::mt19937_64& rng);

SyntheticDataset synthesize(const SynthOptions& options);

}  // namespace trajrep
