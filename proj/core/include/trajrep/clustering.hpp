#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "trajrep/trajectory_io.hpp"

namespace trajrep {

struct ClusteringParams {
  int resample_steps = 30;
  double variance_retained = 0.95;
  double eps = 0.20;
  int min_pts = 5;
  int min_cluster_size = 25;
  unsigned threads = 1;

  void validate() const;
};

/// Index-uniform resampling: `steps` samples per axis taken at fractional
/// indices i*(M-1)/(steps-1), linearly interpolated, laid out as the
/// concatenation east || north || altitude.
Eigen::VectorXd resample(const Trajectory& t, int steps);

struct PcaModel {
  Eigen::VectorXd mean;                // column means of the fitted data
  Eigen::MatrixXd components;          // orthonormal columns, one per kept axis
  Eigen::VectorXd explained_variance;  // non-increasing
  double total_variance = 0.0;
  bool degenerate = false;             // zero total variance; component arbitrary

  Eigen::Index dims() const { return components.cols(); }
};

/// `features` holds one sample per row. Keeps the fewest leading principal
/// axes whose cumulative variance fraction reaches `variance_retained`.
PcaModel pca_fit(const Eigen::MatrixXd& features, double variance_retained);
Eigen::VectorXd pca_project(const PcaModel& model, const Eigen::VectorXd& feature);

inline constexpr int kNoise = -1;

struct ClusterLabeling {
  std::vector<int> labels;  // cluster index or kNoise
  int cluster_count = 0;
};

/// DBSCAN over the rows of `points`. A point is core when at least `min_pts`
/// points (itself included) lie within Euclidean distance `eps`. Points are
/// scanned in row order and a border point joins the first cluster reaching it.
ClusterLabeling dbscan(const Eigen::MatrixXd& points, double eps, int min_pts,
                       unsigned threads = 1);

struct ClusteringResult {
  std::vector<std::vector<std::size_t>> clusters;  // input indices per surviving cluster
  std::vector<std::size_t> outliers;               // noise plus pruned small clusters
  std::vector<int> labels;                         // per input: surviving cluster or kNoise
  PcaModel pca;
};

/// Resample, standardise each axis, PCA, DBSCAN, then prune clusters smaller
/// than `min_cluster_size` into the outliers.
ClusteringResult cluster_pipeline(std::span<const Trajectory> trajectories,
                                  const ClusteringParams& params);

}  // namespace trajrep
