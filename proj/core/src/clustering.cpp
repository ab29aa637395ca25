#include "trajrep/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Eigenvalues>

#include "trajrep/parallel.hpp"
#include "trajrep/text.hpp"

namespace trajrep {

void ClusteringParams::validate() const {
  if (resample_steps < 2) throw Error("clustering.resample_steps must be >= 2");
  if (!(variance_retained > 0.0 && variance_retained <= 1.0))
    throw Error("clustering.variance_retained must lie in (0, 1]");
  if (!(eps > 0.0)) throw Error("clustering.eps must be positive");
  if (min_pts < 1) throw Error("clustering.min_pts must be >= 1");
  if (min_cluster_size < 1) throw Error("clustering.min_cluster_size must be >= 1");
}

Eigen::VectorXd resample(const Trajectory& t, int steps) {
  if (t.points.size() < 2) throw Error("resample: trajectory '" + t.id + "' has < 2 points");
  if (steps < 2) throw Error("resample: steps must be >= 2");
  const auto m = static_cast<double>(t.points.size() - 1);
  Eigen::VectorXd out(3 * steps);
  for (int i = 0; i < steps; ++i) {
    const double pos = i * m / (steps - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    lo = std::min(lo, t.points.size() - 2);
    const double frac = pos - static_cast<double>(lo);
    const auto& a = t.points[lo];
    const auto& b = t.points[lo + 1];
    // std::lerp is exact at both ends, so samples on existing points are copied.
    out[i] = std::lerp(a.east, b.east, frac);
    out[steps + i] = std::lerp(a.north, b.north, frac);
    out[2 * steps + i] = std::lerp(a.altitude, b.altitude, frac);
  }
  return out;
}

PcaModel pca_fit(const Eigen::MatrixXd& features, double variance_retained) {
  if (features.rows() < 2) throw Error("pca_fit: need at least 2 samples");
  if (!features.allFinite()) throw Error("pca_fit: non-finite feature");
  if (!(variance_retained > 0.0 && variance_retained <= 1.0))
    throw Error("pca_fit: variance_retained must lie in (0, 1]");

  PcaModel model;
  model.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(features.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca_fit: eigen-decomposition failed");
  // Eigen returns ascending order.
  const Eigen::VectorXd values = solver.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  model.total_variance = values.sum();

  if (!(model.total_variance > 0.0)) {
    model.degenerate = true;
    model.components = Eigen::MatrixXd::Zero(features.cols(), 1);
    model.components(0, 0) = 1.0;
    model.explained_variance = Eigen::VectorXd::Zero(1);
    return model;
  }

  const double target = (variance_retained - 1e-10) * model.total_variance;
  Eigen::Index kept = 0;
  double cumulative = 0.0;
  while (kept < values.size()) {
    cumulative += values[kept];
    ++kept;
    if (cumulative >= target) break;
  }
  model.components = vectors.leftCols(kept);
  model.explained_variance = values.head(kept);
  return model;
}

Eigen::VectorXd pca_project(const PcaModel& model, const Eigen::VectorXd& feature) {
  if (feature.size() != model.mean.size()) throw Error("pca_project: length mismatch");
  return model.components.transpose() * (feature - model.mean);
}

ClusterLabeling dbscan(const Eigen::MatrixXd& points, double eps, int min_pts, unsigned threads) {
  if (!(eps > 0.0)) throw Error("dbscan: eps must be positive");
  if (min_pts < 1) throw Error("dbscan: min_pts must be >= 1");
  const auto n = static_cast<std::size_t>(points.rows());
  const double eps2 = eps * eps;

  std::vector<std::vector<std::size_t>> neighbors(n);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if ((points.row(ii) - points.row(jj)).squaredNorm() <= eps2) neighbors[i].push_back(j);
    }
  });
  const auto is_core = [&](std::size_t i) {
    return neighbors[i].size() >= static_cast<std::size_t>(min_pts);
  };

  constexpr int kUnvisited = -2;
  ClusterLabeling out;
  out.labels.assign(n, kUnvisited);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != kUnvisited) continue;
    if (!is_core(i)) {
      out.labels[i] = kNoise;
      continue;
    }
    const int cluster = out.cluster_count++;
    out.labels[i] = cluster;
    std::deque<std::size_t> frontier(neighbors[i].begin(), neighbors[i].end());
    while (!frontier.empty()) {
      const auto q = frontier.front();
      frontier.pop_front();
      if (out.labels[q] == kNoise) out.labels[q] = cluster;
      if (out.labels[q] != kUnvisited) continue;
      out.labels[q] = cluster;
      if (is_core(q)) frontier.insert(frontier.end(), neighbors[q].begin(), neighbors[q].end());
    }
  }
  return out;
}

namespace {

// Per-axis standardisation of the east, north and altitude blocks.
void standardize_axes(Eigen::MatrixXd& features, int steps) {
  for (int axis = 0; axis < 3; ++axis) {
    auto block = features.middleCols(axis * steps, steps);
    const double mean = block.mean();
    const double var = (block.array() - mean).square().sum() / static_cast<double>(block.size());
    const double sd = std::sqrt(var);
    block.array() -= mean;
    if (sd >= 1e-12) block /= sd;
  }
}

}  // namespace

ClusteringResult cluster_pipeline(std::span<const Trajectory> trajectories,
                                  const ClusteringParams& params) {
  params.validate();
  ClusteringResult result;
  const std::size_t n = trajectories.size();
  result.labels.assign(n, kNoise);
  if (n < static_cast<std::size_t>(params.min_cluster_size) || n < 2) {
    for (std::size_t i = 0; i < n; ++i) result.outliers.push_back(i);
    return result;
  }

  const int steps = params.resample_steps;
  Eigen::MatrixXd features(static_cast<Eigen::Index>(n), 3 * steps);
  parallel_for(n, params.threads, [&](std::size_t i) {
    features.row(static_cast<Eigen::Index>(i)) = resample(trajectories[i], steps).transpose();
  });
  standardize_axes(features, steps);

  result.pca = pca_fit(features, params.variance_retained);
  const Eigen::MatrixXd projected =
      (features.rowwise() - result.pca.mean.transpose()) * result.pca.components;

  const auto labeling = dbscan(projected, params.eps, params.min_pts, params.threads);
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(labeling.cluster_count));
  for (std::size_t i = 0; i < n; ++i)
    if (labeling.labels[i] != kNoise)
      members[static_cast<std::size_t>(labeling.labels[i])].push_back(i);

  for (auto& group : members) {
    if (group.size() < static_cast<std::size_t>(params.min_cluster_size)) continue;
    const int id = static_cast<int>(result.clusters.size());
    for (auto i : group) result.labels[i] = id;
    result.clusters.push_back(std::move(group));
  }
  for (std::size_t i = 0; i < n; ++i)
    if (result.labels[i] == kNoise) result.outliers.push_back(i);
  return result;
}

}  // namespace trajrep
