#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajrep/trajectory_io.hpp"

namespace trajrep {

/// Bias function followed by `count - 1` Gaussian bumps on [0, 1].
struct BasisSet {
  int count = 18;              // J, bias included
  std::vector<double> centers; // count - 1 values, strictly increasing
  double width = 0.0;          // shared RBF standard deviation

  /// Centres uniform on [0, 1] with width equal to the centre spacing. With a
  /// single bump (count == 2) the centre is 0.5 and the width 1.
  static BasisSet uniform(int count);

  void validate() const;

  /// The J scalar basis values at tau: [1, rbf_1(tau), ..., rbf_{J-1}(tau)].
  Eigen::VectorXd values(double tau) const;

  /// The 3 x 3J block-diagonal matrix: row d holds values(tau) in columns
  /// d*J .. d*J+J-1.
  Eigen::MatrixXd block_matrix(double tau) const;

  bool operator==(const BasisSet&) const = default;
};

/// Per-axis affine map between metres and the unit cube.
struct NormalizationTransform {
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();

  Eigen::Vector3d normalize(const Eigen::Vector3d& p) const {
    return (p - offset).cwiseQuotient(scale);
  }
  Eigen::Vector3d denormalize(const Eigen::Vector3d& p) const {
    return offset + scale.cwiseProduct(p);
  }
  Eigen::Matrix3d denormalize_covariance(const Eigen::Matrix3d& cov) const {
    return scale.asDiagonal() * cov * scale.asDiagonal();
  }
};

struct NormalizedTrajectory {
  std::vector<double> tau;  // 0 at the first point, 1 at the last
  Eigen::MatrixXd coords;   // M x 3, normalized east, north, altitude
};

struct NormalizedCluster {
  std::vector<NormalizedTrajectory> trajectories;
  NormalizationTransform transform;
};

/// Cluster-wide min/range scaling per axis and per-trajectory time rescaling.
NormalizedCluster normalize_cluster(std::span<const Trajectory> cluster);

/// The stacked design of one trajectory. Because the basis is shared across
/// axes, Phi_n is represented by its M x J scalar block `basis`; the full
/// 3M x 3J matrix (point-major rows) is available through `stacked()`.
struct TrajectoryDesign {
  Eigen::MatrixXd basis;      // M x J
  Eigen::MatrixXd coords;     // M x 3
  Eigen::MatrixXd gram;       // basis^T basis (J x J)
  Eigen::VectorXd projected;  // Phi^T y (3J)

  /// Builds the cached products from an M x J basis block and M x 3 targets.
  static TrajectoryDesign from(Eigen::MatrixXd basis, Eigen::MatrixXd coords);

  Eigen::Index points() const { return basis.rows(); }
  Eigen::Index weights() const { return 3 * basis.cols(); }
  Eigen::MatrixXd stacked() const;          // Phi_n (3M x 3J)
  Eigen::VectorXd stacked_targets() const;  // y_n (3M)
};

TrajectoryDesign make_design(const BasisSet& basis, const NormalizedTrajectory& t);
std::vector<TrajectoryDesign> make_designs(const BasisSet& basis, const NormalizedCluster& c);

/// The weight-space parameters (mu, Sigma, beta).
struct ModelParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  double beta = 1e3;
};

/// Posterior moments of one trajectory's weights.
struct Expectation {
  Eigen::VectorXd mean;  // E[w_n]
  Eigen::MatrixXd cov;   // S_n

  Eigen::MatrixXd second_moment() const { return cov + mean * mean.transpose(); }
};

/// E-step. Works from the Cholesky factor of Sigma so that neither Sigma nor
/// S_n^{-1} is ever inverted explicitly. Throws if Sigma is not SPD.
std::vector<Expectation> e_step(const ModelParams& params,
                                std::span<const TrajectoryDesign> designs,
                                unsigned threads = 1);

struct MStepResult {
  ModelParams params;
  bool ridge_applied = false;
};

/// Closed-form maximisation of the expected complete-data likelihood.
MStepResult m_step(std::span<const Expectation> expectations,
                   std::span<const TrajectoryDesign> designs);

/// Expected complete-data negative log-likelihood (constants dropped).
double neg_log_likelihood(const ModelParams& params, std::span<const Expectation> expectations,
                          std::span<const TrajectoryDesign> designs);

/// log p(y | mu, Sigma, beta) with the weights integrated out, including the
/// 2*pi constant.
double log_marginal_likelihood(const ModelParams& params,
                               std::span<const TrajectoryDesign> designs);

struct EmOptions {
  double prior_scale = 1e3;  // Sigma_0 = prior_scale * I
  double beta_init = 1e3;
  double tolerance = 1e-3;   // absolute change of the negative log-likelihood
  int max_iterations = 500;
  unsigned threads = 1;

  void validate() const;
};

struct TrajectoryModel {
  int cluster_id = -1;
  BasisSet basis;
  NormalizationTransform transform;
  ModelParams params;
  std::size_t n_trajectories = 0;
  std::vector<double> nll_trace;
  bool converged = false;
  int iterations = 0;
  int ridge_count = 0;
};

/// Called after every M-step with the iteration number (1-based) and the
/// updated parameters.
using EmObserver = std::function<void(int iteration, const ModelParams& params)>;

TrajectoryModel em_fit(std::span<const TrajectoryDesign> designs, const BasisSet& basis,
                       const EmOptions& options, const EmObserver& observer = {});
TrajectoryModel em_fit(const NormalizedCluster& cluster, const BasisSet& basis,
                       const EmOptions& options);

/// Normalises the cluster and runs EM.
TrajectoryModel fit_cluster(std::span<const Trajectory> cluster, const BasisSet& basis,
                            const EmOptions& options);

/// Mean and 3x3 covariance of the process at one normalized time.
struct GaussianSection {
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;
};

/// Section in normalized coordinates: Phi(tau) mu and Phi Sigma Phi^T + I/beta.
GaussianSection model_section(const TrajectoryModel& model, double tau);
/// The same section mapped back to metres.
GaussianSection model_section_real(const TrajectoryModel& model, double tau);

/// Self-describing text form; doubles are written in shortest round-trip form.
void write_model(std::ostream& out, const TrajectoryModel& model);
TrajectoryModel read_model(std::istream& in);

}  // namespace trajrep
