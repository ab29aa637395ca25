#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "oracles.hpp"
#include "trajrep/gp_model.hpp"
#include "trajrep/trajectory_io.hpp"

namespace testing {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("trajrep-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Straight track from `a` to `b` with `points` samples one second apart.
inline trajrep::Trajectory line_track(const std::string& id, const Eigen::Vector3d& a,
                                      const Eigen::Vector3d& b, int points) {
  trajrep::Trajectory t;
  t.id = id;
  for (int k = 0; k < points; ++k) {
    const double f = static_cast<double>(k) / (points - 1);
    const Eigen::Vector3d p = a + f * (b - a);
    t.points.push_back({static_cast<double>(k), p.x(), p.y(), p.z()});
  }
  return t;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

/// Random SPD matrix A A^T + floor I.
inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double floor = 0.1) {
  const Eigen::MatrixXd a = random_matrix(n, n, rng);
  return a * a.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace testing

namespace testing {

/// A cluster drawn from known weight-space parameters: w_n ~ N(mu, Sigma),
/// y_nm = Phi(tau_nm) w_n + noise with precision beta.
struct EmCase {
  int basis_count = 0;
  trajrep::ModelParams truth;
  std::vector<trajrep::TrajectoryDesign> designs;
};

inline EmCase em_case(int basis_count, int trajectories, int min_points, int max_points,
                      std::uint64_t seed, double beta = 1e4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(min_points, max_points);
  std::normal_distribution<double> g;
  const Eigen::Index dim = 3 * basis_count;
  EmCase c;
  c.basis_count = basis_count;
  c.truth.mu.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) c.truth.mu[i] = unit(rng);
  const Eigen::MatrixXd a = random_matrix(dim, dim, rng, 0.05);
  c.truth.sigma = a * a.transpose() + 1e-3 * Eigen::MatrixXd::Identity(dim, dim);
  c.truth.beta = beta;
  const Eigen::MatrixXd l = c.truth.sigma.llt().matrixL();
  for (int n = 0; n < trajectories; ++n) {
    const int m = count(rng);
    std::vector<double> tau(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) tau[static_cast<std::size_t>(k)] = static_cast<double>(k) / (m - 1);
    Eigen::VectorXd z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = g(rng);
    const Eigen::VectorXd w = c.truth.mu + l * z;
    Eigen::MatrixXd basis(m, basis_count), coords(m, 3);
    for (int k = 0; k < m; ++k) {
      basis.row(k) = oracle::basis_values(basis_count, tau[static_cast<std::size_t>(k)]).transpose();
      for (int d = 0; d < 3; ++d)
        coords(k, d) = basis.row(k).dot(w.segment(d * basis_count, basis_count)) +
                       g(rng) / std::sqrt(beta);
    }
    c.designs.push_back(trajrep::TrajectoryDesign::from(basis, coords));
  }
  return c;
}

}  // namespace testing
