#include "trajrep/gp_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>

#include "trajrep/parallel.hpp"
#include "trajrep/text.hpp"

namespace trajrep {
namespace {

constexpr double kMinNoiseVariance = 1e-12;  // floor on 1/beta
constexpr int kMaxRidgeAttempts = 40;

// Block-diagonal product blockdiag(G, G, G) * X for a J x J block G.
Eigen::MatrixXd block_diag_times(const Eigen::MatrixXd& g, const Eigen::MatrixXd& x) {
  const Eigen::Index j = g.rows();
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (int d = 0; d < 3; ++d) out.middleRows(d * j, j).noalias() = g * x.middleRows(d * j, j);
  return out;
}

// Tr(blockdiag(G, G, G) * S).
double block_diag_trace(const Eigen::MatrixXd& g, const Eigen::MatrixXd& s) {
  const Eigen::Index j = g.rows();
  double tr = 0.0;
  for (int d = 0; d < 3; ++d) tr += (g.cwiseProduct(s.block(d * j, d * j, j, j))).sum();
  return tr;
}

// ||y - Phi w||^2 evaluated axis by axis.
double residual_norm2(const TrajectoryDesign& design, const Eigen::VectorXd& w) {
  const Eigen::Index j = design.basis.cols();
  double r2 = 0.0;
  for (int d = 0; d < 3; ++d)
    r2 += (design.coords.col(d) - design.basis * w.segment(d * j, j)).squaredNorm();
  return r2;
}

// Phi^T (y - Phi w).
Eigen::VectorXd projected_residual(const TrajectoryDesign& design, const Eigen::VectorXd& w) {
  const Eigen::Index j = design.basis.cols();
  Eigen::VectorXd out(3 * j);
  for (int d = 0; d < 3; ++d)
    out.segment(d * j, j) =
        design.basis.transpose() * (design.coords.col(d) - design.basis * w.segment(d * j, j));
  return out;
}

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw Error(std::string(what) + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void check_designs(std::span<const TrajectoryDesign> designs, Eigen::Index weights) {
  if (designs.empty()) throw Error("EM: cluster has no trajectories");
  for (const auto& d : designs)
    if (d.weights() != weights) throw Error("EM: design does not match the parameter size");
}

}  // namespace

// ---------------------------------------------------------------------------
// Basis

BasisSet BasisSet::uniform(int count) {
  if (count < 2) throw Error("basis count must be >= 2");
  BasisSet basis;
  basis.count = count;
  const int bumps = count - 1;
  if (bumps == 1) {
    basis.centers = {0.5};
    basis.width = 1.0;
  } else {
    const double spacing = 1.0 / (bumps - 1);
    for (int i = 0; i < bumps; ++i) basis.centers.push_back(i * spacing);
    basis.width = spacing;
  }
  return basis;
}

void BasisSet::validate() const {
  if (count < 2) throw Error("basis count must be >= 2");
  if (centers.size() != static_cast<std::size_t>(count - 1))
    throw Error("basis must have count - 1 centres");
  for (std::size_t i = 1; i < centers.size(); ++i)
    if (!(centers[i] > centers[i - 1])) throw Error("basis centres must be strictly increasing");
  if (!(width > 0.0) || !std::isfinite(width)) throw Error("basis width must be positive");
}

Eigen::VectorXd BasisSet::values(double tau) const {
  Eigen::VectorXd v(count);
  v[0] = 1.0;
  const double inv = 1.0 / (2.0 * width * width);
  for (int i = 1; i < count; ++i) {
    const double d = tau - centers[static_cast<std::size_t>(i - 1)];
    v[i] = std::exp(-d * d * inv);
  }
  return v;
}

Eigen::MatrixXd BasisSet::block_matrix(double tau) const {
  const Eigen::RowVectorXd v = values(tau).transpose();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(3, 3 * count);
  for (int d = 0; d < 3; ++d) phi.block(d, d * count, 1, count) = v;
  return phi;
}

// ---------------------------------------------------------------------------
// Normalisation and designs

NormalizedCluster normalize_cluster(std::span<const Trajectory> cluster) {
  if (cluster.empty()) throw Error("normalize_cluster: empty cluster");
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& t : cluster) {
    if (t.points.size() < 2)
      throw Error("normalize_cluster: trajectory '" + t.id + "' has fewer than 2 points");
    if (!(t.duration() > 0.0))
      throw Error("normalize_cluster: trajectory '" + t.id + "' has zero duration");
    for (const auto& p : t.points) {
      lo = lo.cwiseMin(p.position());
      hi = hi.cwiseMax(p.position());
    }
  }

  NormalizedCluster out;
  out.transform.offset = lo;
  for (int d = 0; d < 3; ++d) {
    const double range = hi[d] - lo[d];
    out.transform.scale[d] = range > 1e-12 * std::max(1.0, std::abs(lo[d])) ? range : 1.0;
  }

  for (const auto& t : cluster) {
    NormalizedTrajectory nt;
    const auto m = static_cast<Eigen::Index>(t.points.size());
    nt.coords.resize(m, 3);
    const double t0 = t.points.front().time;
    const double span = t.duration();
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& p = t.points[static_cast<std::size_t>(i)];
      nt.tau.push_back(i + 1 == m ? 1.0 : (p.time - t0) / span);
      nt.coords.row(i) = out.transform.normalize(p.position()).transpose();
    }
    out.trajectories.push_back(std::move(nt));
  }
  return out;
}

TrajectoryDesign TrajectoryDesign::from(Eigen::MatrixXd basis, Eigen::MatrixXd coords) {
  if (coords.rows() != basis.rows() || coords.cols() != 3)
    throw Error("design: basis and coordinate rows differ");
  TrajectoryDesign d;
  d.basis = std::move(basis);
  d.coords = std::move(coords);
  d.gram = d.basis.transpose() * d.basis;
  const Eigen::Index j = d.basis.cols();
  d.projected.resize(3 * j);
  for (int k = 0; k < 3; ++k) d.projected.segment(k * j, j) = d.basis.transpose() * d.coords.col(k);
  return d;
}

Eigen::MatrixXd TrajectoryDesign::stacked() const {
  const Eigen::Index m = basis.rows();
  const Eigen::Index j = basis.cols();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(3 * m, 3 * j);
  for (Eigen::Index i = 0; i < m; ++i)
    for (int d = 0; d < 3; ++d) phi.block(3 * i + d, d * j, 1, j) = basis.row(i);
  return phi;
}

Eigen::VectorXd TrajectoryDesign::stacked_targets() const {
  Eigen::VectorXd y(3 * coords.rows());
  for (Eigen::Index i = 0; i < coords.rows(); ++i) y.segment(3 * i, 3) = coords.row(i).transpose();
  return y;
}

TrajectoryDesign make_design(const BasisSet& basis, const NormalizedTrajectory& t) {
  const auto m = static_cast<Eigen::Index>(t.tau.size());
  Eigen::MatrixXd g(m, basis.count);
  for (Eigen::Index i = 0; i < m; ++i)
    g.row(i) = basis.values(t.tau[static_cast<std::size_t>(i)]).transpose();
  return TrajectoryDesign::from(std::move(g), t.coords);
}

std::vector<TrajectoryDesign> make_designs(const BasisSet& basis, const NormalizedCluster& c) {
  basis.validate();
  std::vector<TrajectoryDesign> designs;
  designs.reserve(c.trajectories.size());
  for (const auto& t : c.trajectories) designs.push_back(make_design(basis, t));
  return designs;
}

// ---------------------------------------------------------------------------
// EM steps

std::vector<Expectation> e_step(const ModelParams& params,
                                std::span<const TrajectoryDesign> designs, unsigned threads) {
  const Eigen::Index w = params.mu.size();
  check_designs(designs, w);
  if (!(params.beta > 0.0)) throw Error("e_step: beta must be positive");
  if ((params.sigma - params.sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * std::max(1.0, params.sigma.cwiseAbs().maxCoeff()))
    throw Error("e_step: Sigma is not symmetric");
  const auto sigma_llt = factor_spd(params.sigma, "e_step: Sigma");
  const Eigen::MatrixXd l = sigma_llt.matrixL();
  const Eigen::VectorXd l_inv_mu = sigma_llt.matrixL().solve(params.mu);
  const double beta = params.beta;

  std::vector<Expectation> out(designs.size());
  parallel_for(designs.size(), threads, [&](std::size_t n) {
    const auto& design = designs[n];
    // S_n = L A^{-1} L^T with A = I + beta L^T Phi^T Phi L; A is SPD and >= I.
    Eigen::MatrixXd a = l.transpose() * block_diag_times(design.gram, l);
    a *= beta;
    a.diagonal().array() += 1.0;
    a = 0.5 * (a + a.transpose());
    const auto a_llt = factor_spd(a, "e_step: posterior precision");
    const Eigen::VectorXd rhs = beta * (l.transpose() * design.projected) + l_inv_mu;
    out[n].mean = l * a_llt.solve(rhs);
    // B^T = K^{-1} L^T where A = K K^T; S_n = B B^T.
    const Eigen::MatrixXd bt = a_llt.matrixL().solve(l.transpose());
    out[n].cov = bt.transpose() * bt;
  });
  return out;
}

MStepResult m_step(std::span<const Expectation> expectations,
                   std::span<const TrajectoryDesign> designs) {
  if (expectations.empty()) throw Error("m_step: no expectations");
  if (expectations.size() != designs.size()) throw Error("m_step: size mismatch");
  const Eigen::Index w = expectations.front().mean.size();
  const auto n = static_cast<double>(expectations.size());

  MStepResult out;
  auto& p = out.params;
  p.mu = Eigen::VectorXd::Zero(w);
  for (const auto& e : expectations) p.mu += e.mean;
  p.mu /= n;

  // Mean over n of E[w w^T] - E[w] mu^T - mu E[w]^T + mu mu^T, written as
  // S_n + (E[w] - mu)(E[w] - mu)^T.
  p.sigma = Eigen::MatrixXd::Zero(w, w);
  for (const auto& e : expectations) {
    const Eigen::VectorXd d = e.mean - p.mu;
    p.sigma += e.cov;
    p.sigma.noalias() += d * d.transpose();
  }
  p.sigma /= n;
  p.sigma = 0.5 * (p.sigma + p.sigma.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(p.sigma);
  if (llt.info() != Eigen::Success) {
    double ridge = 1e-10 * p.sigma.trace() / static_cast<double>(w);
    if (!(ridge > 0.0)) ridge = 1e-12;
    for (int attempt = 0; attempt < kMaxRidgeAttempts; ++attempt, ridge *= 10.0) {
      Eigen::MatrixXd trial = p.sigma;
      trial.diagonal().array() += ridge;
      llt.compute(trial);
      if (llt.info() == Eigen::Success) {
        p.sigma = std::move(trial);
        out.ridge_applied = true;
        break;
      }
    }
    if (!out.ridge_applied) throw Error("m_step: Sigma could not be regularised");
  }

  double total = 0.0;
  Eigen::Index points = 0;
  for (std::size_t k = 0; k < designs.size(); ++k) {
    total += residual_norm2(designs[k], expectations[k].mean) +
             block_diag_trace(designs[k].gram, expectations[k].cov);
    points += designs[k].points();
  }
  const double noise_variance = std::max(total / (3.0 * static_cast<double>(points)),
                                         kMinNoiseVariance);
  p.beta = 1.0 / noise_variance;
  return out;
}

double neg_log_likelihood(const ModelParams& params, std::span<const Expectation> expectations,
                          std::span<const TrajectoryDesign> designs) {
  check_designs(designs, params.mu.size());
  if (expectations.size() != designs.size()) throw Error("neg_log_likelihood: size mismatch");
  const auto sigma_llt = factor_spd(params.sigma, "neg_log_likelihood: Sigma");
  const auto n = static_cast<double>(designs.size());

  double data_term = 0.0;
  double points = 0.0;
  Eigen::MatrixXd spread = Eigen::MatrixXd::Zero(params.mu.size(), params.mu.size());
  for (std::size_t k = 0; k < designs.size(); ++k) {
    const auto& e = expectations[k];
    data_term += residual_norm2(designs[k], e.mean) + block_diag_trace(designs[k].gram, e.cov);
    points += static_cast<double>(designs[k].points());
    const Eigen::VectorXd d = e.mean - params.mu;
    spread += e.cov;
    spread.noalias() += d * d.transpose();
  }
  const double prior_term = sigma_llt.solve(spread).trace();
  return -1.5 * points * std::log(params.beta) + 0.5 * params.beta * data_term +
         0.5 * n * log_det(sigma_llt) + 0.5 * prior_term;
}

double log_marginal_likelihood(const ModelParams& params,
                               std::span<const TrajectoryDesign> designs) {
  check_designs(designs, params.mu.size());
  const auto sigma_llt = factor_spd(params.sigma, "log_marginal_likelihood: Sigma");
  const Eigen::MatrixXd l = sigma_llt.matrixL();
  const double beta = params.beta;
  double total = 0.0;
  for (const auto& design : designs) {
    const double dim = 3.0 * static_cast<double>(design.points());
    Eigen::MatrixXd a = beta * (l.transpose() * block_diag_times(design.gram, l));
    a.diagonal().array() += 1.0;
    a = 0.5 * (a + a.transpose());
    const auto a_llt = factor_spd(a, "log_marginal_likelihood: posterior precision");
    // log|C| = log|A| - dim log(beta) with C = Phi Sigma Phi^T + I/beta.
    const double log_det_c = log_det(a_llt) - dim * std::log(beta);
    // r^T C^{-1} r = beta |r - Phi delta|^2 + delta^T Sigma^{-1} delta, where
    // delta = E[w] - mu is the posterior shift.
    const Eigen::VectorXd z = a_llt.solve(beta * (l.transpose() * projected_residual(design, params.mu)));
    const Eigen::VectorXd delta = l * z;
    const double quad = beta * residual_norm2(design, params.mu + delta) + z.squaredNorm();
    total += -0.5 * (dim * std::log(2.0 * std::numbers::pi) + log_det_c + quad);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Fitting

void EmOptions::validate() const {
  if (!(prior_scale > 0.0)) throw Error("gp-model.prior_scale must be positive");
  if (!(beta_init > 0.0)) throw Error("gp-model.beta_init must be positive");
  if (!(tolerance > 0.0)) throw Error("gp-model.tolerance must be positive");
  if (max_iterations < 1) throw Error("gp-model.max_iterations must be >= 1");
}

TrajectoryModel em_fit(std::span<const TrajectoryDesign> designs, const BasisSet& basis,
                       const EmOptions& options, const EmObserver& observer) {
  basis.validate();
  options.validate();
  const Eigen::Index w = 3 * basis.count;
  check_designs(designs, w);

  TrajectoryModel model;
  model.basis = basis;
  model.n_trajectories = designs.size();
  model.params.mu = Eigen::VectorXd::Zero(w);
  model.params.sigma = options.prior_scale * Eigen::MatrixXd::Identity(w, w);
  model.params.beta = options.beta_init;

  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto expectations = e_step(model.params, designs, options.threads);
    auto step = m_step(expectations, designs);
    model.ridge_count += step.ridge_applied ? 1 : 0;
    model.params = std::move(step.params);
    model.nll_trace.push_back(neg_log_likelihood(model.params, expectations, designs));
    model.iterations = it;
    if (observer) observer(it, model.params);
    const auto k = model.nll_trace.size();
    if (k >= 2 && std::abs(model.nll_trace[k - 1] - model.nll_trace[k - 2]) <= options.tolerance) {
      model.converged = true;
      break;
    }
  }
  return model;
}

TrajectoryModel em_fit(const NormalizedCluster& cluster, const BasisSet& basis,
                       const EmOptions& options) {
  const auto designs = make_designs(basis, cluster);
  auto model = em_fit(designs, basis, options);
  model.transform = cluster.transform;
  return model;
}

TrajectoryModel fit_cluster(std::span<const Trajectory> cluster, const BasisSet& basis,
                            const EmOptions& options) {
  return em_fit(normalize_cluster(cluster), basis, options);
}

GaussianSection model_section(const TrajectoryModel& model, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error("model_section: tau outside [0, 1]");
  const Eigen::MatrixXd phi = model.basis.block_matrix(tau);
  GaussianSection s;
  s.mean = phi * model.params.mu;
  s.cov = phi * model.params.sigma * phi.transpose();
  s.cov.diagonal().array() += 1.0 / model.params.beta;
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  return s;
}

GaussianSection model_section_real(const TrajectoryModel& model, double tau) {
  auto s = model_section(model, tau);
  s.mean = model.transform.denormalize(s.mean);
  s.cov = model.transform.denormalize_covariance(s.cov);
  return s;
}

}  // namespace trajrep
