#include "trajrep/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "trajrep/text.hpp"

namespace trajrep {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct NominalPath {
  std::vector<double> tau;
  std::vector<Eigen::Vector3d> position;
  std::vector<Eigen::Vector3d> lateral;  // unit, horizontal, pointing left
};

NominalPath trace(const CorridorSpec& c, int samples) {
  NominalPath path;
  const double ds = c.length_m / (samples - 1);
  Eigen::Vector2d ground = c.start;
  for (int k = 0; k < samples; ++k) {
    const double s = k * ds;
    const double span = c.turn_end_m - c.turn_start_m;
    const double progress = span > 0.0 ? smoothstep((s - c.turn_start_m) / span) : 0.0;
    const double heading = (c.heading_deg + c.turn_deg * progress) * kDeg;
    path.tau.push_back(static_cast<double>(k) / (samples - 1));
    path.position.emplace_back(ground.x(), ground.y(), c.climb_gradient * s);
    path.lateral.emplace_back(-std::sin(heading), std::cos(heading), 0.0);
    ground += ds * Eigen::Vector2d(std::cos(heading), std::sin(heading));
  }
  return path;
}

// Nominal position and lateral unit vector at fraction tau, interpolated
// linearly from a finely traced path.
std::pair<Eigen::Vector3d, Eigen::Vector3d> nominal_at(const NominalPath& path, double tau) {
  const double x = std::clamp(tau, 0.0, 1.0) * static_cast<double>(path.tau.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(x), path.tau.size() - 2);
  const double t = x - static_cast<double>(i);
  const Eigen::Vector3d pos = (1 - t) * path.position[i] + t * path.position[i + 1];
  const Eigen::Vector3d lat = ((1 - t) * path.lateral[i] + t * path.lateral[i + 1]).normalized();
  return {pos, lat};
}

// Shapes of the three dispersion modes at fraction tau, in metres per unit draw.
struct Modes {
  double offset, fan, vertical;
};

Modes modes_at(const CorridorSpec& c, double tau) {
  const double s = tau * c.length_m;
  return {c.offset_sigma_m * (1.0 - std::exp(-s / c.offset_scale_m)), c.fan_sigma_m * tau,
          c.vertical_sigma_m * tau};
}

constexpr int kTraceSamples = 4001;

std::string numbered(const std::string& prefix, int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", n);
  return prefix + "-" + buf;
}

// A sparse random track: curved, climbing, on a heading away from the
// corridor headings so it does not join a corridor by accident.
Trajectory random_track(const SynthOptions& o, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CorridorSpec c;
  const double quadrant = std::floor(unit(rng) * 4.0);
  c.heading_deg = 90.0 * quadrant + 25.0 + 40.0 * unit(rng);
  c.turn_deg = -25.0 + 50.0 * unit(rng);
  c.length_m = 15000.0 + 25000.0 * unit(rng);
  c.turn_start_m = c.length_m * 0.2 * unit(rng);
  c.turn_end_m = c.turn_start_m + 2000.0 + 3000.0 * unit(rng);
  c.climb_gradient = 0.03 + 0.05 * unit(rng);
  const double r = 500.0 + 1500.0 * unit(rng);
  const double a = 2.0 * std::numbers::pi * unit(rng);
  c.start = {r * std::cos(a), r * std::sin(a)};

  std::normal_distribution<double> noise(0.0, c.noise_m);
  const double duration = c.length_m / o.speed_mps;
  const int points = std::max(2, static_cast<int>(std::lround(duration / o.sample_interval_s)) + 1);
  const auto path = trace(c, points);
  Trajectory t;
  t.id = numbered("X", n);
  for (int k = 0; k < points; ++k) {
    const auto& p = path.position[static_cast<std::size_t>(k)];
    t.points.push_back({duration * path.tau[static_cast<std::size_t>(k)], p.x() + noise(rng),
                        p.y() + noise(rng), std::max(0.0, p.z() + noise(rng))});
  }
  return t;
}

}  // namespace

void CorridorSpec::validate() const {
  if (!(length_m > 0.0)) throw Error("corridor '" + name + "': length_m must be positive");
  if (!(climb_gradient > 0.0)) throw Error("corridor '" + name + "': climb_gradient must be positive");
  if (turn_end_m < turn_start_m) throw Error("corridor '" + name + "': turn ends before it starts");
  if (offset_sigma_m < 0.0 || fan_sigma_m < 0.0 || vertical_sigma_m < 0.0)
    throw Error("corridor '" + name + "': dispersions must be non-negative");
  if (!(offset_scale_m > 0.0))
    throw Error("corridor '" + name + "': offset_scale_m must be positive");
  if (!(noise_m > 0.0)) throw Error("corridor '" + name + "': noise_m must be positive");
  if (!(start_spread_m >= 0.0 && start_spread_m < length_m))
    throw Error("corridor '" + name + "': start_spread_m must lie in [0, length_m)");
}

// One departure from each runway end, so no two corridors share a climb-out.
std::vector<CorridorSpec> SynthOptions::default_corridors() {
  std::vector<CorridorSpec> out(4);
  out[0].name = "09L-straight";
  out[0].start = {1500.0, 600.0};
  out[0].heading_deg = 0.0;
  out[1].name = "09R-right";
  out[1].start = {1500.0, -600.0};
  out[1].heading_deg = 0.0;
  out[1].turn_deg = -90.0;
  out[1].turn_start_m = 2000.0;
  out[1].turn_end_m = 5000.0;
  out[2].name = "27R-right";
  out[2].start = {-1500.0, 600.0};
  out[2].heading_deg = 180.0;
  out[2].turn_deg = -90.0;
  out[2].turn_start_m = 2000.0;
  out[2].turn_end_m = 5000.0;
  out[3].name = "27L-straight";
  out[3].start = {-1500.0, -600.0};
  out[3].heading_deg = 180.0;
  return out;
}

AirportGeometry SynthOptions::default_airport() {
  AirportGeometry g;
  g.runways.push_back({"09L-27R", {-1500.0, 600.0}, {1500.0, 600.0}});
  g.runways.push_back({"09R-27L", {-1500.0, -600.0}, {1500.0, -600.0}});
  return g;
}

void SynthOptions::validate() const {
  if (per_corridor < 0) throw Error("synth: per_corridor must be non-negative");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0))
    throw Error("synth: outlier_fraction must lie in [0, 1)");
  if (!(speed_mps > 0.0)) throw Error("synth: speed_mps must be positive");
  if (!(sample_interval_s > 0.0)) throw Error("synth: sample_interval_s must be positive");
  if (basis_count < 2) throw Error("synth: basis_count must be at least 2");
  for (const auto& c : corridors) c.validate();
}

TrajectoryModel corridor_truth(const CorridorSpec& corridor, int basis_count, int cluster_id) {
  corridor.validate();
  constexpr int kSamples = 400;
  const auto fine = trace(corridor, kTraceSamples);
  NominalPath path;
  for (int k = 0; k < kSamples; ++k) {
    const double tau = static_cast<double>(k) / (kSamples - 1);
    const auto [pos, lat] = nominal_at(fine, tau);
    path.tau.push_back(tau);
    path.position.push_back(pos);
    path.lateral.push_back(lat);
  }

  TrajectoryModel model;
  model.cluster_id = cluster_id;
  model.basis = BasisSet::uniform(basis_count);
  Eigen::Vector3d lo = path.position.front(), hi = lo;
  for (const auto& p : path.position) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  model.transform.offset = lo;
  model.transform.scale = (hi - lo).cwiseMax(Eigen::Vector3d::Constant(1000.0));

  const int J = basis_count;
  Eigen::MatrixXd B(kSamples, J);
  for (int k = 0; k < kSamples; ++k)
    B.row(k) = model.basis.values(path.tau[static_cast<std::size_t>(k)]).transpose();
  const auto qr = B.householderQr();

  // Least-squares weights of one normalized 3-D curve, coordinate-major.
  auto fit = [&](auto&& curve) {
    Eigen::MatrixXd Y(kSamples, 3);
    for (int k = 0; k < kSamples; ++k) Y.row(k) = curve(k).transpose();
    const Eigen::MatrixXd W = qr.solve(Y);
    Eigen::VectorXd w(3 * J);
    for (int d = 0; d < 3; ++d) w.segment(d * J, J) = W.col(d);
    return w;
  };

  const auto& scale = model.transform.scale;
  model.params.mu = fit([&](int k) {
    return model.transform.normalize(path.position[static_cast<std::size_t>(k)]);
  });
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  auto mode = [&](auto&& shape) {
    return fit([&](int k) -> Eigen::Vector3d {
      const auto i = static_cast<std::size_t>(k);
      return shape(modes_at(corridor, path.tau[i]), path.lateral[i]).cwiseQuotient(scale);
    });
  };
  const Eigen::VectorXd offset =
      mode([](const Modes& m, const Eigen::Vector3d& lat) -> Eigen::Vector3d { return m.offset * lat; });
  const Eigen::VectorXd fan =
      mode([](const Modes& m, const Eigen::Vector3d& lat) -> Eigen::Vector3d { return m.fan * lat; });
  const Eigen::VectorXd climb =
      mode([&](const Modes& m, const Eigen::Vector3d&) -> Eigen::Vector3d { return m.vertical * up; });
  model.params.sigma = offset * offset.transpose() + fan * fan.transpose() +
                       climb * climb.transpose();
  // A small isotropic floor keeps Sigma positive definite.
  const double floor = 1e-2 * model.params.sigma.trace() / (3.0 * J);
  model.params.sigma.diagonal().array() += floor;

  const double noise = corridor.noise_m / scale.mean();
  model.params.beta = 1.0 / (noise * noise);
  model.converged = true;
  return model;
}

Eigen::MatrixXd sample_normalized(const ModelParams& params, const BasisSet& basis,
                                  std::span<const double> tau, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(params.sigma);
  if (eig.info() != Eigen::Success) throw Error("sample_normalized: Sigma decomposition failed");
  Eigen::VectorXd z(params.mu.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
  const Eigen::VectorXd w =
      params.mu +
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);

  const int J = basis.count;
  const double sd = 1.0 / std::sqrt(params.beta);
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(tau.size()), 3);
  for (std::size_t m = 0; m < tau.size(); ++m) {
    const Eigen::VectorXd v = basis.values(tau[m]);
    for (int d = 0; d < 3; ++d)
      coords(static_cast<Eigen::Index>(m), d) = v.dot(w.segment(d * J, J)) + sd * gauss(rng);
  }
  return coords;
}

Trajectory sample_trajectory(const TrajectoryModel& truth, int points, double duration_s,
                             std::string id, std::mt19937_64& rng) {
  if (points < 2) throw Error("sample_trajectory: need at least two points");
  if (!(duration_s > 0.0)) throw Error("sample_trajectory: duration must be positive");
  std::vector<double> tau(static_cast<std::size_t>(points));
  for (int m = 0; m < points; ++m) tau[static_cast<std::size_t>(m)] = static_cast<double>(m) / (points - 1);
  const Eigen::MatrixXd coords = sample_normalized(truth.params, truth.basis, tau, rng);
  Trajectory t;
  t.id = std::move(id);
  for (int m = 0; m < points; ++m) {
    const Eigen::Vector3d p = truth.transform.denormalize(coords.row(m).transpose());
    t.points.push_back({duration_s * tau[static_cast<std::size_t>(m)], p.x(), p.y(),
                        std::max(0.0, p.z())});
  }
  return t;
}

Trajectory sample_corridor(const CorridorSpec& corridor, double speed_mps,
                           double sample_interval_s, double duration_scale, std::string id,
                           std::mt19937_64& rng) {
  corridor.validate();
  if (!(speed_mps > 0.0 && sample_interval_s > 0.0 && duration_scale > 0.0))
    throw Error("sample_corridor: speed, interval and duration scale must be positive");
  // Tracing is deterministic, so repeated calls for one corridor agree exactly.
  const auto path = trace(corridor, kTraceSamples);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z_offset = gauss(rng), z_fan = gauss(rng), z_vertical = gauss(rng);
  const double first = corridor.start_spread_m * unit(rng) / corridor.length_m;
  const double duration = duration_scale * (1.0 - first) * corridor.length_m / speed_mps;
  const int points = std::max(2, static_cast<int>(std::lround(duration / sample_interval_s)) + 1);

  Trajectory t;
  t.id = std::move(id);
  for (int m = 0; m < points; ++m) {
    const double frac = static_cast<double>(m) / (points - 1);
    const double tau = first + (1.0 - first) * frac;
    const auto [pos, lat] = nominal_at(path, tau);
    const Modes k = modes_at(corridor, tau);
    Eigen::Vector3d p = pos + (z_offset * k.offset + z_fan * k.fan) * lat;
    p.z() += z_vertical * k.vertical;
    for (int d = 0; d < 3; ++d) p[d] += corridor.noise_m * gauss(rng);
    t.points.push_back({duration * frac, p.x(), p.y(), std::max(0.0, p.z())});
  }
  return t;
}

SyntheticDataset synthesize(const SynthOptions& options) {
  options.validate();
  SyntheticDataset data;
  data.airport = SynthOptions::default_airport();
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(0.95, 1.05);

  for (std::size_t c = 0; c < options.corridors.size(); ++c) {
    const auto& spec = options.corridors[c];
    data.truths.push_back(corridor_truth(spec, options.basis_count, static_cast<int>(c)));
    for (int n = 0; n < options.per_corridor; ++n) {
      const double scale = jitter(rng);
      auto id = numbered("C" + std::to_string(c), n);
      if (options.sampler == Sampler::Corridor) {
        data.trajectories.push_back(sample_corridor(spec, options.speed_mps,
                                                    options.sample_interval_s, scale,
                                                    std::move(id), rng));
      } else {
        const double duration = scale * spec.length_m / options.speed_mps;
        const int points = std::max(
            2, static_cast<int>(std::lround(duration / options.sample_interval_s)) + 1);
        data.trajectories.push_back(
            sample_trajectory(data.truths.back(), points, duration, std::move(id), rng));
      }
      data.labels.push_back(static_cast<int>(c));
    }
  }

  const double clustered = static_cast<double>(data.trajectories.size());
  const int outliers = static_cast<int>(
      std::lround(clustered * options.outlier_fraction / (1.0 - options.outlier_fraction)));
  for (int n = 0; n < outliers; ++n) {
    data.trajectories.push_back(random_track(options, n, rng));
    data.labels.push_back(-1);
  }

  // Interleave corridors and random tracks as a radar log would.
  std::vector<std::size_t> order(data.trajectories.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  SyntheticDataset shuffled{data.airport, {}, {}, std::move(data.truths)};
  for (const auto i : order) {
    shuffled.trajectories.push_back(std::move(data.trajectories[i]));
    shuffled.labels.push_back(data.labels[i]);
  }
  return shuffled;
}

}  // namespace trajrep
