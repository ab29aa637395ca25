// Acceptance checks. Prints one PASS or FAIL line per criterion and exits
// non-zero if any criterion fails. Usage: trajrep_acceptance [work_dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "support.hpp"
#include "trajrep/clustering.hpp"
#include "trajrep/config.hpp"
#include "trajrep/footprint.hpp"
#include "trajrep/gp_model.hpp"
#include "trajrep/pipeline.hpp"
#include "trajrep/representative.hpp"
#include "trajrep/text.hpp"

namespace fs = std::filesystem;
using namespace trajrep;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

bool is_spd(const Eigen::MatrixXd& m) {
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  const Eigen::Matrix3d q = testing::random_matrix(3, 3, rng).householderQr().householderQ();
  return q.determinant() < 0 ? Eigen::Matrix3d(-q) : q;
}

// A fitted model placed in metre-scale coordinates.
TrajectoryModel fitted_model(std::uint64_t seed, int cluster) {
  const auto c = testing::em_case(8, 60, 30, 50, seed);
  EmOptions opt;
  opt.max_iterations = 30;
  auto m = em_fit(c.designs, BasisSet::uniform(8), opt);
  m.cluster_id = cluster;
  m.n_trajectories = 60;
  m.transform.offset = {-3000.0 + 500.0 * cluster, 200.0, 0.0};
  m.transform.scale = {25000.0, 12000.0 + 1000.0 * cluster, 3000.0};
  return m;
}

// 1. Table weights against the closed-form CDFs, in percentage points.
void chi_square_tables(Outcome& o) {
  struct Row {
    int dof;
    double lower, upper, table_pct;
  };
  const Row rows[] = {{1, 0.0, 0.5, 38.29}, {1, 0.5, 1.5, 48.35}, {1, 1.5, 2.5, 12.12},
                      {2, 0.0, 0.5, 11.75}, {2, 0.5, 1.5, 55.78}, {2, 1.5, 2.5, 28.07}};
  double worst = 0.0;
  for (const auto& r : rows) {
    const double pct = 100.0 * chi_square_ring_weight(r.dof, r.lower, r.upper, 1);
    worst = std::max(worst, std::abs(pct - r.table_pct));
    o.require(std::abs(pct - r.table_pct) <= 0.01, "ring weight " + format_double(pct));
  }
  const double flat = 100.0 * RepresentativeScheme::flat().total_weight();
  const double round = 100.0 * RepresentativeScheme::round().total_weight();
  worst = std::max({worst, std::abs(flat - 98.76), std::abs(round - 95.61)});
  o.require(std::abs(flat - 98.76) <= 0.01, "flat total " + format_double(flat));
  o.require(std::abs(round - 95.61) <= 0.01, "round total " + format_double(round));
  o.detail << "8 table entries, worst deviation " << worst << " pp";
}

// 2. EM invariants on seeded clusters of varied size.
void em_properties(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> n_dist(50, 200), j_dist(6, 18), m_lo(30, 55);
  int clusters = 0, iterations = 0;
  for (int k = 0; k < 12; ++k) {
    const int n = n_dist(rng), j = j_dist(rng), lo = m_lo(rng);
    const auto c = testing::em_case(j, n, lo, std::min(80, lo + 25), 7000 + static_cast<std::uint64_t>(k));
    EmOptions opt;
    opt.max_iterations = 40;
    opt.threads = 4;
    double previous = -std::numeric_limits<double>::infinity();
    bool monotone = true, valid = true;
    const auto model = em_fit(c.designs, BasisSet::uniform(j), opt, [&](int, const ModelParams& p) {
      const double ll = log_marginal_likelihood(p, c.designs);
      if (ll < previous - 1e-8 * std::abs(previous)) monotone = false;
      previous = ll;
      if (!is_spd(p.sigma) || !(p.beta > 0.0)) valid = false;
    });
    const std::string tag = " (N=" + std::to_string(n) + ", J=" + std::to_string(j) + ")";
    o.require(monotone, "marginal likelihood decreased" + tag);
    o.require(valid, "Sigma not SPD or beta <= 0" + tag);
    for (std::size_t i = 1; i < model.nll_trace.size(); ++i)
      o.require(model.nll_trace[i] <= model.nll_trace[i - 1] + 1e-9, "objective increased" + tag);
    ++clusters;
    iterations += model.iterations;
  }
  o.detail << clusters << " clusters, " << iterations << " EM iterations checked";
}

// 3. Recovery of known parameters from N = 200 trajectories.
void recovery(Outcome& o) {
  const int j = 8, n = 200;
  const double beta = 1e4;
  const auto c = testing::em_case(j, n, 30, 80, 31337, beta);
  EmOptions opt;
  opt.threads = 4;
  const auto model = em_fit(c.designs, BasisSet::uniform(j), opt);
  const auto& p = model.params;
  const double beta_err = std::abs(p.beta - beta) / beta;
  o.require(beta_err <= 0.2, "beta " + format_double(p.beta));

  // Standard error of the mean weight: (Sigma + mean posterior covariance) / N.
  const auto expectations = e_step(p, c.designs);
  Eigen::MatrixXd s_bar = Eigen::MatrixXd::Zero(3 * j, 3 * j);
  for (const auto& e : expectations) s_bar += e.cov;
  s_bar /= n;
  const Eigen::VectorXd se = ((p.sigma + s_bar).diagonal() / n).cwiseSqrt();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < se.size(); ++i) worst = std::max(worst, std::abs(p.mu[i] - c.truth.mu[i]) / se[i]);
  o.require(worst <= 3.0, "mu component off by " + format_double(worst) + " SE");
  o.detail << "beta error " << 100.0 * beta_err << "%, worst mu deviation " << worst << " SE over "
           << se.size() << " components";
}

// 4. DBSCAN against the brute-force density-connectivity reference.
void dbscan_oracle(Outcome& o) {
  std::mt19937_64 rng(4444);
  std::uniform_int_distribution<int> n_dist(1, 200), d_dist(1, 10), k_dist(1, 5), pts_dist(1, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g;
  int clustered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = n_dist(rng), d = d_dist(rng), k = k_dist(rng);
    Eigen::MatrixXd centres = testing::random_matrix(k, d, rng, 6.0);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
      if (unit(rng) < 0.15) {
        for (int c = 0; c < d; ++c) x(i, c) = 30.0 * unit(rng) - 15.0;
      } else {
        const int blob = static_cast<int>(unit(rng) * k) % k;
        for (int c = 0; c < d; ++c) x(i, c) = centres(blob, c) + g(rng);
      }
    }
    const double eps = (0.4 + 1.2 * unit(rng)) * std::sqrt(static_cast<double>(d));
    const int min_pts = pts_dist(rng);
    const auto got = dbscan(x, eps, min_pts, 1 + static_cast<unsigned>(trial % 4));
    const auto want = oracle::dbscan(x, eps, min_pts);
    o.require(got.labels == want, "instance " + std::to_string(trial));
    if (got.cluster_count > 1) ++clustered;
  }
  o.detail << "100 instances, " << clustered << " with several clusters";
}

// 5. Plane sections, representative radii and the centre path.
void ellipsoid_geometry(Outcome& o) {
  std::mt19937_64 rng(5555);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_axis = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d semi(0.5 + 5.0 * unit(rng), 0.5 + 5.0 * unit(rng), 0.5 + 5.0 * unit(rng));
    const double r = 0.5 + 2.0 * unit(rng);
    const double x0 = (2.0 * unit(rng) - 1.0) * 0.95 * r * semi.x();
    const Eigen::Matrix3d rot = random_rotation(rng);
    const Eigen::Vector3d centre = testing::random_matrix(3, 1, rng, 100.0);
    Ellipsoid e{centre, rot * semi.array().square().matrix().asDiagonal() * rot.transpose(), r};
    SectionPlane plane{centre + x0 * rot.col(0), rot.col(0), rot.col(1), rot.col(2)};
    const auto section = plane_ellipsoid_intersection(e, plane);
    if (!section) {
      o.require(false, "section missing");
      continue;
    }
    const double s = r * std::sqrt(1.0 - x0 * x0 / (r * r * semi.x() * semi.x()));
    const Eigen::Vector2d want(s * std::max(semi.y(), semi.z()), s * std::min(semi.y(), semi.z()));
    const double err = (section->semi_axes() - want).cwiseAbs().maxCoeff();
    worst_axis = std::max(worst_axis, err);
    o.require(err <= 1e-8, "semi-axis error " + format_double(err));
  }

  double worst_md = 0.0, worst_centre = 0.0;
  std::size_t points = 0;
  for (int cluster = 0; cluster < 3; ++cluster) {
    const auto model = fitted_model(500 + static_cast<std::uint64_t>(cluster), cluster);
    GenerationOptions opt;
    opt.steps = 60;
    const auto field = real_space_field(model);
    std::vector<GaussianSection> sections;
    for (int i = 0; i < opt.steps; ++i) sections.push_back(field(i / double(opt.steps - 1)));
    for (const auto& scheme : {RepresentativeScheme::flat(), RepresentativeScheme::round()}) {
      for (const auto& rep : generate_representatives(model, scheme, opt)) {
        for (std::size_t i = 0; i < rep.points.size(); ++i, ++points) {
          if (rep.radius == 0.0) {
            const double d = (rep.points[i] - sections[i].mean).norm();
            worst_centre = std::max(worst_centre, d);
            continue;
          }
          // The point may come from any searched section; it must lie on one.
          double best = std::numeric_limits<double>::infinity();
          for (const auto& s : sections)
            best = std::min(best, std::abs(mahalanobis_squared(rep.points[i], s.mean, s.cov) -
                                           rep.radius * rep.radius));
          worst_md = std::max(worst_md, best);
        }
      }
    }
  }
  o.require(worst_md <= 1e-6, "MD - r^2 = " + format_double(worst_md));
  o.require(worst_centre <= 1e-9, "centre path off by " + format_double(worst_centre));
  o.detail << "200 sections (worst axis error " << worst_axis << "), " << points
           << " representative points (worst |MD - r^2| " << worst_md << ", centre " << worst_centre
           << ")";
}

// 6. Representative counts per scheme.
void representative_counts(Outcome& o) {
  GenerationOptions opt;
  opt.steps = 30;
  std::size_t flat = 0, round = 0;
  for (int cluster = 0; cluster < 4; ++cluster) {
    const auto model = fitted_model(600 + static_cast<std::uint64_t>(cluster), cluster);
    const auto f = generate_representatives(model, RepresentativeScheme::flat(), opt);
    const auto r = generate_representatives(model, RepresentativeScheme::round(), opt);
    o.require(f.size() == 5, "flat count " + std::to_string(f.size()));
    o.require(r.size() == 17, "round count " + std::to_string(r.size()));
    for (const auto& rep : r) o.require(rep.cluster == cluster, "cluster tag");
    flat += f.size();
    round += r.size();
  }
  o.require(round == 68, "round total " + std::to_string(round));
  o.detail << "4 clusters: flat " << flat << ", round " << round;
}

PipelineConfig run_config(const fs::path& dir) {
  PipelineConfig cfg;
  cfg.output_dir = dir;
  cfg.trajectories = dir / artifact::kTrajectories;
  cfg.airport = dir / artifact::kAirport;
  cfg.set_threads(4);
  return cfg;
}

void run_pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  const auto cfg = run_config(dir);
  cmd_synth(cfg);
  cmd_pipeline(cfg);
}

// 7. Footprint fidelity of the round scheme on the default synthetic dataset.
void footprint_fidelity(Outcome& o, const fs::path& dir) {
  run_pipeline(dir);
  const auto round = cmd_compare(dir / artifact::footprint_file("round"), dir / artifact::kFootprintRaw);
  const auto flat = cmd_compare(dir / artifact::footprint_file("flat"), dir / artifact::kFootprintRaw);
  const double round_pct = 100.0 * double(round.n_under_gt5) / double(round.n_active);
  const double flat_pct = 100.0 * double(flat.n_under_gt5) / double(flat.n_active);
  o.require(round.n_active > 0, "no active cells");
  o.require(round_pct < 2.0, "round under >5 is " + format_double(round_pct) + "%");
  o.require(round.n_under_gt5 <= flat.n_under_gt5, "round worse than flat");
  o.detail << "active " << round.n_active << ", under >5: round " << round.n_under_gt5 << " ("
           << round_pct << "%), flat " << flat.n_under_gt5 << " (" << flat_pct << "%)";
}

std::vector<Trajectory> random_tracks(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-3000.0, 3000.0), alt(0.0, 600.0);
  std::uniform_int_distribution<int> len(2, 40);
  std::vector<Trajectory> out;
  for (int k = 0; k < count; ++k) {
    const Eigen::Vector3d a(pos(rng), pos(rng), alt(rng)), b(pos(rng), pos(rng), alt(rng));
    out.push_back(testing::line_track("T" + std::to_string(k), a, b, len(rng)));
  }
  return out;
}

std::vector<oracle::Polyline> polylines(const std::vector<Trajectory>& tracks) {
  std::vector<oracle::Polyline> out;
  for (const auto& t : tracks) {
    oracle::Polyline line;
    for (const auto& p : t.points) line.points.emplace_back(p.east, p.north, p.altitude);
    out.push_back(std::move(line));
  }
  return out;
}

// 8. Grid evaluation against the cell-by-point double loop.
void footprint_oracle(Outcome& o) {
  std::mt19937_64 rng(8888);
  int grids = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const auto tracks = random_tracks(100, rng);
    const GridSpec spec{-3200.0 + 11.0 * trial, -3300.0, 65.0 + 3.0 * trial, 100, 100 - 20 * trial};
    const auto sums = oracle::footprint_sums(polylines(tracks), spec.origin_east, spec.origin_north,
                                             spec.cell, spec.nx, spec.ny, 300.0);
    const auto raw = footprint_raw(tracks, spec, 300.0, 0, Proximity::Points, 1 + trial);
    std::vector<double> expected(sums.size());
    for (std::size_t c = 0; c < sums.size(); ++c) expected[c] = 100.0 * sums[c] / 100.0;
    o.require(raw.values == expected, "raw grid, trial " + std::to_string(trial));

    std::vector<WeightedTrajectory> reps;
    auto lines = polylines(tracks);
    const std::map<int, std::size_t> sizes{{0, 120}, {1, 45}, {2, 300}, {3, 9}};
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      WeightedTrajectory rep;
      rep.points = lines[k].points;
      rep.cluster = static_cast<int>(k % 4);
      rep.weight = 0.005 + 0.01 * static_cast<double>(k % 7);
      lines[k].share = rep.weight * static_cast<double>(sizes.at(rep.cluster)) / 500.0;
      reps.push_back(std::move(rep));
    }
    const auto weighted = footprint_weighted(reps, sizes, 500, spec, 300.0, Proximity::Points, 2);
    auto want = oracle::footprint_sums(lines, spec.origin_east, spec.origin_north, spec.cell, spec.nx,
                                       spec.ny, 300.0);
    for (auto& v : want) v *= 100.0;
    o.require(weighted.values == want, "weighted grid, trial " + std::to_string(trial));
    grids += 2;
  }
  o.detail << grids << " grids of up to 100x100 cells with 100 trajectories";
}

// 9. A second pipeline run must reproduce every artifact byte for byte.
void determinism(Outcome& o, const fs::path& first, const fs::path& second) {
  run_pipeline(second);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(first)) {
    const auto name = entry.path().filename();
    const auto other = second / name;
    o.require(fs::exists(other), "missing " + name.string());
    if (!fs::exists(other)) continue;
    o.require(read_file(entry.path().string()) == read_file(other.string()), "differs: " + name.string());
    ++files;
  }
  std::size_t second_count = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(second)) ++second_count;
  o.require(second_count == files, "file sets differ");
  o.detail << files << " artifacts compared";
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "trajrep_acceptance";
  fs::create_directories(work);
  const fs::path run_a = work / "run_a", run_b = work / "run_b";

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"chi-square weight reproduction", chi_square_tables},
      {"EM correctness", em_properties},
      {"parameter recovery", recovery},
      {"DBSCAN oracle equivalence", dbscan_oracle},
      {"ellipsoid-section geometry", ellipsoid_geometry},
      {"representative-count identity", representative_counts},
      {"end-to-end footprint fidelity", [&](Outcome& o) { footprint_fidelity(o, run_a); }},
      {"footprint oracle", footprint_oracle},
      {"determinism", [&](Outcome& o) { determinism(o, run_a, run_b); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << "criterion " << i + 1 << " [" << (o.pass ? "PASS" : "FAIL") << "] "
              << criteria[i].first << ": " << o.detail.str() << " (" << std::fixed
              << std::setprecision(2) << seconds << " s)" << std::defaultfloat << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
