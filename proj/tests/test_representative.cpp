#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/QR>

#include "oracles.hpp"
#include "support.hpp"
#include "trajrep/representative.hpp"
#include "trajrep/text.hpp"

using namespace trajrep;

namespace {

// Straight level path heading east with a fixed covariance.
SectionField constant_field(const Eigen::Matrix3d& cov, double length = 1000.0) {
  return [cov, length](double tau) {
    return GaussianSection{Eigen::Vector3d(length * tau, 0.0, 0.0), cov};
  };
}

TrajectoryModel fitted_model(std::uint64_t seed) {
  const auto c = testing::em_case(6, 40, 30, 40, seed);
  EmOptions opt;
  opt.max_iterations = 20;
  auto m = em_fit(c.designs, BasisSet::uniform(6), opt);
  m.transform.offset = {-2000.0, 500.0, 0.0};
  m.transform.scale = {20000.0, 15000.0, 3000.0};
  return m;
}

double lateral_offset_check(const SectionEllipse& e, double angle) {
  return (e.at_angle(angle) - e.center).norm();
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  const Eigen::Matrix3d q = testing::random_matrix(3, 3, rng).householderQr().householderQ();
  return q.determinant() < 0 ? Eigen::Matrix3d(-q) : q;
}

}  // namespace

TEST_SUITE("representative") {
  TEST_CASE("chi-square table values") {
    CHECK(std::abs(chi_square_ring_weight(1, 0.0, 0.5, 1) - 0.3829) < 5e-5);
    CHECK(std::abs(chi_square_ring_weight(1, 0.5, 1.5, 2) - 0.2417) < 5e-5);
    CHECK(std::abs(chi_square_ring_weight(1, 1.5, 2.5, 2) - 0.0606) < 5e-5);
    CHECK(std::abs(chi_square_ring_weight(2, 0.0, 0.5, 1) - 0.1175) < 5e-5);
    CHECK(std::abs(chi_square_ring_weight(2, 0.5, 1.5, 8) - 0.0697) < 5e-5);
    CHECK(std::abs(8 * chi_square_ring_weight(2, 1.5, 2.5, 8) - 0.2807) < 5e-5);
    CHECK(std::abs(RepresentativeScheme::flat().total_weight() - 0.9876) < 5e-5);
    CHECK(std::abs(RepresentativeScheme::round().total_weight() - 0.9561) < 5e-5);
  }

  TEST_CASE("chi-square matches numerical integration of the density") {
    for (int dof : {1, 2})
      for (auto [a, b] : {std::pair{0.0, 0.5}, {0.5, 1.5}, {1.5, 2.5}, {0.1, 3.7}, {2.0, 2.01}})
        CHECK(std::abs(chi_square_ring_weight(dof, a, b, 1) - oracle::chi_square_ring_mass(dof, a, b)) <
              1e-9);
    CHECK(chi_square_ring_weight(2, 0.5, 1.5, 4) ==
          doctest::Approx(chi_square_ring_weight(2, 0.5, 1.5, 1) / 4));
    CHECK(chi_square_cdf(2, 0.0) == 0.0);
    CHECK_THROWS(chi_square_cdf(3, 1.0));
    CHECK_THROWS(chi_square_ring_weight(1, 1.0, 1.0, 1));
    CHECK_THROWS(chi_square_ring_weight(1, 0.0, 1.0, 0));
  }

  TEST_CASE("eigendecomposition") {
    const auto d = eigendecompose(Eigen::Vector3d(0.25, 4.0, 1.0).asDiagonal());
    CHECK(d.values == Eigen::Vector3d(4.0, 1.0, 0.25));
    CHECK(d.axes.cwiseAbs() == Eigen::Matrix3d({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}));

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Matrix3d q = random_rotation(rng);
      const Eigen::Vector3d lambda(9.0, 2.0, 0.5);
      const Eigen::Matrix3d k = q * lambda.asDiagonal() * q.transpose();
      const auto f = eigendecompose(k);
      CHECK((f.values - lambda).cwiseAbs().maxCoeff() < 1e-12);
      for (int i = 0; i < 3; ++i) CHECK(std::abs(f.axes.col(i).dot(q.col(i))) == doctest::Approx(1.0));
      CHECK((f.reconstruct() - k).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((f.axes.transpose() * f.axes - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    }
    const auto id = eigendecompose(Eigen::Matrix3d::Identity());
    CHECK((id.reconstruct() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS(eigendecompose(Eigen::Vector3d(1, 0, -1).asDiagonal()));
    Eigen::Matrix3d skew = Eigen::Matrix3d::Identity();
    skew(0, 1) = 0.5;
    CHECK_THROWS(eigendecompose(skew));
  }

  TEST_CASE("section plane frames") {
    const auto east = section_plane(constant_field(Eigen::Matrix3d::Identity()), 0.5);
    CHECK((east.normal - Eigen::Vector3d::UnitX()).norm() < 1e-12);
    CHECK(std::abs(east.lateral.y()) == doctest::Approx(1.0));
    CHECK((east.vertical - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
    CHECK(east.normal.cross(east.lateral).dot(east.vertical) == doctest::Approx(1.0));

    const SectionField climb = [](double tau) {
      return GaussianSection{Eigen::Vector3d(500.0 * tau, 0.0, 500.0 * tau), Eigen::Matrix3d::Identity()};
    };
    for (double tau : {0.0, 0.5, 1.0}) {
      const auto p = section_plane(climb, tau);
      CHECK((p.normal - Eigen::Vector3d(1, 0, 1) / std::sqrt(2.0)).norm() < 1e-12);
      CHECK(std::abs(p.lateral.y()) == doctest::Approx(1.0));
      CHECK(p.vertical.dot(p.normal) == doctest::Approx(0.0));
    }

    const SectionField vertical = [](double tau) {
      return GaussianSection{Eigen::Vector3d(0.0, 0.0, 100.0 * tau), Eigen::Matrix3d::Identity()};
    };
    const auto up = section_plane(vertical, 0.3);
    CHECK(up.lateral.norm() == doctest::Approx(1.0));
    CHECK(up.lateral.dot(up.normal) == doctest::Approx(0.0));

    const SectionField still = [](double) {
      return GaussianSection{Eigen::Vector3d(1, 2, 3), Eigen::Matrix3d::Identity()};
    };
    CHECK_THROWS_AS(section_plane(still, 0.5), Error);
    CHECK_THROWS(section_plane(climb, 0.5, 0.5));
  }

  TEST_CASE("finite-difference normal converges at second order") {
    const SectionField helix = [](double tau) {
      return GaussianSection{1000.0 * Eigen::Vector3d(std::cos(2 * tau), std::sin(2 * tau), tau * tau),
                             Eigen::Matrix3d::Identity()};
    };
    const double tau = 0.4;
    const Eigen::Vector3d exact =
        Eigen::Vector3d(-2 * std::sin(2 * tau), 2 * std::cos(2 * tau), 2 * tau).normalized();
    const double e1 = (section_plane(helix, tau, 0.04).normal - exact).norm();
    const double e2 = (section_plane(helix, tau, 0.02).normal - exact).norm();
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("axis-aligned and spherical sections") {
    SectionPlane plane{Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                       Eigen::Vector3d::UnitZ()};
    const Ellipsoid quadric{Eigen::Vector3d::Zero(), Eigen::Vector3d(4, 1, 0.25).asDiagonal(), 1.0};
    const auto s = plane_ellipsoid_intersection(quadric, plane);
    REQUIRE(s);
    CHECK((s->semi_axes() - Eigen::Vector2d(1.0, 0.5)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((s->at_angle(0.0) - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-12);
    CHECK((s->at_angle(90.0) - Eigen::Vector2d(0.0, 0.5)).norm() < 1e-12);

    // Off-centre cut of the same quadric: x = 1 leaves (1 - 1/4) of each axis squared.
    plane.point = Eigen::Vector3d(1.0, 0.0, 0.0);
    const auto off = plane_ellipsoid_intersection(quadric, plane);
    REQUIRE(off);
    CHECK((off->semi_axes() - std::sqrt(0.75) * Eigen::Vector2d(1.0, 0.5)).cwiseAbs().maxCoeff() < 1e-8);

    const Ellipsoid sphere{Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity(), 2.0};
    plane.point.setZero();
    const auto circle = plane_ellipsoid_intersection(sphere, plane);
    REQUIRE(circle);
    CHECK((circle->semi_axes() - Eigen::Vector2d(2.0, 2.0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(lateral_offset_check(*circle, 135.0) == doctest::Approx(2.0));

    plane.point = Eigen::Vector3d(2.0, 0.0, 0.0);
    const auto touch = plane_ellipsoid_intersection(sphere, plane);
    REQUIRE(touch);
    CHECK(touch->semi_axes().maxCoeff() < 1e-6);
    CHECK(touch->center.norm() < 1e-12);
    plane.point = Eigen::Vector3d(2.0001, 0.0, 0.0);
    CHECK_FALSE(plane_ellipsoid_intersection(sphere, plane));
    CHECK_THROWS(plane_ellipsoid_intersection({Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity(), 0.0},
                                              plane));
  }

  TEST_CASE("random sections lie on the ellipsoid and the plane") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int hits = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Matrix3d q = random_rotation(rng);
      const Eigen::Vector3d lambda(4.0 + 3.0 * u(rng), 1.0 + 0.5 * u(rng), 0.2 + 0.1 * u(rng));
      const Ellipsoid e{Eigen::Vector3d(u(rng), u(rng), u(rng)) * 100.0,
                        q * lambda.asDiagonal() * q.transpose(), 1.0 + u(rng) * 0.9};
      const Eigen::Matrix3d frame = random_rotation(rng);
      const SectionPlane p{e.center + 2.0 * Eigen::Vector3d(u(rng), u(rng), u(rng)), frame.col(0),
                           frame.col(1), frame.col(2)};
      const auto s = plane_ellipsoid_intersection(e, p);
      const double along = (e.center - p.point).dot(p.normal);
      const double reach = std::sqrt(p.normal.dot(e.shape * p.normal)) * e.radius;
      CHECK(s.has_value() == (std::abs(along) <= reach));
      if (!s) continue;
      ++hits;
      for (double a = 0.0; a < 360.0; a += 30.0) {
        const Eigen::Vector3d x = p.to_world(s->at_angle(a));
        CHECK(std::abs(mahalanobis_squared(x, e.center, e.shape) - e.radius * e.radius) < 1e-8);
        CHECK(std::abs((x - p.point).dot(p.normal)) < 1e-9);
      }
    }
    CHECK(hits > 50);
  }

  TEST_CASE("whitened angles on a rotated section") {
    SectionEllipse e{Eigen::Vector2d(1.0, -2.0), Eigen::Matrix2d::Zero()};
    const double c = std::cos(0.3), s = std::sin(0.3);
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    e.axes = rot * Eigen::Vector2d(3.0, 0.5).asDiagonal();
    // Points at angle a satisfy (p - c)^T Q^{-1} (p - c) = 1 and the whitened
    // offsets Q^{-1/2}(p - c) step through the unit circle at the same angle.
    const Eigen::Matrix2d q = e.shape();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(q);
    const Eigen::Matrix2d inv_root = es.operatorInverseSqrt();
    for (double a = 0.0; a < 360.0; a += 22.5) {
      const Eigen::Vector2d d = e.at_angle(a) - e.center;
      CHECK(d.dot(q.inverse() * d) == doctest::Approx(1.0));
      const Eigen::Vector2d w = inv_root * d;
      const double rad = a * std::numbers::pi / 180.0;
      CHECK((w - Eigen::Vector2d(std::cos(rad), std::sin(rad))).norm() < 1e-12);
    }
    CHECK((e.at_angle(0.0) - e.center + e.at_angle(180.0) - e.center).norm() < 1e-12);
  }

  TEST_CASE("representative points on a constant model") {
    const Eigen::Matrix3d cov = Eigen::Vector3d(9.0, 4.0, 1.0).asDiagonal();
    const auto field = constant_field(cov);
    std::vector<double> taus;
    for (int i = 0; i < 100; ++i) taus.push_back(i / 99.0);
    const auto plane = section_plane(field, 0.5);
    for (double r : {1.0, 2.0})
      for (double a : {0.0, 45.0, 90.0, 200.0}) {
        const double rad = a * std::numbers::pi / 180.0;
        const Eigen::Vector3d expect =
            Eigen::Vector3d(500, 0, 0) + r * (2.0 * std::cos(rad) * plane.lateral + std::sin(rad) * plane.vertical);
        const double only[] = {0.5};
        CHECK((representative_point(field, 0.5, r, a, taus) - expect).norm() < 1e-9);
        CHECK((representative_point(field, 0.5, r, a, only) - expect).norm() < 1e-9);
      }
    CHECK((representative_point(field, 0.25, 0.0, 90.0, taus) - Eigen::Vector3d(250, 0, 0)).norm() == 0.0);
    CHECK_THROWS(representative_point(field, 0.5, -1.0, 0.0, taus));
  }

  TEST_CASE("a wider neighbouring ellipsoid wins") {
    const SectionField field = [](double tau) {
      const double scale = std::abs(tau - 0.51) < 1e-12 ? 2.0 : 1.0;
      return GaussianSection{Eigen::Vector3d(10.0 * tau, 0.0, 0.0), scale * Eigen::Matrix3d::Identity()};
    };
    const double taus[] = {0.5, 0.51};
    const auto plane = section_plane(field, 0.5);
    const Eigen::Vector3d p = representative_point(field, 0.5, 1.0, 0.0, taus);
    // Sphere of radius sqrt(2) centred 0.1 beyond the plane.
    CHECK((p - (Eigen::Vector3d(5, 0, 0) + std::sqrt(1.99) * plane.lateral)).norm() < 1e-9);
    const double self[] = {0.5};
    CHECK((representative_point(field, 0.5, 1.0, 0.0, self) - (Eigen::Vector3d(5, 0, 0) + plane.lateral)).norm() <
          1e-9);
  }

  TEST_CASE("scheme structure and weights") {
    const auto flat = RepresentativeScheme::flat();
    const auto round = RepresentativeScheme::round();
    CHECK(flat.trajectory_count() == 5);
    CHECK(round.trajectory_count() == 17);
    CHECK_NOTHROW(flat.validate());
    CHECK_NOTHROW(round.validate());
    for (const auto* s : {&flat, &round}) {
      CHECK(s->rings.front().lower == 0.0);
      CHECK(s->rings.back().upper == 2.5);
      for (std::size_t k = 1; k < s->rings.size(); ++k) CHECK(s->rings[k].lower == s->rings[k - 1].upper);
    }
    auto bad = flat;
    bad.rings[1].lower = 0.4;
    CHECK_THROWS(bad.validate());
    bad = round;
    bad.dof = 3;
    CHECK_THROWS(bad.validate());

    const auto field = constant_field(Eigen::Vector3d(4.0, 1.0, 0.25).asDiagonal());
    GenerationOptions opt;
    opt.steps = 12;
    const auto reps = generate_representatives(field, flat, 7, opt);
    REQUIRE(reps.size() == 5);
    const double expected[] = {0.3829, 0.2417, 0.2417, 0.0606, 0.0606};
    double total = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(reps[k].weight - expected[k]) < 5e-5);
      CHECK(reps[k].cluster == 7);
      CHECK(reps[k].points.size() == 12);
      total += reps[k].weight;
    }
    CHECK(std::abs(total - 0.9876) < 5e-4);
    const auto many = generate_representatives(field, round, 7, opt);
    CHECK(many.size() == 17);
    double rt = 0.0;
    for (const auto& r : many) rt += r.weight;
    CHECK(std::abs(rt - 0.9561) < 5e-4);

    // Weights never depend on the model.
    const auto other = generate_representatives(constant_field(Eigen::Matrix3d::Identity() * 1e4, 7.0), round, 2, opt);
    for (std::size_t k = 0; k < 17; ++k) CHECK(other[k].weight == many[k].weight);
  }

  TEST_CASE("generated points of a fitted model sit on an ellipsoid of their radius") {
    const auto model = fitted_model(43);
    GenerationOptions opt;
    opt.steps = 40;
    const auto field = real_space_field(model);
    std::vector<GaussianSection> sections;
    for (int j = 0; j < opt.steps; ++j) sections.push_back(field(j / double(opt.steps - 1)));
    const auto reps = generate_representatives(model, RepresentativeScheme::round(), opt);
    REQUIRE(reps.size() == 17);
    for (const auto& rep : reps) {
      REQUIRE(rep.points.size() == 40);
      for (std::size_t i = 0; i < rep.points.size(); ++i) {
        if (rep.radius == 0.0) {
          CHECK((rep.points[i] - sections[i].mean).norm() <= 1e-9 * std::max(1.0, sections[i].mean.norm()));
          continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : sections)
          best = std::min(best, std::abs(mahalanobis_squared(rep.points[i], s.mean, s.cov) -
                                         rep.radius * rep.radius));
        CHECK(best < 1e-6);
      }
    }
  }

  TEST_CASE("a smaller search set never increases the deviation") {
    const auto model = fitted_model(44);
    const auto field = real_space_field(model);
    std::vector<double> taus;
    for (int i = 0; i < 50; ++i) taus.push_back(i / 49.0);
    for (double tau : {0.0, 0.3, 0.77, 1.0})
      for (double a : {0.0, 90.0, 225.0}) {
        const Eigen::Vector3d centre = field(tau).mean;
        const double wide = (representative_point(field, tau, 2.0, a, taus) - centre).norm();
        const std::vector<double> half(taus.begin(), taus.begin() + 25);
        const double mid = (representative_point(field, tau, 2.0, a, half) - centre).norm();
        const double self[] = {tau};
        const double narrow = (representative_point(field, tau, 2.0, a, self) - centre).norm();
        CHECK(narrow <= mid * (1.0 + 1e-12));
        CHECK(mid <= wide * (1.0 + 1e-12));
      }
  }

  TEST_CASE("flat trajectories mirror across the path") {
    // Straight eastbound path whose covariance couples east and altitude only.
    const SectionField field = [](double tau) {
      Eigen::Matrix3d k = Eigen::Matrix3d::Zero();
      k(0, 0) = 400.0 + 300.0 * tau;
      k(1, 1) = 100.0 + 2500.0 * tau * tau;
      k(2, 2) = 25.0 + 50.0 * tau;
      k(0, 2) = k(2, 0) = 30.0 * tau;
      return GaussianSection{Eigen::Vector3d(3000.0 * tau, 200.0, 100.0 + 400.0 * tau), k};
    };
    GenerationOptions opt;
    opt.steps = 30;
    const auto reps = generate_representatives(field, RepresentativeScheme::flat(), 0, opt);
    REQUIRE(reps.size() == 5);
    for (std::size_t pair : {1u, 3u}) {
      const auto& a = reps[pair];
      const auto& b = reps[pair + 1];
      CHECK(a.angle_deg == 0.0);
      CHECK(b.angle_deg == 180.0);
      for (std::size_t i = 0; i < a.points.size(); ++i) {
        Eigen::Vector3d mirrored = b.points[i];
        mirrored.y() = 400.0 - mirrored.y();
        CHECK((a.points[i] - mirrored).norm() < 1e-6);
      }
    }
  }

  TEST_CASE("search window limits the sweep") {
    const auto model = fitted_model(45);
    GenerationOptions all, window;
    all.steps = window.steps = 30;
    window.search_window = 3;
    const auto a = generate_representatives(model, RepresentativeScheme::flat(), all);
    const auto b = generate_representatives(model, RepresentativeScheme::flat(), window);
    for (std::size_t k = 0; k < a.size(); ++k)
      for (std::size_t i = 0; i < a[k].points.size(); ++i) {
        const Eigen::Vector3d m = a[0].points[i];
        CHECK((b[k].points[i] - m).norm() <= (a[k].points[i] - m).norm() * (1.0 + 1e-12));
      }
    GenerationOptions bad;
    bad.steps = 1;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("representative CSV round-trip") {
    const auto model = fitted_model(46);
    GenerationOptions opt;
    opt.steps = 8;
    const auto reps = generate_representatives(model, RepresentativeScheme::round(), opt);
    std::ostringstream out;
    write_representatives(out, reps);
    std::istringstream in(out.str());
    const auto back = read_representatives(in);
    REQUIRE(back.size() == reps.size());
    for (std::size_t k = 0; k < reps.size(); ++k) {
      CHECK(back[k].weight == reps[k].weight);
      CHECK(back[k].angle_deg == reps[k].angle_deg);
      CHECK(back[k].radius == reps[k].radius);
      CHECK(back[k].cluster == reps[k].cluster);
      CHECK(back[k].points == reps[k].points);
    }
    std::istringstream bad("cluster,radius\n");
    CHECK_THROWS_AS(read_representatives(bad), ParseError);
  }
}
