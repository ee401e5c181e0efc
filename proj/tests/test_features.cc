#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "oracles.h"
#include "riskdecode/features.h"

using namespace riskdecode;

namespace {

Frame TwoCars(double gap_x, double gap_y, double v_s, double v_n) {
  Frame f;
  f.subject.vx = v_s;
  VehicleState n;
  n.x = gap_x;
  n.y = gap_y;
  n.vx = v_n;
  f.neighbours.push_back(n);
  return f;
}

}  // namespace

TEST_CASE("relative kinematics sign convention") {
  const RelativeKinematics r = ComputeRelativeKinematics(TwoCars(20, 0, 30, 20), 0);
  CHECK(r.dx == 20.0);
  CHECK(r.dy == 0.0);
  CHECK(r.dv_x == 10.0);
  CHECK(ComputeRelativeKinematics(TwoCars(20, 0, 20, 30), 0).dv_x < 0.0);
  // Neighbour behind and faster: also closing.
  CHECK(ComputeRelativeKinematics(TwoCars(-20, 0, 20, 30), 0).dv_x == 10.0);
  CHECK_THROWS_AS(ComputeRelativeKinematics(TwoCars(20, 0, 30, 20), 1), std::out_of_range);
}

TEST_CASE("uncertain velocity geometry") {
  VehicleState a;
  VehicleState b;
  b.y = 3.5;
  Vec2 u = UncertainVelocity(a, b, 0.3, 0.4);
  CHECK(u.x == 0.0);
  CHECK(u.y == doctest::Approx(0.4));
  b = {};
  b.x = 10;
  u = UncertainVelocity(a, b, 0.3, 0.4);
  CHECK(u.x == doctest::Approx(0.3));
  CHECK(u.y == 0.0);
  b.y = 5;
  u = UncertainVelocity(a, b, 0.0, 0.0);
  CHECK(u.x == 0.0);
  CHECK(u.y == 0.0);
  const Vec2 there = UncertainVelocity(a, b, 0.3, 0.4);
  const Vec2 back = UncertainVelocity(b, a, 0.3, 0.4);
  CHECK(there.x == -back.x);
  CHECK(there.y == -back.y);
  const double nx = 10 / std::hypot(10, 5);
  const double ny = 5 / std::hypot(10, 5);
  CHECK(std::hypot(there.x, there.y) ==
        doctest::Approx(std::sqrt(std::pow(0.3 * nx, 2) + std::pow(0.4 * ny, 2))));
  CHECK_THROWS_AS(UncertainVelocity(a, a, 0.3, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(UncertainVelocity(a, b, -0.1, 0.3), std::invalid_argument);
}

TEST_CASE("DRAC examples and oracle") {
  CHECK(Drac(30, 20, 50, -10) == 2.0);
  CHECK(Drac(30, 20, 50, 0.0) == 0.0);
  CHECK(Drac(30, 20, 50, 1.0) == 0.0);
  CHECK(Drac(30, 20, 0.01, -10) == doctest::Approx(1000.0).epsilon(1e-12));
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const double vs = rng.Uniform(-40, 40);
    const double vn = rng.Uniform(-40, 40);
    const double gap = rng.Uniform() < 0.2 ? rng.Uniform(0, 0.2) : rng.Uniform(0, 100);
    const double rate = rng.Uniform(-10, 10);
    const double got = Drac(vs, vn, gap, rate);
    CHECK(got == oracle::Drac(vs, vn, gap, rate));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("DRAC components") {
  Frame f = TwoCars(30, 0, 30, 20);
  UncertaintySigmas zero{0, 0, 0, 0};
  DracComponents d = ComputeDracComponents(f, 0, zero);
  CHECK(d.uncertain_x == 0.0);
  CHECK(d.uncertain_y == 0.0);
  CHECK(d.real_y == 0.0);
  // Bumper gap 30 - 4.5.
  CHECK(d.real_x == doctest::Approx(100.0 / 25.5));
  f.neighbours[0].vx = 35;
  CHECK(ComputeDracComponents(f, 0, zero).real_x == 0.0);
}

TEST_CASE("default manifests match the published input sizes") {
  CHECK(DefaultManifest(Scenario::kHB).dim() == 11);
  CHECK(DefaultManifest(Scenario::kMB).dim() == 21);
  CHECK(DefaultManifest(Scenario::kSVM).dim() == 32);
  CHECK(DefaultManifest(Scenario::kLCNormalSlow).dim() == 20);
  CHECK(DefaultManifest(Scenario::kLCAborted).dim() == 20);
  for (Scenario s : {Scenario::kHB, Scenario::kMB, Scenario::kSVM, Scenario::kLCFragmented}) {
    CHECK_NOTHROW(ValidateManifest(DefaultManifest(s)));
  }
  FeatureManifest bad{"HB", {"v_s_x", "speed"}};
  CHECK_THROWS_AS(ValidateManifest(bad), std::invalid_argument);
}

TEST_CASE("feature matrices on catalog events") {
  const auto events = EnumerateEvents();
  const UncertaintySigmas sigmas;
  for (int id : {1, 28, 55, 70, 79, 105}) {
    const EventSpec& spec = events[id - 1];
    CAPTURE(id);
    const EventTrajectory tr = SimulateEvent(spec);
    const FeatureManifest m = DefaultManifest(spec.scenario);
    const Eigen::MatrixXd x = BuildFeatures(tr, m, sigmas);
    CHECK(x.rows() == static_cast<int>(tr.frames.size()));
    CHECK(x.cols() == m.dim());
    CHECK(x.allFinite());
    for (int j = 0; j < m.dim(); ++j) {
      if (m.names[j].starts_with("drac")) CHECK(x.col(j).minCoeff() >= 0.0);
    }
  }
  const EventTrajectory hb = SimulateEvent(events[27]);
  CHECK_THROWS_AS(BuildFeatures(hb, DefaultManifest(Scenario::kSVM), sigmas),
                  std::invalid_argument);
}

TEST_CASE("z-score normalization") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 10, 2, 20, 3, 30, 4, 40;
  const NormStats s = ZScoreFit(x, {"a", "b"});
  CHECK(s.mean[0] == doctest::Approx(2.5));
  CHECK(s.std[1] == doctest::Approx(std::sqrt(125.0)));
  Eigen::MatrixXd probe(2, 2);
  probe << 2.5, 25, 2.5 + s.std[0], 25 + s.std[1];
  const Eigen::MatrixXd z = ZScoreApply(probe, s);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == 0.0);
  CHECK(z(1, 0) == doctest::Approx(1.0));
  CHECK(z(1, 1) == doctest::Approx(1.0));
  const Eigen::MatrixXd zx = ZScoreApply(x, s);
  const NormStats again = ZScoreFit(zx, {"a", "b"});
  CHECK(std::abs(again.mean[0]) < 1e-12);
  CHECK(again.std[1] == doctest::Approx(1.0));
  Eigen::MatrixXd flat(3, 2);
  flat << 1, 5, 2, 5, 3, 5;
  try {
    ZScoreFit(flat, {"a", "flat_col"});
    FAIL("zero-variance column accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("flat_col") != std::string::npos);
  }
}
