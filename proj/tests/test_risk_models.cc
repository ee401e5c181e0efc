#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.h"
#include "riskdecode/drf.h"
#include "riskdecode/pcad.h"

using namespace riskdecode;

namespace {

Frame Pair(double gap_x, double gap_y, double v_s, double v_n) {
  Frame f;
  f.subject.vx = v_s;
  VehicleState n;
  n.x = gap_x;
  n.y = gap_y;
  n.vx = v_n;
  f.neighbours.push_back(n);
  return f;
}

PcadParams Crisp() {
  PcadParams p;
  p.sigma_n_x = p.sigma_n_y = p.sigma_s_x = p.sigma_s_y = 0.0;
  return p;
}

}  // namespace

TEST_CASE("perceived velocity") {
  Vec2 v = PerceivedVelocity({20, 1}, {0, 0}, 0.5, {0, 0});
  CHECK(v.x == 20.0);
  CHECK(v.y == 1.0);
  v = PerceivedVelocity({20, 0}, {-5, 0}, 0.5, {0, 0});
  CHECK(v.x == 17.5);
  v = PerceivedVelocity({20, 0}, {0, 0}, 0.5, {0, 0.3});
  CHECK(v.y == 0.3);
}

TEST_CASE("PCAD weight") {
  PcadParams p;
  CHECK(PcadWeight(p.v_lim, p) == 1.0);
  CHECK(PcadWeight(0.0, p) == 0.0);
  CHECK(PcadWeight(60 * kKmh, p) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(PcadWeight(2 * p.v_lim, p) == 1.0);
  double prev = 0.0;
  for (double v = 0; v < 50; v += 0.5) {
    const double w = PcadWeight(v, p);
    CHECK(w >= prev);
    prev = w;
  }
}

TEST_CASE("collision cone against the sampling oracle") {
  Rng rng(2024);
  int unsafe = 0;
  for (int i = 0; i < 60; ++i) {
    const oracle::ConeCase k = oracle::RandomConeCase(rng);
    CAPTURE(i);
    const double got = CollisionConeDistance({k.wx, k.wy}, {k.cx, k.cy}, {k.hx, k.hy}, 10.0);
    const double want =
        oracle::BruteForceAvoidance(k.wx, k.wy, k.cx, k.cy, k.hx, k.hy, 10.0, 720);
    if (want == 0.0) {
      CHECK(got == 0.0);
    } else {
      ++unsafe;
      CHECK(std::abs(got - want) <= 0.05 * want);
    }
  }
  CHECK(unsafe > 10);
}

TEST_CASE("avoidance difficulty") {
  const PcadParams p = Crisp();
  // Receding neighbour.
  CHECK(AvoidanceDifficulty(Pair(20, 0, 20, 30), 0, p).difficulty == 0.0);
  // Head-on closing, compared with the oracle on the Minkowski box.
  const double a = AvoidanceDifficulty(Pair(30, 0, 30, 20), 0, p).difficulty;
  const double want = oracle::BruteForceAvoidance(10, 0, 30, 0, 4.5, 2.0, p.horizon);
  CHECK(a == doctest::Approx(want).epsilon(0.05));
  CHECK(a > 0.0);
  // Farther away never needs a larger correction.
  double prev = a;
  for (double gap = 35; gap <= 95; gap += 5) {
    const double cur = AvoidanceDifficulty(Pair(gap, 0, 30, 20), 0, p).difficulty;
    CHECK(cur <= prev);
    prev = cur;
  }
  // Out of the horizon: 100 m at 5 m/s closing takes 19 s.
  CHECK(AvoidanceDifficulty(Pair(100, 0, 25, 20), 0, p).difficulty == 0.0);
  const AvoidanceResult touch = AvoidanceDifficulty(Pair(3, 0.5, 30, 20), 0, p);
  CHECK(touch.overlap);
  CHECK(touch.difficulty == p.overlap_cap);
}

TEST_CASE("PCAD risk aggregation") {
  const PcadParams p = Crisp();
  Frame f = Pair(20, 0, 30, 20);
  const double single = PcadRisk(f, p);
  CHECK(single == AvoidanceDifficulty(f, 0, p).difficulty * PcadWeight(30, p));
  VehicleState follower;
  follower.x = -15;
  follower.vx = 36;
  f.neighbours.push_back(follower);
  const double a0 = AvoidanceDifficulty(f, 0, p).difficulty;
  const double a1 = AvoidanceDifficulty(f, 1, p).difficulty;
  CHECK(a1 > 0.0);
  CHECK(PcadRisk(f, p) == std::max(a0, a1) * PcadWeight(30, p));
  CHECK(PcadRisk(Pair(20, 0, 20, 30), p) == 0.0);
  PcadParams bad;
  bad.alpha = 0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
}

TEST_CASE("DRF field identities") {
  const DrfParams p;
  const double v = 25;
  CHECK(DrfWidth(0.0, p) == p.c);
  for (double x = 0; x < 100; x += 3.7) {
    for (double y = 0; y < 5; y += 0.6) {
      CHECK(DrfProbability(x, y, v, p) == DrfProbability(x, -y, v, p));
      CHECK(DrfProbability(x, y, v, p) >= 0.0);
    }
  }
  CHECK(DrfProbability(v * p.t_la, 0.0, v, p) == 0.0);
  CHECK(DrfProbability(v * p.t_la + 5, 0.0, v, p) == 0.0);
  CHECK(DrfProbability(-1.0, 0.0, v, p) == 0.0);
  CHECK(DrfProbability(10, 0, v, p) ==
        doctest::Approx(p.s * std::pow(10 - v * p.t_la, 2)).epsilon(1e-14));
}

TEST_CASE("DRF risk") {
  DrfParams p;
  const Frame near = Pair(15, 0, 20, 20);
  const Frame far = Pair(45, 0, 20, 20);
  CHECK(DrfRisk(near, p) > DrfRisk(far, p));
  CHECK(DrfRisk(near, p) == doctest::Approx(oracle::DrfGridSum(
                                15, 0, 4.5, 2.0, 20, p.s, p.t_la, p.m, p.c, p.C_sev,
                                p.grid_dx, p.grid_dy))
                                .epsilon(1e-12));
  // Beyond the preview point and behind the subject.
  CHECK(DrfRisk(Pair(90, 0, 20, 20), p) == 0.0);
  CHECK(DrfRisk(Pair(-20, 0, 20, 20), p) == 0.0);
  DrfParams twice = p;
  twice.C_sev = 2 * p.C_sev;
  CHECK(std::abs(DrfRisk(near, twice) - 2 * DrfRisk(near, p)) <= 1e-12 * DrfRisk(near, p));
  Frame both = near;
  both.neighbours.push_back(Pair(30, 3.5, 20, 20).neighbours[0]);
  CHECK(DrfRisk(both, p) ==
        doctest::Approx(DrfNeighbourRisk(both.subject, both.neighbours[0], p) +
                        DrfNeighbourRisk(both.subject, both.neighbours[1], p)));
  p.t_la = 0;
  CHECK_THROWS_AS(p.Validate(), std::invalid_argument);
}
