#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "doctest.h"
#include "riskdecode/scenario.h"

using namespace riskdecode;

namespace {

const VehicleState& Lead(const Frame& f) { return f.neighbours.at(0); }

}  // namespace

TEST_CASE("catalog has 27/27/24/27 events on the published grids") {
  const auto events = EnumerateEvents();
  REQUIRE(events.size() == 105);
  std::map<std::string, int> per_family;
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(events[i].event_id == static_cast<int>(i) + 1);
    per_family[std::string(ScenarioFamily(events[i].scenario))]++;
  }
  CHECK(per_family["MB"] == 27);
  CHECK(per_family["HB"] == 27);
  CHECK(per_family["LC"] == 24);
  CHECK(per_family["SVM"] == 27);

  std::set<std::tuple<double, double, double>> mb;
  for (const EventSpec& e : events) {
    if (e.scenario != Scenario::kMB) continue;
    mb.emplace(e.initial_distance, e.cruise_speed_kmh, e.braking_intensity);
    CHECK(std::set<double>{5, 15, 25}.count(e.initial_distance) == 1);
    CHECK(std::set<double>{80, 100, 120}.count(e.cruise_speed_kmh) == 1);
    CHECK(std::set<double>{-2, -5, -8}.count(e.braking_intensity) == 1);
  }
  CHECK(mb.size() == 27);
  for (const EventSpec& e : events) {
    if (!IsLaneChange(e.scenario)) continue;
    CHECK(e.acc.has_value());
    CHECK(std::set<double>{5, 15}.count(e.initial_distance) == 1);
    CHECK(e.duration == 36.0);
  }
}

TEST_CASE("lane-change events run lateral category, then distance, then ACC") {
  const auto events = EnumerateEvents();
  CHECK(events[54].scenario == Scenario::kLCNormalSlow);
  CHECK(events[54].initial_distance == 5.0);
  CHECK(*events[54].acc == AccCategory::kCautious);
  CHECK(events[55].initial_distance == 5.0);
  CHECK(*events[55].acc == AccCategory::kMild);
  CHECK(events[57].initial_distance == 15.0);
  CHECK(events[60].scenario == Scenario::kLCNormalFast);
  CHECK(events[77].scenario == Scenario::kLCAborted);
}

TEST_CASE("lateral profiles") {
  SUBCASE("normal slow crosses 3.5 m in 3.5 s") {
    const AxisProfile p = LateralProfile(LateralCategory::kNormalSlow, 10.0, 3.5, 36.0);
    int first = -1;
    int last = -1;
    for (std::size_t k = 0; k < p.t.size(); ++k) {
      if (first < 0 && p.position[k] < 0.0) first = static_cast<int>(k) - 1;
      if (last < 0 && std::abs(p.position[k] + 3.5) < 1e-9) last = static_cast<int>(k);
    }
    REQUIRE(first >= 0);
    REQUIRE(last > first);
    // Ramps included, the move takes 3.5 s at the nominal lateral speed.
    CHECK((last - first) * kFrameDt == doctest::Approx(3.5).epsilon(0.15));
    CHECK(p.position.back() == doctest::Approx(-3.5).epsilon(1e-12));
  }
  SUBCASE("fragmented holds the midline for exactly 6 s") {
    const AxisProfile p = LateralProfile(LateralCategory::kFragmented, 10.0, 3.5, 36.0);
    int held = 0;
    for (std::size_t k = 0; k + 1 < p.t.size(); ++k) {
      if (std::abs(p.position[k] + 1.75) < 1e-9 && std::abs(p.position[k + 1] + 1.75) < 1e-9) {
        ++held;
      }
    }
    CHECK(held * kFrameDt == doctest::Approx(6.0));
    CHECK(p.position.back() == doctest::Approx(-3.5));
  }
  SUBCASE("aborted returns to the start") {
    const AxisProfile p = LateralProfile(LateralCategory::kAborted, 10.0, 3.5, 36.0);
    CHECK(std::abs(p.position.back() - p.position.front()) <= 1e-9);
    CHECK(*std::min_element(p.position.begin(), p.position.end()) ==
          doctest::Approx(-1.75));
  }
}

TEST_CASE("longitudinal profile") {
  CHECK(BrakingPhaseDuration(120, -5) == doctest::Approx(3.4).epsilon(1e-12));
  CHECK(BrakingPhaseDuration(80, -2) == doctest::Approx(2.8).epsilon(1e-12));
  const Anchors a = DefaultAnchors(Scenario::kHB, 120, -5);
  const AxisProfile p = LongitudinalProfile(120, -5, a, 30.0);
  for (std::size_t k = 0; k < p.t.size(); ++k) {
    if (p.t[k] <= *a.brake_onset + 1e-9) CHECK(p.velocity[k] == 120 * kKmh);
  }
  // Continuous braking time is 16.67 / 5 = 3.33 s; the profile gets there on
  // the 10 Hz grid through a partial last step.
  std::size_t reached = 0;
  while (p.velocity[reached] > 60 * kKmh + 1e-9) ++reached;
  CHECK(p.t[reached] - *a.brake_onset >= 3.33 - 1e-9);
  CHECK(p.t[reached] - *a.brake_onset <= 3.4 + 1e-9);
  const double floor = *std::min_element(p.velocity.begin(), p.velocity.end());
  CHECK(floor == doctest::Approx(60 * kKmh).epsilon(1e-12));
  CHECK(p.velocity.back() == doctest::Approx(120 * kKmh).epsilon(1e-12));
  // Position is the exact integral of the piecewise-linear speed.
  for (std::size_t k = 0; k + 1 < p.t.size(); ++k) {
    const double trap = 0.5 * (p.velocity[k] + p.velocity[k + 1]) * kFrameDt;
    CHECK(p.position[k + 1] - p.position[k] == doctest::Approx(trap).epsilon(1e-12));
  }
  Anchors cramped = a;
  cramped.recovery_onset = *a.brake_onset + 1.0;
  CHECK_THROWS_AS(LongitudinalProfile(120, -5, cramped, 30.0), std::invalid_argument);
  CHECK_THROWS_AS(LongitudinalProfile(120, 1, a, 30.0), std::invalid_argument);
}

TEST_CASE("simulated events") {
  for (const EventSpec& spec : EnumerateEvents()) {
    const EventTrajectory tr = SimulateEvent(spec);
    CAPTURE(spec.event_id);
    REQUIRE(static_cast<int>(tr.frames.size()) == (IsLaneChange(spec.scenario) ? 361 : 301));
    for (std::size_t k = 0; k + 1 < tr.frames.size(); ++k) {
      const Frame& f = tr.frames[k];
      const Frame& g = tr.frames[k + 1];
      // Constant acceleration over each step.
      const double dx = f.subject.vx * kFrameDt + 0.5 * f.subject.ax * kFrameDt * kFrameDt;
      if (std::abs(g.subject.x - f.subject.x - dx) > 1e-9) {
        FAIL("subject x is not the integral of its motion at frame " << k);
      }
      if (std::abs(g.subject.vx - f.subject.vx - f.subject.ax * kFrameDt) > 1e-9) {
        FAIL("subject vx is not the integral of ax at frame " << k);
      }
    }
    if (spec.scenario == Scenario::kHB) {
      CHECK(BumperGap(tr.frames[0].subject, Lead(tr.frames[0])) ==
            doctest::Approx(spec.initial_distance));
      for (const Frame& f : tr.frames) {
        if (BumperGap(f.subject, Lead(f)) <= 0.0) FAIL("HB collision at t=" << f.t);
      }
    }
    if (spec.scenario == Scenario::kMB) {
      const int k = static_cast<int>(std::lround(*spec.anchors.merge_onset / kFrameDt));
      CHECK(BumperGap(tr.frames[k].subject, Lead(tr.frames[k])) ==
            doctest::Approx(spec.initial_distance));
    }
    if (spec.scenario == Scenario::kLCAborted) {
      CHECK(std::abs(Lead(tr.frames.back()).y - Lead(tr.frames.front()).y) <= 1e-9);
    }
    if (spec.scenario == Scenario::kSVM) CHECK(tr.frames[0].neighbours.size() == 2);
  }
}

TEST_CASE("simulation is deterministic") {
  const EventSpec spec = EnumerateEvents()[85];
  const EventTrajectory a = SimulateEvent(spec);
  const EventTrajectory b = SimulateEvent(spec);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    CHECK(a.frames[k].subject.x == b.frames[k].subject.x);
    CHECK(a.frames[k].subject.y == b.frames[k].subject.y);
    CHECK(a.frames[k].neighbours[1].vx == b.frames[k].neighbours[1].vx);
  }
}

TEST_CASE("invalid specs are rejected") {
  EventSpec spec = EnumerateEvents()[0];
  spec.duration = 31.0;
  CHECK_THROWS_AS(ValidateEventSpec(spec), std::invalid_argument);
  spec = EnumerateEvents()[0];
  spec.initial_distance = -1.0;
  CHECK_THROWS_AS(ValidateEventSpec(spec), std::invalid_argument);
  CHECK_THROWS_AS(ParseScenario("XX"), std::invalid_argument);
}
