#include "riskdecode/scenario.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace riskdecode {
namespace {

constexpr double kHardBrakeFloorKmh = 60.0;
constexpr double kRecoveryAccel = 2.0;      // m/s^2 back to cruise
constexpr double kOvertakeSpeedKmh = 10.0;  // neighbours approach from behind
constexpr double kSettleDecel = 1.0;        // m/s^2 after the cut-in starts
constexpr int kLateralRampSteps = 4;
constexpr int kPauseSteps = 60;             // 6 s hold on the lane line
constexpr double kLcCruiseKmh = 100.0;
constexpr double kSvmFollowerGap = 10.0;
constexpr double kSafetyMargin = 1.0;

// Lane keeping: damped lateral error driven by a small bounded disturbance.
constexpr double kKeepStiffness = 1.0;
constexpr double kKeepDamping = 1.4;
constexpr double kKeepDisturbance = 0.25;  // m/s^2

int StepsFor(double seconds) {
  return static_cast<int>(std::lround(seconds / kFrameDt));
}

double StepTime(int k) { return k * kFrameDt; }

// Writes constant-rate accelerations from step k until the velocity reaches
// `v_to`; the final step uses a reduced rate so the target is met exactly.
// Returns the first step after the change.
int PlanSpeedChange(std::vector<double>& accel, int k, double v_from,
                    double v_to, double rate) {
  double v = v_from;
  const int n = static_cast<int>(accel.size());
  while (k < n && std::abs(v_to - v) > 1e-12) {
    const double remaining = v_to - v;
    double a = std::copysign(rate, remaining);
    if (std::abs(remaining) <= rate * kFrameDt) a = remaining / kFrameDt;
    accel[k] += a;
    v += a * kFrameDt;
    ++k;
  }
  return k;
}

// Trapezoidal velocity move of signed `displacement` peaking at `speed`.
// A single blend step before the down-ramp absorbs the grid remainder so the
// displacement is exact while the peak speed stays at `speed`.
int PlanLateralMove(std::vector<double>& accel, int k, double displacement,
                    double speed) {
  const double sign = displacement < 0 ? -1.0 : 1.0;
  const double dist = std::abs(displacement);
  const int ramp = kLateralRampSteps;
  double v = speed;
  int plateau = static_cast<int>(
      std::ceil(dist / (v * kFrameDt) - ramp - 1 - 1e-9));
  plateau = std::max(plateau, 0);
  double remainder = dist - v * kFrameDt * (ramp + plateau + 1);
  double blend = -2.0 * remainder / (kFrameDt * (1 + ramp));
  if (blend > v) {
    // Too short to reach the requested speed: slow the move down instead.
    v = dist / (kFrameDt * (ramp + 1));
    plateau = 0;
    blend = 0.0;
  }
  blend = std::max(blend, 0.0);

  auto push = [&](double a) {
    if (k < static_cast<int>(accel.size())) accel[k] += sign * a;
    ++k;
  };
  for (int i = 0; i < ramp; ++i) push(v / (ramp * kFrameDt));
  for (int i = 0; i < plateau; ++i) push(0.0);
  push(-blend / kFrameDt);
  for (int i = 0; i < ramp; ++i) push(-(v - blend) / (ramp * kFrameDt));
  return k;
}

AxisProfile Integrate(const std::vector<double>& accel, double x0, double v0) {
  const std::size_t n = accel.size();
  AxisProfile p;
  p.t.resize(n);
  p.position.resize(n);
  p.velocity.resize(n);
  p.accel = accel;
  double x = x0;
  double v = v0;
  for (std::size_t k = 0; k < n; ++k) {
    p.t[k] = StepTime(static_cast<int>(k));
    p.position[k] = x;
    p.velocity[k] = v;
    x += v * kFrameDt + 0.5 * accel[k] * kFrameDt * kFrameDt;
    v += accel[k] * kFrameDt;
  }
  return p;
}

std::vector<double> LateralAccelPlan(LateralCategory category, double onset,
                                     double lane_width, int frames) {
  std::vector<double> accel(frames, 0.0);
  const double speed = LateralSpeed(category);
  int k = StepsFor(onset);
  switch (category) {
    case LateralCategory::kNormalSlow:
    case LateralCategory::kNormalFast:
      PlanLateralMove(accel, k, -lane_width, speed);
      break;
    case LateralCategory::kFragmented:
      k = PlanLateralMove(accel, k, -0.5 * lane_width, speed);
      PlanLateralMove(accel, k + kPauseSteps, -0.5 * lane_width, speed);
      break;
    case LateralCategory::kAborted:
      k = PlanLateralMove(accel, k, -0.5 * lane_width, speed);
      PlanLateralMove(accel, k + kPauseSteps, 0.5 * lane_width, speed);
      break;
  }
  return accel;
}

std::vector<double> BrakingAccelPlan(double cruise_speed_kmh, double brake,
                                     const Anchors& anchors, int frames) {
  if (!(brake < 0.0)) {
    throw std::invalid_argument("braking intensity must be negative");
  }
  if (!(cruise_speed_kmh > kHardBrakeFloorKmh)) {
    throw std::invalid_argument("cruise speed must exceed 60 km/h");
  }
  if (!anchors.brake_onset || !anchors.recovery_onset) {
    throw std::invalid_argument("braking profile needs brake and recovery onsets");
  }
  const double cruise = cruise_speed_kmh * kKmh;
  const double floor = kHardBrakeFloorKmh * kKmh;
  const int brake_step = StepsFor(*anchors.brake_onset);
  const int recovery_step = StepsFor(*anchors.recovery_onset);
  const int braking_steps = StepsFor(BrakingPhaseDuration(cruise_speed_kmh, brake));
  if (recovery_step < brake_step + braking_steps) {
    throw std::invalid_argument(
        "anchors leave no room for the braking phase: recovery_onset must be "
        ">= brake_onset + " + std::to_string(braking_steps * kFrameDt) + " s");
  }
  std::vector<double> accel(frames, 0.0);
  PlanSpeedChange(accel, brake_step, cruise, floor, -brake);
  PlanSpeedChange(accel, recovery_step, floor, cruise, kRecoveryAccel);
  return accel;
}

struct Actor {
  VehicleState state;
  std::vector<double> ax_plan;
  std::vector<double> ay_plan;
  bool controlled = false;
  ControllerGains gains;
  double set_speed = 0.0;
  std::vector<int> leader_candidates;
  bool lane_keeping = false;
  std::mt19937_64 rng;
  double keep_y = 0.0;
  double keep_vy = 0.0;
};

double UnitDraw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool SharesLane(const VehicleState& a, const VehicleState& b) {
  return std::abs(a.y - b.y) < 0.5 * (kLaneWidth + b.width);
}

double ControllerAccel(const Actor& self, const std::vector<Actor>& actors) {
  const VehicleState& s = self.state;
  const ControllerGains& g = self.gains;
  double accel = g.cruise_gain * (self.set_speed - s.vx);
  const VehicleState* leader = nullptr;
  for (int idx : self.leader_candidates) {
    const VehicleState& other = actors[idx].state;
    if (other.x <= s.x || !SharesLane(s, other)) continue;
    if (leader == nullptr || other.x < leader->x) leader = &other;
  }
  if (leader != nullptr) {
    const double gap = BumperGap(s, *leader);
    const double desired = g.standstill_gap + g.time_headway * s.vx;
    const double follow =
        g.gap_gain * (gap - desired) + g.speed_gain * (leader->vx - s.vx);
    accel = std::min(accel, follow);
    // Safety layer: when closing, brake at least hard enough to match the
    // leader's speed before the gap shrinks to the margin, on top of the
    // leader's own (last observed) deceleration.
    const double closing = s.vx - leader->vx;
    if (closing > 0.0) {
      const double room = std::max(gap - kSafetyMargin, 0.1);
      accel = std::min(accel, std::min(leader->ax, 0.0) -
                                  closing * closing / (2.0 * room));
    }
  }
  accel = std::clamp(accel, g.max_decel, g.max_accel);
  if (s.vx + accel * kFrameDt < 0.0) accel = -s.vx / kFrameDt;
  return accel;
}

EventTrajectory RunActors(const EventSpec& spec, std::vector<Actor> actors) {
  const int frames = spec.FrameCount();
  EventTrajectory traj;
  traj.event_id = spec.event_id;
  traj.scenario = spec.scenario;
  traj.dt = kFrameDt;
  traj.frames.reserve(frames);

  std::vector<double> keep_accel(actors.size(), 0.0);
  for (int k = 0; k < frames; ++k) {
    for (std::size_t i = 0; i < actors.size(); ++i) {
      Actor& a = actors[i];
      a.state.ax = a.controlled ? ControllerAccel(a, actors) : a.ax_plan[k];
      keep_accel[i] = 0.0;
      if (a.lane_keeping) {
        const double w = (2.0 * UnitDraw(a.rng) - 1.0) * kKeepDisturbance;
        keep_accel[i] = -kKeepStiffness * a.keep_y - kKeepDamping * a.keep_vy + w;
      }
      a.state.ay = a.ay_plan[k] + keep_accel[i];
    }

    Frame f;
    f.t = StepTime(k);
    f.subject = actors[0].state;
    for (std::size_t i = 1; i < actors.size(); ++i) {
      f.neighbours.push_back(actors[i].state);
    }
    traj.frames.push_back(std::move(f));

    constexpr double dt = kFrameDt;
    for (std::size_t i = 0; i < actors.size(); ++i) {
      VehicleState& s = actors[i].state;
      s.x += s.vx * dt + 0.5 * s.ax * dt * dt;
      s.y += s.vy * dt + 0.5 * s.ay * dt * dt;
      s.vx += s.ax * dt;
      s.vy += s.ay * dt;
      Actor& a = actors[i];
      a.keep_y += a.keep_vy * dt + 0.5 * keep_accel[i] * dt * dt;
      a.keep_vy += keep_accel[i] * dt;
    }
  }
  return traj;
}

Actor MakeActor(const EventSpec& spec, int index, double x, double y, double v) {
  Actor a;
  a.state.x = x;
  a.state.y = y;
  a.state.vx = v;
  a.ax_plan.assign(spec.FrameCount(), 0.0);
  a.ay_plan.assign(spec.FrameCount(), 0.0);
  a.rng.seed(0x9E3779B97F4A7C15ULL ^
             (static_cast<std::uint64_t>(spec.event_id) << 8 |
              static_cast<std::uint64_t>(index)));
  return a;
}

}  // namespace

std::string_view ScenarioName(Scenario scenario) {
  switch (scenario) {
    case Scenario::kMB: return "MB";
    case Scenario::kHB: return "HB";
    case Scenario::kLCNormalSlow: return "LC_normal_slow";
    case Scenario::kLCNormalFast: return "LC_normal_fast";
    case Scenario::kLCFragmented: return "LC_fragmented";
    case Scenario::kLCAborted: return "LC_aborted";
    case Scenario::kSVM: return "SVM";
  }
  return "?";
}

Scenario ParseScenario(std::string_view name) {
  for (Scenario s : {Scenario::kMB, Scenario::kHB, Scenario::kLCNormalSlow,
                     Scenario::kLCNormalFast, Scenario::kLCFragmented,
                     Scenario::kLCAborted, Scenario::kSVM}) {
    if (ScenarioName(s) == name) return s;
  }
  throw std::invalid_argument("unknown scenario: " + std::string(name));
}

std::string_view AccCategoryName(AccCategory category) {
  switch (category) {
    case AccCategory::kCautious: return "cautious";
    case AccCategory::kMild: return "mild";
    case AccCategory::kAggressive: return "aggressive";
  }
  return "?";
}

AccCategory ParseAccCategory(std::string_view name) {
  for (AccCategory c :
       {AccCategory::kCautious, AccCategory::kMild, AccCategory::kAggressive}) {
    if (AccCategoryName(c) == name) return c;
  }
  throw std::invalid_argument("unknown ACC category: " + std::string(name));
}

bool IsLaneChange(Scenario scenario) {
  return scenario == Scenario::kLCNormalSlow ||
         scenario == Scenario::kLCNormalFast ||
         scenario == Scenario::kLCFragmented || scenario == Scenario::kLCAborted;
}

std::string_view ScenarioFamily(Scenario scenario) {
  return IsLaneChange(scenario) ? "LC" : ScenarioName(scenario);
}

std::string_view NetworkGroup(Scenario scenario) {
  switch (scenario) {
    case Scenario::kLCNormalSlow:
    case Scenario::kLCNormalFast:
      return "LC_normal";
    case Scenario::kLCFragmented: return "LC_fragmented";
    case Scenario::kLCAborted: return "LC_aborted";
    default: return ScenarioName(scenario);
  }
}

int EventSpec::FrameCount() const { return StepsFor(duration) + 1; }

double BrakingPhaseDuration(double cruise_speed_kmh, double brake) {
  const double dv = (cruise_speed_kmh - kHardBrakeFloorKmh) * kKmh;
  return std::ceil(dv / (std::abs(brake) * kFrameDt) - 1e-9) * kFrameDt;
}

Anchors DefaultAnchors(Scenario scenario, double cruise_speed_kmh,
                       double braking_intensity) {
  Anchors a;
  switch (scenario) {
    case Scenario::kMB:
      a.merge_onset = 8.0;
      a.brake_onset = 12.0;
      break;
    case Scenario::kHB:
      a.brake_onset = 12.0;
      break;
    case Scenario::kSVM:
      a.merge_onset = 9.0;
      a.brake_onset = 12.0;
      break;
    default:
      a.merge_onset = 18.0;
      return a;
  }
  a.recovery_onset =
      *a.brake_onset + BrakingPhaseDuration(cruise_speed_kmh, braking_intensity);
  return a;
}

std::vector<EventSpec> EnumerateEvents() {
  constexpr std::array<double, 3> kDistances{5.0, 15.0, 25.0};
  constexpr std::array<double, 3> kSpeeds{80.0, 100.0, 120.0};
  constexpr std::array<double, 3> kIntensities{-2.0, -5.0, -8.0};
  constexpr std::array<double, 2> kLcDistances{5.0, 15.0};

  std::vector<EventSpec> events;
  events.reserve(105);
  int id = 1;
  auto braking_family = [&](Scenario scenario) {
    for (double d : kDistances) {
      for (double v : kSpeeds) {
        for (double b : kIntensities) {
          EventSpec e;
          e.event_id = id++;
          e.scenario = scenario;
          e.initial_distance = d;
          e.cruise_speed_kmh = v;
          e.braking_intensity = b;
          e.duration = 30.0;
          e.anchors = DefaultAnchors(scenario, v, b);
          events.push_back(e);
        }
      }
    }
  };
  braking_family(Scenario::kMB);
  braking_family(Scenario::kHB);
  for (Scenario lateral : {Scenario::kLCNormalSlow, Scenario::kLCNormalFast,
                           Scenario::kLCFragmented, Scenario::kLCAborted}) {
    for (double d : kLcDistances) {
      for (AccCategory acc : {AccCategory::kCautious, AccCategory::kMild,
                              AccCategory::kAggressive}) {
        EventSpec e;
        e.event_id = id++;
        e.scenario = lateral;
        e.initial_distance = d;
        e.cruise_speed_kmh = kLcCruiseKmh;
        e.acc = acc;
        e.duration = 36.0;
        e.anchors = DefaultAnchors(lateral, kLcCruiseKmh, 0.0);
        events.push_back(e);
      }
    }
  }
  braking_family(Scenario::kSVM);
  return events;
}

void ValidateEventSpec(const EventSpec& spec) {
  const bool lc = IsLaneChange(spec.scenario);
  const double expected_duration = lc ? 36.0 : 30.0;
  if (spec.duration != expected_duration) {
    throw std::invalid_argument("event " + std::to_string(spec.event_id) +
                                ": duration must be " +
                                std::to_string(expected_duration) + " s");
  }
  if (!(spec.initial_distance > 0.0)) {
    throw std::invalid_argument("initial_distance must be positive");
  }
  if (lc) {
    if (!spec.acc) throw std::invalid_argument("LC events need an ACC category");
    if (!spec.anchors.merge_onset) {
      throw std::invalid_argument("LC events need merge_onset");
    }
  } else {
    if (!(spec.braking_intensity < 0.0)) {
      throw std::invalid_argument("braking_intensity must be negative");
    }
    if (!(spec.cruise_speed_kmh > kHardBrakeFloorKmh)) {
      throw std::invalid_argument("cruise speed must exceed 60 km/h");
    }
    if (!spec.anchors.brake_onset || !spec.anchors.recovery_onset) {
      throw std::invalid_argument("braking events need brake and recovery onsets");
    }
    if (spec.scenario != Scenario::kHB && !spec.anchors.merge_onset) {
      throw std::invalid_argument("merging events need merge_onset");
    }
  }
  double previous = -1.0;
  for (const auto& anchor : {spec.anchors.merge_onset, spec.anchors.brake_onset,
                             spec.anchors.recovery_onset}) {
    if (!anchor) continue;
    if (!(*anchor > previous) || *anchor > spec.duration || *anchor < 0.0) {
      throw std::invalid_argument(
          "anchors must be strictly increasing within [0, duration]");
    }
    previous = *anchor;
  }
}

LateralCategory LateralCategoryOf(Scenario scenario) {
  switch (scenario) {
    case Scenario::kLCNormalSlow: return LateralCategory::kNormalSlow;
    case Scenario::kLCNormalFast: return LateralCategory::kNormalFast;
    case Scenario::kLCFragmented: return LateralCategory::kFragmented;
    case Scenario::kLCAborted: return LateralCategory::kAborted;
    default:
      throw std::invalid_argument("not a lane-change scenario: " +
                                  std::string(ScenarioName(scenario)));
  }
}

double LateralSpeed(LateralCategory category) {
  switch (category) {
    case LateralCategory::kNormalSlow:
    case LateralCategory::kAborted:
      return 1.0;
    case LateralCategory::kNormalFast:
    case LateralCategory::kFragmented:
      return 3.0;
  }
  throw std::invalid_argument("unknown lateral category");
}

AxisProfile LateralProfile(LateralCategory category, double onset,
                           double lane_width, double duration) {
  if (onset < 0.0 || onset > duration) {
    throw std::invalid_argument("lateral onset outside the event duration");
  }
  const int frames = StepsFor(duration) + 1;
  return Integrate(LateralAccelPlan(category, onset, lane_width, frames), 0.0, 0.0);
}

AxisProfile LongitudinalProfile(double cruise_speed_kmh, double brake,
                                const Anchors& anchors, double duration) {
  const int frames = StepsFor(duration) + 1;
  return Integrate(BrakingAccelPlan(cruise_speed_kmh, brake, anchors, frames),
                   0.0, cruise_speed_kmh * kKmh);
}

ControllerGains GainsFor(AccCategory category) {
  ControllerGains g;
  switch (category) {
    case AccCategory::kCautious:
      g.time_headway = 2.0;
      g.gap_gain = 0.08;
      g.speed_gain = 0.5;
      break;
    case AccCategory::kMild:
      break;
    case AccCategory::kAggressive:
      g.time_headway = 1.0;
      g.gap_gain = 0.18;
      g.speed_gain = 0.8;
      break;
  }
  return g;
}

double BumperGap(const VehicleState& rear, const VehicleState& front) {
  return front.x - rear.x - 0.5 * (rear.length + front.length);
}

EventTrajectory SimulateEvent(const EventSpec& spec) {
  ValidateEventSpec(spec);
  const int frames = spec.FrameCount();
  const double cruise = spec.cruise_speed_kmh * kKmh;
  const double overtake = kOvertakeSpeedKmh * kKmh;
  const double body = kVehicleLength;

  std::vector<Actor> actors;
  Actor subject = MakeActor(spec, 0, 0.0, 0.0, cruise);
  subject.controlled = true;
  subject.gains = GainsFor(spec.acc.value_or(AccCategory::kMild));
  subject.set_speed = cruise;
  subject.lane_keeping = true;

  switch (spec.scenario) {
    case Scenario::kMB: {
      const double t_merge = *spec.anchors.merge_onset;
      // Cut-in happens with the requested gap while the subject cruises freely.
      const double x0 = spec.initial_distance + body - overtake * t_merge;
      Actor merger = MakeActor(spec, 1, x0, -kLaneWidth, cruise + overtake);
      merger.ax_plan = BrakingAccelPlan(spec.cruise_speed_kmh,
                                        spec.braking_intensity, spec.anchors, frames);
      PlanSpeedChange(merger.ax_plan, StepsFor(t_merge), cruise + overtake,
                      cruise, kSettleDecel);
      std::vector<double> lateral =
          LateralAccelPlan(LateralCategory::kNormalSlow, t_merge, kLaneWidth, frames);
      for (int k = 0; k < frames; ++k) merger.ay_plan[k] = -lateral[k];
      subject.leader_candidates = {1};
      actors.push_back(std::move(subject));
      actors.push_back(std::move(merger));
      break;
    }
    case Scenario::kHB: {
      Actor lead = MakeActor(spec, 1, spec.initial_distance + body, 0.0, cruise);
      lead.ax_plan = BrakingAccelPlan(spec.cruise_speed_kmh,
                                      spec.braking_intensity, spec.anchors, frames);
      lead.lane_keeping = true;
      // The subject is already following at the requested gap, so its
      // headway is set to hold that gap until the lead brakes.
      subject.gains.time_headway =
          (spec.initial_distance - subject.gains.standstill_gap) / cruise;
      subject.leader_candidates = {1};
      actors.push_back(std::move(subject));
      actors.push_back(std::move(lead));
      break;
    }
    case Scenario::kSVM: {
      const double t_merge = *spec.anchors.merge_onset;
      subject.state.y = -kLaneWidth;
      std::vector<double> lateral =
          LateralAccelPlan(LateralCategory::kNormalSlow, t_merge, kLaneWidth, frames);
      for (int k = 0; k < frames; ++k) subject.ay_plan[k] = -lateral[k];
      subject.leader_candidates = {1, 2};

      Actor lead = MakeActor(spec, 1, spec.initial_distance + body, 0.0, cruise);
      lead.ax_plan = BrakingAccelPlan(spec.cruise_speed_kmh,
                                      spec.braking_intensity, spec.anchors, frames);
      lead.lane_keeping = true;

      Actor follower = MakeActor(spec, 2, -(kSvmFollowerGap + body), 0.0, cruise);
      follower.controlled = true;
      follower.gains = GainsFor(AccCategory::kAggressive);
      follower.set_speed = cruise;
      follower.leader_candidates = {0};
      follower.lane_keeping = true;

      actors.push_back(std::move(subject));
      actors.push_back(std::move(lead));
      actors.push_back(std::move(follower));
      break;
    }
    default: {
      const double t_merge = *spec.anchors.merge_onset;
      const double x0 = spec.initial_distance + body - overtake * t_merge;
      Actor changer = MakeActor(spec, 1, x0, kLaneWidth, cruise + overtake);
      PlanSpeedChange(changer.ax_plan, StepsFor(t_merge), cruise + overtake,
                      cruise, kSettleDecel);
      changer.ay_plan = LateralAccelPlan(LateralCategoryOf(spec.scenario),
                                         t_merge, kLaneWidth, frames);
      subject.leader_candidates = {1};
      actors.push_back(std::move(subject));
      actors.push_back(std::move(changer));
      break;
    }
  }
  return RunActors(spec, std::move(actors));
}

}  // namespace riskdecode
