#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace riskdecode {

// Scenario families of the event catalog. The LC family is split by lateral
// behaviour because each lateral category is trained as its own network.
enum class Scenario {
  kMB,
  kHB,
  kLCNormalSlow,
  kLCNormalFast,
  kLCFragmented,
  kLCAborted,
  kSVM,
};

enum class AccCategory { kCautious, kMild, kAggressive };

std::string_view ScenarioName(Scenario scenario);
Scenario ParseScenario(std::string_view name);
std::string_view AccCategoryName(AccCategory category);
AccCategory ParseAccCategory(std::string_view name);

bool IsLaneChange(Scenario scenario);

// Scenario family label used for reporting: "MB", "HB", "LC" or "SVM".
std::string_view ScenarioFamily(Scenario scenario);

// Name of the per-scenario network that owns events of this scenario:
// MB, HB, SVM, LC_normal, LC_fragmented or LC_aborted.
std::string_view NetworkGroup(Scenario scenario);

constexpr double kFrameDt = 0.1;
constexpr double kLaneWidth = 3.5;
constexpr double kVehicleLength = 4.5;
constexpr double kVehicleWidth = 2.0;
constexpr double kKmh = 1.0 / 3.6;

// Event-phase onset times in seconds. Absent entries are not used by the
// scenario family.
struct Anchors {
  std::optional<double> merge_onset;
  std::optional<double> brake_onset;
  std::optional<double> recovery_onset;
};

struct EventSpec {
  int event_id = 0;
  Scenario scenario = Scenario::kMB;
  double initial_distance = 0.0;    // m, bumper to bumper
  double cruise_speed_kmh = 0.0;    // km/h
  double braking_intensity = 0.0;   // m/s^2, negative; 0 for LC
  std::optional<AccCategory> acc;   // LC only
  double duration = 0.0;            // s
  Anchors anchors;

  int FrameCount() const;
};

struct VehicleState {
  double x = 0.0;   // m, forward positive
  double y = 0.0;   // m, left positive
  double vx = 0.0;
  double vy = 0.0;
  double ax = 0.0;  // acceleration held over [t, t + dt)
  double ay = 0.0;
  double length = kVehicleLength;
  double width = kVehicleWidth;
};

struct Frame {
  double t = 0.0;
  VehicleState subject;
  // MB/HB/LC: the interacting vehicle. SVM: lead first, follower second.
  std::vector<VehicleState> neighbours;
};

struct EventTrajectory {
  int event_id = 0;
  Scenario scenario = Scenario::kMB;
  double dt = kFrameDt;
  std::vector<Frame> frames;
};

// The 105-event catalog: 27 MB, 27 HB, 24 LC and 27 SVM events.
std::vector<EventSpec> EnumerateEvents();

// Default anchors for a scenario; recovery_onset depends on the braking
// phase, so cruise speed and intensity are needed.
Anchors DefaultAnchors(Scenario scenario, double cruise_speed_kmh,
                       double braking_intensity);

// Throws std::invalid_argument when the spec violates an EventSpec invariant.
void ValidateEventSpec(const EventSpec& spec);

enum class LateralCategory { kNormalSlow, kNormalFast, kFragmented, kAborted };
LateralCategory LateralCategoryOf(Scenario scenario);
double LateralSpeed(LateralCategory category);

// Sampled one-axis motion on the 10 Hz grid. accel[k] is held over
// [t[k], t[k+1]); position is the exact integral of velocity.
struct AxisProfile {
  std::vector<double> t;
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> accel;
};

// Lateral offset of a lane-changing vehicle, moving from y = 0 toward
// -lane_width starting at `onset`. Normal profiles cross the lane at the
// category's lateral speed; fragmented and aborted profiles hold the lane
// line for 6 s, after which fragmented completes and aborted returns.
AxisProfile LateralProfile(LateralCategory category, double onset,
                           double lane_width, double duration);

// Speed profile of a braking vehicle: cruise, constant deceleration down to
// 60 km/h, hold until recovery_onset, then accelerate back to cruise.
// Throws std::invalid_argument when brake >= 0, cruise <= 60 km/h, or the
// anchors leave no room for the braking phase.
AxisProfile LongitudinalProfile(double cruise_speed_kmh, double brake,
                                const Anchors& anchors, double duration);

// Time needed to brake from cruise to 60 km/h, rounded up to the frame grid.
double BrakingPhaseDuration(double cruise_speed_kmh, double brake);

// Gains of the subject's gap-and-speed controller.
struct ControllerGains {
  double time_headway = 1.5;  // s
  double standstill_gap = 2.0;
  double gap_gain = 0.12;     // 1/s^2
  double speed_gain = 0.6;    // 1/s, relative to the leader
  double cruise_gain = 0.3;   // 1/s, relative to the set speed
  double max_accel = 2.0;
  double max_decel = -9.0;
};

ControllerGains GainsFor(AccCategory category);

EventTrajectory SimulateEvent(const EventSpec& spec);

// Bumper-to-bumper longitudinal gap between two vehicles (may be negative).
double BumperGap(const VehicleState& rear, const VehicleState& front);

}  // namespace riskdecode
