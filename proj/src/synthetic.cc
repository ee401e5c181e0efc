#include "riskdecode/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "riskdecode/random.h"

namespace riskdecode {
namespace {

constexpr double kNearScale = 25.0;     // m
constexpr double kClosingScale = 40.0;  // m
constexpr double kLateralSoftness = 1.0;  // m
constexpr double kFollowerWeight = 0.6;

double NeighbourThreat(const VehicleState& s, const VehicleState& n) {
  const bool ahead = n.x >= s.x;
  const double gap = std::max(ahead ? BumperGap(s, n) : BumperGap(n, s), 0.0);
  const double closing = ahead ? s.vx - n.vx : n.vx - s.vx;
  const double lateral_clear = std::max(std::abs(n.y - s.y) - 0.5 * (s.width + n.width), 0.0);
  const double overlap =
      std::exp(-lateral_clear * lateral_clear / (2.0 * kLateralSoftness * kLateralSoftness));
  const double near = 8.0 * std::exp(-gap / kNearScale);
  const double approach =
      5.0 * std::clamp(closing / 6.0, 0.0, 1.0) * std::exp(-gap / kClosingScale);
  return overlap * (near + approach) * (ahead ? 1.0 : kFollowerWeight);
}

}  // namespace

std::vector<double> PlantedRisk(const EventTrajectory& trajectory, double lag) {
  if (!(lag > 0.0)) throw std::invalid_argument("planted risk lag must be > 0");
  std::vector<double> out;
  out.reserve(trajectory.frames.size());
  const double keep = std::exp(-trajectory.dt / lag);
  double level = 0.0;
  bool first = true;
  for (const Frame& f : trajectory.frames) {
    double raw = 0.0;
    for (const VehicleState& n : f.neighbours) raw = std::max(raw, NeighbourThreat(f.subject, n));
    level = first ? raw : keep * level + (1.0 - keep) * raw;
    first = false;
    out.push_back(std::clamp(level, 0.0, 10.0));
  }
  return out;
}

std::vector<RatingRecord> SyntheticRatings(const std::vector<EventTrajectory>& events,
                                           const AlignmentTable& table,
                                           const SyntheticConfig& config) {
  if (config.participants_per_event < 1) {
    throw std::invalid_argument("synthetic ratings need at least one participant");
  }
  Rng rng(config.seed);
  std::vector<RatingRecord> out;
  for (const EventTrajectory& e : events) {
    const std::vector<double> risk = PlantedRisk(e, config.lag);
    const auto& moments = table.MomentsFor(e.event_id);
    const int slots = table.SlotCount(e.event_id);

    // Planted value per clip: maximum over the clip's window.
    std::vector<double> clip_value(slots, 0.0);
    double window_start = 0.0;
    for (int slot = 1; slot <= slots; ++slot) {
      double window_end = window_start;
      for (const RatingMoment& m : moments) {
        if (m.slot == slot) window_end = std::max(window_end, m.time);
      }
      const int k0 = static_cast<int>(std::lround(window_start / e.dt));
      const int k1 = std::min(static_cast<int>(std::lround(window_end / e.dt)),
                              static_cast<int>(risk.size()) - 1);
      double best = 0.0;
      for (int k = k0; k <= k1; ++k) best = std::max(best, risk[k]);
      clip_value[slot - 1] = best;
      window_start = window_end;
    }

    for (int p = 1; p <= config.participants_per_event; ++p) {
      char id[32];
      std::snprintf(id, sizeof id, "e%03d_p%03d", e.event_id, p);
      const bool careless = rng.Uniform() < config.careless_fraction;
      const double bias = config.bias_sd * rng.Normal();
      for (int slot = 1; slot <= slots; ++slot) {
        int rating;
        if (careless) {
          rating = static_cast<int>(rng.Below(11));
        } else {
          const double v = clip_value[slot - 1] + bias + config.noise_sd * rng.Normal();
          rating = static_cast<int>(std::clamp(std::lround(v), 0L, 10L));
        }
        out.push_back({id, e.event_id, slot, rating});
      }
    }
  }
  return out;
}

}  // namespace riskdecode
