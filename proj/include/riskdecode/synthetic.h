#pragma once

#include <cstdint>
#include <vector>

#include "riskdecode/alignment.h"
#include "riskdecode/ratings.h"
#include "riskdecode/scenario.h"

namespace riskdecode {

// Stand-in for human ratings: a planted kinematic risk function, sampled per
// clip, shifted by a per-participant bias and integer-rounded with noise.
struct SyntheticConfig {
  int participants_per_event = 250;
  double careless_fraction = 0.05;  // raters answering uniformly at random
  double noise_sd = 0.5;
  double bias_sd = 0.3;
  double lag = 1.5;  // s, time constant of the perceived-risk response
  std::uint64_t seed = 1;
};

// Planted risk on the trajectory's frame grid, in [0, 10]. Proximity and
// closing speed of each neighbour, gated by lateral overlap, passed through
// a first-order lag.
std::vector<double> PlantedRisk(const EventTrajectory& trajectory, double lag = 1.5);

// Rating of clip i is the planted maximum between the previous clip's last
// moment and this clip's last moment. Participants are numbered per event.
std::vector<RatingRecord> SyntheticRatings(const std::vector<EventTrajectory>& events,
                                           const AlignmentTable& table,
                                           const SyntheticConfig& config);

}  // namespace riskdecode
