#pragma once

#include "riskdecode/features.h"
#include "riskdecode/scenario.h"

namespace riskdecode {

struct PcadParams {
  double sigma_n_x = 0.3;  // m/s
  double sigma_n_y = 0.3;
  double sigma_s_x = 0.3;
  double sigma_s_y = 0.3;
  double t_s_a = 0.5;  // s, acceleration look-ahead of the subject
  double t_n_a = 0.5;
  double alpha = 2.0;
  double v_lim = 120.0 * kKmh;
  double horizon = 10.0;      // s, only collisions within this time count
  double overlap_cap = 30.0;  // reported difficulty for touching footprints

  UncertaintySigmas sigmas() const;
  // Throws std::invalid_argument on negative sigmas/times or
  // non-positive alpha, v_lim or horizon.
  void Validate() const;
};

// v + a * t_a + dv_u, per axis.
Vec2 PerceivedVelocity(Vec2 v, Vec2 a, double t_a, Vec2 dv_u);

// Smallest change of `rel_velocity` that leaves the collision cone of an
// axis-aligned box centred at `centre` (relative to the origin) with the
// given half extents, counting only contact within `horizon` seconds.
// Returns 0 when no contact happens; the box must not contain the origin.
double CollisionConeDistance(Vec2 rel_velocity, Vec2 centre, Vec2 half_extent,
                             double horizon);

struct AvoidanceResult {
  double difficulty = 0.0;  // m/s
  bool overlap = false;
};

AvoidanceResult AvoidanceDifficulty(const Frame& frame, int neighbour_index,
                                    const PcadParams& params);

// (|v_s| / v_lim)^alpha, with the ratio clamped to [0, 1].
double PcadWeight(double v_s, const PcadParams& params);

// Maximum over neighbours of difficulty times weight. `overlap` is set when
// any pair touches.
double PcadRisk(const Frame& frame, const PcadParams& params,
                bool* overlap = nullptr);

}  // namespace riskdecode
