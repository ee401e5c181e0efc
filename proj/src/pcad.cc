#include "riskdecode/pcad.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace riskdecode {
namespace {

double Cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

}  // namespace

UncertaintySigmas PcadParams::sigmas() const {
  return {sigma_s_x, sigma_s_y, sigma_n_x, sigma_n_y};
}

void PcadParams::Validate() const {
  if (sigma_n_x < 0 || sigma_n_y < 0 || sigma_s_x < 0 || sigma_s_y < 0) {
    throw std::invalid_argument("PCAD sigmas must be >= 0");
  }
  if (t_s_a < 0 || t_n_a < 0) {
    throw std::invalid_argument("PCAD accumulation times must be >= 0");
  }
  if (!(alpha > 0) || !(v_lim > 0) || !(horizon > 0)) {
    throw std::invalid_argument("PCAD alpha, v_lim and horizon must be > 0");
  }
}

Vec2 PerceivedVelocity(Vec2 v, Vec2 a, double t_a, Vec2 dv_u) {
  return {v.x + a.x * t_a + dv_u.x, v.y + a.y * t_a + dv_u.y};
}

double CollisionConeDistance(Vec2 w, Vec2 c, Vec2 h, double horizon) {
  const double scale = 1.0 / horizon;
  const std::array<Vec2, 4> corners = {Vec2{c.x - h.x, c.y - h.y},
                                       Vec2{c.x + h.x, c.y - h.y},
                                       Vec2{c.x + h.x, c.y + h.y},
                                       Vec2{c.x - h.x, c.y + h.y}};
  // Extreme corners as seen from the origin: every corner lies on the
  // counter-clockwise side of `right` and the clockwise side of `left`.
  Vec2 right = corners[0];
  Vec2 left = corners[0];
  for (const Vec2& p : corners) {
    if (Cross(right, p) < 0) right = p;
    if (Cross(left, p) > 0) left = p;
  }

  // Supporting lines of the cone: the two tangent rays plus the box edges
  // that face the origin, shrunk to the horizon. The cone is convex, so a
  // point inside is as far from the boundary as from the nearest line.
  const double right_side = Cross(right, w);
  const double left_side = Cross(w, left);
  if (right_side < 0 || left_side < 0) return 0.0;
  double dist = std::min(right_side / std::hypot(right.x, right.y),
                         left_side / std::hypot(left.x, left.y));

  auto facing_edge = [&](double lo, double hi, double wc) {
    if (lo > 0) {  // near edge at coordinate lo, cone lies beyond it
      const double depth = wc - scale * lo;
      if (depth < 0) return false;
      dist = std::min(dist, depth);
    } else if (hi < 0) {
      const double depth = scale * hi - wc;
      if (depth < 0) return false;
      dist = std::min(dist, depth);
    }
    return true;
  };
  if (!facing_edge(c.x - h.x, c.x + h.x, w.x)) return 0.0;
  if (!facing_edge(c.y - h.y, c.y + h.y, w.y)) return 0.0;
  return dist;
}

AvoidanceResult AvoidanceDifficulty(const Frame& frame, int neighbour_index,
                                    const PcadParams& params) {
  if (neighbour_index < 0 ||
      neighbour_index >= static_cast<int>(frame.neighbours.size())) {
    throw std::out_of_range("frame has no neighbour with index " +
                            std::to_string(neighbour_index));
  }
  const VehicleState& s = frame.subject;
  const VehicleState& n = frame.neighbours[neighbour_index];
  const Vec2 centre{n.x - s.x, n.y - s.y};
  const Vec2 half{0.5 * (s.length + n.length), 0.5 * (s.width + n.width)};
  if (std::abs(centre.x) <= half.x && std::abs(centre.y) <= half.y) {
    return {params.overlap_cap, true};
  }
  const Vec2 us = UncertainVelocity(s, n, params.sigma_s_x, params.sigma_s_y);
  const Vec2 un = UncertainVelocity(n, s, params.sigma_n_x, params.sigma_n_y);
  const Vec2 ps = PerceivedVelocity({s.vx, s.vy}, {s.ax, s.ay}, params.t_s_a, us);
  const Vec2 pn = PerceivedVelocity({n.vx, n.vy}, {n.ax, n.ay}, params.t_n_a, un);
  const Vec2 rel{ps.x - pn.x, ps.y - pn.y};
  return {CollisionConeDistance(rel, centre, half, params.horizon), false};
}

double PcadWeight(double v_s, const PcadParams& params) {
  const double ratio = std::clamp(std::abs(v_s) / params.v_lim, 0.0, 1.0);
  return std::pow(ratio, params.alpha);
}

double PcadRisk(const Frame& frame, const PcadParams& params, bool* overlap) {
  const double weight =
      PcadWeight(std::hypot(frame.subject.vx, frame.subject.vy), params);
  double risk = 0.0;
  bool touched = false;
  for (int i = 0; i < static_cast<int>(frame.neighbours.size()); ++i) {
    const AvoidanceResult a = AvoidanceDifficulty(frame, i, params);
    touched = touched || a.overlap;
    risk = std::max(risk, a.difficulty * weight);
  }
  if (overlap != nullptr) *overlap = touched;
  return risk;
}

}  // namespace riskdecode
