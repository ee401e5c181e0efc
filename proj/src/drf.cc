#include "riskdecode/drf.h"

#include <cmath>
#include <stdexcept>

namespace riskdecode {

void DrfParams::Validate() const {
  if (!(t_la > 0) || !(c > 0) || !(grid_dx > 0) || !(grid_dy > 0)) {
    throw std::invalid_argument("DRF t_la, c and grid steps must be > 0");
  }
}

double DrfWidth(double x, const DrfParams& params) { return params.m * x + params.c; }

double DrfProbability(double x, double y, double v_sx, const DrfParams& params) {
  const double preview = v_sx * params.t_la;
  if (x < 0.0 || x >= preview) return 0.0;
  const double height = params.s * (x - preview) * (x - preview);
  const double width = DrfWidth(x, params);
  return height * std::exp(-y * y / (2.0 * width * width));
}

double DrfNeighbourRisk(const VehicleState& subject, const VehicleState& neighbour,
                        const DrfParams& params) {
  const double dx = params.grid_dx;
  const double dy = params.grid_dy;
  const double x_lo = neighbour.x - subject.x - 0.5 * neighbour.length;
  const double x_hi = x_lo + neighbour.length;
  const double y_lo = neighbour.y - subject.y - 0.5 * neighbour.width;
  const double y_hi = y_lo + neighbour.width;
  const double preview = subject.vx * params.t_la;
  if (x_hi <= 0.0 || x_lo >= preview) return 0.0;

  // Cell i covers [i*dx, (i+1)*dx); its centre must lie in [lo, hi).
  const long i0 = static_cast<long>(std::ceil(x_lo / dx - 0.5));
  const long i1 = static_cast<long>(std::ceil(x_hi / dx - 0.5));
  const long j0 = static_cast<long>(std::ceil(y_lo / dy - 0.5));
  const long j1 = static_cast<long>(std::ceil(y_hi / dy - 0.5));
  double sum = 0.0;
  for (long i = i0; i < i1; ++i) {
    const double x = (i + 0.5) * dx;
    for (long j = j0; j < j1; ++j) {
      sum += DrfProbability(x, (j + 0.5) * dy, subject.vx, params);
    }
  }
  return sum * params.C_sev * dx * dy;
}

double DrfRisk(const Frame& frame, const DrfParams& params) {
  double risk = 0.0;
  for (const VehicleState& n : frame.neighbours) {
    risk += DrfNeighbourRisk(frame.subject, n, params);
  }
  return risk;
}

}  // namespace riskdecode
