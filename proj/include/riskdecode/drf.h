#pragma once

#include "riskdecode/scenario.h"

namespace riskdecode {

struct DrfParams {
  double s = 0.0064;     // height scale of the parabola
  double t_la = 3.5;     // s, preview time
  double m = 0.001;      // widening rate of the Gaussian
  double c = 0.5;        // m, width at the subject
  double C_sev = 1.0;    // collision severity
  double grid_dx = 0.5;  // m
  double grid_dy = 0.25;
  double D = 0.0;        // reserved, not used by the field

  // Throws std::invalid_argument when t_la, c or the grid steps are <= 0.
  void Validate() const;
};

// Lateral spread of the field at distance x ahead: m * x + c.
double DrfWidth(double x, const DrfParams& params);

// Field value at (x, y) relative to the subject centre, x forward. Zero
// behind the subject and at or beyond the preview distance v_sx * t_la.
double DrfProbability(double x, double y, double v_sx, const DrfParams& params);

// Sum of field * severity * cell area over grid cells whose centres fall in
// the neighbour's footprint.
double DrfNeighbourRisk(const VehicleState& subject, const VehicleState& neighbour,
                        const DrfParams& params);

// Summed over all neighbours.
double DrfRisk(const Frame& frame, const DrfParams& params);

}  // namespace riskdecode
