#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace riskdecode {

struct Anchor {
  double t = 0.0;
  double value = 0.0;
};

// Uniform 10 Hz risk series.
struct RiskCurve {
  double dt = 0.1;
  std::vector<double> t;
  std::vector<double> value;
};

// Piecewise cubic (or lower) polynomial in the local variable t - breaks[i].
// Evaluation outside [front, back] holds the end values.
class PiecewisePolynomial {
 public:
  struct Piece {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
  };

  PiecewisePolynomial() = default;
  PiecewisePolynomial(std::vector<double> breaks, std::vector<Piece> pieces);

  double operator()(double t) const;
  double Derivative(double t) const;
  const std::vector<double>& breaks() const { return breaks_; }

 private:
  std::size_t PieceIndex(double t) const;

  std::vector<double> breaks_;
  std::vector<Piece> pieces_;
};

enum class InterpMethod { kLinear, kQuadratic, kPchip };
std::string_view InterpMethodName(InterpMethod method);
InterpMethod ParseInterpMethod(std::string_view name);

// Drops repeated identical (t, value) pairs. Throws std::invalid_argument for
// decreasing times, a repeated time with two values, or fewer than 2 anchors.
std::vector<Anchor> NormalizeAnchors(std::span<const Anchor> anchors);

PiecewisePolynomial InterpLinear(std::span<const Anchor> anchors);

// C1 piecewise quadratic. Knot slopes follow the quadratic-spline recurrence
// and are zeroed where they would oppose a neighbouring secant; pieces whose
// end slopes no longer fit a single quadratic get one extra inner knot.
PiecewisePolynomial InterpQuadraticMonotone(std::span<const Anchor> anchors);

// Shape-preserving cubic Hermite. Slopes are zero at both ends and at every
// local extremum or flat-segment boundary ("pole").
PiecewisePolynomial InterpPchip(std::span<const Anchor> anchors);

PiecewisePolynomial Interpolate(InterpMethod method, std::span<const Anchor> anchors);

// Samples on the 10 Hz grid over [0, duration]. The quadratic method is
// clamped to [0, 10].
RiskCurve SampleCurve(const PiecewisePolynomial& poly, double duration,
                      bool clamp_to_scale = false);
RiskCurve InterpolateCurve(InterpMethod method, std::span<const Anchor> anchors,
                           double duration);

// Knots at samples 0, 6, 12, 18, 24, 30 of a 31-sample truth (unit spacing);
// returns the RMSE on the other 25 samples.
double CrossValidateInterp(InterpMethod method, std::span<const double> truth);

struct CurveSummary {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> p25;
  std::vector<double> p75;
  std::vector<double> std;  // population
};

// Nearest-rank quantile, q in [0, 1]. `values` need not be sorted.
double NearestRankQuantile(std::vector<double> values, double q);

// Pointwise statistics across curves on a common grid.
CurveSummary AggregateCurves(std::span<const RiskCurve> curves);

}  // namespace riskdecode
