#include "riskdecode/interpolation.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace riskdecode {
namespace {

constexpr double kGridDt = 0.1;

std::vector<double> Secants(const std::vector<Anchor>& a) {
  std::vector<double> m(a.size() - 1);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    m[i] = (a[i + 1].value - a[i].value) / (a[i + 1].t - a[i].t);
  }
  return m;
}

bool Opposes(double slope, double secant) { return slope * secant < 0.0; }

}  // namespace

PiecewisePolynomial::PiecewisePolynomial(std::vector<double> breaks,
                                         std::vector<Piece> pieces)
    : breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
  if (breaks_.size() < 2 || pieces_.size() + 1 != breaks_.size()) {
    throw std::invalid_argument("piecewise polynomial needs n+1 breaks for n pieces");
  }
}

std::size_t PiecewisePolynomial::PieceIndex(double t) const {
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  std::size_t i = it == breaks_.begin() ? 0 : (it - breaks_.begin()) - 1;
  return std::min(i, pieces_.size() - 1);
}

double PiecewisePolynomial::operator()(double t) const {
  t = std::clamp(t, breaks_.front(), breaks_.back());
  const std::size_t i = PieceIndex(t);
  const Piece& p = pieces_[i];
  const double s = t - breaks_[i];
  return p.c0 + s * (p.c1 + s * (p.c2 + s * p.c3));
}

double PiecewisePolynomial::Derivative(double t) const {
  if (t < breaks_.front() || t > breaks_.back()) return 0.0;
  const std::size_t i = PieceIndex(t);
  const Piece& p = pieces_[i];
  const double s = t - breaks_[i];
  return p.c1 + s * (2.0 * p.c2 + s * 3.0 * p.c3);
}

std::string_view InterpMethodName(InterpMethod method) {
  switch (method) {
    case InterpMethod::kLinear: return "linear";
    case InterpMethod::kQuadratic: return "quadratic";
    case InterpMethod::kPchip: return "pchip";
  }
  return "?";
}

InterpMethod ParseInterpMethod(std::string_view name) {
  for (InterpMethod m :
       {InterpMethod::kLinear, InterpMethod::kQuadratic, InterpMethod::kPchip}) {
    if (InterpMethodName(m) == name) return m;
  }
  throw std::invalid_argument("unknown interpolation method: " + std::string(name));
}

std::vector<Anchor> NormalizeAnchors(std::span<const Anchor> anchors) {
  std::vector<Anchor> out;
  for (const Anchor& a : anchors) {
    if (!std::isfinite(a.t) || !std::isfinite(a.value)) {
      throw std::invalid_argument("anchors must be finite");
    }
    if (!out.empty()) {
      const Anchor& last = out.back();
      if (a.t < last.t) {
        throw std::invalid_argument("anchor times must not decrease (t=" +
                                    std::to_string(a.t) + ")");
      }
      if (a.t == last.t) {
        if (a.value != last.value) {
          throw std::invalid_argument("two different values at t=" +
                                      std::to_string(a.t));
        }
        continue;
      }
    }
    out.push_back(a);
  }
  if (out.size() < 2) throw std::invalid_argument("need at least 2 distinct anchors");
  return out;
}

PiecewisePolynomial InterpLinear(std::span<const Anchor> anchors) {
  const std::vector<Anchor> a = NormalizeAnchors(anchors);
  const std::vector<double> m = Secants(a);
  std::vector<double> breaks;
  std::vector<PiecewisePolynomial::Piece> pieces;
  for (std::size_t i = 0; i < a.size(); ++i) breaks.push_back(a[i].t);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    pieces.push_back({a[i].value, m[i], 0.0, 0.0});
  }
  return {std::move(breaks), std::move(pieces)};
}

PiecewisePolynomial InterpQuadraticMonotone(std::span<const Anchor> anchors) {
  const std::vector<Anchor> a = NormalizeAnchors(anchors);
  const std::vector<double> m = Secants(a);
  const std::size_t n = a.size();

  // Knot slopes: the C1 recurrence d[i+1] = 2 m[i] - d[i], with any slope
  // that points against an adjacent secant (or sits next to a flat one) set
  // to zero before the recurrence continues.
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double next = 2.0 * m[i] - d[i];
    const bool has_right = i + 1 < n - 1;
    if (Opposes(next, m[i]) || m[i] == 0.0 ||
        (has_right && (Opposes(next, m[i + 1]) || m[i + 1] == 0.0))) {
      next = 0.0;
    }
    d[i + 1] = next;
  }

  std::vector<double> breaks{a[0].t};
  std::vector<PiecewisePolynomial::Piece> pieces;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = a[i + 1].t - a[i].t;
    const double d0 = d[i];
    const double d1 = d[i + 1];
    if (std::abs(d0 + d1 - 2.0 * m[i]) <= 1e-12 * std::max(1.0, std::abs(m[i]))) {
      pieces.push_back({a[i].value, d0, (d1 - d0) / (2.0 * h), 0.0});
      breaks.push_back(a[i + 1].t);
      continue;
    }
    // One inner knot at offset `k`; the slope there keeps the piece's rise.
    double k = 0.5 * h;
    double mid = (2.0 * m[i] * h - k * d0 - (h - k) * d1) / h;
    if (Opposes(mid, m[i]) && d0 != d1) {
      const double flat_k = h * (2.0 * m[i] - d1) / (d0 - d1);
      if (flat_k > 0.0 && flat_k < h) {
        k = flat_k;
        mid = 0.0;
      }
    }
    const double v_mid = a[i].value + 0.5 * k * (d0 + mid);
    pieces.push_back({a[i].value, d0, (mid - d0) / (2.0 * k), 0.0});
    pieces.push_back({v_mid, mid, (d1 - mid) / (2.0 * (h - k)), 0.0});
    breaks.push_back(a[i].t + k);
    breaks.push_back(a[i + 1].t);
  }
  return {std::move(breaks), std::move(pieces)};
}

PiecewisePolynomial InterpPchip(std::span<const Anchor> anchors) {
  const std::vector<Anchor> a = NormalizeAnchors(anchors);
  const std::vector<double> m = Secants(a);
  const std::size_t n = a.size();

  std::vector<double> d(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double left = m[k - 1];
    const double right = m[k];
    if (left * right <= 0.0) continue;  // pole: extremum or flat boundary
    const double h0 = a[k].t - a[k - 1].t;
    const double h1 = a[k + 1].t - a[k].t;
    const double w1 = 2.0 * h1 + h0;
    const double w2 = h1 + 2.0 * h0;
    d[k] = (w1 + w2) / (w1 / left + w2 / right);
  }

  std::vector<double> breaks;
  std::vector<PiecewisePolynomial::Piece> pieces;
  for (std::size_t i = 0; i < n; ++i) breaks.push_back(a[i].t);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = a[i + 1].t - a[i].t;
    pieces.push_back({a[i].value, d[i], (3.0 * m[i] - 2.0 * d[i] - d[i + 1]) / h,
                      (d[i] + d[i + 1] - 2.0 * m[i]) / (h * h)});
  }
  return {std::move(breaks), std::move(pieces)};
}

PiecewisePolynomial Interpolate(InterpMethod method,
                                std::span<const Anchor> anchors) {
  switch (method) {
    case InterpMethod::kLinear: return InterpLinear(anchors);
    case InterpMethod::kQuadratic: return InterpQuadraticMonotone(anchors);
    case InterpMethod::kPchip: return InterpPchip(anchors);
  }
  throw std::invalid_argument("unknown interpolation method");
}

RiskCurve SampleCurve(const PiecewisePolynomial& poly, double duration,
                      bool clamp_to_scale) {
  const int n = static_cast<int>(std::lround(duration / kGridDt)) + 1;
  RiskCurve c;
  c.dt = kGridDt;
  c.t.resize(n);
  c.value.resize(n);
  for (int k = 0; k < n; ++k) {
    c.t[k] = k * kGridDt;
    double v = poly(c.t[k]);
    if (clamp_to_scale) v = std::clamp(v, 0.0, 10.0);
    c.value[k] = v;
  }
  return c;
}

RiskCurve InterpolateCurve(InterpMethod method, std::span<const Anchor> anchors,
                           double duration) {
  return SampleCurve(Interpolate(method, anchors), duration,
                     method == InterpMethod::kQuadratic);
}

double CrossValidateInterp(InterpMethod method, std::span<const double> truth) {
  if (truth.size() != 31) {
    throw std::invalid_argument("cross-validation truth needs 31 samples, got " +
                                std::to_string(truth.size()));
  }
  std::vector<Anchor> knots;
  for (int i = 0; i <= 30; i += 6) knots.push_back({double(i), truth[i]});
  const PiecewisePolynomial poly = Interpolate(method, knots);
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i <= 30; ++i) {
    if (i % 6 == 0) continue;
    double v = poly(i);
    if (method == InterpMethod::kQuadratic) v = std::clamp(v, 0.0, 10.0);
    sum += (v - truth[i]) * (v - truth[i]);
    ++count;
  }
  return std::sqrt(sum / count);
}

double NearestRankQuantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q * values.size());
  const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  return values[std::min(idx, values.size() - 1)];
}

CurveSummary AggregateCurves(std::span<const RiskCurve> curves) {
  if (curves.empty()) throw std::invalid_argument("no curves to aggregate");
  const std::size_t n = curves.front().t.size();
  for (const RiskCurve& c : curves) {
    if (c.t.size() != n || c.value.size() != n) {
      throw std::invalid_argument("curves are on different grids");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(c.t[k] - curves.front().t[k]) > 1e-9) {
        throw std::invalid_argument("curves are on different grids");
      }
    }
  }
  CurveSummary s;
  s.t = curves.front().t;
  s.mean.resize(n);
  s.p25.resize(n);
  s.p75.resize(n);
  s.std.resize(n);
  std::vector<double> column(curves.size());
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
      column[i] = curves[i].value[k];
      sum += column[i];
    }
    const double mean = sum / column.size();
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    s.mean[k] = mean;
    s.std[k] = std::sqrt(var / column.size());
    s.p25[k] = NearestRankQuantile(column, 0.25);
    s.p75[k] = NearestRankQuantile(column, 0.75);
  }
  return s;
}

}  // namespace riskdecode
