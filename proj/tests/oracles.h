#pragma once

// Reference computations written from the model definitions, independent of
// the library code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "riskdecode/random.h"

namespace oracle {

// Squared speed difference over the gap, zero while the gap opens.
inline double Drac(double v_s, double v_n, double gap, double gap_rate) {
  if (gap_rate >= 0.0) return 0.0;
  double g = gap;
  if (g < 0.1) g = 0.1;
  return (v_s - v_n) * (v_s - v_n) / g;
}

// Does the point moving from the origin with velocity w enter the box
// centred at (cx, cy) with half extents (hx, hy) for some t in [0, horizon]?
// Slab intersection in both axes.
inline bool Collides(double wx, double wy, double cx, double cy, double hx, double hy,
                     double horizon) {
  double lo = 0.0;
  double hi = horizon;
  auto slab = [&](double w, double c, double h) {
    const double a = c - h;
    const double b = c + h;
    if (w == 0.0) return a <= 0.0 && 0.0 <= b;
    double t0 = a / w;
    double t1 = b / w;
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    return lo <= hi;
  };
  return slab(wx, cx, hx) && slab(wy, cy, hy) && lo <= hi;
}

// Smallest change of w that avoids the box, by scanning candidate velocities
// along rays around w: a coarse radial walk finds the first safe sample on
// each ray and bisection sharpens it. Returns 0 when w itself is safe.
inline double BruteForceAvoidance(double wx, double wy, double cx, double cy, double hx,
                                  double hy, double horizon, int rays = 1440,
                                  double step = 0.05, double max_radius = 200.0) {
  if (!Collides(wx, wy, cx, cy, hx, hy, horizon)) return 0.0;
  double best = max_radius;
  for (int k = 0; k < rays; ++k) {
    const double a = 2.0 * std::numbers::pi * k / rays;
    const double ux = std::cos(a);
    const double uy = std::sin(a);
    double r = step;
    // A ray whose first safe sample lies past `best` can still cross the
    // boundary below it, so walk one step further before giving up.
    while (r < best + step && Collides(wx + r * ux, wy + r * uy, cx, cy, hx, hy, horizon)) {
      r += step;
    }
    if (r >= best + step) continue;
    double in = r - step;
    double out = r;
    for (int i = 0; i < 50; ++i) {
      const double mid = 0.5 * (in + out);
      if (Collides(wx + mid * ux, wy + mid * uy, cx, cy, hx, hy, horizon)) {
        in = mid;
      } else {
        out = mid;
      }
    }
    best = std::min(best, out);
  }
  return best;
}

// Random relative-motion case outside the box: centre within 60 m, half
// extents of two car footprints, relative velocity biased toward the box so
// roughly half the cases are on a collision course.
struct ConeCase {
  double wx, wy, cx, cy, hx, hy;
};

inline ConeCase RandomConeCase(riskdecode::Rng& rng) {
  ConeCase k{};
  k.hx = rng.Uniform(3.5, 5.5);
  k.hy = rng.Uniform(1.5, 2.5);
  do {
    k.cx = rng.Uniform(-60, 60);
    k.cy = rng.Uniform(-12, 12);
  } while (std::abs(k.cx) <= k.hx + 0.5 && std::abs(k.cy) <= k.hy + 0.5);
  const double speed = rng.Uniform(0.5, 25.0);
  const double aim = std::atan2(k.cy, k.cx) + rng.Uniform(-0.4, 0.4);
  k.wx = speed * std::cos(aim);
  k.wy = speed * std::sin(aim);
  return k;
}

// Driving-risk-field sum over every grid cell whose centre lies inside the
// neighbour footprint, scanning a fixed window rather than the footprint.
inline double DrfGridSum(double nx, double ny, double length, double width, double v,
                         double s, double t_la, double m, double c, double c_sev,
                         double dx, double dy) {
  const double preview = v * t_la;
  double sum = 0.0;
  for (int i = -400; i < 800; ++i) {
    const double x = (i + 0.5) * dx;
    if (x < nx - length / 2 || x >= nx + length / 2) continue;
    if (x < 0 || x >= preview) continue;
    for (int j = -200; j < 200; ++j) {
      const double y = (j + 0.5) * dy;
      if (y < ny - width / 2 || y >= ny + width / 2) continue;
      const double sig = m * x + c;
      sum += s * (x - preview) * (x - preview) * std::exp(-y * y / (2 * sig * sig));
    }
  }
  return sum * c_sev * dx * dy;
}

// Shapley values from the permutation definition: average marginal
// contribution over all D! orderings. Only for small D.
inline Eigen::VectorXd ShapleyByPermutations(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    const Eigen::VectorXd& baseline) {
  const int d = static_cast<int>(x.size());
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(d);
  long count = 0;
  do {
    Eigen::VectorXd z = baseline;
    double prev = f(z);
    for (int i : order) {
      z[i] = x[i];
      const double cur = f(z);
      phi[i] += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / static_cast<double>(count);
}

// 31-sample stimulus-decay curves: a baseline plus one or two alpha-function
// bumps (rise to a peak, smooth decay), capped at 10.
inline std::vector<std::vector<double>> StimulusDecayCurves(int count, std::uint64_t seed) {
  riskdecode::Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (int c = 0; c < count; ++c) {
    const double base = rng.Uniform(0.5, 2.0);
    const int bumps = rng.Uniform() < 0.5 ? 1 : 2;
    std::vector<double> truth(31, base);
    for (int b = 0; b < bumps; ++b) {
      const double onset = rng.Uniform(0.0, 20.0);
      const double amp = rng.Uniform(2.0, 6.0);
      const double tau = rng.Uniform(2.0, 4.0);
      const double k = rng.Uniform(2.0, 4.0);
      for (int i = 0; i < 31; ++i) {
        const double s = i - onset;
        if (s > 0) truth[i] += amp * std::pow(s / tau, k) * std::exp(k * (1.0 - s / tau));
      }
    }
    for (double& v : truth) v = std::min(v, 10.0);
    out.push_back(truth);
  }
  return out;
}

inline double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
