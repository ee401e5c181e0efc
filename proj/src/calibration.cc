#include "riskdecode/calibration.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "riskdecode/random.h"

namespace riskdecode {
namespace {

constexpr double kHistogramBin = 0.25;
constexpr int kHistogramBins = 40;

template <typename Params>
double& Field(Params& params, std::string_view name);

template <>
double& Field(PcadParams& p, std::string_view name) {
  if (name == "sigma_n_x") return p.sigma_n_x;
  if (name == "sigma_n_y") return p.sigma_n_y;
  if (name == "sigma_s_x") return p.sigma_s_x;
  if (name == "sigma_s_y") return p.sigma_s_y;
  if (name == "t_s_a") return p.t_s_a;
  if (name == "t_n_a") return p.t_n_a;
  if (name == "alpha") return p.alpha;
  if (name == "v_lim") return p.v_lim;
  if (name == "horizon") return p.horizon;
  if (name == "overlap_cap") return p.overlap_cap;
  throw std::invalid_argument("unknown PCAD parameter: " + std::string(name));
}

template <>
double& Field(DrfParams& p, std::string_view name) {
  if (name == "s") return p.s;
  if (name == "t_la") return p.t_la;
  if (name == "m") return p.m;
  if (name == "c") return p.c;
  if (name == "C_sev") return p.C_sev;
  if (name == "grid_dx") return p.grid_dx;
  if (name == "grid_dy") return p.grid_dy;
  if (name == "D") return p.D;
  throw std::invalid_argument("unknown DRF parameter: " + std::string(name));
}

bool LogScale(const ParamBound& b) { return b.log_uniform && b.lower > 0.0; }

// Draw inside [lo, hi] given in the parameter's sampling scale.
double Draw(Rng& rng, const ParamBound& b, double lo, double hi) {
  const double u = rng.Uniform(lo, hi);
  return LogScale(b) ? std::exp(u) : u;
}

double ToScale(const ParamBound& b, double v) { return LogScale(b) ? std::log(v) : v; }

template <typename Params>
double ScoreDraw(const std::vector<EventTrajectory>& events,
                 const std::vector<double>& targets, const Params& params) {
  std::vector<double> raw;
  raw.reserve(targets.size());
  for (const EventTrajectory& e : events) {
    const std::vector<double> r = RawRiskSeries(e, params);
    raw.insert(raw.end(), r.begin(), r.end());
  }
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double min = *lo;
  const double span = *hi - *lo;
  if (!(span > 0.0) || !std::isfinite(span)) {
    return std::numeric_limits<double>::infinity();
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double d = (raw[i] - min) / span * 10.0 - targets[i];
    sum += d * d;
  }
  return std::sqrt(sum / raw.size());
}

}  // namespace

double Rmse(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size()) {
    throw std::invalid_argument("rmse: lengths differ (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(obs.size()) + ")");
  }
  if (pred.empty()) throw std::invalid_argument("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += (pred[i] - obs[i]) * (pred[i] - obs[i]);
  }
  return std::sqrt(sum / pred.size());
}

RescaleRange JointRange(std::span<const std::vector<double>> series) {
  RescaleRange r{std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity()};
  for (const auto& s : series) {
    for (double v : s) {
      r.min = std::min(r.min, v);
      r.max = std::max(r.max, v);
    }
  }
  return r;
}

std::vector<std::vector<double>> MinMaxRescale(std::span<const std::vector<double>> series) {
  const RescaleRange r = JointRange(series);
  if (!(r.max > r.min)) {
    throw std::invalid_argument("min-max rescale: outputs are constant");
  }
  std::vector<std::vector<double>> out;
  for (const auto& s : series) {
    std::vector<double> scaled(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      scaled[i] = (s[i] - r.min) / (r.max - r.min) * 10.0;
    }
    out.push_back(std::move(scaled));
  }
  return out;
}

std::vector<double> MinMaxRescale(std::span<const double> values) {
  std::vector<std::vector<double>> one{std::vector<double>(values.begin(), values.end())};
  return MinMaxRescale(std::span<const std::vector<double>>(one)).front();
}

std::string_view SearchStrategyName(SearchStrategy strategy) {
  return strategy == SearchStrategy::kUniform ? "uniform" : "refine";
}

SearchStrategy ParseSearchStrategy(std::string_view name) {
  if (name == "uniform") return SearchStrategy::kUniform;
  if (name == "refine") return SearchStrategy::kRefine;
  throw std::invalid_argument("unknown search strategy: " + std::string(name));
}

std::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kPcad ? "pcad" : "drf";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "pcad" || name == "PCAD") return ModelKind::kPcad;
  if (name == "drf" || name == "DRF") return ModelKind::kDrf;
  throw std::invalid_argument("unknown model: " + std::string(name));
}

std::vector<ParamBound> DefaultBounds(ModelKind kind) {
  if (kind == ModelKind::kPcad) {
    return {{"sigma_n_x", 0.0, 3.0, true}, {"sigma_n_y", 0.0, 3.0, true},
            {"sigma_s_x", 0.0, 3.0, true}, {"sigma_s_y", 0.0, 3.0, true},
            {"t_s_a", 0.0, 2.0, false},    {"t_n_a", 0.0, 2.0, false},
            {"alpha", 0.5, 4.0, false}};
  }
  return {{"s", 1e-4, 0.1, true},  {"t_la", 0.5, 5.0, false},
          {"m", 0.0, 0.01, false}, {"c", 0.1, 2.0, false},
          {"C_sev", 0.1, 10.0, true}};
}

void SetParam(PcadParams& params, std::string_view name, double value) {
  Field(params, name) = value;
}
double GetParam(const PcadParams& params, std::string_view name) {
  return Field(const_cast<PcadParams&>(params), name);
}
void SetParam(DrfParams& params, std::string_view name, double value) {
  Field(params, name) = value;
}
double GetParam(const DrfParams& params, std::string_view name) {
  return Field(const_cast<DrfParams&>(params), name);
}

std::vector<double> RawRiskSeries(const EventTrajectory& trajectory,
                                  const PcadParams& params) {
  std::vector<double> out;
  out.reserve(trajectory.frames.size());
  for (const Frame& f : trajectory.frames) out.push_back(PcadRisk(f, params));
  return out;
}

std::vector<double> RawRiskSeries(const EventTrajectory& trajectory,
                                  const DrfParams& params) {
  std::vector<double> out;
  out.reserve(trajectory.frames.size());
  for (const Frame& f : trajectory.frames) out.push_back(DrfRisk(f, params));
  return out;
}

CalibrationResult Calibrate(const CalibrationJob& job) {
  if (job.draws < 1) throw std::invalid_argument("calibration needs at least one draw");
  if (job.events == nullptr || job.targets == nullptr) {
    throw std::invalid_argument("calibration job has no events or targets");
  }
  if (job.events->size() != job.targets->size()) {
    throw std::invalid_argument("one target curve per event is required");
  }
  std::vector<double> targets;
  for (std::size_t i = 0; i < job.events->size(); ++i) {
    const auto& t = (*job.targets)[i];
    if (t.size() != (*job.events)[i].frames.size()) {
      throw std::invalid_argument("target curve for event " +
                                  std::to_string((*job.events)[i].event_id) +
                                  " does not match its frame count");
    }
    targets.insert(targets.end(), t.begin(), t.end());
  }
  for (const ParamBound& b : job.bounds) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
      throw std::invalid_argument("bad bounds for " + b.name);
    }
  }

  Rng rng(job.seed);
  const int uniform_draws = job.strategy == SearchStrategy::kUniform
                                ? job.draws
                                : std::max(1, job.draws / 2);
  const int rounds = std::max(1, job.refine_rounds);
  const int per_round = std::max(1, (job.draws - uniform_draws + rounds - 1) / rounds);
  CalibrationResult result;
  result.pcad = job.pcad_defaults;
  result.drf = job.drf_defaults;
  result.best_rmse = std::numeric_limits<double>::infinity();
  for (int draw = 0; draw < job.draws; ++draw) {
    PcadParams pcad = job.pcad_defaults;
    DrfParams drf = job.drf_defaults;
    CalibrationDraw record;
    record.index = draw;
    const int round = draw < uniform_draws ? 0 : 1 + (draw - uniform_draws) / per_round;
    for (std::size_t j = 0; j < job.bounds.size(); ++j) {
      const ParamBound& b = job.bounds[j];
      double value = job.kind == ModelKind::kPcad ? GetParam(pcad, b.name)
                                                  : GetParam(drf, b.name);
      double lo = ToScale(b, b.lower);
      double hi = ToScale(b, b.upper);
      if (round > 0) {
        const double centre = ToScale(b, result.trace[result.best_draw].values[j]);
        const double half = 0.5 * (hi - lo) * std::ldexp(1.0, -round);
        lo = std::max(lo, centre - half);
        hi = std::min(hi, centre + half);
      }
      if (draw > 0) value = Draw(rng, b, lo, hi);
      record.values.push_back(value);
      if (job.kind == ModelKind::kPcad) {
        SetParam(pcad, b.name, value);
      } else {
        SetParam(drf, b.name, value);
      }
    }
    record.rmse = job.kind == ModelKind::kPcad ? ScoreDraw(*job.events, targets, pcad)
                                               : ScoreDraw(*job.events, targets, drf);
    if (draw == 0) result.default_rmse = record.rmse;
    if (record.rmse < result.best_rmse) {
      result.best_rmse = record.rmse;
      result.best_draw = draw;
      result.pcad = pcad;
      result.drf = drf;
    }
    result.trace.push_back(std::move(record));
  }
  return result;
}

double LinearQuantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

ComparisonReport CompareModels(
    const std::vector<std::string>& scenarios,
    const std::vector<std::vector<double>>& truth,
    const std::map<std::string, std::vector<std::vector<double>>>& models) {
  if (scenarios.size() != truth.size()) {
    throw std::invalid_argument("one scenario label per truth series is required");
  }
  ComparisonReport report;
  std::vector<std::string> families = scenarios;
  std::sort(families.begin(), families.end());
  families.erase(std::unique(families.begin(), families.end()), families.end());

  for (const auto& [name, series] : models) {
    if (series.size() != truth.size()) {
      throw std::invalid_argument("model " + name + " has a different event count");
    }
    auto& errors = report.abs_error[name];
    std::map<std::string, std::vector<double>> by_family;
    std::vector<std::size_t> bins(kHistogramBins, 0);
    for (std::size_t e = 0; e < truth.size(); ++e) {
      if (series[e].size() != truth[e].size()) {
        throw std::invalid_argument("model " + name + " is off the truth grid for event #" +
                                    std::to_string(e));
      }
      std::vector<double> err(truth[e].size());
      for (std::size_t k = 0; k < err.size(); ++k) {
        err[k] = std::abs(series[e][k] - truth[e][k]);
        const int bin = std::min(kHistogramBins - 1,
                                 static_cast<int>(err[k] / kHistogramBin));
        ++bins[bin];
      }
      auto& fam = by_family[scenarios[e]];
      fam.insert(fam.end(), err.begin(), err.end());
      errors.push_back(std::move(err));
    }
    for (const std::string& family : families) {
      const auto& v = by_family[family];
      if (v.empty()) continue;
      report.summaries.push_back({family, name, LinearQuantile(v, 0.5),
                                  LinearQuantile(v, 0.25), LinearQuantile(v, 0.75),
                                  v.size()});
    }
    for (int b = 0; b < kHistogramBins; ++b) {
      report.histogram.push_back({name, b * kHistogramBin, bins[b]});
    }
  }
  return report;
}

}  // namespace riskdecode
