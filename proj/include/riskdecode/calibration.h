#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "riskdecode/drf.h"
#include "riskdecode/pcad.h"
#include "riskdecode/scenario.h"

namespace riskdecode {

// Throws std::invalid_argument on length mismatch or empty input.
double Rmse(std::span<const double> pred, std::span<const double> obs);

struct RescaleRange {
  double min = 0.0;
  double max = 0.0;
};

RescaleRange JointRange(std::span<const std::vector<double>> series);
// (y - min) / (max - min) * 10 for every series with one shared range.
// Throws std::invalid_argument when max == min.
std::vector<std::vector<double>> MinMaxRescale(std::span<const std::vector<double>> series);
std::vector<double> MinMaxRescale(std::span<const double> values);

enum class ModelKind { kPcad, kDrf };
std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

struct ParamBound {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  // Log-uniform draws are used for positive scale parameters.
  bool log_uniform = false;
};

std::vector<ParamBound> DefaultBounds(ModelKind kind);

// Named access to the tunable fields. Throws std::invalid_argument for
// unknown names.
void SetParam(PcadParams& params, std::string_view name, double value);
double GetParam(const PcadParams& params, std::string_view name);
void SetParam(DrfParams& params, std::string_view name, double value);
double GetParam(const DrfParams& params, std::string_view name);

// Raw model output per frame.
std::vector<double> RawRiskSeries(const EventTrajectory& trajectory,
                                  const PcadParams& params);
std::vector<double> RawRiskSeries(const EventTrajectory& trajectory,
                                  const DrfParams& params);

// kUniform spends every draw uniformly over the bounds. kRefine spends the
// first half that way and the rest in boxes around the incumbent that halve
// in width each round.
enum class SearchStrategy { kUniform, kRefine };
std::string_view SearchStrategyName(SearchStrategy strategy);
SearchStrategy ParseSearchStrategy(std::string_view name);

struct CalibrationJob {
  ModelKind kind = ModelKind::kPcad;
  SearchStrategy strategy = SearchStrategy::kRefine;
  int refine_rounds = 6;
  std::vector<ParamBound> bounds;
  int draws = 1000;
  std::uint64_t seed = 1;
  const std::vector<EventTrajectory>* events = nullptr;
  const std::vector<std::vector<double>>* targets = nullptr;  // per event
  PcadParams pcad_defaults;
  DrfParams drf_defaults;
};

struct CalibrationDraw {
  int index = 0;
  std::vector<double> values;  // in bound order
  double rmse = 0.0;           // +inf for degenerate (constant) outputs
};

struct CalibrationResult {
  PcadParams pcad;
  DrfParams drf;
  double best_rmse = 0.0;
  int best_draw = 0;
  double default_rmse = 0.0;
  std::vector<CalibrationDraw> trace;
};

// Draw 0 is the default record; later draws are independent per-parameter
// uniform (or log-uniform) samples inside the bounds or the current
// refinement box. Each draw is scored by RMSE after one joint min-max
// rescale over all events. Ties go to the lowest draw index.
CalibrationResult Calibrate(const CalibrationJob& job);

struct ErrorSummary {
  std::string scenario;
  std::string model;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::size_t count = 0;
};

struct HistogramBin {
  std::string model;
  double bin_lo = 0.0;
  std::size_t count = 0;
};

struct ComparisonReport {
  // model -> per event -> per frame absolute error
  std::map<std::string, std::vector<std::vector<double>>> abs_error;
  std::vector<ErrorSummary> summaries;  // per scenario family and model
  std::vector<HistogramBin> histogram;  // bin width 0.25
};

// Linearly interpolated quantile (q in [0, 1]) of unsorted values.
double LinearQuantile(std::vector<double> values, double q);

// `scenarios[i]` labels event i; every model series must match the truth grid.
ComparisonReport CompareModels(
    const std::vector<std::string>& scenarios,
    const std::vector<std::vector<double>>& truth,
    const std::map<std::string, std::vector<std::vector<double>>>& models);

}  // namespace riskdecode
