#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskdecode/calibration.h"
#include "riskdecode/interpolation.h"
#include "riskdecode/mlp.h"
#include "riskdecode/synthetic.h"

namespace riskdecode {

// Raised when a stage runs before the stage that produces its input.
class MissingDependency : public std::runtime_error {
 public:
  MissingDependency(const std::string& stage, const std::filesystem::path& artifact,
                    const std::string& producer);
  const std::string& artifact() const { return artifact_; }
  const std::string& producer() const { return producer_; }

 private:
  std::string artifact_;
  std::string producer_;
};

struct PipelineConfig {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  // Empty selects every event. Accepts a family (MB, HB, LC, SVM), a network
  // group (LC_normal, ...) or a scenario name (LC_normal_slow, ...).
  std::string scenario;

  // ingest
  std::filesystem::path ratings;  // empty: RISKDECODE_DATA_DIR/ratings.csv
  std::filesystem::path ratings_profile;
  bool synthetic = false;
  SyntheticConfig synthetic_config;
  double filter_threshold = 0.3;

  // reconstruct
  InterpMethod interp = InterpMethod::kPchip;

  // features: network group -> ordered names
  std::map<std::string, std::vector<std::string>> manifest_overrides;

  // calibrate; parameter files seed the default record (draw 0)
  std::filesystem::path pcad_params;
  std::filesystem::path drf_params;
  int calibration_draws = 1000;
  SearchStrategy search = SearchStrategy::kRefine;
  int refine_rounds = 6;

  // train; input_dim and seed are filled per network
  MlpConfig mlp;

  // explain
  int explain_stride = 10;
  int explain_permutations = 64;
};

// Overlays the keys present in a JSON config file onto `base`.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path, PipelineConfig base);

bool ScenarioSelected(const std::string& selection, Scenario scenario);

struct StageResult {
  std::vector<std::filesystem::path> written;  // relative to out_dir
  std::vector<std::string> log;
};

// generate: events.json, trajectories/event_NNN.csv
StageResult CmdGenerate(const PipelineConfig& config);
// ingest: ratings.csv (filtered), dataset_index.json; with `synthetic` also
// synthetic_ratings.csv, which is then ingested like any other file.
StageResult CmdIngest(const PipelineConfig& config);
// reconstruct: curves.csv
StageResult CmdReconstruct(const PipelineConfig& config);
// features: manifest.json, features/event_NNN.csv, normstats.json (fit on
// the rows each network will train on)
StageResult CmdFeatures(const PipelineConfig& config);
// calibrate: params_pcad.json, params_drf.json, calibration_{pcad,drf}.csv,
// risk/event_NNN.csv
StageResult CmdCalibrate(const PipelineConfig& config);
// train: models/<group>.json, models/<group>_training.csv
StageResult CmdTrain(const PipelineConfig& config);
// predict: predictions.csv
StageResult CmdPredict(const PipelineConfig& config);
// explain: shap.csv, globals.csv
StageResult CmdExplain(const PipelineConfig& config);
// report: report/*.csv, report/summary.json, outputs.json
StageResult CmdReport(const PipelineConfig& config);

// Every stage in order.
StageResult RunAll(const PipelineConfig& config);

}  // namespace riskdecode
