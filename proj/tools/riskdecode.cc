// riskdecode: command-line driver for the perceived-risk pipeline.
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "riskdecode/pipeline.h"

namespace {

using riskdecode::PipelineConfig;
using riskdecode::StageResult;

struct Flags {
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  std::string config;

  std::optional<std::string> ratings;
  std::optional<std::string> profile;
  bool synthetic = false;
  std::optional<int> participants;

  std::optional<std::string> interp;

  std::optional<int> draws;
  std::optional<std::string> search;
  std::optional<std::string> pcad_params;
  std::optional<std::string> drf_params;

  std::optional<int> epochs;
  std::optional<int> hidden;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::string> loss;
  std::optional<std::string> optimizer;

  std::optional<int> stride;
  std::optional<int> permutations;
};

PipelineConfig BuildConfig(const Flags& f) {
  PipelineConfig c;
  if (!f.config.empty()) c = riskdecode::LoadPipelineConfig(f.config, c);
  c.out_dir = f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.scenario) c.scenario = *f.scenario;
  if (f.ratings) c.ratings = *f.ratings;
  if (f.profile) c.ratings_profile = *f.profile;
  if (f.synthetic) c.synthetic = true;
  if (f.participants) c.synthetic_config.participants_per_event = *f.participants;
  if (f.interp) c.interp = riskdecode::ParseInterpMethod(*f.interp);
  if (f.draws) c.calibration_draws = *f.draws;
  if (f.search) c.search = riskdecode::ParseSearchStrategy(*f.search);
  if (f.pcad_params) c.pcad_params = *f.pcad_params;
  if (f.drf_params) c.drf_params = *f.drf_params;
  if (f.epochs) c.mlp.epochs = *f.epochs;
  if (f.hidden) c.mlp.hidden = *f.hidden;
  if (f.batch_size) c.mlp.batch_size = *f.batch_size;
  if (f.learning_rate) c.mlp.learning_rate = *f.learning_rate;
  if (f.loss) c.mlp.loss_mode = riskdecode::ParseLossMode(*f.loss);
  if (f.optimizer) c.mlp.optimizer = riskdecode::ParseOptimizer(*f.optimizer);
  if (f.stride) c.explain_stride = *f.stride;
  if (f.permutations) c.explain_permutations = *f.permutations;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perceived-risk pipeline: catalog, ratings, curves, models, attributions"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--out", f.out, "Output directory")->capture_default_str();
  app.add_option("--seed", f.seed, "Seed recorded in every artifact");
  app.add_option("--scenario", f.scenario,
                 "Restrict to a family (MB, HB, LC, SVM), network group or scenario");
  app.add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);

  using Stage = std::function<StageResult(const PipelineConfig&)>;
  std::map<CLI::App*, Stage> stages;
  auto add = [&](const char* name, const char* help, Stage stage) {
    CLI::App* sub = app.add_subcommand(name, help);
    stages[sub] = std::move(stage);
    return sub;
  };

  add("generate", "Simulate the event catalog", riskdecode::CmdGenerate);

  CLI::App* ingest = add("ingest", "Validate and filter ratings", riskdecode::CmdIngest);
  ingest->add_option("--ratings", f.ratings, "Ratings CSV (default $RISKDECODE_DATA_DIR/ratings.csv)");
  ingest->add_option("--profile", f.profile, "JSON column mapping for the ratings file");
  ingest->add_flag("--synthetic", f.synthetic, "Generate synthetic ratings and ingest them");
  ingest->add_option("--participants", f.participants, "Synthetic participants per event");

  CLI::App* reconstruct =
      add("reconstruct", "Continuous curves from clip ratings", riskdecode::CmdReconstruct);
  reconstruct->add_option("--interp", f.interp, "linear, quadratic or pchip");

  add("features", "Per-frame feature matrices and normalization", riskdecode::CmdFeatures);

  CLI::App* calibrate = add("calibrate", "Fit PCAD and DRF parameters", riskdecode::CmdCalibrate);
  calibrate->add_option("--draws", f.draws, "Parameter draws per model");
  calibrate->add_option("--search", f.search, "uniform or refine");
  calibrate->add_option("--pcad-params", f.pcad_params, "PCAD parameters used as draw 0");
  calibrate->add_option("--drf-params", f.drf_params, "DRF parameters used as draw 0");

  CLI::App* train = add("train", "Train one network per scenario group", riskdecode::CmdTrain);
  train->add_option("--epochs", f.epochs);
  train->add_option("--hidden", f.hidden);
  train->add_option("--batch-size", f.batch_size, "<= 0 for full batch");
  train->add_option("--lr", f.learning_rate);
  train->add_option("--loss", f.loss, "mse_mean or gaussian_nll");
  train->add_option("--optimizer", f.optimizer, "adam or sgd");

  add("predict", "Network predictions for every event", riskdecode::CmdPredict);

  CLI::App* explain = add("explain", "Shapley attributions", riskdecode::CmdExplain);
  explain->add_option("--stride", f.stride, "Explain every n-th frame");
  explain->add_option("--permutations", f.permutations, "Permutations per frame when sampling");

  add("report", "Plot-ready exports and model comparison", riskdecode::CmdReport);

  CLI::App* all = add("all", "Run every stage in order", riskdecode::RunAll);
  all->add_flag("--synthetic", f.synthetic, "Use synthetic ratings");
  all->add_option("--ratings", f.ratings, "Ratings CSV");
  all->add_option("--draws", f.draws, "Parameter draws per model");
  all->add_option("--epochs", f.epochs);
  all->add_option("--stride", f.stride, "Explain every n-th frame");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig config = BuildConfig(f);
    for (const auto& [sub, stage] : stages) {
      if (!sub->parsed()) continue;
      const StageResult r = stage(config);
      for (const std::string& line : r.log) std::printf("%s\n", line.c_str());
      std::printf("%zu files written to %s\n", r.written.size(), config.out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "riskdecode: %s\n", e.what());
    return 1;
  }
  return 0;
}
