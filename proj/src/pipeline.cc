#include "riskdecode/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "riskdecode/alignment.h"
#include "riskdecode/features.h"
#include "riskdecode/io.h"
#include "riskdecode/ratings.h"
#include "riskdecode/shap.h"

namespace riskdecode {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads the files a stage depends on and keeps a running hash of their bytes
// for the provenance header of everything the stage writes.
class StageIo {
 public:
  StageIo(const PipelineConfig& config, std::string stage)
      : config_(config), stage_(std::move(stage)) {
    inputs_ = Fnv1a(stage_);
  }

  fs::path Path(const fs::path& rel) const { return config_.out_dir / rel; }

  std::string Read(const fs::path& rel, const std::string& producer) {
    const fs::path p = Path(rel);
    if (!fs::exists(p)) throw MissingDependency(stage_, rel, producer);
    return ReadExternal(p);
  }

  std::string ReadExternal(const fs::path& p) {
    std::string text = ReadTextFile(p);
    inputs_ = Fnv1a(text, inputs_);
    return text;
  }

  json ReadJson(const fs::path& rel, const std::string& producer) {
    const std::string text = Read(rel, producer);
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("bad JSON in " + Path(rel).string() + ": " + e.what());
    }
  }

  void Mix(std::string_view extra) { inputs_ = Fnv1a(extra, inputs_); }

  Provenance provenance() const { return {config_.seed, inputs_}; }

  void WriteText(const fs::path& rel, const std::string& body) {
    WriteTextFile(Path(rel), CsvHeaderLine(provenance()) + body);
    result.written.push_back(rel);
  }

  void WriteJson(const fs::path& rel, json value) {
    value["_header"] = JsonHeader(provenance());
    WriteJsonFile(Path(rel), value);
    result.written.push_back(rel);
  }

  void Log(const std::string& line) { result.log.push_back(line); }

  StageResult result;

 private:
  const PipelineConfig& config_;
  std::string stage_;
  std::uint64_t inputs_ = 0;
};

std::string EventFile(int event_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "event_%03d.csv", event_id);
  return buf;
}

// Column lookup over a parsed CSV with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
  std::string source;

  std::size_t Col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw std::invalid_argument(source + ": missing column '" + name + "'");
    }
    return it - header.begin();
  }
};

Table ParseTable(std::string_view text, const std::string& source) {
  std::vector<CsvRow> rows = ParseCsv(text);
  if (rows.empty()) throw std::invalid_argument(source + ": no header row");
  Table t;
  t.source = source;
  t.header = rows.front().cells;
  t.rows.assign(rows.begin() + 1, rows.end());
  for (const CsvRow& r : t.rows) {
    if (r.cells.size() != t.header.size()) {
      throw std::invalid_argument(source + ":" + std::to_string(r.line) +
                                  ": wrong number of cells");
    }
  }
  return t;
}

std::vector<EventSpec> LoadEvents(StageIo& io, const PipelineConfig& config) {
  const json j = io.ReadJson("events.json", "generate");
  std::vector<EventSpec> events;
  for (const json& e : j.at("events")) {
    EventSpec spec = EventSpecFromJson(e);
    if (ScenarioSelected(config.scenario, spec.scenario)) events.push_back(spec);
  }
  if (events.empty()) {
    throw std::runtime_error("no events in events.json match scenario '" +
                             config.scenario + "'");
  }
  return events;
}

EventTrajectory LoadTrajectory(StageIo& io, const EventSpec& spec) {
  const std::string text = io.Read(fs::path("trajectories") / EventFile(spec.event_id),
                                   "generate");
  EventTrajectory tr = ParseTrajectoryCsv(text, spec.event_id, spec.scenario);
  if (static_cast<int>(tr.frames.size()) != spec.FrameCount()) {
    throw std::runtime_error("trajectory for event " + std::to_string(spec.event_id) +
                             " has " + std::to_string(tr.frames.size()) + " frames, expected " +
                             std::to_string(spec.FrameCount()));
  }
  return tr;
}

// Mean curve per event from curves.csv.
std::map<int, std::vector<double>> LoadCurveMeans(StageIo& io) {
  const Table t = ParseTable(io.Read("curves.csv", "reconstruct"), "curves.csv");
  const std::size_t c_event = t.Col("event_id");
  const std::size_t c_mean = t.Col("mean");
  std::map<int, std::vector<double>> out;
  for (const CsvRow& r : t.rows) {
    out[static_cast<int>(ParseInt(r.cells[c_event], "curves.csv event_id"))].push_back(
        ParseDouble(r.cells[c_mean], "curves.csv mean"));
  }
  return out;
}

const std::vector<double>& CurveFor(const std::map<int, std::vector<double>>& curves,
                                    const EventSpec& spec) {
  const auto it = curves.find(spec.event_id);
  if (it == curves.end()) {
    throw std::runtime_error("curves.csv has no curve for event " +
                             std::to_string(spec.event_id) + " (no ratings survived ingest?)");
  }
  if (static_cast<int>(it->second.size()) != spec.FrameCount()) {
    throw std::runtime_error("curve for event " + std::to_string(spec.event_id) +
                             " does not match its frame count");
  }
  return it->second;
}

Eigen::MatrixXd LoadFeatures(StageIo& io, const EventSpec& spec,
                             const std::vector<std::string>& names) {
  const std::string rel = (fs::path("features") / EventFile(spec.event_id)).string();
  const Table t = ParseTable(io.Read(rel, "features"), rel);
  if (t.header != names) {
    throw std::runtime_error(rel + ": columns do not match manifest.json");
  }
  Eigen::MatrixXd m(t.rows.size(), names.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      m(r, c) = ParseDouble(t.rows[r].cells[c], rel);
    }
  }
  return m;
}

// Events grouped by network, in event order.
std::map<std::string, std::vector<EventSpec>> ByGroup(const std::vector<EventSpec>& events) {
  std::map<std::string, std::vector<EventSpec>> out;
  for (const EventSpec& e : events) out[std::string(NetworkGroup(e.scenario))].push_back(e);
  return out;
}

std::uint64_t GroupSeed(std::uint64_t seed, const std::string& group) {
  return Fnv1a(group, seed * 0x9E3779B97F4A7C15ULL + 1);
}

struct LoadedModel {
  std::vector<std::string> features;
  NormStats stats;
  Eigen::VectorXd baseline;
  MlpWeights weights;
};

LoadedModel LoadModel(StageIo& io, const std::string& group) {
  const json j = io.ReadJson(fs::path("models") / (group + ".json"), "train");
  LoadedModel m;
  m.features = j.at("features").get<std::vector<std::string>>();
  m.stats = NormStatsFromJson(j.at("normstats"));
  const auto base = j.at("baseline").get<std::vector<double>>();
  m.baseline = Eigen::Map<const Eigen::VectorXd>(base.data(), base.size());
  m.weights = MlpWeightsFromJson(j.at("weights"));
  if (m.weights.input_dim() != static_cast<int>(m.features.size())) {
    throw std::runtime_error("model " + group + " does not match its feature list");
  }
  return m;
}

std::map<std::string, std::vector<std::string>> LoadManifest(StageIo& io) {
  const json j = io.ReadJson("manifest.json", "features");
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [group, names] : j.at("groups").items()) {
    out[group] = names.get<std::vector<std::string>>();
  }
  return out;
}

std::string EpochLine(int epoch, double train, double val) {
  return std::to_string(epoch) + "," + Fmt6(train) + "," + Fmt6(val) + "\n";
}

}  // namespace

MissingDependency::MissingDependency(const std::string& stage, const fs::path& artifact,
                                     const std::string& producer)
    : std::runtime_error(stage + " needs " + artifact.string() + "; run '" + producer +
                         "' first"),
      artifact_(artifact.string()),
      producer_(producer) {}

PipelineConfig LoadPipelineConfig(const fs::path& path, PipelineConfig c) {
  const json j = ReadJsonFile(path);
  const fs::path dir = path.parent_path();
  auto rel = [&](const std::string& v) { return fs::path(v).is_absolute() ? fs::path(v) : dir / v; };
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("scenario")) c.scenario = j.at("scenario").get<std::string>();
  if (j.contains("ratings")) c.ratings = rel(j.at("ratings").get<std::string>());
  if (j.contains("ratings_profile")) {
    c.ratings_profile = rel(j.at("ratings_profile").get<std::string>());
  }
  if (j.contains("filter_threshold")) c.filter_threshold = j.at("filter_threshold").get<double>();
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    c.synthetic = s.value("enabled", c.synthetic);
    SyntheticConfig& sc = c.synthetic_config;
    sc.participants_per_event = s.value("participants_per_event", sc.participants_per_event);
    sc.careless_fraction = s.value("careless_fraction", sc.careless_fraction);
    sc.noise_sd = s.value("noise_sd", sc.noise_sd);
    sc.bias_sd = s.value("bias_sd", sc.bias_sd);
    sc.lag = s.value("lag", sc.lag);
  }
  if (j.contains("interp")) c.interp = ParseInterpMethod(j.at("interp").get<std::string>());
  if (j.contains("manifests")) {
    for (const auto& [group, names] : j.at("manifests").items()) {
      c.manifest_overrides[group] = names.get<std::vector<std::string>>();
    }
  }
  if (j.contains("pcad_params")) c.pcad_params = rel(j.at("pcad_params").get<std::string>());
  if (j.contains("drf_params")) c.drf_params = rel(j.at("drf_params").get<std::string>());
  if (j.contains("calibration")) {
    const json& k = j.at("calibration");
    c.calibration_draws = k.value("draws", c.calibration_draws);
    if (k.contains("search")) c.search = ParseSearchStrategy(k.at("search").get<std::string>());
    c.refine_rounds = k.value("refine_rounds", c.refine_rounds);
  }
  if (j.contains("mlp")) {
    const std::uint64_t seed = c.mlp.seed;
    c.mlp = MlpConfigFromJson(j.at("mlp"));
    c.mlp.seed = seed;
  }
  if (j.contains("explain")) {
    c.explain_stride = j.at("explain").value("stride", c.explain_stride);
    c.explain_permutations = j.at("explain").value("permutations", c.explain_permutations);
  }
  return c;
}

bool ScenarioSelected(const std::string& selection, Scenario scenario) {
  return selection.empty() || selection == ScenarioFamily(scenario) ||
         selection == NetworkGroup(scenario) || selection == ScenarioName(scenario);
}

StageResult CmdGenerate(const PipelineConfig& config) {
  StageIo io(config, "generate");
  json events = json::array();
  std::vector<EventSpec> selected;
  for (const EventSpec& spec : EnumerateEvents()) {
    if (!ScenarioSelected(config.scenario, spec.scenario)) continue;
    events.push_back(EventSpecToJson(spec));
    selected.push_back(spec);
  }
  if (selected.empty()) throw std::runtime_error("no events match scenario '" + config.scenario + "'");
  io.Mix(events.dump());
  io.WriteJson("events.json", {{"events", events}});
  for (const EventSpec& spec : selected) {
    const EventTrajectory tr = SimulateEvent(spec);
    const fs::path rel = fs::path("trajectories") / EventFile(spec.event_id);
    WriteTextFile(io.Path(rel), TrajectoryCsv(tr, io.provenance()));
    io.result.written.push_back(rel);
  }
  io.Log("generated " + std::to_string(selected.size()) + " events");
  return io.result;
}

StageResult CmdIngest(const PipelineConfig& config) {
  StageIo io(config, "ingest");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  const AlignmentTable& table = PackagedAlignmentTable();
  std::map<int, int> clip_counts;
  for (const EventSpec& e : events) clip_counts[e.event_id] = table.SlotCount(e.event_id);

  fs::path source = config.ratings;
  std::string source_label;
  if (config.synthetic) {
    std::vector<EventTrajectory> trajectories;
    for (const EventSpec& e : events) trajectories.push_back(LoadTrajectory(io, e));
    SyntheticConfig sc = config.synthetic_config;
    sc.seed = config.seed;
    const std::vector<RatingRecord> records = SyntheticRatings(trajectories, table, sc);
    const std::string text = RatingsCsv(records, io.provenance());
    WriteTextFile(io.Path("synthetic_ratings.csv"), text);
    io.result.written.push_back("synthetic_ratings.csv");
    source = io.Path("synthetic_ratings.csv");
    // Relative, so the index does not depend on where the output lives.
    source_label = "synthetic_ratings.csv";
  } else if (source.empty()) {
    const char* dir = std::getenv("RISKDECODE_DATA_DIR");
    if (dir == nullptr || *dir == '\0') {
      throw std::runtime_error(
          "ingest needs a ratings file: pass --ratings, --synthetic, or set RISKDECODE_DATA_DIR");
    }
    source = fs::path(dir) / "ratings.csv";
  }
  if (source_label.empty()) source_label = source.string();
  RatingsProfile profile;
  fs::path profile_path = config.ratings_profile;
  // A profile.json next to a dataset found through the environment is used.
  if (profile_path.empty() && !config.synthetic && config.ratings.empty()) {
    const fs::path candidate = source.parent_path() / "profile.json";
    if (fs::exists(candidate)) profile_path = candidate;
  }
  if (!profile_path.empty()) {
    profile = RatingsProfileFromJson(json::parse(io.ReadExternal(profile_path)));
  }

  const std::string text = io.ReadExternal(source);
  // Events outside the selection are not errors; they are simply not ours.
  std::map<int, int> all_counts = clip_counts;
  for (const EventSpec& e : EnumerateEvents()) {
    all_counts.emplace(e.event_id, table.SlotCount(e.event_id));
  }
  ParsedRatings parsed = ParseRatingsCsv(text, source.string(), all_counts, profile);

  std::map<int, std::vector<RatingRecord>> per_event;
  for (RatingRecord& r : parsed.records) {
    if (clip_counts.count(r.event_id)) per_event[r.event_id].push_back(std::move(r));
  }

  json index_events = json::array();
  std::map<std::string, long> per_scenario;
  std::set<std::string> participants;
  std::vector<RatingRecord> retained_all;
  long valid_total = 0;
  long incomplete_total = 0;
  for (const EventSpec& e : events) {
    auto it = per_event.find(e.event_id);
    if (it == per_event.end()) continue;
    const int clips = clip_counts.at(e.event_id);
    // Only complete clip sequences can be correlated with the mean.
    std::map<std::string, int> seen;
    for (const RatingRecord& r : it->second) ++seen[r.participant_id];
    std::vector<RatingRecord> complete;
    for (const RatingRecord& r : it->second) {
      if (seen[r.participant_id] == clips) {
        complete.push_back(r);
      } else {
        ++incomplete_total;
      }
    }
    valid_total += static_cast<long>(complete.size());
    if (complete.empty()) continue;
    FilterResult f = FilterRatings(complete, clips, config.filter_threshold);
    const std::string family(ScenarioFamily(e.scenario));
    per_scenario[family] += static_cast<long>(f.retained.size());
    for (const RatingRecord& r : f.retained) participants.insert(r.participant_id);
    index_events.push_back({{"event_id", e.event_id},
                            {"retained", f.retained.size()},
                            {"dropped_participants", f.dropped},
                            {"single_participant", f.single_participant}});
    retained_all.insert(retained_all.end(), f.retained.begin(), f.retained.end());
  }
  std::sort(retained_all.begin(), retained_all.end(),
            [](const RatingRecord& a, const RatingRecord& b) {
              return std::tie(a.event_id, a.participant_id, a.clip_index) <
                     std::tie(b.event_id, b.participant_id, b.clip_index);
            });

  json invalid = json::array();
  for (const RatingsIssue& issue : parsed.invalid) {
    invalid.push_back({{"line", issue.line}, {"message", issue.message}});
  }
  long total = 0;
  for (const auto& [k, v] : per_scenario) total += v;
  WriteTextFile(io.Path("ratings.csv"), RatingsCsv(retained_all, io.provenance()));
  io.result.written.push_back("ratings.csv");
  io.WriteJson("dataset_index.json", {{"source", source_label},
                                      {"valid_ratings", valid_total},
                                      {"incomplete_ratings", incomplete_total},
                                      {"invalid_rows", invalid},
                                      {"retained_ratings", total},
                                      {"per_scenario", per_scenario},
                                      {"participants", participants.size()},
                                      {"events", index_events}});
  io.Log("ingested " + std::to_string(total) + " ratings after filtering (" +
         std::to_string(parsed.invalid.size()) + " invalid rows)");
  for (const RatingsIssue& issue : parsed.invalid) {
    io.Log(source.string() + ":" + std::to_string(issue.line) + ": " + issue.message);
    if (io.result.log.size() > 20) break;
  }
  return io.result;
}

StageResult CmdReconstruct(const PipelineConfig& config) {
  StageIo io(config, "reconstruct");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  const Table t = ParseTable(io.Read("ratings.csv", "ingest"), "ratings.csv");
  const std::size_t c_pid = t.Col("participant_id");
  const std::size_t c_event = t.Col("event_id");
  const std::size_t c_clip = t.Col("clip_index");
  const std::size_t c_rating = t.Col("rating");
  // event -> participant -> clip ratings
  std::map<int, std::map<std::string, std::vector<double>>> ratings;
  for (const CsvRow& r : t.rows) {
    const int event = static_cast<int>(ParseInt(r.cells[c_event], "ratings.csv event_id"));
    const int clip = static_cast<int>(ParseInt(r.cells[c_clip], "ratings.csv clip_index"));
    auto& seq = ratings[event][r.cells[c_pid]];
    if (static_cast<int>(seq.size()) < clip) seq.resize(clip, 0.0);
    seq[clip - 1] = static_cast<double>(ParseInt(r.cells[c_rating], "ratings.csv rating"));
  }
  const AlignmentTable& table = PackagedAlignmentTable();
  std::string body = "event_id,t,mean,p25,p75,std\n";
  int curves = 0;
  for (const EventSpec& e : events) {
    const auto it = ratings.find(e.event_id);
    if (it == ratings.end()) {
      io.Log("event " + std::to_string(e.event_id) + ": no ratings, no curve");
      continue;
    }
    std::vector<RiskCurve> per_participant;
    for (const auto& [pid, seq] : it->second) {
      const std::vector<Anchor> anchors = AlignRatings(e.event_id, seq, table);
      per_participant.push_back(InterpolateCurve(config.interp, anchors, e.duration));
    }
    const CurveSummary s = AggregateCurves(per_participant);
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      body += std::to_string(e.event_id) + "," + Fmt6(s.t[k]) + "," + Fmt6(s.mean[k]) + "," +
              Fmt6(s.p25[k]) + "," + Fmt6(s.p75[k]) + "," + Fmt6(s.std[k]) + "\n";
    }
    ++curves;
  }
  io.WriteText("curves.csv", body);
  io.Log("reconstructed " + std::to_string(curves) + " curves with " +
         std::string(InterpMethodName(config.interp)));
  return io.result;
}

StageResult CmdFeatures(const PipelineConfig& config) {
  StageIo io(config, "features");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  const UncertaintySigmas sigmas;
  json groups = json::object();
  json stats = json::object();
  std::vector<std::pair<fs::path, std::string>> files;
  for (const auto& [group, members] : ByGroup(events)) {
    FeatureManifest manifest = DefaultManifest(members.front().scenario);
    if (const auto it = config.manifest_overrides.find(group);
        it != config.manifest_overrides.end()) {
      manifest.names = it->second;
    }
    ValidateManifest(manifest);
    io.Mix(group);
    for (const std::string& n : manifest.names) io.Mix(n);
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index rows = 0;
    for (const EventSpec& e : members) {
      const EventTrajectory tr = LoadTrajectory(io, e);
      blocks.push_back(BuildFeatures(tr, manifest, sigmas));
      rows += blocks.back().rows();
    }
    Eigen::MatrixXd all(rows, manifest.dim());
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Eigen::MatrixXd& m = blocks[i];
      all.middleRows(at, m.rows()) = m;
      at += m.rows();
      std::string body;
      for (int c = 0; c < manifest.dim(); ++c) body += (c ? "," : "") + manifest.names[c];
      body += '\n';
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < manifest.dim(); ++c) body += (c ? "," : "") + Fmt6(m(r, c));
        body += '\n';
      }
      files.emplace_back(fs::path("features") / EventFile(members[i].event_id), body);
    }
    groups[group] = manifest.names;
    // Same rows the network for this group will train on.
    const RowSplit split = SplitRows(static_cast<int>(rows), config.mlp.train_fraction,
                                     GroupSeed(config.seed, group));
    Eigen::MatrixXd train(split.train.size(), all.cols());
    for (std::size_t r = 0; r < split.train.size(); ++r) train.row(r) = all.row(split.train[r]);
    stats[group] = NormStatsToJson(ZScoreFit(train, manifest.names));
    io.Log(group + ": " + std::to_string(rows) + " frames x " +
           std::to_string(manifest.dim()) + " features");
  }
  io.WriteJson("manifest.json", {{"groups", groups}});
  io.WriteJson("normstats.json", {{"groups", stats}});
  for (const auto& [rel, body] : files) io.WriteText(rel, body);
  return io.result;
}

StageResult CmdCalibrate(const PipelineConfig& config) {
  StageIo io(config, "calibrate");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  const auto curves = LoadCurveMeans(io);
  std::vector<EventTrajectory> trajectories;
  std::vector<std::vector<double>> targets;
  for (const EventSpec& e : events) {
    trajectories.push_back(LoadTrajectory(io, e));
    targets.push_back(CurveFor(curves, e));
  }
  PcadParams pcad_default;
  DrfParams drf_default;
  if (!config.pcad_params.empty()) {
    pcad_default = PcadParamsFromJson(json::parse(io.ReadExternal(config.pcad_params)));
  }
  if (!config.drf_params.empty()) {
    drf_default = DrfParamsFromJson(json::parse(io.ReadExternal(config.drf_params)));
  }

  PcadParams pcad_best;
  DrfParams drf_best;
  for (ModelKind kind : {ModelKind::kPcad, ModelKind::kDrf}) {
    CalibrationJob job;
    job.kind = kind;
    job.strategy = config.search;
    job.refine_rounds = config.refine_rounds;
    job.bounds = DefaultBounds(kind);
    job.draws = config.calibration_draws;
    job.seed = GroupSeed(config.seed, std::string(ModelKindName(kind)));
    job.events = &trajectories;
    job.targets = &targets;
    job.pcad_defaults = pcad_default;
    job.drf_defaults = drf_default;
    const CalibrationResult r = Calibrate(job);
    const std::string name(ModelKindName(kind));
    std::string trace = "draw";
    for (const ParamBound& b : job.bounds) trace += "," + b.name;
    trace += ",rmse\n";
    for (const CalibrationDraw& d : r.trace) {
      trace += std::to_string(d.index);
      for (double v : d.values) trace += "," + Fmt6(v);
      trace += "," + Fmt6(d.rmse) + "\n";
    }
    io.WriteText("calibration_" + name + ".csv", trace);
    const json params = kind == ModelKind::kPcad ? PcadParamsToJson(r.pcad) : DrfParamsToJson(r.drf);
    io.WriteJson("params_" + name + ".json",
                 {{"model", name},
                  {"params", params},
                  {"best_rmse", r.best_rmse},
                  {"best_draw", r.best_draw},
                  {"default_rmse", r.default_rmse},
                  {"draws", job.draws},
                  {"search", std::string(SearchStrategyName(job.strategy))}});
    if (kind == ModelKind::kPcad) {
      pcad_best = r.pcad;
    } else {
      drf_best = r.drf;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%s: best rmse %.4f at draw %d (default %.4f)",
                  name.c_str(), r.best_rmse, r.best_draw, r.default_rmse);
    io.Log(line);
  }
  for (const EventTrajectory& tr : trajectories) {
    const std::vector<double> p = RawRiskSeries(tr, pcad_best);
    const std::vector<double> d = RawRiskSeries(tr, drf_best);
    std::string body = "t,pcad_raw,drf_raw\n";
    for (std::size_t k = 0; k < tr.frames.size(); ++k) {
      body += Fmt6(tr.frames[k].t) + "," + Fmt6(p[k]) + "," + Fmt6(d[k]) + "\n";
    }
    io.WriteText(fs::path("risk") / EventFile(tr.event_id), body);
  }
  return io.result;
}

StageResult CmdTrain(const PipelineConfig& config) {
  StageIo io(config, "train");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  const auto manifest = LoadManifest(io);
  const auto curves = LoadCurveMeans(io);
  for (const auto& [group, members] : ByGroup(events)) {
    const auto mit = manifest.find(group);
    if (mit == manifest.end()) {
      throw MissingDependency("train", "manifest.json[" + group + "]", "features");
    }
    const std::vector<std::string>& names = mit->second;
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<double> y;
    Eigen::Index rows = 0;
    for (const EventSpec& e : members) {
      blocks.push_back(LoadFeatures(io, e, names));
      const std::vector<double>& c = CurveFor(curves, e);
      if (static_cast<Eigen::Index>(c.size()) != blocks.back().rows()) {
        throw std::runtime_error("event " + std::to_string(e.event_id) +
                                 ": feature rows and curve samples differ");
      }
      y.insert(y.end(), c.begin(), c.end());
      rows += blocks.back().rows();
    }
    Eigen::MatrixXd x(rows, names.size());
    Eigen::Index at = 0;
    for (const Eigen::MatrixXd& b : blocks) {
      x.middleRows(at, b.rows()) = b;
      at += b.rows();
    }
    MlpConfig mc = config.mlp;
    mc.input_dim = static_cast<int>(names.size());
    mc.seed = GroupSeed(config.seed, group);
    // The network's normalization comes from its training rows only.
    const RowSplit split = SplitRows(static_cast<int>(rows), mc.train_fraction, mc.seed);
    Eigen::MatrixXd x_train(split.train.size(), x.cols());
    for (std::size_t i = 0; i < split.train.size(); ++i) x_train.row(i) = x.row(split.train[i]);
    const NormStats stats = ZScoreFit(x_train, names);
    const Eigen::MatrixXd xn = ZScoreApply(x, stats);
    const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
    const TrainedMlp trained = MlpTrain(xn, target, mc);

    Eigen::VectorXd baseline = Eigen::VectorXd::Zero(names.size());
    for (int r : trained.report.train_rows) baseline += xn.row(r).transpose();
    baseline /= static_cast<double>(trained.report.train_rows.size());
    std::vector<double> base(baseline.data(), baseline.data() + baseline.size());

    std::string curve = "epoch,train_rmse,val_rmse\n";
    for (std::size_t ep = 0; ep < trained.report.train_rmse.size(); ++ep) {
      curve += EpochLine(static_cast<int>(ep) + 1, trained.report.train_rmse[ep],
                         trained.report.val_rmse[ep]);
    }
    io.WriteText(fs::path("models") / (group + "_training.csv"), curve);
    io.WriteJson(fs::path("models") / (group + ".json"),
                 {{"group", group},
                  {"features", names},
                  {"config", MlpConfigToJson(mc)},
                  {"normstats", NormStatsToJson(stats)},
                  {"baseline", base},
                  {"final_train_rmse", trained.report.final_train_rmse},
                  {"final_val_rmse", trained.report.final_val_rmse},
                  {"train_rows", trained.report.train_rows.size()},
                  {"val_rows", trained.report.val_rows.size()},
                  {"weights", MlpWeightsToJson(trained.weights)}});
    char line[160];
    std::snprintf(line, sizeof line, "%s: %lld rows, train rmse %.4f, validation rmse %.4f",
                  group.c_str(), static_cast<long long>(rows),
                  trained.report.final_train_rmse, trained.report.final_val_rmse);
    io.Log(line);
  }
  return io.result;
}

StageResult CmdPredict(const PipelineConfig& config) {
  StageIo io(config, "predict");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  std::string body = "event_id,t,mean,variance\n";
  for (const auto& [group, members] : ByGroup(events)) {
    const LoadedModel model = LoadModel(io, group);
    for (const EventSpec& e : members) {
      const Eigen::MatrixXd x = ZScoreApply(LoadFeatures(io, e, model.features), model.stats);
      const MlpPrediction p = MlpPredict(model.weights, x);
      for (std::size_t k = 0; k < p.mean.size(); ++k) {
        body += std::to_string(e.event_id) + "," + Fmt6(k * kFrameDt) + "," + Fmt6(p.mean[k]) +
                "," + Fmt6(p.variance[k]) + "\n";
      }
    }
  }
  io.WriteText("predictions.csv", body);
  io.Log("predicted " + std::to_string(events.size()) + " events");
  return io.result;
}

StageResult CmdExplain(const PipelineConfig& config) {
  if (config.explain_stride < 1 || config.explain_permutations < 1) {
    throw std::invalid_argument("explain stride and permutations must be >= 1");
  }
  StageIo io(config, "explain");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  std::string shap = "event_id,t,feature,phi,feature_value,std_err\n";
  std::string globals = "scenario,feature,mean_abs_phi,rank\n";
  for (const auto& [group, members] : ByGroup(events)) {
    const LoadedModel model = LoadModel(io, group);
    const BatchModel f = [&model](const Eigen::MatrixXd& rows) {
      return MlpMeanBatch(model.weights, rows);
    };
    const int dim = static_cast<int>(model.features.size());
    const bool exact = dim <= kMaxExactShapDim;
    std::vector<Eigen::VectorXd> phis;
    for (const EventSpec& e : members) {
      const Eigen::MatrixXd raw = LoadFeatures(io, e, model.features);
      const Eigen::MatrixXd xn = ZScoreApply(raw, model.stats);
      for (Eigen::Index k = 0; k < xn.rows(); k += config.explain_stride) {
        const Eigen::VectorXd x = xn.row(k).transpose();
        const ShapRow row =
            exact ? ShapExact(f, x, model.baseline)
                  : ShapSampled(f, x, model.baseline, config.explain_permutations,
                                GroupSeed(config.seed, group) ^
                                    (static_cast<std::uint64_t>(e.event_id) << 20 | k));
        phis.push_back(row.phi);
        for (int c = 0; c < dim; ++c) {
          shap += std::to_string(e.event_id) + "," + Fmt6(k * kFrameDt) + "," +
                  model.features[c] + "," + Fmt6(row.phi[c]) + "," + Fmt6(raw(k, c)) + "," +
                  Fmt6(row.std_err[c]) + "\n";
        }
      }
    }
    Eigen::MatrixXd all(phis.size(), dim);
    for (std::size_t i = 0; i < phis.size(); ++i) all.row(i) = phis[i].transpose();
    for (const FeatureImportance& fi : GlobalImportance(all, model.features)) {
      globals += group + "," + fi.feature + "," + Fmt6(fi.mean_abs_phi) + "," +
                 std::to_string(fi.rank) + "\n";
    }
    io.Log(group + ": " + std::to_string(phis.size()) + " frames explained (" +
           (exact ? "exact" : "sampled") + ")");
  }
  io.WriteText("shap.csv", shap);
  io.WriteText("globals.csv", globals);
  return io.result;
}

StageResult CmdReport(const PipelineConfig& config) {
  StageIo io(config, "report");
  const std::vector<EventSpec> events = LoadEvents(io, config);
  const Table pred = ParseTable(io.Read("predictions.csv", "predict"), "predictions.csv");
  const Table curves_t = ParseTable(io.Read("curves.csv", "reconstruct"), "curves.csv");

  std::map<int, std::vector<double>> mlp;
  {
    const std::size_t c_event = pred.Col("event_id");
    const std::size_t c_mean = pred.Col("mean");
    for (const CsvRow& r : pred.rows) {
      mlp[static_cast<int>(ParseInt(r.cells[c_event], "predictions.csv"))].push_back(
          ParseDouble(r.cells[c_mean], "predictions.csv"));
    }
  }
  std::map<int, std::vector<double>> truth_by_event;
  std::string band = "scenario,event_id,t,mean,p25,p75,std\n";
  std::map<int, std::string> family_of;
  for (const EventSpec& e : events) family_of[e.event_id] = ScenarioFamily(e.scenario);
  {
    const std::size_t c_event = curves_t.Col("event_id");
    const std::size_t c_mean = curves_t.Col("mean");
    for (const CsvRow& r : curves_t.rows) {
      const int id = static_cast<int>(ParseInt(r.cells[c_event], "curves.csv"));
      if (!family_of.count(id)) continue;
      truth_by_event[id].push_back(ParseDouble(r.cells[c_mean], "curves.csv"));
      band += family_of[id];
      for (const std::string& cell : r.cells) band += "," + cell;
      band += "\n";
    }
  }

  std::vector<std::string> scenarios;
  std::vector<std::vector<double>> truth;
  std::vector<std::vector<double>> pcad_raw;
  std::vector<std::vector<double>> drf_raw;
  std::vector<std::vector<double>> mlp_series;
  std::vector<int> ids;
  for (const EventSpec& e : events) {
    const std::string rel = (fs::path("risk") / EventFile(e.event_id)).string();
    const Table risk = ParseTable(io.Read(rel, "calibrate"), rel);
    std::vector<double> p;
    std::vector<double> d;
    for (const CsvRow& r : risk.rows) {
      p.push_back(ParseDouble(r.cells[risk.Col("pcad_raw")], rel));
      d.push_back(ParseDouble(r.cells[risk.Col("drf_raw")], rel));
    }
    if (!mlp.count(e.event_id)) {
      throw std::runtime_error("predictions.csv has no rows for event " +
                               std::to_string(e.event_id));
    }
    ids.push_back(e.event_id);
    scenarios.push_back(family_of[e.event_id]);
    truth.push_back(CurveFor(truth_by_event, e));
    pcad_raw.push_back(std::move(p));
    drf_raw.push_back(std::move(d));
    mlp_series.push_back(mlp.at(e.event_id));
  }
  std::map<std::string, std::vector<std::vector<double>>> models;
  models["PCAD"] = MinMaxRescale(std::span<const std::vector<double>>(pcad_raw));
  models["DRF"] = MinMaxRescale(std::span<const std::vector<double>>(drf_raw));
  models["MLP"] = mlp_series;
  const ComparisonReport report = CompareModels(scenarios, truth, models);

  std::string comparison = "scenario,model,median,q1,q3\n";
  json summary = json::object();
  for (const ErrorSummary& s : report.summaries) {
    comparison += s.scenario + "," + s.model + "," + Fmt6(s.median) + "," + Fmt6(s.q1) + "," +
                  Fmt6(s.q3) + "\n";
    summary["median_abs_error"][s.scenario][s.model] = s.median;
  }
  std::string histogram = "model,bin_lo,count\n";
  for (const HistogramBin& b : report.histogram) {
    histogram += b.model + "," + Fmt6(b.bin_lo) + "," + std::to_string(b.count) + "\n";
  }
  std::string errors = "scenario,event_id,t,model,abs_error\n";
  for (const auto& [model, per_event] : report.abs_error) {
    for (std::size_t i = 0; i < per_event.size(); ++i) {
      for (std::size_t k = 0; k < per_event[i].size(); ++k) {
        errors += scenarios[i] + "," + std::to_string(ids[i]) + "," + Fmt6(k * kFrameDt) + "," +
                  model + "," + Fmt6(per_event[i][k]) + "\n";
      }
    }
  }
  for (const auto& [model, per_event] : report.abs_error) {
    std::vector<double> all;
    for (const auto& e : per_event) all.insert(all.end(), e.begin(), e.end());
    summary["overall_median_abs_error"][model] = LinearQuantile(all, 0.5);
  }
  io.WriteText("report/curves.csv", band);
  io.WriteText("report/comparison.csv", comparison);
  io.WriteText("report/histogram.csv", histogram);
  io.WriteText("report/abs_error.csv", errors);

  // Attribution exports are optional: explain may not have run.
  if (fs::exists(io.Path("shap.csv")) && fs::exists(io.Path("globals.csv"))) {
    const Table shap = ParseTable(io.Read("shap.csv", "explain"), "shap.csv");
    const std::size_t c_event = shap.Col("event_id");
    const std::size_t c_t = shap.Col("t");
    const std::size_t c_feature = shap.Col("feature");
    const std::size_t c_phi = shap.Col("phi");
    const std::size_t c_value = shap.Col("feature_value");
    std::string heat = "event_id,t,feature,phi,predicted\n";
    std::string swarm = "scenario,feature,phi,feature_value\n";
    for (const CsvRow& r : shap.rows) {
      const int id = static_cast<int>(ParseInt(r.cells[c_event], "shap.csv"));
      if (!mlp.count(id) || !family_of.count(id)) continue;
      const std::size_t k = static_cast<std::size_t>(
          std::lround(ParseDouble(r.cells[c_t], "shap.csv") / kFrameDt));
      heat += r.cells[c_event] + "," + r.cells[c_t] + "," + r.cells[c_feature] + "," +
              r.cells[c_phi] + "," + Fmt6(mlp.at(id).at(k)) + "\n";
      const auto spec = std::find_if(events.begin(), events.end(),
                                     [id](const EventSpec& e) { return e.event_id == id; });
      swarm += std::string(NetworkGroup(spec->scenario)) + "," + r.cells[c_feature] + "," +
               r.cells[c_phi] + "," + r.cells[c_value] + "\n";
    }
    const Table globals = ParseTable(io.Read("globals.csv", "explain"), "globals.csv");
    std::string ranks = "scenario,feature,mean_abs_phi,rank\n";
    for (const CsvRow& r : globals.rows) {
      for (std::size_t c = 0; c < r.cells.size(); ++c) ranks += (c ? "," : "") + r.cells[c];
      ranks += "\n";
    }
    io.WriteText("report/heatmaps.csv", heat);
    io.WriteText("report/beeswarm.csv", swarm);
    io.WriteText("report/rankings.csv", ranks);
  } else {
    io.Log("shap.csv not found; attribution exports skipped");
  }

  for (const auto& [group, members] : ByGroup(events)) {
    const fs::path rel = fs::path("models") / (group + ".json");
    if (!fs::exists(io.Path(rel))) continue;
    const json m = ReadJsonFile(io.Path(rel));
    summary["validation_rmse"][group] = m.at("final_val_rmse");
  }
  io.WriteJson("report/summary.json", summary);

  // Listing of every artifact currently in the output directory.
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(config.out_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), config.out_dir).generic_string();
    if (rel != "outputs.json") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json listing = json::array();
  for (const std::string& rel : files) {
    listing.push_back({{"path", rel}, {"fnv1a", HexHash(Fnv1a(ReadTextFile(config.out_dir / rel)))}});
  }
  io.WriteJson("outputs.json", {{"files", listing}});
  for (const ErrorSummary& s : report.summaries) {
    char line[128];
    std::snprintf(line, sizeof line, "%-4s %-5s median abs error %.3f", s.scenario.c_str(),
                  s.model.c_str(), s.median);
    io.Log(line);
  }
  return io.result;
}

StageResult RunAll(const PipelineConfig& config) {
  StageResult all;
  for (auto stage : {CmdGenerate, CmdIngest, CmdReconstruct, CmdFeatures, CmdCalibrate,
                     CmdTrain, CmdPredict, CmdExplain, CmdReport}) {
    StageResult r = stage(config);
    all.written.insert(all.written.end(), r.written.begin(), r.written.end());
    all.log.insert(all.log.end(), r.log.begin(), r.log.end());
  }
  return all;
}

}  // namespace riskdecode
