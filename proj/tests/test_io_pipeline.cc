#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "riskdecode/alignment.h"
#include "riskdecode/io.h"
#include "riskdecode/pipeline.h"

using namespace riskdecode;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("riskdecode_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PipelineConfig Tiny(const fs::path& out) {
  PipelineConfig c;
  c.out_dir = out;
  c.seed = 3;
  c.scenario = "HB";
  c.synthetic = true;
  c.synthetic_config.participants_per_event = 12;
  c.calibration_draws = 4;
  c.mlp.epochs = 3;
  c.mlp.hidden = 16;
  c.explain_stride = 60;
  return c;
}

std::set<std::string> FilesUnder(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.insert(fs::relative(e.path(), dir).string());
  }
  return out;
}

}  // namespace

TEST_CASE("number formatting and hashing") {
  CHECK(Fmt6(1.0 / 3.0) == "0.333333");
  CHECK(Fmt6(-0.0) == "0.000000");
  CHECK(Fmt6(-1e-9) == "0.000000");
  CHECK(HexHash(Fnv1a("abc")).size() == 16);
  CHECK(Fnv1a("abc") != Fnv1a("abd"));
  const Provenance p{7, 0xff};
  CHECK(CsvHeaderLine(p).starts_with("# riskdecode "));
  CHECK(CsvHeaderLine(p).find("seed=7") != std::string::npos);
}

TEST_CASE("trajectory CSV round trip") {
  const EventTrajectory tr = SimulateEvent(EnumerateEvents()[80]);
  const std::string text = TrajectoryCsv(tr, Provenance{1, 0});
  const EventTrajectory back = ParseTrajectoryCsv(text, tr.event_id, tr.scenario);
  REQUIRE(back.frames.size() == tr.frames.size());
  CHECK(back.frames[100].neighbours.size() == 2);
  CHECK(std::abs(back.frames[100].subject.x - tr.frames[100].subject.x) <= 5e-7);
  CHECK(std::abs(back.frames[100].neighbours[1].vx - tr.frames[100].neighbours[1].vx) <= 5e-7);
}

TEST_CASE("ratings parsing") {
  const std::map<int, int> clips = {{28, 5}};
  const std::string ok =
      "participant_id,event_id,clip_index,rating\n"
      "p1,28,1,3\n"
      "p1,28,9,3\n"
      "p1,28,2,11\n"
      "p1,99,1,3\n"
      "p1,28,1,4\n";
  const ParsedRatings r = ParseRatingsCsv(ok, "fixture.csv", clips, {});
  CHECK(r.records.size() == 1);
  REQUIRE(r.invalid.size() == 4);
  CHECK(r.invalid[0].line == 3);
  CHECK(r.invalid[3].line == 6);
  try {
    ParseRatingsCsv("participant_id,event_id,clip_index,rating\np1,28,1,3\np1,28,x,3\n",
                    "fixture.csv", clips, {});
    FAIL("bad cell accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("fixture.csv:3") != std::string::npos);
  }
  CHECK_THROWS_AS(ParseRatingsCsv("who,event_id,clip_index,rating\n", "f", clips, {}),
                  std::invalid_argument);
  RatingsProfile prof;
  prof.participant_id = "who";
  CHECK(ParseRatingsCsv("who,event_id,clip_index,rating\nx,28,2,5\n", "f", clips, prof)
            .records.size() == 1);
}

TEST_CASE("ingest drops an anti-correlated participant") {
  TempDir dir("ingest");
  const int event = 28;
  const int slots = PackagedAlignmentTable().SlotCount(event);
  std::string csv = "participant_id,event_id,clip_index,rating\n";
  const std::vector<std::vector<int>> seqs = {
      {1, 2, 6, 8, 4, 2}, {2, 3, 7, 9, 5, 2}, {1, 3, 6, 7, 3, 1}, {8, 7, 3, 1, 5, 8}};
  const std::vector<std::string> who = {"a", "b", "c", "contrary"};
  for (std::size_t p = 0; p < seqs.size(); ++p) {
    for (int k = 0; k < slots; ++k) {
      csv += who[p] + "," + std::to_string(event) + "," + std::to_string(k + 1) + "," +
             std::to_string(seqs[p][k]) + "\n";
    }
  }
  WriteTextFile(dir.path / "fixture.csv", csv);
  PipelineConfig c;
  c.out_dir = dir.path / "out";
  c.ratings = dir.path / "fixture.csv";
  CmdGenerate(c);
  CmdIngest(c);
  const nlohmann::json index = ReadJsonFile(c.out_dir / "dataset_index.json");
  CHECK(index.at("valid_ratings").get<int>() == 4 * slots);
  CHECK(index.at("retained_ratings").get<int>() == 3 * slots);
  CHECK(index.at("participants").get<int>() == 3);
  const std::string kept = ReadTextFile(c.out_dir / "ratings.csv");
  CHECK(kept.find("contrary") == std::string::npos);
  CHECK(kept.starts_with("# riskdecode"));
}

TEST_CASE("stages name their missing inputs") {
  TempDir dir("deps");
  PipelineConfig c = Tiny(dir.path);
  CHECK_THROWS_AS(CmdReconstruct(c), MissingDependency);
  CHECK_THROWS_AS(CmdTrain(c), MissingDependency);
  CmdGenerate(c);
  CmdIngest(c);
  CmdReconstruct(c);
  CmdFeatures(c);
  CmdCalibrate(c);
  CmdTrain(c);
  try {
    CmdReport(c);
    FAIL("report ran without predictions");
  } catch (const MissingDependency& e) {
    CHECK(e.producer() == "predict");
    CHECK(fs::path(e.artifact()).filename() == "predictions.csv");
    CHECK(std::string(e.what()).find("run 'predict' first") != std::string::npos);
  }
  CmdPredict(c);
  CHECK_NOTHROW(CmdReport(c));
}

TEST_CASE("generate for one family") {
  TempDir dir("gen");
  PipelineConfig c = Tiny(dir.path);
  const StageResult r = CmdGenerate(c);
  CHECK(FilesUnder(dir.path / "trajectories").size() == 27);
  const std::string first = ReadTextFile(dir.path / "trajectories" / "event_028.csv");
  CmdGenerate(c);
  CHECK(ReadTextFile(dir.path / "trajectories" / "event_028.csv") == first);
  CHECK(first.find("seed=3") != std::string::npos);
  const nlohmann::json events = ReadJsonFile(dir.path / "events.json");
  CHECK(events.at("_header").at("seed").get<int>() == 3);
  CHECK(events.at("events").size() == 27);
}

TEST_CASE("full pipeline on synthetic ratings is reproducible") {
  TempDir a("full_a");
  TempDir b("full_b");
  const StageResult ra = RunAll(Tiny(a.path));
  RunAll(Tiny(b.path));
  const std::set<std::string> files = FilesUnder(a.path);
  CHECK(files == FilesUnder(b.path));
  for (const char* must : {"predictions.csv", "shap.csv", "globals.csv", "outputs.json",
                           "models/HB.json", "models/HB_training.csv", "report/summary.json",
                           "report/comparison.csv", "report/heatmaps.csv"}) {
    CHECK_MESSAGE(files.count(must) == 1, must);
  }
  for (const std::string& f : files) {
    if (ReadTextFile(a.path / f) != ReadTextFile(b.path / f)) FAIL_CHECK("differs: " << f);
  }
  const nlohmann::json outputs = ReadJsonFile(a.path / "outputs.json");
  CHECK(outputs.at("files").size() + 1 == files.size());
  // Per-epoch training report.
  const std::vector<CsvRow> epochs = ParseCsv(ReadTextFile(a.path / "models/HB_training.csv"));
  CHECK(epochs.size() == 4);
  // A re-run of one stage on unchanged inputs rewrites identical bytes.
  const std::string before = ReadTextFile(a.path / "curves.csv");
  CmdReconstruct(Tiny(a.path));
  CHECK(ReadTextFile(a.path / "curves.csv") == before);
}

TEST_CASE("config file overlay") {
  TempDir dir("cfg");
  WriteTextFile(dir.path / "c.json",
                R"({"seed": 9, "scenario": "MB", "calibration": {"draws": 12, "search": "uniform"},
                    "mlp": {"epochs": 5}, "explain": {"stride": 4}})");
  const PipelineConfig c = LoadPipelineConfig(dir.path / "c.json", PipelineConfig{});
  CHECK(c.seed == 9);
  CHECK(c.scenario == "MB");
  CHECK(c.calibration_draws == 12);
  CHECK(c.search == SearchStrategy::kUniform);
  CHECK(c.mlp.epochs == 5);
  CHECK(c.explain_stride == 4);
  CHECK(ScenarioSelected("LC", Scenario::kLCAborted));
  CHECK(ScenarioSelected("LC_normal", Scenario::kLCNormalFast));
  CHECK_FALSE(ScenarioSelected("MB", Scenario::kHB));
  CHECK(ScenarioSelected("", Scenario::kSVM));
}
