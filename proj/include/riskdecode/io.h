#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "riskdecode/drf.h"
#include "riskdecode/features.h"
#include "riskdecode/mlp.h"
#include "riskdecode/pcad.h"
#include "riskdecode/ratings.h"
#include "riskdecode/scenario.h"

namespace riskdecode {

inline constexpr std::string_view kToolVersion = "0.1.0";

// 64-bit FNV-1a, chainable through `hash`.
std::uint64_t Fnv1a(std::string_view data, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string HexHash(std::uint64_t hash);

// Provenance stamped on every output: a "# ..." first line in CSV files and a
// "_header" object in JSON files.
struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t inputs = 0;  // FNV-1a over the input files' bytes
};

std::string CsvHeaderLine(const Provenance& p);
nlohmann::json JsonHeader(const Provenance& p);

// Fixed six-decimal formatting; NaN prints as an empty cell.
std::string Fmt6(double value);
// Round-trippable formatting for model state.
std::string FmtExact(double value);

// Throw std::runtime_error naming the path on failure. Writing creates
// parent directories.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& value);

// Splits CSV text into rows of cells, skipping "#" comment lines and blank
// lines. Each row remembers its 1-based line number. No quoting support.
struct CsvRow {
  int line = 0;
  std::vector<std::string> cells;
};
std::vector<CsvRow> ParseCsv(std::string_view text);

double ParseDouble(std::string_view cell, std::string_view what);
long ParseInt(std::string_view cell, std::string_view what);

// Catalog serialization.
nlohmann::json EventSpecToJson(const EventSpec& spec);
EventSpec EventSpecFromJson(const nlohmann::json& j);

// t,sub_x,...,sub_ay,n1_x,...,n1_ay,n2_x,...,n2_ay; n2 cells stay empty
// without a second neighbour.
std::string TrajectoryCsv(const EventTrajectory& trajectory, const Provenance& p);
EventTrajectory ParseTrajectoryCsv(std::string_view text, int event_id,
                                   Scenario scenario);

nlohmann::json PcadParamsToJson(const PcadParams& params);
PcadParams PcadParamsFromJson(const nlohmann::json& j);
nlohmann::json DrfParamsToJson(const DrfParams& params);
DrfParams DrfParamsFromJson(const nlohmann::json& j);

nlohmann::json NormStatsToJson(const NormStats& stats);
NormStats NormStatsFromJson(const nlohmann::json& j);

nlohmann::json MlpConfigToJson(const MlpConfig& config);
MlpConfig MlpConfigFromJson(const nlohmann::json& j);
// Matrices are stored row-major with exact formatting.
nlohmann::json MlpWeightsToJson(const MlpWeights& weights);
MlpWeights MlpWeightsFromJson(const nlohmann::json& j);

// Column names used for each canonical ratings field. The defaults read the
// native schema; a JSON profile maps a differently named export onto it.
struct RatingsProfile {
  std::string participant_id = "participant_id";
  std::string event_id = "event_id";
  std::string clip_index = "clip_index";
  std::string rating = "rating";
};
RatingsProfile RatingsProfileFromJson(const nlohmann::json& j);

struct RatingsIssue {
  int line = 0;
  std::string message;
};

struct ParsedRatings {
  std::vector<RatingRecord> records;
  std::vector<RatingsIssue> invalid;  // rows skipped, in file order
};

// Missing columns or unparsable cells are schema violations and throw
// std::invalid_argument with "<source>:<line>: ...". Rows that parse but break
// a record invariant (rating outside 0..10, unknown event, clip outside the
// event's clip count, repeated clip) are skipped and listed in `invalid`.
// `clip_counts` maps event id to its clip count.
ParsedRatings ParseRatingsCsv(std::string_view text, std::string_view source,
                              const std::map<int, int>& clip_counts,
                              const RatingsProfile& profile = {});

std::string RatingsCsv(const std::vector<RatingRecord>& records, const Provenance& p);

}  // namespace riskdecode
