#include "riskdecode/io.h"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <stdexcept>

namespace riskdecode {
namespace {

using nlohmann::json;

constexpr const char* kAxisFields[] = {"x", "y", "vx", "vy", "ax", "ay"};

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

json OptionalToJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> OptionalFromJson(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void AppendState(std::string& line, const VehicleState* s) {
  const double values[] = {s ? s->x : NAN,  s ? s->y : NAN,  s ? s->vx : NAN,
                           s ? s->vy : NAN, s ? s->ax : NAN, s ? s->ay : NAN};
  for (double v : values) {
    line += ',';
    line += Fmt6(v);
  }
}

VehicleState StateFrom(const CsvRow& row, std::size_t offset) {
  VehicleState s;
  double* fields[] = {&s.x, &s.y, &s.vx, &s.vy, &s.ax, &s.ay};
  for (int i = 0; i < 6; ++i) {
    *fields[i] = ParseDouble(row.cells[offset + i],
                             "trajectory line " + std::to_string(row.line));
  }
  return s;
}

Eigen::MatrixXd MatrixFromJson(const json& j, const char* key) {
  const json& m = j.at(key);
  const int rows = m.at("rows").get<int>();
  const int cols = m.at("cols").get<int>();
  const auto& data = m.at("data");
  if (static_cast<int>(data.size()) != rows * cols) {
    throw std::invalid_argument(std::string("weights matrix ") + key +
                                " has the wrong number of entries");
  }
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = data[r * cols + c].get<double>();
  }
  return out;
}

json MatrixToJson(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

}  // namespace

std::uint64_t Fnv1a(std::string_view data, std::uint64_t hash) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string HexHash(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string CsvHeaderLine(const Provenance& p) {
  return "# riskdecode " + std::string(kToolVersion) + " seed=" + std::to_string(p.seed) +
         " inputs=" + HexHash(p.inputs) + "\n";
}

json JsonHeader(const Provenance& p) {
  return {{"tool", "riskdecode"},
          {"version", std::string(kToolVersion)},
          {"seed", p.seed},
          {"inputs", HexHash(p.inputs)}};
}

std::string Fmt6(double value) {
  if (std::isnan(value)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  // Avoid "-0.000000" so that tiny negative noise does not change bytes.
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

std::string FmtExact(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw std::runtime_error("cannot create " + path.parent_path().string() + ": " +
                               ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("bad JSON in " + path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const json& value) {
  WriteTextFile(path, value.dump(2) + "\n");
}

std::vector<CsvRow> ParseCsv(std::string_view text) {
  std::vector<CsvRow> rows;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = Trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    CsvRow row;
    row.line = line_no;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      row.cells.push_back(Trim(std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double ParseDouble(std::string_view cell, std::string_view what) {
  const std::string s(cell);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw std::invalid_argument(std::string(what) + ": not a number: '" + s + "'");
  }
  return v;
}

long ParseInt(std::string_view cell, std::string_view what) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw std::invalid_argument(std::string(what) + ": not an integer: '" +
                                std::string(cell) + "'");
  }
  return v;
}

json EventSpecToJson(const EventSpec& spec) {
  return {{"id", spec.event_id},
          {"scenario", std::string(ScenarioName(spec.scenario))},
          {"initial_distance", spec.initial_distance},
          {"cruise_speed_kmh", spec.cruise_speed_kmh},
          {"braking_intensity", spec.braking_intensity},
          {"acc", spec.acc ? json(std::string(AccCategoryName(*spec.acc))) : json(nullptr)},
          {"duration", spec.duration},
          {"anchors",
           {{"merge_onset", OptionalToJson(spec.anchors.merge_onset)},
            {"brake_onset", OptionalToJson(spec.anchors.brake_onset)},
            {"recovery_onset", OptionalToJson(spec.anchors.recovery_onset)}}}};
}

EventSpec EventSpecFromJson(const json& j) {
  EventSpec spec;
  spec.event_id = j.at("id").get<int>();
  spec.scenario = ParseScenario(j.at("scenario").get<std::string>());
  spec.initial_distance = j.at("initial_distance").get<double>();
  spec.cruise_speed_kmh = j.at("cruise_speed_kmh").get<double>();
  spec.braking_intensity = j.at("braking_intensity").get<double>();
  if (j.contains("acc") && !j.at("acc").is_null()) {
    spec.acc = ParseAccCategory(j.at("acc").get<std::string>());
  }
  spec.duration = j.at("duration").get<double>();
  const json& a = j.at("anchors");
  spec.anchors.merge_onset = OptionalFromJson(a, "merge_onset");
  spec.anchors.brake_onset = OptionalFromJson(a, "brake_onset");
  spec.anchors.recovery_onset = OptionalFromJson(a, "recovery_onset");
  ValidateEventSpec(spec);
  return spec;
}

std::string TrajectoryCsv(const EventTrajectory& trajectory, const Provenance& p) {
  std::string out = CsvHeaderLine(p);
  out += "t";
  for (const char* who : {"sub", "n1", "n2"}) {
    for (const char* f : kAxisFields) out += std::string(",") + who + "_" + f;
  }
  out += '\n';
  for (const Frame& f : trajectory.frames) {
    if (f.neighbours.empty() || f.neighbours.size() > 2) {
      throw std::invalid_argument("trajectory frames need one or two neighbours");
    }
    std::string line = Fmt6(f.t);
    AppendState(line, &f.subject);
    AppendState(line, &f.neighbours[0]);
    AppendState(line, f.neighbours.size() > 1 ? &f.neighbours[1] : nullptr);
    out += line;
    out += '\n';
  }
  return out;
}

EventTrajectory ParseTrajectoryCsv(std::string_view text, int event_id,
                                   Scenario scenario) {
  const std::vector<CsvRow> rows = ParseCsv(text);
  if (rows.empty() || rows.front().cells.size() != 19 || rows.front().cells[0] != "t") {
    throw std::invalid_argument("trajectory for event " + std::to_string(event_id) +
                                " has no t,sub_x,... header");
  }
  EventTrajectory tr;
  tr.event_id = event_id;
  tr.scenario = scenario;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    if (row.cells.size() != 19) {
      throw std::invalid_argument("trajectory line " + std::to_string(row.line) +
                                  ": expected 19 cells");
    }
    Frame f;
    f.t = ParseDouble(row.cells[0], "trajectory line " + std::to_string(row.line));
    f.subject = StateFrom(row, 1);
    f.neighbours.push_back(StateFrom(row, 7));
    if (!row.cells[13].empty()) f.neighbours.push_back(StateFrom(row, 13));
    tr.frames.push_back(std::move(f));
  }
  return tr;
}

json PcadParamsToJson(const PcadParams& p) {
  return {{"sigma_n_x", p.sigma_n_x}, {"sigma_n_y", p.sigma_n_y},
          {"sigma_s_x", p.sigma_s_x}, {"sigma_s_y", p.sigma_s_y},
          {"t_s_a", p.t_s_a},         {"t_n_a", p.t_n_a},
          {"alpha", p.alpha},         {"v_lim", p.v_lim},
          {"horizon", p.horizon},     {"overlap_cap", p.overlap_cap}};
}

PcadParams PcadParamsFromJson(const json& j) {
  PcadParams p;
  p.sigma_n_x = j.value("sigma_n_x", p.sigma_n_x);
  p.sigma_n_y = j.value("sigma_n_y", p.sigma_n_y);
  p.sigma_s_x = j.value("sigma_s_x", p.sigma_s_x);
  p.sigma_s_y = j.value("sigma_s_y", p.sigma_s_y);
  p.t_s_a = j.value("t_s_a", p.t_s_a);
  p.t_n_a = j.value("t_n_a", p.t_n_a);
  p.alpha = j.value("alpha", p.alpha);
  p.v_lim = j.value("v_lim", p.v_lim);
  p.horizon = j.value("horizon", p.horizon);
  p.overlap_cap = j.value("overlap_cap", p.overlap_cap);
  p.Validate();
  return p;
}

json DrfParamsToJson(const DrfParams& p) {
  return {{"s", p.s},     {"t_la", p.t_la},       {"m", p.m},
          {"c", p.c},     {"C_sev", p.C_sev},     {"grid_dx", p.grid_dx},
          {"grid_dy", p.grid_dy}, {"D", p.D}};
}

DrfParams DrfParamsFromJson(const json& j) {
  DrfParams p;
  p.s = j.value("s", p.s);
  p.t_la = j.value("t_la", p.t_la);
  p.m = j.value("m", p.m);
  p.c = j.value("c", p.c);
  p.C_sev = j.value("C_sev", p.C_sev);
  p.grid_dx = j.value("grid_dx", p.grid_dx);
  p.grid_dy = j.value("grid_dy", p.grid_dy);
  p.D = j.value("D", p.D);
  p.Validate();
  return p;
}

json NormStatsToJson(const NormStats& stats) {
  json mean = json::array();
  json std = json::array();
  for (int i = 0; i < stats.mean.size(); ++i) {
    mean.push_back(stats.mean[i]);
    std.push_back(stats.std[i]);
  }
  return {{"names", stats.names}, {"mean", mean}, {"std", std}};
}

NormStats NormStatsFromJson(const json& j) {
  NormStats s;
  s.names = j.at("names").get<std::vector<std::string>>();
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto std = j.at("std").get<std::vector<double>>();
  if (mean.size() != s.names.size() || std.size() != s.names.size()) {
    throw std::invalid_argument("normstats: names, mean and std differ in length");
  }
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  s.std = Eigen::Map<const Eigen::VectorXd>(std.data(), std.size());
  return s;
}

json MlpConfigToJson(const MlpConfig& c) {
  return {{"input_dim", c.input_dim},
          {"hidden", c.hidden},
          {"dropout_rate", c.dropout_rate},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"train_fraction", c.train_fraction},
          {"seed", c.seed},
          {"loss_mode", std::string(LossModeName(c.loss_mode))},
          {"optimizer", std::string(OptimizerName(c.optimizer))},
          {"batch_size", c.batch_size}};
}

MlpConfig MlpConfigFromJson(const json& j) {
  MlpConfig c;
  c.input_dim = j.value("input_dim", c.input_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.seed = j.value("seed", c.seed);
  if (j.contains("loss_mode")) c.loss_mode = ParseLossMode(j.at("loss_mode").get<std::string>());
  if (j.contains("optimizer")) c.optimizer = ParseOptimizer(j.at("optimizer").get<std::string>());
  c.batch_size = j.value("batch_size", c.batch_size);
  return c;
}

json MlpWeightsToJson(const MlpWeights& w) {
  return {{"seed", w.seed},
          {"w1", MatrixToJson(w.w1)},
          {"b1", MatrixToJson(w.b1)},
          {"w2", MatrixToJson(w.w2)},
          {"b2", MatrixToJson(w.b2)}};
}

MlpWeights MlpWeightsFromJson(const json& j) {
  MlpWeights w;
  w.seed = j.value("seed", std::uint64_t{0});
  w.w1 = MatrixFromJson(j, "w1");
  w.b1 = MatrixFromJson(j, "b1");
  w.w2 = MatrixFromJson(j, "w2");
  w.b2 = MatrixFromJson(j, "b2");
  if (w.b1.size() != w.w1.cols() || w.w2.rows() != w.w1.cols() || w.w2.cols() != 2 ||
      w.b2.size() != 2) {
    throw std::invalid_argument("weights: inconsistent layer shapes");
  }
  return w;
}

RatingsProfile RatingsProfileFromJson(const json& j) {
  RatingsProfile p;
  p.participant_id = j.value("participant_id", p.participant_id);
  p.event_id = j.value("event_id", p.event_id);
  p.clip_index = j.value("clip_index", p.clip_index);
  p.rating = j.value("rating", p.rating);
  return p;
}

ParsedRatings ParseRatingsCsv(std::string_view text, std::string_view source,
                              const std::map<int, int>& clip_counts,
                              const RatingsProfile& profile) {
  const std::vector<CsvRow> rows = ParseCsv(text);
  const std::string src(source);
  if (rows.empty()) throw std::invalid_argument(src + ": no header row");
  const CsvRow& header = rows.front();
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.cells.size(); ++i) {
      if (header.cells[i] == name) return i;
    }
    throw std::invalid_argument(src + ":" + std::to_string(header.line) +
                                ": missing column '" + name + "'");
  };
  const std::size_t c_pid = column(profile.participant_id);
  const std::size_t c_event = column(profile.event_id);
  const std::size_t c_clip = column(profile.clip_index);
  const std::size_t c_rating = column(profile.rating);

  ParsedRatings out;
  std::set<std::tuple<std::string, int, int>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    const std::string where = src + ":" + std::to_string(row.line);
    if (row.cells.size() != header.cells.size()) {
      throw std::invalid_argument(where + ": expected " +
                                  std::to_string(header.cells.size()) + " cells, got " +
                                  std::to_string(row.cells.size()));
    }
    RatingRecord r;
    r.participant_id = row.cells[c_pid];
    if (r.participant_id.empty()) throw std::invalid_argument(where + ": empty participant_id");
    r.event_id = static_cast<int>(ParseInt(row.cells[c_event], where + " event_id"));
    r.clip_index = static_cast<int>(ParseInt(row.cells[c_clip], where + " clip_index"));
    r.rating = static_cast<int>(ParseInt(row.cells[c_rating], where + " rating"));

    std::string problem;
    const auto it = clip_counts.find(r.event_id);
    if (it == clip_counts.end()) {
      problem = "unknown event " + std::to_string(r.event_id);
    } else if (r.clip_index < 1 || r.clip_index > it->second) {
      problem = "clip_index " + std::to_string(r.clip_index) + " outside 1.." +
                std::to_string(it->second);
    } else if (r.rating < 0 || r.rating > 10) {
      problem = "rating " + std::to_string(r.rating) + " outside 0..10";
    } else if (!seen.emplace(r.participant_id, r.event_id, r.clip_index).second) {
      problem = "repeated clip " + std::to_string(r.clip_index) + " for participant " +
                r.participant_id + " in event " + std::to_string(r.event_id);
    }
    if (!problem.empty()) {
      out.invalid.push_back({row.line, problem});
      continue;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string RatingsCsv(const std::vector<RatingRecord>& records, const Provenance& p) {
  std::string out = CsvHeaderLine(p);
  out += "participant_id,event_id,clip_index,rating\n";
  for (const RatingRecord& r : records) {
    out += r.participant_id + "," + std::to_string(r.event_id) + "," +
           std::to_string(r.clip_index) + "," + std::to_string(r.rating) + "\n";
  }
  return out;
}

}  // namespace riskdecode
