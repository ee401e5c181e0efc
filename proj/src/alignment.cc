#include "riskdecode/alignment.h"

#include <sstream>
#include <stdexcept>
#include <string>

namespace riskdecode {
namespace internal {
extern const std::string_view kAlignmentTablesCsv;
}

const std::vector<RatingMoment>& AlignmentTable::MomentsFor(int event_id) const {
  const auto it = events.find(event_id);
  if (it == events.end()) {
    throw std::invalid_argument("event " + std::to_string(event_id) +
                                " is not in the alignment table");
  }
  return it->second;
}

int AlignmentTable::SlotCount(int event_id) const {
  return MomentsFor(event_id).back().slot;
}

AlignmentTable ParseAlignmentCsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  AlignmentTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.starts_with("event_id")) continue;
    std::istringstream row(line);
    std::string event, slot, time, dup;
    if (!std::getline(row, event, ',') || !std::getline(row, slot, ',') ||
        !std::getline(row, time, ',') || !std::getline(row, dup, ',')) {
      throw std::invalid_argument("alignment table line " + std::to_string(line_no) +
                                  ": expected 4 fields");
    }
    try {
      table.events[std::stoi(event)].push_back(
          {std::stoi(slot), std::stod(time), std::stoi(dup) != 0});
    } catch (const std::logic_error&) {
      throw std::invalid_argument("alignment table line " + std::to_string(line_no) +
                                  ": malformed number");
    }
  }
  for (const auto& [id, moments] : table.events) {
    const std::string where = "alignment table event " + std::to_string(id);
    if (moments.front().time != 0.0 || moments.front().slot != 1) {
      throw std::invalid_argument(where + ": must start with slot 1 at 0 s");
    }
    for (std::size_t i = 1; i < moments.size(); ++i) {
      const RatingMoment& prev = moments[i - 1];
      const RatingMoment& cur = moments[i];
      if (cur.time < prev.time) throw std::invalid_argument(where + ": times decrease");
      if (cur.slot != prev.slot && cur.slot != prev.slot + 1) {
        throw std::invalid_argument(where + ": slots must be consecutive");
      }
      if (cur.duplicate != (cur.slot == prev.slot)) {
        throw std::invalid_argument(where + ": inconsistent duplicate flag");
      }
    }
  }
  return table;
}

const AlignmentTable& PackagedAlignmentTable() {
  static const AlignmentTable table = ParseAlignmentCsv(internal::kAlignmentTablesCsv);
  return table;
}

std::vector<Anchor> AlignRatings(int event_id, std::span<const double> clip_ratings,
                                 const AlignmentTable& table) {
  const std::vector<RatingMoment>& moments = table.MomentsFor(event_id);
  const int slots = moments.back().slot;
  if (static_cast<int>(clip_ratings.size()) != slots) {
    throw std::invalid_argument("event " + std::to_string(event_id) + " expects " +
                                std::to_string(slots) + " ratings, got " +
                                std::to_string(clip_ratings.size()));
  }
  std::vector<Anchor> anchors;
  anchors.reserve(moments.size());
  for (const RatingMoment& m : moments) {
    anchors.push_back({m.time, clip_ratings[m.slot - 1]});
  }
  return anchors;
}

}  // namespace riskdecode
