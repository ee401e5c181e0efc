#pragma once

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "riskdecode/interpolation.h"

namespace riskdecode {

struct RatingMoment {
  int slot = 0;       // 1-based rating (clip) index
  double time = 0.0;  // s
  bool duplicate = false;  // second moment of the same rating
};

struct AlignmentTable {
  std::map<int, std::vector<RatingMoment>> events;

  const std::vector<RatingMoment>& MomentsFor(int event_id) const;
  int SlotCount(int event_id) const;
};

// Parses "event_id,slot,time_s,duplicate_flag" CSV text (with header) and
// checks the per-event invariants.
AlignmentTable ParseAlignmentCsv(std::string_view text);

// The rating-moment tables bundled with the library.
const AlignmentTable& PackagedAlignmentTable();

// Places rating i (slot i+1) at each of its moments.
std::vector<Anchor> AlignRatings(int event_id, std::span<const double> clip_ratings,
                                 const AlignmentTable& table);

}  // namespace riskdecode
