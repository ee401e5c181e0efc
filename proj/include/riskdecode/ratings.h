#pragma once

#include <map>
#include <string>
#include <vector>

namespace riskdecode {

struct RatingRecord {
  std::string participant_id;
  int event_id = 0;
  int clip_index = 0;  // 1-based
  int rating = 0;      // 0..10
};

// Pearson correlation; 0 when either sequence is constant.
double PearsonOrZero(const std::vector<double>& a, const std::vector<double>& b);

struct FilterResult {
  std::vector<RatingRecord> retained;
  std::vector<std::string> dropped;        // sorted participant ids
  std::map<std::string, double> correlation;  // final r per participant
  bool single_participant = false;         // nothing filtered
};

// Drops participants whose clip sequence correlates with the cross-participant
// mean at r < `threshold`, recomputing the mean until no one else is dropped.
// All records must belong to one event; each participant needs every clip
// 1..clip_count exactly once. Throws std::invalid_argument otherwise.
FilterResult FilterRatings(const std::vector<RatingRecord>& event_records,
                           int clip_count, double threshold = 0.3);

// Mean rating per clip (index 0 = clip 1) over the given records.
std::vector<double> MeanClipRatings(const std::vector<RatingRecord>& event_records,
                                    int clip_count);

}  // namespace riskdecode
