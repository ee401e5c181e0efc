#include "riskdecode/ratings.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riskdecode {
namespace {

using Sequences = std::map<std::string, std::vector<double>>;

Sequences CollectSequences(const std::vector<RatingRecord>& records, int clip_count) {
  if (records.empty()) throw std::invalid_argument("no ratings for the event");
  const int event_id = records.front().event_id;
  Sequences seq;
  std::map<std::string, std::vector<bool>> seen;
  for (const RatingRecord& r : records) {
    if (r.event_id != event_id) {
      throw std::invalid_argument("ratings from several events passed together");
    }
    if (r.clip_index < 1 || r.clip_index > clip_count) {
      throw std::invalid_argument("clip index " + std::to_string(r.clip_index) +
                                  " outside 1.." + std::to_string(clip_count));
    }
    if (r.rating < 0 || r.rating > 10) {
      throw std::invalid_argument("rating outside 0..10");
    }
    auto& values = seq[r.participant_id];
    auto& flags = seen[r.participant_id];
    if (values.empty()) {
      values.assign(clip_count, 0.0);
      flags.assign(clip_count, false);
    }
    if (flags[r.clip_index - 1]) {
      throw std::invalid_argument("participant " + r.participant_id +
                                  " rated clip " + std::to_string(r.clip_index) +
                                  " twice in event " + std::to_string(event_id));
    }
    flags[r.clip_index - 1] = true;
    values[r.clip_index - 1] = r.rating;
  }
  for (const auto& [id, flags] : seen) {
    if (std::find(flags.begin(), flags.end(), false) != flags.end()) {
      throw std::invalid_argument("participant " + id + " is missing clips in event " +
                                  std::to_string(event_id));
    }
  }
  return seq;
}

}  // namespace

double PearsonOrZero(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("correlation needs equal, nonempty sequences");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> MeanClipRatings(const std::vector<RatingRecord>& event_records,
                                    int clip_count) {
  const Sequences seq = CollectSequences(event_records, clip_count);
  std::vector<double> mean(clip_count, 0.0);
  for (const auto& [id, values] : seq) {
    for (int i = 0; i < clip_count; ++i) mean[i] += values[i];
  }
  for (double& m : mean) m /= static_cast<double>(seq.size());
  return mean;
}

FilterResult FilterRatings(const std::vector<RatingRecord>& event_records,
                           int clip_count, double threshold) {
  const Sequences seq = CollectSequences(event_records, clip_count);
  FilterResult result;
  if (seq.size() < 2) {
    result.single_participant = true;
    result.retained = event_records;
    return result;
  }

  std::vector<std::string> active;
  for (const auto& [id, values] : seq) active.push_back(id);
  while (!active.empty()) {
    std::vector<double> mean(clip_count, 0.0);
    for (const auto& id : active) {
      for (int i = 0; i < clip_count; ++i) mean[i] += seq.at(id)[i];
    }
    for (double& m : mean) m /= static_cast<double>(active.size());

    std::vector<std::string> keep;
    for (const auto& id : active) {
      const double r = PearsonOrZero(seq.at(id), mean);
      result.correlation[id] = r;
      if (r < threshold) {
        result.dropped.push_back(id);
      } else {
        keep.push_back(id);
      }
    }
    const bool changed = keep.size() != active.size();
    active = std::move(keep);
    if (!changed) break;
  }
  std::sort(result.dropped.begin(), result.dropped.end());
  for (const RatingRecord& r : event_records) {
    if (std::binary_search(active.begin(), active.end(), r.participant_id)) {
      result.retained.push_back(r);
    }
  }
  return result;
}

}  // namespace riskdecode
