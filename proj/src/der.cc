// src/der.cc

// Copyright 2024  The sidkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sidkit/error.h"
#include "sidkit/metrics.h"

namespace sidkit::metrics {

namespace {

// Time totals for one recording, in seconds.
struct RecordingTotals {
  double miss = 0.0;
  double fa = 0.0;
  double confusion = 0.0;
  double scored_ref = 0.0;
};

// Merged, sorted no-score intervals.
std::vector<std::pair<double, double>> merge_intervals(
    std::vector<std::pair<double, double>> zones) {
  std::sort(zones.begin(), zones.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto &z : zones) {
    if (!merged.empty() && z.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, z.second);
    else
      merged.push_back(z);
  }
  return merged;
}

bool covered(const std::vector<std::pair<double, double>> &zones, double t) {
  auto it = std::upper_bound(zones.begin(), zones.end(),
                             std::make_pair(t, std::numeric_limits<double>::max()));
  if (it == zones.begin()) return false;
  --it;
  return t >= it->first && t < it->second;
}

RecordingTotals score_recording(const std::vector<Segment> &ref,
                                const std::vector<Segment> &hyp, double collar,
                                bool score_overlap) {
  // Speaker name -> dense index, sorted for determinism.
  std::map<std::string, int> ref_ids, hyp_ids;
  for (const Segment &s : ref) ref_ids.emplace(s.speaker, 0);
  for (const Segment &s : hyp) hyp_ids.emplace(s.speaker, 0);
  int next = 0;
  for (auto &kv : ref_ids) kv.second = next++;
  next = 0;
  for (auto &kv : hyp_ids) kv.second = next++;
  const int nr = static_cast<int>(ref_ids.size());
  const int nh = static_cast<int>(hyp_ids.size());

  // Collar/2 excised on each side of every reference boundary.
  std::vector<std::pair<double, double>> noscore;
  if (collar > 0.0) {
    for (const Segment &s : ref) {
      noscore.emplace_back(s.start - collar / 2, s.start + collar / 2);
      noscore.emplace_back(s.end - collar / 2, s.end + collar / 2);
    }
    noscore = merge_intervals(std::move(noscore));
  }

  // Elementary intervals: cut the axis at every segment and no-score
  // boundary, so speaker activity and scoring state are constant inside each
  // piece.  No frame quantization anywhere.
  std::vector<double> events;
  for (const Segment &s : ref) {
    events.push_back(s.start);
    events.push_back(s.end);
  }
  for (const Segment &s : hyp) {
    events.push_back(s.start);
    events.push_back(s.end);
  }
  for (const auto &z : noscore) {
    events.push_back(z.first);
    events.push_back(z.second);
  }
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  auto active_at = [](const std::vector<Segment> &segs,
                      const std::map<std::string, int> &ids, double t,
                      std::vector<char> &mask) {
    std::fill(mask.begin(), mask.end(), 0);
    int count = 0;
    for (const Segment &s : segs) {
      if (s.start <= t && t < s.end) {
        int id = ids.at(s.speaker);
        if (!mask[id]) {
          mask[id] = 1;
          ++count;
        }
      }
    }
    return count;
  };

  // First pass: overlap durations between each (ref, hyp) speaker pair over
  // scored regions, feeding the optimal one-to-one mapping.
  std::vector<double> overlap(static_cast<std::size_t>(nr) * nh, 0.0);
  std::vector<char> rmask(nr), hmask(nh);
  struct Piece {
    double dur;
    int nref, nhyp;
    std::vector<char> rmask, hmask;
  };
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    double t1 = events[i], t2 = events[i + 1];
    if (!(t2 > t1)) continue;
    double mid = t1 + (t2 - t1) / 2;
    if (covered(noscore, mid)) continue;
    Piece piece;
    piece.dur = t2 - t1;
    piece.nref = active_at(ref, ref_ids, mid, rmask);
    piece.nhyp = active_at(hyp, hyp_ids, mid, hmask);
    if (!score_overlap && piece.nref > 1) continue;
    if (piece.nref == 0 && piece.nhyp == 0) continue;
    piece.rmask = rmask;
    piece.hmask = hmask;
    for (int r = 0; r < nr; ++r) {
      if (!rmask[r]) continue;
      for (int h = 0; h < nh; ++h)
        if (hmask[h]) overlap[static_cast<std::size_t>(r) * nh + h] += piece.dur;
    }
    pieces.push_back(std::move(piece));
  }

  std::vector<int> mapping = max_assignment(overlap, nr, nh);

  RecordingTotals totals;
  for (const Piece &piece : pieces) {
    int correct = 0;
    for (int r = 0; r < nr; ++r)
      if (piece.rmask[r] && mapping[r] >= 0 && piece.hmask[mapping[r]])
        ++correct;
    totals.miss += piece.dur * std::max(0, piece.nref - piece.nhyp);
    totals.fa += piece.dur * std::max(0, piece.nhyp - piece.nref);
    totals.confusion +=
        piece.dur * (std::min(piece.nref, piece.nhyp) - correct);
    totals.scored_ref += piece.dur * piece.nref;
  }
  return totals;
}

}  // namespace

DerBreakdown compute_der(const Diarization &ref, const Diarization &hyp,
                         double collar, bool score_overlap) {
  if (collar < 0.0) throw DataError("collar must be nonnegative");
  for (const Segment &s : ref.segments) validate_segment(s);
  for (const Segment &s : hyp.segments) validate_segment(s);

  std::set<std::string> recordings;
  for (const Segment &s : ref.segments) recordings.insert(s.recording_id);
  for (const Segment &s : hyp.segments) recordings.insert(s.recording_id);

  RecordingTotals sum;
  for (const std::string &rec : recordings) {
    RecordingTotals t = score_recording(ref.recording(rec), hyp.recording(rec),
                                        collar, score_overlap);
    sum.miss += t.miss;
    sum.fa += t.fa;
    sum.confusion += t.confusion;
    sum.scored_ref += t.scored_ref;
  }
  if (!(sum.scored_ref > 0.0))
    throw NumericError(
        "no scored reference speech remains after collar excision");

  DerBreakdown out;
  out.scored_speech_seconds = sum.scored_ref;
  out.miss_pct = 100.0 * sum.miss / sum.scored_ref;
  out.fa_pct = 100.0 * sum.fa / sum.scored_ref;
  out.confusion_pct = 100.0 * sum.confusion / sum.scored_ref;
  out.der_pct = out.miss_pct + out.fa_pct + out.confusion_pct;
  return out;
}

}  // namespace sidkit::metrics
