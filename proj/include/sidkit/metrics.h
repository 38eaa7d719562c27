// include/sidkit/metrics.h

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

#ifndef SIDKIT_METRICS_H_
#define SIDKIT_METRICS_H_

#include <vector>

#include "sidkit/types.h"

namespace sidkit::metrics {

struct EerResult {
  double eer = 0.0;        // in [0, 1]
  double threshold = 0.0;  // score at the crossing
};

// Equal error rate.  Thresholds sweep every distinct score with
// FRR(t) = P(target < t) and FAR(t) = P(nontarget >= t); the crossing of the
// two staircase curves is linearly interpolated, and a tie interval (exact
// FAR == FRR over a range) reports its midpoint threshold.  Requires at least
// one target and one nontarget trial; every trial must be labeled and scored.
EerResult compute_eer(const ScoreList &scores, const TrialList &trials);

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
  void validate() const;
};

struct DcfResult {
  double min_dcf = 0.0;
  double threshold = 0.0;
};

// Minimum normalized detection cost:
//   DCF(t) = c_miss p FRR(t) + c_fa (1-p) FAR(t), normalized by
//   min(c_miss p, c_fa (1-p)), minimized over thresholds at all distinct
// scores plus the accept-all / reject-all endpoints.
DcfResult compute_min_dcf(const ScoreList &scores, const TrialList &trials,
                          const DcfParams &params);

struct DerBreakdown {
  double miss_pct = 0.0;
  double fa_pct = 0.0;
  double confusion_pct = 0.0;
  double der_pct = 0.0;
  double scored_speech_seconds = 0.0;
};

// Diarization error rate with MISS/FA/confusion decomposition.  The time axis
// is cut at exact boundary events (no frame quantization), collar/2 is excised
// around every reference segment boundary, and speaker confusion is measured
// against the optimal one-to-one reference-to-hypothesis speaker mapping per
// recording (maximum matched speech time).  With score_overlap false, regions
// where the reference has overlapped speech are excluded entirely.
DerBreakdown compute_der(const Diarization &ref, const Diarization &hyp,
                         double collar = 0.25, bool score_overlap = true);

// Maximum-total-weight one-to-one assignment between rows and columns of a
// nonnegative cost matrix (rows*cols entries, row-major).  Returns for each
// row the matched column or -1.  Exposed for direct testing against
// brute-force enumeration.
std::vector<int> max_assignment(const std::vector<double> &weights, int rows,
                                int cols);

}  // namespace sidkit::metrics

#endif  // SIDKIT_METRICS_H_
