// src/metrics.cc

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

#include "sidkit/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include "sidkit/error.h"

namespace sidkit::metrics {

namespace {

// Joins trials with their scores and splits them into target and nontarget
// score arrays, both sorted ascending.
struct LabeledScores {
  std::vector<double> targets;
  std::vector<double> nontargets;
  std::vector<double> thresholds;  // sorted distinct scores
};

LabeledScores join_scores(const ScoreList &scores, const TrialList &trials) {
  std::map<std::pair<std::string, std::string>, double> lookup;
  for (const ScoredTrial &s : scores.scores) {
    auto key = std::make_pair(s.enroll, s.test);
    auto [it, inserted] = lookup.emplace(key, s.score);
    if (!inserted && it->second != s.score)
      throw DataError("conflicting scores for trial (" + s.enroll + ", " +
                      s.test + ")");
  }
  LabeledScores out;
  for (const Trial &t : trials.trials) {
    if (t.label == TrialLabel::kUnknown)
      throw DataError("trial (" + t.enroll + ", " + t.test +
                      ") has no target/nontarget label");
    auto it = lookup.find(std::make_pair(t.enroll, t.test));
    if (it == lookup.end())
      throw DataError("no score found for trial (" + t.enroll + ", " + t.test +
                      ")");
    if (t.label == TrialLabel::kTarget)
      out.targets.push_back(it->second);
    else
      out.nontargets.push_back(it->second);
  }
  if (out.targets.empty() || out.nontargets.empty())
    throw DataError("need at least one target and one nontarget trial");
  std::sort(out.targets.begin(), out.targets.end());
  std::sort(out.nontargets.begin(), out.nontargets.end());
  out.thresholds.reserve(out.targets.size() + out.nontargets.size());
  std::merge(out.targets.begin(), out.targets.end(), out.nontargets.begin(),
             out.nontargets.end(), std::back_inserter(out.thresholds));
  out.thresholds.erase(
      std::unique(out.thresholds.begin(), out.thresholds.end()),
      out.thresholds.end());
  return out;
}

// FRR(t) = #{target < t} / T; both computed from integer counts so that any
// strictly increasing transform of the scores reproduces the exact same
// values.
double frr_at(const LabeledScores &ls, double t) {
  auto lo = std::lower_bound(ls.targets.begin(), ls.targets.end(), t);
  return static_cast<double>(lo - ls.targets.begin()) /
         static_cast<double>(ls.targets.size());
}

// FAR(t) = #{nontarget >= t} / N.
double far_at(const LabeledScores &ls, double t) {
  auto lo = std::lower_bound(ls.nontargets.begin(), ls.nontargets.end(), t);
  return static_cast<double>(ls.nontargets.end() - lo) /
         static_cast<double>(ls.nontargets.size());
}

}  // namespace

EerResult compute_eer(const ScoreList &scores, const TrialList &trials) {
  LabeledScores ls = join_scores(scores, trials);
  const std::size_t m = ls.thresholds.size();

  // g(t) = FAR(t) - FRR(t) is non-increasing along the sweep, starts at +1
  // (accept everything at the minimum score) and reaches -1 at the virtual
  // reject-all point past the maximum score.  The equal-error point is where
  // g crosses zero.
  std::vector<double> frr(m + 1), far(m + 1), thr(m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    thr[i] = ls.thresholds[i];
    frr[i] = frr_at(ls, ls.thresholds[i]);
    far[i] = far_at(ls, ls.thresholds[i]);
  }
  thr[m] = ls.thresholds.back();  // virtual reject-all point
  frr[m] = 1.0;
  far[m] = 0.0;

  auto g = [&](std::size_t i) { return far[i] - frr[i]; };

  // Exact-zero run: FRR == FAR at every threshold of the run and the common
  // value is constant; report it with the midpoint threshold.
  std::size_t first_zero = m + 1, last_zero = m + 1;
  for (std::size_t i = 0; i <= m; ++i) {
    if (g(i) == 0.0) {
      if (first_zero == m + 1) first_zero = i;
      last_zero = i;
    }
  }
  if (first_zero != m + 1) {
    EerResult res;
    res.eer = frr[first_zero];
    res.threshold = 0.5 * (thr[first_zero] + thr[last_zero]);
    return res;
  }

  for (std::size_t i = 0; i + 1 <= m; ++i) {
    if (g(i) > 0.0 && g(i + 1) < 0.0) {
      double lambda = g(i) / (g(i) - g(i + 1));
      EerResult res;
      res.eer = frr[i] + lambda * (frr[i + 1] - frr[i]);
      res.threshold = thr[i] + lambda * (thr[i + 1] - thr[i]);
      return res;
    }
  }
  throw NumericError("equal error rate crossing not found");
}

void DcfParams::validate() const {
  if (!(p_target > 0.0 && p_target < 1.0))
    throw DataError("p_target must lie strictly inside (0, 1)");
  if (!(c_miss > 0.0) || !(c_fa > 0.0))
    throw DataError("DCF costs must be positive");
}

DcfResult compute_min_dcf(const ScoreList &scores, const TrialList &trials,
                          const DcfParams &params) {
  params.validate();
  LabeledScores ls = join_scores(scores, trials);
  const double w_miss = params.c_miss * params.p_target;
  const double w_fa = params.c_fa * (1.0 - params.p_target);
  const double norm = std::min(w_miss, w_fa);

  DcfResult best;
  best.min_dcf = std::numeric_limits<double>::infinity();
  auto consider = [&](double frr, double far, double t) {
    double dcf = (w_miss * frr + w_fa * far) / norm;
    if (dcf < best.min_dcf) {
      best.min_dcf = dcf;
      best.threshold = t;
    }
  };
  for (double t : ls.thresholds) consider(frr_at(ls, t), far_at(ls, t), t);
  // Reject-all endpoint (the accept-all one is the minimum-score threshold).
  consider(1.0, 0.0, std::numeric_limits<double>::infinity());
  return best;
}

std::vector<int> max_assignment(const std::vector<double> &weights, int rows,
                                int cols) {
  if (rows < 0 || cols < 0 ||
      weights.size() != static_cast<std::size_t>(rows) * cols)
    throw DataError("assignment matrix storage does not match its shape");
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);

  // Hungarian algorithm on the square min-cost version: costs are
  // max(weight) - weight, padded with zeros to n x n.  O(n^3) potentials
  // formulation.
  const int n = std::max(rows, cols);
  double wmax = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DataError("assignment weights must be nonnegative");
    wmax = std::max(wmax, w);
  }
  auto cost = [&](int r, int c) -> double {
    if (r < rows && c < cols)
      return wmax - weights[static_cast<std::size_t>(r) * cols + c];
    return 0.0;  // padding
  };

  // Potentials u, v and column matching, 1-indexed internally.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[col 1..n] = row
  std::vector<int> way(n + 1, 0);
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> result(rows, -1);
  for (int j = 1; j <= n; ++j) {
    int r = match[j] - 1, c = j - 1;
    if (r >= 0 && r < rows && c < cols) result[r] = c;
  }
  return result;
}

}  // namespace sidkit::metrics
