// src/backend.cc

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

#include "sidkit/backend.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sidkit/error.h"
#include "sidkit/kernels.h"

namespace sidkit::backend {

double cosine_score(std::span<const float> enroll,
                    std::span<const float> test) {
  if (enroll.size() != test.size())
    throw DataError("cosine_score dimension mismatch: " +
                    std::to_string(enroll.size()) + " vs " +
                    std::to_string(test.size()));
  if (enroll.empty()) throw DataError("cosine_score on empty vectors");
  double ee = kernels::sumsq_f32(enroll.data(), enroll.size());
  double tt = kernels::sumsq_f32(test.data(), test.size());
  if (ee == 0.0 || tt == 0.0)
    throw NumericError("cosine score undefined for a zero-norm embedding");
  double et = kernels::dot_f32(enroll.data(), test.data(), enroll.size());
  return std::clamp(et / std::sqrt(ee * tt), -1.0, 1.0);
}

MeanVector compute_mean(const EmbeddingSet &set) {
  if (set.empty()) throw DataError("cannot compute the mean of an empty set");
  const int F = set.dim();
  MeanVector mv;
  mv.mean.assign(F, 0.0);
  mv.count = set.size();
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto row = set.row(i);
    for (int f = 0; f < F; ++f) mv.mean[f] += row[f];
  }
  for (int f = 0; f < F; ++f) mv.mean[f] /= static_cast<double>(mv.count);
  return mv;
}

EmbeddingSet apply_mean_norm(const EmbeddingSet &set, const MeanVector &mean) {
  if (set.dim() != static_cast<int>(mean.mean.size()))
    throw DataError("mean vector dimension " +
                    std::to_string(mean.mean.size()) +
                    " does not match embedding dimension " +
                    std::to_string(set.dim()));
  EmbeddingSet out;
  std::vector<float> buf(set.dim());
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto row = set.row(i);
    for (int f = 0; f < set.dim(); ++f)
      buf[f] = static_cast<float>(row[f] - mean.mean[f]);
    out.add(set.key(i), buf);
  }
  return out;
}

EmbeddingSet length_normalize(const EmbeddingSet &set) {
  const int F = set.dim();
  const double target = std::sqrt(static_cast<double>(F));
  EmbeddingSet out;
  std::vector<float> buf(F);
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto row = set.row(i);
    double norm = std::sqrt(kernels::sumsq_f32(row.data(), row.size()));
    if (norm == 0.0)
      throw NumericError("cannot length-normalize zero vector \"" +
                         set.key(i) + "\"");
    for (int f = 0; f < F; ++f)
      buf[f] = static_cast<float>(row[f] * target / norm);
    out.add(set.key(i), buf);
  }
  return out;
}

ScoreList score_trials(const PairScorer &scorer, const EmbeddingSet &enroll_set,
                       const EmbeddingSet &test_set, const TrialList &trials) {
  ScoreList out;
  out.scores.reserve(trials.trials.size());
  for (const Trial &trial : trials.trials) {
    std::int64_t ei = enroll_set.find(trial.enroll);
    if (ei < 0)
      throw DataError("enroll key \"" + trial.enroll +
                      "\" not found in the enrollment set");
    std::int64_t ti = test_set.find(trial.test);
    if (ti < 0)
      throw DataError("test key \"" + trial.test +
                      "\" not found in the test set");
    ScoredTrial s;
    s.enroll = trial.enroll;
    s.test = trial.test;
    s.score = scorer(enroll_set.row(static_cast<std::size_t>(ei)),
                     test_set.row(static_cast<std::size_t>(ti)));
    out.scores.push_back(std::move(s));
  }
  return out;
}

}  // namespace sidkit::backend
