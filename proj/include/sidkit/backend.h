// include/sidkit/backend.h

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

#ifndef SIDKIT_BACKEND_H_
#define SIDKIT_BACKEND_H_

#include <functional>
#include <span>
#include <vector>

#include "sidkit/types.h"

namespace sidkit::backend {

// dot(e,t) / (|e| |t|), in [-1, 1].  Zero-norm inputs raise a numeric error.
double cosine_score(std::span<const float> enroll, std::span<const float> test);

struct MeanVector {
  std::vector<double> mean;
  std::size_t count = 0;
};

// Per-dimension mean of a nonempty embedding set.
MeanVector compute_mean(const EmbeddingSet &set);

// Subtracts the mean from every vector; the mean of the result is zero up to
// float rounding.
EmbeddingSet apply_mean_norm(const EmbeddingSet &set, const MeanVector &mean);

// Scales every vector to norm sqrt(F) (the usual Gaussianization step in
// front of PLDA).  Zero vectors raise a numeric error.
EmbeddingSet length_normalize(const EmbeddingSet &set);

// A scorer maps an (enroll, test) pair of embeddings to a scalar score.
using PairScorer =
    std::function<double(std::span<const float>, std::span<const float>)>;

// One score per trial, input order preserved.  Missing keys raise a lookup
// error naming the key and the side it was expected on.
ScoreList score_trials(const PairScorer &scorer, const EmbeddingSet &enroll_set,
                       const EmbeddingSet &test_set, const TrialList &trials);

}  // namespace sidkit::backend

#endif  // SIDKIT_BACKEND_H_
