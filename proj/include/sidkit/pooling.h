// include/sidkit/pooling.h

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

#ifndef SIDKIT_POOLING_H_
#define SIDKIT_POOLING_H_

#include <cstddef>
#include <span>
#include <vector>

namespace sidkit::pooling {

// A T x F matrix of frame-level features, row-major (one row per frame).
struct FrameMatrix {
  int num_frames = 0;
  int feat_dim = 0;
  std::vector<float> data;  // num_frames * feat_dim

  std::span<const float> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * feat_dim,
            static_cast<std::size_t>(feat_dim)};
  }
};

// Parameters of the attention MLP used by attentive statistics pooling:
//   e_t = v' tanh(W x_t + b) + k' x_t
// W is H x F row-major, b and v have size H, k has size F.  A zero-initialized
// parameter set (all of W, b, v, k zero) gives uniform attention weights.
struct AttentionParams {
  int hidden_dim = 0;
  int feat_dim = 0;
  std::vector<double> W;  // hidden_dim * feat_dim, row-major
  std::vector<double> b;  // hidden_dim
  std::vector<double> v;  // hidden_dim
  std::vector<double> k;  // feat_dim

  static AttentionParams zeros(int hidden_dim, int feat_dim);
};

// Temporal average pooling: the per-dimension mean over frames.  Output size F.
std::vector<double> tap(const FrameMatrix &frames);

// Temporal statistics pooling: concatenated mean and standard deviation,
// output size 2F.  The variance is clamped at zero before adding eps, so a
// constant input yields exactly sqrt(eps) in the deviation half.
std::vector<double> tsp(const FrameMatrix &frames, double eps = 1e-10);

// Attentive statistics pooling result: concatenated weighted mean and weighted
// standard deviation (size 2F) plus the attention weights (size T, a
// probability vector).
struct AspResult {
  std::vector<double> stats;
  std::vector<double> weights;
};

// Attentive statistics pooling: softmax attention weights from the scorer in
// AttentionParams, then weighted mean and weighted standard deviation.
AspResult asp(const FrameMatrix &frames, const AttentionParams &params,
              double eps = 1e-10);

// Sums terms in ascending order after sorting, so the result is invariant to
// the original ordering of the terms.  Used by all poolers so that permuting
// frames permutes only the terms of each reduction, never the result.
double ordered_sum(std::vector<double> terms);

}  // namespace sidkit::pooling

#endif  // SIDKIT_POOLING_H_
