// src/pooling.cc

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

#include "sidkit/pooling.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "sidkit/error.h"

namespace sidkit::pooling {

namespace {

void check_frames(const FrameMatrix &frames) {
  if (frames.num_frames <= 0 || frames.feat_dim <= 0)
    throw DataError("pooling requires at least one frame and one feature dim");
  if (frames.data.size() != static_cast<std::size_t>(frames.num_frames) *
                                static_cast<std::size_t>(frames.feat_dim))
    throw DataError("frame matrix storage does not match its dimensions");
  for (float v : frames.data)
    if (!std::isfinite(v))
      throw DataError("frame matrix contains a non-finite value");
}

}  // namespace

AttentionParams AttentionParams::zeros(int hidden_dim, int feat_dim) {
  AttentionParams p;
  p.hidden_dim = hidden_dim;
  p.feat_dim = feat_dim;
  p.W.assign(static_cast<std::size_t>(hidden_dim) * feat_dim, 0.0);
  p.b.assign(hidden_dim, 0.0);
  p.v.assign(hidden_dim, 0.0);
  p.k.assign(feat_dim, 0.0);
  return p;
}

double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

std::vector<double> tap(const FrameMatrix &frames) {
  check_frames(frames);
  const int T = frames.num_frames, F = frames.feat_dim;
  std::vector<double> out(F);
  std::vector<double> terms(T);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) terms[t] = frames.data[t * F + f];
    out[f] = ordered_sum(terms) / T;
  }
  return out;
}

std::vector<double> tsp(const FrameMatrix &frames, double eps) {
  check_frames(frames);
  const int T = frames.num_frames, F = frames.feat_dim;
  std::vector<double> out(2 * F);
  std::vector<double> terms(T);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) terms[t] = frames.data[t * F + f];
    double mean = ordered_sum(terms) / T;
    for (int t = 0; t < T; ++t) {
      double x = frames.data[t * F + f];
      terms[t] = x * x;
    }
    double var = ordered_sum(terms) / T - mean * mean;
    out[f] = mean;
    out[F + f] = std::sqrt(std::max(0.0, var) + eps);
  }
  return out;
}

AspResult asp(const FrameMatrix &frames, const AttentionParams &params,
              double eps) {
  check_frames(frames);
  const int T = frames.num_frames, F = frames.feat_dim;
  const int H = params.hidden_dim;
  if (params.feat_dim != F)
    throw DataError("attention parameters expect feat dim " +
                    std::to_string(params.feat_dim) + ", frames have " +
                    std::to_string(F));
  if (params.W.size() != static_cast<std::size_t>(H) * F ||
      params.b.size() != static_cast<std::size_t>(H) ||
      params.v.size() != static_cast<std::size_t>(H) ||
      params.k.size() != static_cast<std::size_t>(F))
    throw DataError("attention parameter sizes are inconsistent");

  // Attention energies e_t = v' tanh(W x_t + b) + k' x_t.  Each inner product
  // is an ordered sum over its terms, so a frame's energy depends only on the
  // frame's contents, never on its position.
  std::vector<double> energy(T);
  std::vector<double> hterms(F);
  std::vector<double> vterms(H);
  std::vector<double> kterms(F);
  for (int t = 0; t < T; ++t) {
    auto x = frames.frame(t);
    for (int h = 0; h < H; ++h) {
      for (int f = 0; f < F; ++f) hterms[f] = params.W[h * F + f] * x[f];
      vterms[h] = params.v[h] * std::tanh(ordered_sum(hterms) + params.b[h]);
    }
    for (int f = 0; f < F; ++f) kterms[f] = params.k[f] * x[f];
    energy[t] = ordered_sum(vterms) + ordered_sum(kterms);
  }

  // Max-stabilized softmax; the denominator is again an ordered sum.
  double emax = *std::max_element(energy.begin(), energy.end());
  std::vector<double> w(T);
  for (int t = 0; t < T; ++t) w[t] = std::exp(energy[t] - emax);
  double denom = ordered_sum(w);
  for (int t = 0; t < T; ++t) w[t] /= denom;

  AspResult result;
  result.weights = w;
  result.stats.resize(2 * F);
  std::vector<double> terms(T);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) terms[t] = w[t] * frames.data[t * F + f];
    double mean = ordered_sum(terms);
    for (int t = 0; t < T; ++t) {
      double x = frames.data[t * F + f];
      terms[t] = w[t] * x * x;
    }
    double var = ordered_sum(terms) - mean * mean;
    result.stats[f] = mean;
    result.stats[F + f] = std::sqrt(std::max(0.0, var) + eps);
  }
  return result;
}

}  // namespace sidkit::pooling
