// include/sidkit/diarize.h

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

#ifndef SIDKIT_DIARIZE_H_
#define SIDKIT_DIARIZE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sidkit/types.h"

namespace sidkit::diarize {

struct SubsegmentPlan {
  double window = 1.5;   // seconds
  double shift = 0.75;   // seconds
  double min_dur = 0.0;  // final pieces shorter than this merge backwards
  void validate() const;
};

struct ClusterConfig {
  double p_percentile = 0.95;  // kept fraction per affinity row
  int max_speakers = 20;
  std::optional<int> fixed_speakers;
  int kmeans_restarts = 10;
  std::uint64_t seed = 0;
  void validate() const;
};

// Deterministic subsegment key "<recording>-<start_ms>-<end_ms>".
std::string subsegment_key(const Segment &seg);

// Tiles every VAD segment with [start + i*shift, start + i*shift + window];
// the tile whose raw end first reaches the segment end is clipped to it, and
// a clipped tile shorter than min_dur merges into the previous one.  The
// speaker field of the output carries the subsegment key.
std::vector<Segment> subsegment(const std::vector<Segment> &vad,
                                const SubsegmentPlan &plan);

// Pairwise cosine similarity with a unit diagonal.
Eigen::MatrixXd build_affinity(const std::vector<std::vector<float>> &embs);

// Per row, keep the ceil(p * N) largest entries and attenuate everything
// strictly below that row's cutoff by x0.01 (soft pruning keeps the graph
// connected), then re-symmetrize as (M + M')/2.  p = 1 keeps every entry.
Eigen::MatrixXd refine_affinity(const Eigen::MatrixXd &a, double p_percentile);

struct ClusterResult {
  std::vector<int> labels;  // in 0..k-1
  int k = 0;
};

// Normalized-Laplacian spectral clustering.  The speaker count is
// fixed_speakers when given (capped to N), otherwise chosen by the largest
// gap between consecutive ascending Laplacian eigenvalues, searching from the
// first gap (so k = 1 is reachable).  Rows of the k smallest eigenvectors are
// unit-normalized and clustered by seeded k-means++ restarts.  node_names, if
// given, are used in degenerate-graph error messages.
ClusterResult spectral_cluster(const Eigen::MatrixXd &affinity,
                               const ClusterConfig &cfg,
                               const std::vector<std::string> &node_names = {});

// Full single-recording pipeline: subsegment the VAD, look up one embedding
// per subsegment key, cluster, resolve overlapping tiles by nearest tile
// center into a hard segmentation, merge contiguous same-speaker pieces, and
// name speakers "spk00", "spk01", ... by first appearance in time.
Diarization diarize_recording(const std::vector<Segment> &vad,
                              const EmbeddingSet &embeddings,
                              const SubsegmentPlan &plan,
                              const ClusterConfig &cfg);

}  // namespace sidkit::diarize

#endif  // SIDKIT_DIARIZE_H_
