// src/diarize.cc

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

#include "sidkit/diarize.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

#include "sidkit/backend.h"
#include "sidkit/error.h"

namespace sidkit::diarize {

namespace {

// mt19937 output mapped to [0, 1); distributions from <random> are
// implementation-defined, the raw engine is not.
double uniform01(std::mt19937 &rng) {
  return static_cast<double>(rng()) * (1.0 / 4294967296.0);
}

struct KMeansResult {
  std::vector<int> labels;
  double inertia = 0.0;
};

KMeansResult kmeans_once(const Eigen::MatrixXd &points, int k,
                         std::uint32_t seed) {
  const Eigen::Index n = points.rows();
  std::mt19937 rng(seed);

  // k-means++ seeding.
  std::vector<Eigen::Index> center_idx;
  center_idx.push_back(static_cast<Eigen::Index>(rng() % n));
  Eigen::VectorXd dist2 =
      (points.rowwise() - points.row(center_idx[0])).rowwise().squaredNorm();
  while (static_cast<int>(center_idx.size()) < k) {
    double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng() % n);
    }
    center_idx.push_back(pick);
    Eigen::VectorXd d =
        (points.rowwise() - points.row(pick)).rowwise().squaredNorm();
    dist2 = dist2.cwiseMin(d);
  }

  Eigen::MatrixXd centers(k, points.cols());
  for (int c = 0; c < k; ++c) centers.row(c) = points.row(center_idx[c]);

  KMeansResult res;
  res.labels.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      if (res.labels[i] != best_c) {
        res.labels[i] = best_c;
        changed = true;
      }
    }
    // Recompute centers; an emptied cluster steals the point farthest from
    // its current center.
    std::vector<int> counts(k, 0);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.labels[i]) += points.row(i);
      ++counts[res.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
        continue;
      }
      double far = -1.0;
      Eigen::Index far_i = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double d =
            (points.row(i) - centers.row(res.labels[i])).squaredNorm();
        if (d > far && counts[res.labels[i]] > 1) {
          far = d;
          far_i = i;
        }
      }
      if (far >= 0.0) {
        --counts[res.labels[far_i]];
        res.labels[far_i] = c;
        counts[c] = 1;
        centers.row(c) = points.row(far_i);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }

  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    res.inertia += (points.row(i) - centers.row(res.labels[i])).squaredNorm();
  return res;
}

}  // namespace

void SubsegmentPlan::validate() const {
  if (!(window > 0.0) || !(shift > 0.0))
    throw DataError("subsegment window and shift must be positive");
  if (shift > window)
    throw DataError("subsegment shift must not exceed the window");
  if (min_dur < 0.0) throw DataError("min_dur must be nonnegative");
}

void ClusterConfig::validate() const {
  if (!(p_percentile > 0.0 && p_percentile <= 1.0))
    throw DataError("p_percentile must lie in (0, 1]");
  if (max_speakers < 1) throw DataError("max_speakers must be at least 1");
  if (fixed_speakers) {
    if (*fixed_speakers < 1)
      throw DataError("fixed speaker count must be at least 1");
    if (*fixed_speakers > max_speakers)
      throw DataError("fixed speaker count exceeds max_speakers");
  }
  if (kmeans_restarts < 1)
    throw DataError("kmeans_restarts must be at least 1");
}

std::string subsegment_key(const Segment &seg) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "-%08lld-%08lld",
                static_cast<long long>(std::llround(seg.start * 1000.0)),
                static_cast<long long>(std::llround(seg.end * 1000.0)));
  return seg.recording_id + buf;
}

std::vector<Segment> subsegment(const std::vector<Segment> &vad,
                                const SubsegmentPlan &plan) {
  plan.validate();
  std::vector<Segment> out;
  for (const Segment &seg : vad) {
    validate_segment(seg);
    std::size_t first = out.size();
    for (int i = 0;; ++i) {
      double a = seg.start + i * plan.shift;
      double b = a + plan.window;
      Segment sub;
      sub.recording_id = seg.recording_id;
      sub.start = a;
      if (b >= seg.end) {  // final tile, clipped to the segment end
        sub.end = seg.end;
        if (sub.end - sub.start < plan.min_dur && out.size() > first) {
          out.back().end = seg.end;  // too short: merge backwards
          out.back().speaker = subsegment_key(out.back());
        } else {
          sub.speaker = subsegment_key(sub);
          out.push_back(sub);
        }
        break;
      }
      sub.end = b;
      sub.speaker = subsegment_key(sub);
      out.push_back(sub);
    }
  }
  return out;
}

Eigen::MatrixXd build_affinity(const std::vector<std::vector<float>> &embs) {
  const auto n = static_cast<Eigen::Index>(embs.size());
  if (n < 1) throw DataError("affinity needs at least one embedding");
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double c = backend::cosine_score(embs[i], embs[j]);
      a(i, j) = c;
      a(j, i) = c;
    }
  }
  return a;
}

Eigen::MatrixXd refine_affinity(const Eigen::MatrixXd &a,
                                double p_percentile) {
  if (!(p_percentile > 0.0 && p_percentile <= 1.0))
    throw DataError("p_percentile must lie in (0, 1]");
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DataError("affinity matrix must be square");
  Eigen::MatrixXd m = a;
  const auto keep = static_cast<Eigen::Index>(
      std::ceil(p_percentile * static_cast<double>(n)));
  std::vector<double> row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[j] = a(i, j);
    std::nth_element(row.begin(), row.begin() + (keep - 1), row.end(),
                     std::greater<double>());
    double cutoff = row[keep - 1];
    for (Eigen::Index j = 0; j < n; ++j)
      if (a(i, j) < cutoff) m(i, j) *= 0.01;
  }
  return 0.5 * (m + m.transpose());
}

ClusterResult spectral_cluster(const Eigen::MatrixXd &affinity,
                               const ClusterConfig &cfg,
                               const std::vector<std::string> &node_names) {
  cfg.validate();
  const Eigen::Index n = affinity.rows();
  if (n < 1) throw DataError("cannot cluster an empty affinity matrix");
  if (affinity.cols() != n)
    throw DataError("affinity matrix must be square");

  ClusterResult res;
  if (n == 1) {
    res.labels = {0};
    res.k = 1;
    return res;
  }

  Eigen::VectorXd degree = affinity.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(degree[i] > 1e-12)) {
      std::string who = i < static_cast<Eigen::Index>(node_names.size())
                            ? "\"" + node_names[i] + "\""
                            : "index " + std::to_string(i);
      throw NumericError("degenerate affinity graph: node " + who +
                         " has no positive-degree connections");
    }
  }

  Eigen::VectorXd dinv_sqrt = degree.array().rsqrt();
  Eigen::MatrixXd lap =
      Eigen::MatrixXd::Identity(n, n) -
      (dinv_sqrt.asDiagonal() * affinity * dinv_sqrt.asDiagonal());
  lap = 0.5 * (lap + lap.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
  if (es.info() != Eigen::Success)
    throw NumericError("Laplacian eigendecomposition failed");
  const Eigen::VectorXd &evals = es.eigenvalues();  // ascending

  int k;
  if (cfg.fixed_speakers) {
    k = std::min<int>(*cfg.fixed_speakers, static_cast<int>(n));
  } else {
    // Largest eigengap, searched from the first gap so single-speaker inputs
    // resolve to k = 1; ties break toward fewer speakers.
    Eigen::Index max_gap_i =
        std::min<Eigen::Index>(cfg.max_speakers - 1, n - 1);
    k = 1;
    double best_gap = -1.0;
    for (Eigen::Index i = 1; i <= max_gap_i; ++i) {
      double gap = evals[i] - evals[i - 1];
      if (gap > best_gap) {
        best_gap = gap;
        k = static_cast<int>(i);
      }
    }
    if (max_gap_i < 1) k = 1;
  }

  Eigen::MatrixXd embed = es.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < cfg.kmeans_restarts; ++restart) {
    auto seed = static_cast<std::uint32_t>(cfg.seed + restart);
    KMeansResult r = kmeans_once(embed, k, seed);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  res.labels = std::move(best.labels);
  res.k = k;
  return res;
}

Diarization diarize_recording(const std::vector<Segment> &vad,
                              const EmbeddingSet &embeddings,
                              const SubsegmentPlan &plan,
                              const ClusterConfig &cfg) {
  Diarization out;
  if (vad.empty()) return out;
  const std::string &rec = vad.front().recording_id;
  for (const Segment &s : vad)
    if (s.recording_id != rec)
      throw DataError("diarize_recording expects a single recording, got \"" +
                      rec + "\" and \"" + s.recording_id + "\"");
  std::vector<Segment> sorted_vad = vad;
  std::stable_sort(sorted_vad.begin(), sorted_vad.end(),
                   [](const Segment &a, const Segment &b) {
                     return a.start < b.start;
                   });

  // Tile each VAD segment separately so the grouping is explicit; the
  // concatenation is identical to subsegmenting the whole list at once.
  std::vector<Segment> subs;
  std::vector<std::size_t> group_end;
  for (const Segment &seg : sorted_vad) {
    std::vector<Segment> tiles = subsegment({seg}, plan);
    subs.insert(subs.end(), tiles.begin(), tiles.end());
    group_end.push_back(subs.size());
  }

  std::vector<std::vector<float>> embs;
  std::vector<std::string> keys;
  embs.reserve(subs.size());
  keys.reserve(subs.size());
  for (const Segment &s : subs) {
    auto row = embeddings.lookup(s.speaker);
    embs.emplace_back(row.begin(), row.end());
    keys.push_back(s.speaker);
  }

  Eigen::MatrixXd affinity = build_affinity(embs);
  Eigen::MatrixXd refined = refine_affinity(affinity, cfg.p_percentile);
  ClusterResult clusters = spectral_cluster(refined, cfg, keys);

  // Resolve overlapping tiles into a hard segmentation: within each VAD
  // segment, cut at the midpoints between consecutive tile centers so every
  // instant belongs to the tile whose center is nearest.
  struct Piece {
    double start, end;
    int label;
  };
  std::vector<Piece> pieces;
  std::size_t first = 0;
  for (std::size_t g = 0; g < sorted_vad.size(); ++g) {
    const Segment &seg = sorted_vad[g];
    std::size_t last = group_end[g];
    double prev_cut = seg.start;
    for (std::size_t i = first; i < last; ++i) {
      double cut = seg.end;
      if (i + 1 < last) {
        double c1 = 0.5 * (subs[i].start + subs[i].end);
        double c2 = 0.5 * (subs[i + 1].start + subs[i + 1].end);
        cut = 0.5 * (c1 + c2);
      }
      if (cut > prev_cut)
        pieces.push_back({prev_cut, cut, clusters.labels[i]});
      prev_cut = cut;
    }
    first = last;
  }

  // Merge contiguous same-label pieces, then name speakers by first
  // appearance in time.
  std::vector<Piece> merged;
  for (const Piece &p : pieces) {
    if (!merged.empty() && merged.back().label == p.label &&
        p.start <= merged.back().end + 1e-9)
      merged.back().end = std::max(merged.back().end, p.end);
    else
      merged.push_back(p);
  }

  std::vector<int> name_of(static_cast<std::size_t>(clusters.k), -1);
  int next_name = 0;
  char buf[16];
  for (const Piece &p : merged) {
    if (name_of[p.label] < 0) name_of[p.label] = next_name++;
    std::snprintf(buf, sizeof(buf), "spk%02d", name_of[p.label]);
    Segment s;
    s.recording_id = rec;
    s.start = p.start;
    s.end = p.end;
    s.speaker = buf;
    out.segments.push_back(std::move(s));
  }
  return out;
}

}  // namespace sidkit::diarize
