// include/sidkit/types.h

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

#ifndef SIDKIT_TYPES_H_
#define SIDKIT_TYPES_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace sidkit {

/// Keyed collection of fixed-dimension float32 vectors, the in-memory form
/// of an embedding archive.  Keys are opaque byte tokens (no whitespace),
/// kept in insertion order; all vectors share one dimension.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  // Appends one vector.  Throws DataError on empty/whitespace keys,
  // duplicate keys, dimension mismatches or non-finite components.
  void add(const std::string &key, std::span<const float> vec);

  int dim() const { return dim_; }  // 0 until the first entry is added
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

  const std::vector<std::string> &keys() const { return keys_; }
  const std::string &key(std::size_t i) const { return keys_[i]; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }

  // Index of `key`, or -1 if absent.
  std::int64_t find(const std::string &key) const;

  // row(find(key)); throws DataError naming the key if absent.
  std::span<const float> lookup(const std::string &key) const;

 private:
  int dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<float> data_;  // row-major, size() * dim_
  std::unordered_map<std::string, std::size_t> index_;
};

enum class TrialLabel { kTarget, kNontarget, kUnknown };

struct Trial {
  std::string enroll;
  std::string test;
  TrialLabel label = TrialLabel::kUnknown;
};

/// Verification trial pairs.  `unknown` labels are allowed so the same type
/// serves both scoring (labels withheld) and metric computation (labels
/// required).
struct TrialList {
  std::vector<Trial> trials;
};

struct ScoredTrial {
  std::string enroll;
  std::string test;
  double score = 0.0;
};

/// One finite score per trial, same pair ordering semantics as TrialList.
struct ScoreList {
  std::vector<ScoredTrial> scores;
};

/// utterance-key -> speaker-id; every utterance maps to exactly one speaker.
class SpeakerMap {
 public:
  // Throws DataError on duplicate utterance keys or empty tokens.
  void add(const std::string &utt, const std::string &spk);

  const std::string &speaker_of(const std::string &utt) const;
  bool contains(const std::string &utt) const {
    return map_.count(utt) != 0;
  }
  std::size_t size() const { return map_.size(); }

  const std::unordered_map<std::string, std::string> &map() const {
    return map_;
  }

 private:
  std::unordered_map<std::string, std::string> map_;
};

/// A timed, optionally speaker-labeled stretch of one recording.  The
/// speaker field is empty for pure VAD segments.
struct Segment {
  std::string recording_id;
  double start = 0.0;  // seconds, >= 0
  double end = 0.0;    // seconds, > start
  std::string speaker;
};

// Throws DataError unless 0 <= start < end and both are finite.
void validate_segment(const Segment &seg);

/// Per-recording list of timed, speaker-labeled segments (RTTM content).
/// Segments of different speakers may overlap; no structural non-overlap
/// constraint is imposed.
struct Diarization {
  std::vector<Segment> segments;

  // recording ids present, sorted and deduplicated.
  std::vector<std::string> recording_ids() const;
  // segments of one recording, in stored order.
  std::vector<Segment> recording(const std::string &rec) const;
};

}  // namespace sidkit

#endif  // SIDKIT_TYPES_H_
