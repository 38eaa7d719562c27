// src/types.cc

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

#include "sidkit/types.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "sidkit/error.h"

namespace sidkit {

namespace {

bool valid_token(const std::string &s) {
  if (s.empty()) return false;
  for (unsigned char c : s)
    if (std::isspace(c)) return false;
  return true;
}

}  // namespace

void EmbeddingSet::add(const std::string &key, std::span<const float> vec) {
  if (!valid_token(key))
    throw DataError("invalid utterance key \"" + key +
                    "\": keys must be nonempty and contain no whitespace");
  if (vec.empty())
    throw DataError("empty vector for key \"" + key + "\"");
  if (dim_ == 0) {
    dim_ = static_cast<int>(vec.size());
  } else if (static_cast<std::size_t>(dim_) != vec.size()) {
    throw DataError("dimension mismatch for key \"" + key + "\": expected " +
                    std::to_string(dim_) + ", got " +
                    std::to_string(vec.size()));
  }
  if (index_.count(key))
    throw DataError("duplicate key \"" + key + "\"");
  for (float v : vec)
    if (!std::isfinite(v))
      throw DataError("non-finite component in vector for key \"" + key +
                      "\"");
  index_.emplace(key, keys_.size());
  keys_.push_back(key);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::int64_t EmbeddingSet::find(const std::string &key) const {
  auto it = index_.find(key);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::span<const float> EmbeddingSet::lookup(const std::string &key) const {
  std::int64_t i = find(key);
  if (i < 0) throw DataError("key \"" + key + "\" not found in embedding set");
  return row(static_cast<std::size_t>(i));
}

void SpeakerMap::add(const std::string &utt, const std::string &spk) {
  if (!valid_token(utt) || !valid_token(spk))
    throw DataError("invalid utt2spk tokens \"" + utt + "\" / \"" + spk +
                    "\"");
  auto [it, inserted] = map_.emplace(utt, spk);
  if (!inserted && it->second != spk)
    throw DataError("utterance \"" + utt + "\" mapped to two speakers");
}

const std::string &SpeakerMap::speaker_of(const std::string &utt) const {
  auto it = map_.find(utt);
  if (it == map_.end())
    throw DataError("utterance \"" + utt + "\" has no speaker mapping");
  return it->second;
}

void validate_segment(const Segment &seg) {
  if (!std::isfinite(seg.start) || !std::isfinite(seg.end))
    throw DataError("non-finite segment times in recording \"" +
                    seg.recording_id + "\"");
  if (seg.start < 0.0 || seg.end <= seg.start)
    throw DataError("invalid segment [" + std::to_string(seg.start) + ", " +
                    std::to_string(seg.end) + ") in recording \"" +
                    seg.recording_id + "\"");
}

std::vector<std::string> Diarization::recording_ids() const {
  std::vector<std::string> ids;
  ids.reserve(segments.size());
  for (const Segment &s : segments) ids.push_back(s.recording_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<Segment> Diarization::recording(const std::string &rec) const {
  std::vector<Segment> out;
  for (const Segment &s : segments)
    if (s.recording_id == rec) out.push_back(s);
  return out;
}

}  // namespace sidkit
