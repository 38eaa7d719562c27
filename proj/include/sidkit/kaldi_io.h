// include/sidkit/kaldi_io.h

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

#ifndef SIDKIT_KALDI_IO_H_
#define SIDKIT_KALDI_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sidkit/types.h"

// Readers and writers for the Kaldi-convention file formats the toolkit
// speaks: binary ark/scp archives (float32 vectors and matrices only),
// trial lists, score files, RTTM, VAD .lab files and utt2spk maps.
//
// Binary ark entry layout:
//   <key bytes> 0x20 0x00 'B'
//     vector:  "FV " 0x04 <int32 dim>               <dim float32>
//     matrix:  "FM " 0x04 <int32 rows> 0x04 <int32 cols> <rows*cols float32>
// All integers and floats are little-endian.  An scp line is
// "key ark_path:offset" where offset addresses the 0x00 'B' marker.

namespace sidkit::kaldi_io {

struct ArkEntry {
  enum class Kind { kVector, kMatrix };

  std::string key;
  Kind kind = Kind::kVector;
  int rows = 0;  // matrices only
  int cols = 0;  // vector dimension, or matrix columns
  std::vector<float> data;  // row-major for matrices
};

// Sequential read of a whole archive, entries in file order.
std::vector<ArkEntry> read_ark_entries(const std::string &path);

// Vector archive as an EmbeddingSet.  All entries must be vectors of one
// dimension; duplicate keys and dimension mismatches raise DataError.
EmbeddingSet read_ark(const std::string &path);

// Writes entries in order.  When scp_path is nonempty, also writes one
// "key ark_path:offset" line per entry.
void write_ark(const EmbeddingSet &set, const std::string &ark_path,
               const std::string &scp_path = "");
void write_ark(const std::vector<ArkEntry> &entries,
               const std::string &ark_path, const std::string &scp_path = "");

// Random access: reads one entry body (the part after "key ") at `offset`.
// The returned entry carries the key passed in.
ArkEntry read_ark_entry_at(const std::string &ark_path, std::uint64_t offset,
                           const std::string &key);

// Random-access read of every scp line, in line order.
EmbeddingSet read_scp(const std::string &path);

// Dispatches on extension: ".scp" -> read_scp, anything else -> read_ark.
EmbeddingSet read_embeddings(const std::string &path);

// "enroll test [label]" per line; labels target/nontarget or 1/0, absent
// means unknown.
TrialList read_trials(const std::string &path);

// "enroll test score" per line / written with 6-decimal scores.
ScoreList read_scores(const std::string &path);
void write_scores(const ScoreList &scores, const std::string &path);

// RTTM SPEAKER lines; other line types are skipped.  The writer emits
// start/duration with 3 decimal places.
Diarization read_rttm(const std::string &path);
void write_rttm(const Diarization &diar, const std::string &path);
std::string format_rttm(const Diarization &diar);

// "start end sp" per line; returns pure VAD segments sorted by start.
std::vector<Segment> read_lab(const std::string &path,
                              const std::string &recording_id);

// "utt spk" per line.
SpeakerMap read_utt2spk(const std::string &path);

}  // namespace sidkit::kaldi_io

#endif  // SIDKIT_KALDI_IO_H_
