// tests/test_kaldi_io.cc

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

#include <cstring>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "sidkit/error.h"
#include "sidkit/kaldi_io.h"
#include "sidkit/types.h"
#include "test_support.h"

using namespace sidkit;
using test_support::TempDir;

namespace {

void append_le32(std::string &s, std::int32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  s.append(buf, 4);
}

void append_f32(std::string &s, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  s.append(buf, 4);
}

}  // namespace

TEST_SUITE("kaldi_io") {

TEST_CASE("vector ark bytes match the documented layout exactly") {
  TempDir dir;
  EmbeddingSet set;
  set.add("ab", std::vector<float>{1.0f, 2.0f});
  const std::string ark = dir.file("e.ark");
  kaldi_io::write_ark(set, ark);

  std::string want;
  want += "ab ";
  want += '\0';
  want += 'B';
  want += "FV ";
  want += '\x04';
  append_le32(want, 2);
  append_f32(want, 1.0f);
  append_f32(want, 2.0f);
  CHECK(test_support::read_file(ark) == want);
}

TEST_CASE("scp offsets address the binary marker after \"key \"") {
  TempDir dir;
  EmbeddingSet set;
  set.add("ab", std::vector<float>{1.0f, 2.0f});
  set.add("cd", std::vector<float>{3.0f, 4.0f});
  const std::string ark = dir.file("e.ark");
  const std::string scp = dir.file("e.scp");
  kaldi_io::write_ark(set, ark, scp);
  // "ab " is 3 bytes; the first body is 2+3+5+8 = 18 bytes; "cd " is 3 more.
  const std::string want_scp =
      "ab " + ark + ":3\ncd " + ark + ":24\n";
  CHECK(test_support::read_file(scp) == want_scp);

  // Random access through each recorded offset reproduces the entry.
  kaldi_io::ArkEntry e = kaldi_io::read_ark_entry_at(ark, 24, "cd");
  REQUIRE(e.cols == 2);
  CHECK(e.data[0] == 3.0f);
  CHECK(e.data[1] == 4.0f);
}

TEST_CASE("ark round trip is bitwise for random float payloads") {
  TempDir dir;
  std::mt19937 rng(5);
  EmbeddingSet set;
  for (int i = 0; i < 50; ++i)
    set.add("utt" + std::to_string(i), test_support::random_vector(rng, 32));
  const std::string a1 = dir.file("a1.ark");
  const std::string a2 = dir.file("a2.ark");
  kaldi_io::write_ark(set, a1);
  EmbeddingSet back = kaldi_io::read_ark(a1);
  REQUIRE(back.size() == set.size());
  REQUIRE(back.dim() == set.dim());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back.key(i) == set.key(i));
    const auto want = set.row(i);
    const auto got = back.row(i);
    // bitwise, not approximate
    CHECK(std::memcmp(want.data(), got.data(),
                      want.size() * sizeof(float)) == 0);
  }
  kaldi_io::write_ark(back, a2);
  CHECK(test_support::read_file(a1) == test_support::read_file(a2));
}

TEST_CASE("scp reading equals sequential ark reading") {
  TempDir dir;
  std::mt19937 rng(9);
  EmbeddingSet set;
  for (int i = 0; i < 20; ++i)
    set.add("k" + std::to_string(i), test_support::random_vector(rng, 8));
  const std::string ark = dir.file("e.ark");
  const std::string scp = dir.file("e.scp");
  kaldi_io::write_ark(set, ark, scp);
  EmbeddingSet seq = kaldi_io::read_embeddings(ark);
  EmbeddingSet rnd = kaldi_io::read_embeddings(scp);
  REQUIRE(seq.size() == rnd.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq.key(i) == rnd.key(i));
    CHECK(std::memcmp(seq.row(i).data(), rnd.row(i).data(),
                      seq.row(i).size() * sizeof(float)) == 0);
  }
}

TEST_CASE("matrix entries round trip through the entry API") {
  TempDir dir;
  kaldi_io::ArkEntry m;
  m.key = "feats";
  m.kind = kaldi_io::ArkEntry::Kind::kMatrix;
  m.rows = 3;
  m.cols = 2;
  m.data = {1, 2, 3, 4, 5, 6};
  const std::string ark = dir.file("m.ark");
  kaldi_io::write_ark(std::vector<kaldi_io::ArkEntry>{m}, ark);
  auto back = kaldi_io::read_ark_entries(ark);
  REQUIRE(back.size() == 1);
  CHECK(back[0].key == "feats");
  CHECK(back[0].kind == kaldi_io::ArkEntry::Kind::kMatrix);
  CHECK(back[0].rows == 3);
  CHECK(back[0].cols == 2);
  CHECK(back[0].data == m.data);
  // but the vector-only reader refuses it
  CHECK_THROWS_AS(kaldi_io::read_ark(ark), DataError);
}

TEST_CASE("corrupt binary marker reports its byte offset") {
  TempDir dir;
  EmbeddingSet set;
  set.add("utt1", std::vector<float>{1.0f, 2.0f});
  const std::string ark = dir.file("e.ark");
  kaldi_io::write_ark(set, ark);
  std::string bytes = test_support::read_file(ark);
  bytes[5] = 'X';  // the 0x00 of the marker ("utt1 " is 5 bytes)
  test_support::write_file(ark, bytes);
  CHECK_THROWS_WITH_AS(kaldi_io::read_ark(ark),
                       doctest::Contains("byte offset 5"), DataError);
}

TEST_CASE("truncated payload reports a byte offset") {
  TempDir dir;
  EmbeddingSet set;
  set.add("utt1", std::vector<float>{1.0f, 2.0f, 3.0f});
  const std::string ark = dir.file("e.ark");
  kaldi_io::write_ark(set, ark);
  std::string bytes = test_support::read_file(ark);
  bytes.resize(bytes.size() - 5);
  test_support::write_file(ark, bytes);
  CHECK_THROWS_WITH_AS(kaldi_io::read_ark(ark),
                       doctest::Contains("byte offset"), DataError);
}

TEST_CASE("unknown payload token and bad dimensions are rejected") {
  TempDir dir;
  const std::string ark = dir.file("e.ark");
  {
    std::string bytes = "k ";
    bytes += '\0';
    bytes += 'B';
    bytes += "QQ ";
    test_support::write_file(ark, bytes);
    CHECK_THROWS_WITH_AS(kaldi_io::read_ark(ark),
                         doctest::Contains("payload token"), DataError);
  }
  {
    std::string bytes = "k ";
    bytes += '\0';
    bytes += 'B';
    bytes += "FV ";
    bytes += '\x04';
    append_le32(bytes, -3);
    test_support::write_file(ark, bytes);
    CHECK_THROWS_WITH_AS(kaldi_io::read_ark(ark),
                         doctest::Contains("dimension"), DataError);
  }
}

TEST_CASE("keys with embedded newlines are rejected") {
  TempDir dir;
  const std::string ark = dir.file("e.ark");
  test_support::write_file(ark, "bad\nkey ");
  CHECK_THROWS_WITH_AS(kaldi_io::read_ark(ark),
                       doctest::Contains("whitespace inside key"), DataError);
}

TEST_CASE("trial list parsing handles all label spellings") {
  TempDir dir;
  const std::string path = dir.file("trials");
  test_support::write_file(path,
                           "e1 t1 target\n"
                           "e2 t2 nontarget\n"
                           "e3 t3 1\n"
                           "e4 t4 0\n"
                           "\n"
                           "e5 t5\n");
  TrialList list = kaldi_io::read_trials(path);
  REQUIRE(list.trials.size() == 5);
  CHECK(list.trials[0].label == TrialLabel::kTarget);
  CHECK(list.trials[1].label == TrialLabel::kNontarget);
  CHECK(list.trials[2].label == TrialLabel::kTarget);
  CHECK(list.trials[3].label == TrialLabel::kNontarget);
  CHECK(list.trials[4].label == TrialLabel::kUnknown);
  CHECK(list.trials[4].enroll == "e5");
  CHECK(list.trials[4].test == "t5");
}

TEST_CASE("trial list parse errors carry the line number") {
  TempDir dir;
  const std::string path = dir.file("trials");
  test_support::write_file(path, "e1 t1 target\ne2 t2 maybe\n");
  CHECK_THROWS_WITH_AS(kaldi_io::read_trials(path),
                       doctest::Contains("line 2"), DataError);
  test_support::write_file(path, "only_one_field\n");
  CHECK_THROWS_WITH_AS(kaldi_io::read_trials(path),
                       doctest::Contains("line 1"), DataError);
}

TEST_CASE("score files round trip at 6 decimals") {
  TempDir dir;
  ScoreList scores;
  scores.scores.push_back({"e1", "t1", 0.123456789});
  scores.scores.push_back({"e2", "t2", -3.5});
  const std::string path = dir.file("scores");
  kaldi_io::write_scores(scores, path);
  CHECK(test_support::read_file(path) ==
        "e1 t1 0.123457\ne2 t2 -3.500000\n");
  ScoreList back = kaldi_io::read_scores(path);
  REQUIRE(back.scores.size() == 2);
  CHECK(back.scores[0].score == doctest::Approx(0.123457).epsilon(1e-12));
  CHECK(back.scores[1].score == -3.5);
  CHECK(back.scores[1].enroll == "e2");
}

TEST_CASE("score parsing rejects non-numeric and non-finite values") {
  TempDir dir;
  const std::string path = dir.file("scores");
  test_support::write_file(path, "e1 t1 abc\n");
  CHECK_THROWS_AS(kaldi_io::read_scores(path), DataError);
  test_support::write_file(path, "e1 t1 inf\n");
  CHECK_THROWS_AS(kaldi_io::read_scores(path), DataError);
  test_support::write_file(path, "e1 t1 1.0 extra\n");
  CHECK_THROWS_AS(kaldi_io::read_scores(path), DataError);
}

TEST_CASE("rttm writer emits the 10-field SPEAKER line") {
  Diarization d;
  d.segments.push_back({"rec1", 0.0, 1.5, "spk00"});
  d.segments.push_back({"rec1", 1.5, 3.25, "spk01"});
  CHECK(kaldi_io::format_rttm(d) ==
        "SPEAKER rec1 1 0.000 1.500 <NA> <NA> spk00 <NA> <NA>\n"
        "SPEAKER rec1 1 1.500 1.750 <NA> <NA> spk01 <NA> <NA>\n");
}

TEST_CASE("rttm reader keeps SPEAKER lines and skips the rest") {
  TempDir dir;
  const std::string path = dir.file("ref.rttm");
  test_support::write_file(
      path,
      "SPKR-INFO rec1 1 <NA> <NA> <NA> unknown spk00 <NA>\n"
      "SPEAKER rec1 1 0.50 2.00 <NA> <NA> alice <NA> <NA>\n"
      "\n"
      "SPEAKER rec2 1 1.00 0.75 <NA> <NA> bob <NA> <NA>\n");
  Diarization d = kaldi_io::read_rttm(path);
  REQUIRE(d.segments.size() == 2);
  CHECK(d.segments[0].recording_id == "rec1");
  CHECK(d.segments[0].start == 0.5);
  CHECK(d.segments[0].end == 2.5);
  CHECK(d.segments[0].speaker == "alice");
  CHECK(d.segments[1].recording_id == "rec2");
  CHECK(d.segments[1].end == doctest::Approx(1.75));
}

TEST_CASE("rttm reader rejects malformed SPEAKER lines") {
  TempDir dir;
  const std::string path = dir.file("bad.rttm");
  test_support::write_file(path, "SPEAKER rec1 1 0.5\n");
  CHECK_THROWS_WITH_AS(kaldi_io::read_rttm(path),
                       doctest::Contains("line 1"), DataError);
  test_support::write_file(
      path, "SPEAKER rec1 1 0.5 0.0 <NA> <NA> spk <NA> <NA>\n");
  CHECK_THROWS_WITH_AS(kaldi_io::read_rttm(path),
                       doctest::Contains("duration"), DataError);
  test_support::write_file(
      path, "SPEAKER rec1 1 x 1.0 <NA> <NA> spk <NA> <NA>\n");
  CHECK_THROWS_AS(kaldi_io::read_rttm(path), DataError);
}

TEST_CASE("rttm write/read round trip preserves segments") {
  TempDir dir;
  Diarization d;
  d.segments.push_back({"rec1", 0.0, 1.504, "spk00"});
  d.segments.push_back({"rec1", 2.25, 4.0, "spk01"});
  const std::string path = dir.file("h.rttm");
  kaldi_io::write_rttm(d, path);
  Diarization back = kaldi_io::read_rttm(path);
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[0].start == doctest::Approx(0.0));
  CHECK(back.segments[0].end == doctest::Approx(1.504));
  CHECK(back.segments[1].speaker == "spk01");
}

TEST_CASE("lab files parse and sort by start time") {
  TempDir dir;
  const std::string path = dir.file("rec1.lab");
  test_support::write_file(path,
                           "4.0 5.5 sp\n"
                           "0.0 1.5 sp\n"
                           "2.0 3.0 sp\n");
  std::vector<Segment> segs = kaldi_io::read_lab(path, "rec1");
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].start == 0.0);
  CHECK(segs[1].start == 2.0);
  CHECK(segs[2].start == 4.0);
  CHECK(segs[0].recording_id == "rec1");
  CHECK(segs[0].speaker.empty());

  test_support::write_file(path, "1.0 1.0 sp\n");
  CHECK_THROWS_WITH_AS(kaldi_io::read_lab(path, "rec1"),
                       doctest::Contains("line 1"), DataError);
}

TEST_CASE("utt2spk parsing") {
  TempDir dir;
  const std::string path = dir.file("utt2spk");
  test_support::write_file(path, "utt1 spkA\nutt2 spkB\nutt3 spkA\n");
  SpeakerMap map = kaldi_io::read_utt2spk(path);
  CHECK(map.size() == 3);
  CHECK(map.speaker_of("utt3") == "spkA");
  test_support::write_file(path, "utt1 spkA spkB\n");
  CHECK_THROWS_AS(kaldi_io::read_utt2spk(path), DataError);
  test_support::write_file(path, "utt1 spkA\nutt1 spkB\n");
  CHECK_THROWS_AS(kaldi_io::read_utt2spk(path), DataError);
}

TEST_CASE("missing files raise a data error naming the path") {
  CHECK_THROWS_WITH_AS(kaldi_io::read_ark("/nonexistent/x.ark"),
                       doctest::Contains("/nonexistent/x.ark"), DataError);
  CHECK_THROWS_AS(kaldi_io::read_trials("/nonexistent/trials"), DataError);
}

}  // TEST_SUITE
