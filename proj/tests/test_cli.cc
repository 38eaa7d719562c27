// tests/test_cli.cc

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

// End-to-end tests driving the installed binary through a shell, checking
// exit codes, the stdout contract and on-disk artifacts.

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "sidkit/backend.h"
#include "sidkit/diarize.h"
#include "sidkit/kaldi_io.h"
#include "sidkit/types.h"
#include "test_support.h"

using namespace sidkit;
using test_support::CliResult;
using test_support::run_cli;
using test_support::TempDir;

namespace {

EmbeddingSet two_dim_set(
    const std::vector<std::pair<std::string, std::vector<float>>> &entries) {
  EmbeddingSet set;
  for (const auto &[key, vec] : entries) set.add(key, vec);
  return set;
}

std::vector<float> noisy_axis(std::mt19937 &rng, int dim, int axis,
                              double noise) {
  std::normal_distribution<double> g(0.0, noise);
  std::vector<float> v(static_cast<std::size_t>(dim), 0.0f);
  v[static_cast<std::size_t>(axis)] = 1.0f;
  for (float &x : v) x += static_cast<float>(g(rng));
  return v;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version and help exit cleanly") {
  TempDir dir;
  const CliResult v = run_cli("--version", dir);
  CHECK(v.exit_code == 0);
  CHECK(v.out == "0.1.0\n");

  for (const std::string node :
       {"", "mean", "score", "score cosine", "plda", "plda train",
        "plda adapt", "plda score", "metrics", "metrics eer-dcf",
        "metrics der", "diarize", "diarize plan", "train-toy"}) {
    const CliResult h = run_cli(node.empty() ? "--help" : node + " --help", dir);
    CHECK(h.exit_code == 0);
    CHECK(!h.out.empty());
  }
}

TEST_CASE("usage problems exit with code 1") {
  TempDir dir;
  CHECK(run_cli("", dir).exit_code == 1);
  CHECK(run_cli("frobnicate", dir).exit_code == 1);
  CHECK(run_cli("score", dir).exit_code == 1);       // subcommand required
  CHECK(run_cli("mean --output x.ark", dir).exit_code == 1);  // missing input
  CHECK(run_cli("mean --no-such-flag", dir).exit_code == 1);
  // diarize enforces --embeddings/--output unless running the plan subcommand
  CHECK(run_cli("diarize --vad missing.lab", dir).exit_code == 1);
}

TEST_CASE("mean subcommand averages an archive") {
  TempDir dir;
  kaldi_io::write_ark(two_dim_set({{"u1", {1.0f, 0.0f}}, {"u2", {3.0f, 0.0f}}}),
                      dir.file("pop.ark"), dir.file("pop.scp"));
  const CliResult r = run_cli(
      "mean --embeddings " + dir.file("pop.scp") + " --output " +
          dir.file("mean.ark"),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());  // no machine output: the result is the file
  CHECK(r.err.find("2 embeddings") != std::string::npos);
  const EmbeddingSet mean = kaldi_io::read_ark(dir.file("mean.ark"));
  REQUIRE(mean.size() == 1);
  CHECK(mean.key(0) == "mean");
  CHECK(mean.row(0)[0] == 2.0f);
  CHECK(mean.row(0)[1] == 0.0f);
}

TEST_CASE("cosine scoring writes six-decimal scores") {
  TempDir dir;
  kaldi_io::write_ark(two_dim_set({{"a", {1.0f, 0.0f}}}), dir.file("enroll.ark"));
  kaldi_io::write_ark(two_dim_set({{"b", {1.0f, 1.0f}}}), dir.file("test.ark"));
  test_support::write_file(dir.file("trials.txt"), "a b target\n");
  const CliResult r = run_cli(
      "score cosine --enroll " + dir.file("enroll.ark") + " --test " +
          dir.file("test.ark") + " --trials " + dir.file("trials.txt") +
          " --output " + dir.file("scores.txt"),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());
  CHECK(r.err.find("1 trials scored") != std::string::npos);
  CHECK(test_support::read_file(dir.file("scores.txt")) == "a b 0.707107\n");
}

TEST_CASE("cosine scoring honors mean normalization") {
  TempDir dir;
  kaldi_io::write_ark(two_dim_set({{"p1", {0.0f, 0.0f}}, {"p2", {2.0f, 2.0f}}}),
                      dir.file("pop.ark"));
  REQUIRE(run_cli("mean --embeddings " + dir.file("pop.ark") + " --output " +
                      dir.file("mean.ark"),
                  dir)
              .exit_code == 0);
  kaldi_io::write_ark(two_dim_set({{"a", {2.0f, 1.0f}}}), dir.file("enroll.ark"));
  kaldi_io::write_ark(two_dim_set({{"b", {2.0f, 3.0f}}}), dir.file("test.ark"));
  test_support::write_file(dir.file("trials.txt"), "a b\n");
  const CliResult r = run_cli(
      "score cosine --enroll " + dir.file("enroll.ark") + " --test " +
          dir.file("test.ark") + " --trials " + dir.file("trials.txt") +
          " --mean " + dir.file("mean.ark") + " --output " +
          dir.file("scores.txt"),
      dir);
  CHECK(r.exit_code == 0);
  // centered: (1,0) vs (1,2) -> 1/sqrt(5)
  CHECK(test_support::read_file(dir.file("scores.txt")) == "a b 0.447214\n");
}

TEST_CASE("scoring a missing key is a data error") {
  TempDir dir;
  kaldi_io::write_ark(two_dim_set({{"a", {1.0f, 0.0f}}}), dir.file("e.ark"));
  kaldi_io::write_ark(two_dim_set({{"b", {1.0f, 1.0f}}}), dir.file("t.ark"));
  test_support::write_file(dir.file("trials.txt"), "ghost b target\n");
  const CliResult r = run_cli(
      "score cosine --enroll " + dir.file("e.ark") + " --test " +
          dir.file("t.ark") + " --trials " + dir.file("trials.txt") +
          " --output " + dir.file("s.txt"),
      dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("ghost") != std::string::npos);
}

TEST_CASE("corrupt archives exit with the data-error code") {
  TempDir dir;
  kaldi_io::write_ark(two_dim_set({{"utt1", {1.0f, 2.0f}}}), dir.file("x.ark"));
  std::string bytes = test_support::read_file(dir.file("x.ark"));
  bytes[5] = 'X';  // clobber the binary marker after "utt1 "
  test_support::write_file(dir.file("x.ark"), bytes);
  const CliResult r = run_cli(
      "mean --embeddings " + dir.file("x.ark") + " --output " +
          dir.file("m.ark"),
      dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("byte offset 5") != std::string::npos);

  const CliResult missing = run_cli(
      "mean --embeddings " + dir.file("nope.ark") + " --output " +
          dir.file("m.ark"),
      dir);
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("nope.ark") != std::string::npos);
}

TEST_CASE("eer-dcf prints one summary line") {
  TempDir dir;
  test_support::write_file(dir.file("trials.txt"),
                           "a t1 target\nb t2 target\nc t3 nontarget\nd t4 "
                           "nontarget\n");
  test_support::write_file(
      dir.file("scores.txt"),
      "a t1 1.000000\nb t2 2.000000\nc t3 -1.000000\nd t4 -2.000000\n");
  const CliResult r = run_cli(
      "metrics eer-dcf --scores " + dir.file("scores.txt") + " --trials " +
          dir.file("trials.txt"),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out == "EER=0.0000 minDCF=0.0000 thresholds=1.000000,1.000000\n");
}

TEST_CASE("eer-dcf honors the cost parameters") {
  TempDir dir;
  // identical score multisets: EER 50%, and rejecting everything is optimal
  test_support::write_file(dir.file("trials.txt"),
                           "a t1 target\nb t2 target\nc t3 nontarget\nd t4 "
                           "nontarget\n");
  test_support::write_file(
      dir.file("scores.txt"),
      "a t1 0.000000\nb t2 1.000000\nc t3 0.000000\nd t4 1.000000\n");
  const CliResult r = run_cli(
      "metrics eer-dcf --scores " + dir.file("scores.txt") + " --trials " +
          dir.file("trials.txt") + " --p-target 0.05 --c-miss 2 --c-fa 1",
      dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.substr(0, 11) == "EER=50.0000");
  CHECK(r.out.find("minDCF=1.0000") != std::string::npos);
}

TEST_CASE("metrics der prints the breakdown") {
  TempDir dir;
  Diarization ref, hyp;
  ref.segments = {{"r", 0.0, 10.0, "a"}};
  hyp.segments = {{"r", 0.0, 5.0, "a"}};
  kaldi_io::write_rttm(ref, dir.file("ref.rttm"));
  kaldi_io::write_rttm(hyp, dir.file("hyp.rttm"));
  const CliResult r = run_cli(
      "metrics der --ref " + dir.file("ref.rttm") + " --hyp " +
          dir.file("hyp.rttm"),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out == "MISS=50.000 FA=0.000 SC=0.000 DER=50.000\n");

  // scoring with no collar here gives the same halves
  const CliResult strict = run_cli(
      "metrics der --ref " + dir.file("ref.rttm") + " --hyp " +
          dir.file("hyp.rttm") + " --collar 0",
      dir);
  CHECK(strict.out == "MISS=50.000 FA=0.000 SC=0.000 DER=50.000\n");
}

TEST_CASE("plda subcommands train, adapt and score through files") {
  TempDir dir;
  std::mt19937 rng(801);
  std::normal_distribution<double> g(0.0, 0.05);
  EmbeddingSet set;
  SpeakerMap u2s;
  std::string u2s_text;
  const float centers[3][2] = {{10.f, 0.f}, {0.f, 10.f}, {-10.f, -10.f}};
  for (int s = 0; s < 3; ++s) {
    for (int j = 0; j < 4; ++j) {
      const std::string key = "u" + std::to_string(s) + "_" + std::to_string(j);
      const std::vector<float> row = {centers[s][0] + static_cast<float>(g(rng)),
                                      centers[s][1] + static_cast<float>(g(rng))};
      set.add(key, row);
      u2s_text += key + " spk" + std::to_string(s) + "\n";
    }
  }
  kaldi_io::write_ark(set, dir.file("emb.ark"), dir.file("emb.scp"));
  test_support::write_file(dir.file("utt2spk"), u2s_text);

  const CliResult train = run_cli(
      "plda train --embeddings " + dir.file("emb.scp") + " --utt2spk " +
          dir.file("utt2spk") + " --iters 3 --no-length-norm --output " +
          dir.file("plda.mdl"),
      dir);
  CHECK(train.exit_code == 0);
  CHECK(train.out.empty());
  CHECK(train.err.find("iter 0 loglik") != std::string::npos);
  CHECK(train.err.find("iter 3 loglik") != std::string::npos);
  CHECK_NOTHROW(backend::load_plda(dir.file("plda.mdl")));

  test_support::write_file(dir.file("trials.txt"), "u0_0 u0_1\nu0_0 u1_0\n");
  const CliResult score = run_cli(
      "plda score --model " + dir.file("plda.mdl") + " --enroll " +
          dir.file("emb.ark") + " --test " + dir.file("emb.ark") +
          " --trials " + dir.file("trials.txt") + " --no-length-norm" +
          " --output " + dir.file("llr.txt"),
      dir);
  CHECK(score.exit_code == 0);
  const ScoreList llr = kaldi_io::read_scores(dir.file("llr.txt"));
  REQUIRE(llr.scores.size() == 2);
  // same-speaker pair must outscore the cross-speaker pair
  CHECK(llr.scores[0].score > llr.scores[1].score);

  const CliResult adapt = run_cli(
      "plda adapt --model " + dir.file("plda.mdl") + " --embeddings " +
          dir.file("emb.ark") + " --alpha 0.5 --split 0.5 --no-length-norm" +
          " --output " + dir.file("plda_ad.mdl"),
      dir);
  CHECK(adapt.exit_code == 0);
  CHECK_NOTHROW(backend::load_plda(dir.file("plda_ad.mdl")));
}

TEST_CASE("degenerate training data exits with the numeric code") {
  TempDir dir;
  EmbeddingSet set;
  set.add("u1", std::vector<float>{1.0f, 1.0f});
  set.add("u2", std::vector<float>{1.0f, 1.0f});
  kaldi_io::write_ark(set, dir.file("emb.ark"));
  test_support::write_file(dir.file("utt2spk"), "u1 a\nu2 b\n");
  const CliResult r = run_cli(
      "plda train --embeddings " + dir.file("emb.ark") + " --utt2spk " +
          dir.file("utt2spk") + " --iters 2 --no-length-norm --output " +
          dir.file("plda.mdl"),
      dir);
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("variance") != std::string::npos);
}

TEST_CASE("diarize plan prints the tiling to stdout") {
  TempDir dir;
  test_support::write_file(dir.file("v.lab"), "0.000000 3.000000 sp\n");
  const CliResult r = run_cli(
      "diarize plan --vad " + dir.file("v.lab") + " --window 1.5 --shift 0.75",
      dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out ==
        "v-00000000-00001500 v 0.000 1.500\n"
        "v-00000750-00002250 v 0.750 2.250\n"
        "v-00001500-00003000 v 1.500 3.000\n");
}

TEST_CASE("diarize produces a deterministic rttm") {
  TempDir dir;
  test_support::write_file(dir.file("meet.lab"),
                           "0.000000 6.000000 sp\n8.000000 14.000000 sp\n");
  const std::vector<Segment> vad = {{"meet", 0.0, 6.0, ""},
                                    {"meet", 8.0, 14.0, ""}};
  diarize::SubsegmentPlan plan;  // CLI defaults match these
  std::mt19937 rng(803);
  EmbeddingSet embs;
  for (std::size_t gidx = 0; gidx < vad.size(); ++gidx)
    for (const Segment &tile : diarize::subsegment({vad[gidx]}, plan))
      embs.add(tile.speaker, noisy_axis(rng, 8, static_cast<int>(gidx), 0.02));
  kaldi_io::write_ark(embs, dir.file("emb.ark"));

  const std::string args = "diarize --vad " + dir.file("meet.lab") +
                           " --embeddings " + dir.file("emb.ark") +
                           " --seed 7 --output ";
  const CliResult r1 = run_cli(args + dir.file("out1.rttm"), dir);
  CHECK(r1.exit_code == 0);
  CHECK(r1.out.empty());
  CHECK(r1.err.find("segments written") != std::string::npos);
  const CliResult r2 = run_cli(args + dir.file("out2.rttm"), dir);
  CHECK(r2.exit_code == 0);

  const std::string rttm1 = test_support::read_file(dir.file("out1.rttm"));
  CHECK(rttm1 == test_support::read_file(dir.file("out2.rttm")));
  CHECK(rttm1 ==
        "SPEAKER meet 1 0.000 6.000 <NA> <NA> spk00 <NA> <NA>\n"
        "SPEAKER meet 1 8.000 6.000 <NA> <NA> spk01 <NA> <NA>\n");

  // a fixed speaker count flows through to the clustering
  const CliResult fixed = run_cli(args + dir.file("out3.rttm") +
                                      " --num-speakers 2",
                                  dir);
  CHECK(fixed.exit_code == 0);
  CHECK(test_support::read_file(dir.file("out3.rttm")) == rttm1);
}

TEST_CASE("train-toy emits a csv loss trace") {
  TempDir dir;
  const std::string args =
      "train-toy --variant aam --margin 0.2 --scale 30 --steps 5 --classes 3 "
      "--per-class 5 --dim 4 --seed 11";
  const CliResult r = run_cli(args, dir);
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("final training accuracy") != std::string::npos);

  std::istringstream lines(r.out);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "step,loss");
  int rows = 0;
  double first_loss = 0.0, last_loss = 0.0;
  while (std::getline(lines, line)) {
    int step = -1;
    double loss = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "%d,%lf", &step, &loss) == 2);
    CHECK(step == rows);
    if (rows == 0) first_loss = loss;
    last_loss = loss;
    ++rows;
  }
  CHECK(rows == 6);  // steps + 1 trace entries
  CHECK(last_loss < first_loss);

  const CliResult again = run_cli(args, dir);
  CHECK(again.out == r.out);  // bitwise-identical trace
}

}  // TEST_SUITE
