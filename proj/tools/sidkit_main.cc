// tools/sidkit_main.cc

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

// Single executable multiplexing every tool:
//   mean, score cosine, plda train|adapt|score, metrics eer-dcf|der,
//   diarize [plan], train-toy
// stdout carries only machine-readable results; diagnostics go to stderr.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sidkit/backend.h"
#include "sidkit/diarize.h"
#include "sidkit/error.h"
#include "sidkit/kaldi_io.h"
#include "sidkit/margin_loss.h"
#include "sidkit/metrics.h"
#include "sidkit/plda.h"
#include "sidkit/types.h"

using namespace sidkit;

int main(int argc, char **argv) {
  CLI::App app{"sidkit: speaker verification and diarization backend tools"};
  app.set_version_flag("--version", "0.1.0");
  app.require_subcommand(1);

  // ------------------------------------------------------------------- mean
  std::string mean_embeddings, mean_output;
  CLI::App *mean_cmd =
      app.add_subcommand("mean", "Compute the mean of an embedding set");
  mean_cmd->add_option("--embeddings", mean_embeddings, "ark or scp input")
      ->required();
  mean_cmd->add_option("--output", mean_output, "output ark (single entry)")
      ->required();
  mean_cmd->callback([&]() {
    EmbeddingSet set = kaldi_io::read_embeddings(mean_embeddings);
    backend::MeanVector mv = backend::compute_mean(set);
    EmbeddingSet out;
    std::vector<float> buf(mv.mean.begin(), mv.mean.end());
    out.add("mean", buf);
    kaldi_io::write_ark(out, mean_output);
    std::cerr << "mean over " << mv.count << " embeddings written to "
              << mean_output << "\n";
  });

  // ------------------------------------------------------------ score cosine
  CLI::App *score_cmd = app.add_subcommand("score", "Score a trial list");
  score_cmd->require_subcommand(1);
  std::string sc_enroll, sc_test, sc_trials, sc_mean, sc_output;
  CLI::App *cosine_cmd =
      score_cmd->add_subcommand("cosine", "Cosine-similarity scoring");
  cosine_cmd->add_option("--enroll", sc_enroll, "enrollment ark/scp")
      ->required();
  cosine_cmd->add_option("--test", sc_test, "test ark/scp")->required();
  cosine_cmd->add_option("--trials", sc_trials, "trial list")->required();
  cosine_cmd->add_option("--mean", sc_mean,
                         "mean ark for mean normalization (optional)");
  cosine_cmd->add_option("--output", sc_output, "output score file")
      ->required();
  cosine_cmd->callback([&]() {
    EmbeddingSet enroll = kaldi_io::read_embeddings(sc_enroll);
    EmbeddingSet test = kaldi_io::read_embeddings(sc_test);
    if (!sc_mean.empty()) {
      EmbeddingSet mean_set = kaldi_io::read_embeddings(sc_mean);
      auto row = mean_set.lookup("mean");
      backend::MeanVector mv;
      mv.mean.assign(row.begin(), row.end());
      mv.count = 1;
      enroll = backend::apply_mean_norm(enroll, mv);
      test = backend::apply_mean_norm(test, mv);
    }
    TrialList trials = kaldi_io::read_trials(sc_trials);
    ScoreList scores =
        backend::score_trials(backend::cosine_score, enroll, test, trials);
    kaldi_io::write_scores(scores, sc_output);
    std::cerr << scores.scores.size() << " trials scored\n";
  });

  // ------------------------------------------------------------------- plda
  CLI::App *plda_cmd =
      app.add_subcommand("plda", "Two-covariance PLDA backend");
  plda_cmd->require_subcommand(1);

  std::string pt_embeddings, pt_utt2spk, pt_output;
  int pt_iters = 10;
  std::uint64_t pt_seed = 0;
  bool pt_length_norm = true;
  CLI::App *plda_train_cmd =
      plda_cmd->add_subcommand("train", "EM training of the PLDA model");
  plda_train_cmd->add_option("--embeddings", pt_embeddings, "ark or scp input")
      ->required();
  plda_train_cmd->add_option("--utt2spk", pt_utt2spk, "utterance->speaker map")
      ->required();
  plda_train_cmd->add_option("--iters", pt_iters, "EM iterations");
  plda_train_cmd->add_option("--seed", pt_seed, "random seed (reserved)");
  plda_train_cmd->add_flag("--length-norm,!--no-length-norm", pt_length_norm,
                           "length-normalize embeddings first (default on)");
  plda_train_cmd->add_option("--output", pt_output, "output model file")
      ->required();
  plda_train_cmd->callback([&]() {
    EmbeddingSet set = kaldi_io::read_embeddings(pt_embeddings);
    if (pt_length_norm) set = backend::length_normalize(set);
    SpeakerMap spk = kaldi_io::read_utt2spk(pt_utt2spk);
    backend::PldaTrainResult result =
        backend::plda_train(set, spk, pt_iters, pt_seed);
    backend::save_plda(result.model, pt_output);
    for (std::size_t i = 0; i < result.loglik_trace.size(); ++i)
      std::fprintf(stderr, "iter %zu loglik %.6f\n", i,
                   result.loglik_trace[i]);
  });

  std::string pa_model, pa_embeddings, pa_output;
  double pa_alpha = 0.5, pa_split = 0.5;
  bool pa_length_norm = true;
  CLI::App *plda_adapt_cmd = plda_cmd->add_subcommand(
      "adapt", "Unsupervised covariance adaptation");
  plda_adapt_cmd->add_option("--model", pa_model, "input model")->required();
  plda_adapt_cmd
      ->add_option("--embeddings", pa_embeddings, "adaptation ark/scp")
      ->required();
  plda_adapt_cmd->add_option("--alpha", pa_alpha, "adaptation weight in [0,1]");
  plda_adapt_cmd->add_option("--split", pa_split,
                             "between/within excess split in [0,1]");
  plda_adapt_cmd->add_flag("--length-norm,!--no-length-norm", pa_length_norm,
                           "length-normalize embeddings first (default on)");
  plda_adapt_cmd->add_option("--output", pa_output, "output model file")
      ->required();
  plda_adapt_cmd->callback([&]() {
    backend::PldaModel model = backend::load_plda(pa_model);
    EmbeddingSet set = kaldi_io::read_embeddings(pa_embeddings);
    if (pa_length_norm) set = backend::length_normalize(set);
    backend::PldaModel adapted =
        backend::plda_adapt(model, set, pa_alpha, pa_split);
    backend::save_plda(adapted, pa_output);
    std::cerr << "adapted model written to " << pa_output << "\n";
  });

  std::string ps_model, ps_enroll, ps_test, ps_trials, ps_mean, ps_output;
  bool ps_length_norm = true;
  CLI::App *plda_score_cmd =
      plda_cmd->add_subcommand("score", "Log-likelihood-ratio scoring");
  plda_score_cmd->add_option("--model", ps_model, "PLDA model")->required();
  plda_score_cmd->add_option("--enroll", ps_enroll, "enrollment ark/scp")
      ->required();
  plda_score_cmd->add_option("--test", ps_test, "test ark/scp")->required();
  plda_score_cmd->add_option("--trials", ps_trials, "trial list")->required();
  plda_score_cmd->add_option("--mean", ps_mean,
                             "mean ark for mean normalization (optional)");
  plda_score_cmd->add_flag("--length-norm,!--no-length-norm", ps_length_norm,
                           "length-normalize embeddings first (default on)");
  plda_score_cmd->add_option("--output", ps_output, "output score file")
      ->required();
  plda_score_cmd->callback([&]() {
    backend::PldaModel model = backend::load_plda(ps_model);
    EmbeddingSet enroll = kaldi_io::read_embeddings(ps_enroll);
    EmbeddingSet test = kaldi_io::read_embeddings(ps_test);
    if (!ps_mean.empty()) {
      EmbeddingSet mean_set = kaldi_io::read_embeddings(ps_mean);
      auto row = mean_set.lookup("mean");
      backend::MeanVector mv;
      mv.mean.assign(row.begin(), row.end());
      mv.count = 1;
      enroll = backend::apply_mean_norm(enroll, mv);
      test = backend::apply_mean_norm(test, mv);
    }
    if (ps_length_norm) {
      enroll = backend::length_normalize(enroll);
      test = backend::length_normalize(test);
    }
    TrialList trials = kaldi_io::read_trials(ps_trials);
    backend::PldaScorer scorer(model);
    ScoreList scores = backend::score_trials(
        [&scorer](std::span<const float> e, std::span<const float> t) {
          return scorer.llr(e, t);
        },
        enroll, test, trials);
    kaldi_io::write_scores(scores, ps_output);
    std::cerr << scores.scores.size() << " trials scored\n";
  });

  // ---------------------------------------------------------------- metrics
  CLI::App *metrics_cmd =
      app.add_subcommand("metrics", "Verification and diarization metrics");
  metrics_cmd->require_subcommand(1);

  std::string me_scores, me_trials;
  double me_p_target = 0.01, me_c_miss = 1.0, me_c_fa = 1.0;
  CLI::App *eer_cmd =
      metrics_cmd->add_subcommand("eer-dcf", "Equal error rate and minDCF");
  eer_cmd->add_option("--scores", me_scores, "score file")->required();
  eer_cmd->add_option("--trials", me_trials, "labeled trial list")->required();
  eer_cmd->add_option("--p-target", me_p_target, "target prior");
  eer_cmd->add_option("--c-miss", me_c_miss, "miss cost");
  eer_cmd->add_option("--c-fa", me_c_fa, "false-alarm cost");
  eer_cmd->callback([&]() {
    ScoreList scores = kaldi_io::read_scores(me_scores);
    TrialList trials = kaldi_io::read_trials(me_trials);
    metrics::EerResult eer = metrics::compute_eer(scores, trials);
    metrics::DcfParams params{me_p_target, me_c_miss, me_c_fa};
    metrics::DcfResult dcf = metrics::compute_min_dcf(scores, trials, params);
    std::printf("EER=%.4f minDCF=%.4f thresholds=%.6f,%.6f\n", 100.0 * eer.eer,
                dcf.min_dcf, eer.threshold, dcf.threshold);
  });

  std::string md_ref, md_hyp;
  double md_collar = 0.25;
  bool md_no_overlap = false;
  CLI::App *der_cmd =
      metrics_cmd->add_subcommand("der", "Diarization error rate");
  der_cmd->add_option("--ref", md_ref, "reference RTTM")->required();
  der_cmd->add_option("--hyp", md_hyp, "hypothesis RTTM")->required();
  der_cmd->add_option("--collar", md_collar, "no-score collar in seconds");
  der_cmd->add_flag("--no-score-overlap", md_no_overlap,
                    "exclude reference overlap regions");
  der_cmd->callback([&]() {
    Diarization ref = kaldi_io::read_rttm(md_ref);
    Diarization hyp = kaldi_io::read_rttm(md_hyp);
    metrics::DerBreakdown der =
        metrics::compute_der(ref, hyp, md_collar, !md_no_overlap);
    std::printf("MISS=%.3f FA=%.3f SC=%.3f DER=%.3f\n", der.miss_pct,
                der.fa_pct, der.confusion_pct, der.der_pct);
  });

  // ---------------------------------------------------------------- diarize
  std::string di_vad, di_embeddings, di_output, di_recording;
  diarize::SubsegmentPlan di_plan;
  diarize::ClusterConfig di_cfg;
  int di_num_speakers = 0;
  CLI::App *diarize_cmd =
      app.add_subcommand("diarize", "Spectral-clustering diarization");
  // Not required() at parse level: the plan subcommand takes its own --vad,
  // and a parent-level requirement would reject "diarize plan --vad ...".
  diarize_cmd->add_option("--vad", di_vad, "lab file (start end sp)");
  diarize_cmd->add_option("--embeddings", di_embeddings,
                          "subsegment embeddings ark/scp");
  diarize_cmd->add_option("--window", di_plan.window, "subsegment window (s)");
  diarize_cmd->add_option("--shift", di_plan.shift, "subsegment shift (s)");
  diarize_cmd->add_option("--min-dur", di_plan.min_dur,
                          "minimum final subsegment duration (s)");
  diarize_cmd->add_option("--p-percentile", di_cfg.p_percentile,
                          "kept fraction per affinity row");
  diarize_cmd->add_option("--max-speakers", di_cfg.max_speakers,
                          "eigengap search bound");
  CLI::Option *num_spk_opt = diarize_cmd->add_option(
      "--num-speakers", di_num_speakers, "fixed speaker count (overrides "
                                         "eigengap)");
  diarize_cmd->add_option("--kmeans-restarts", di_cfg.kmeans_restarts,
                          "k-means restarts");
  diarize_cmd->add_option("--seed", di_cfg.seed, "clustering seed");
  diarize_cmd->add_option("--output", di_output, "output RTTM");
  diarize_cmd->add_option("--recording", di_recording,
                          "recording id (default: lab filename stem)");

  std::string dp_vad, dp_recording;
  diarize::SubsegmentPlan dp_plan;
  CLI::App *plan_cmd = diarize_cmd->add_subcommand(
      "plan", "Emit the subsegment windows for an external extractor");
  plan_cmd->add_option("--vad", dp_vad, "lab file (start end sp)")->required();
  plan_cmd->add_option("--window", dp_plan.window, "subsegment window (s)");
  plan_cmd->add_option("--shift", dp_plan.shift, "subsegment shift (s)");
  plan_cmd->add_option("--min-dur", dp_plan.min_dur,
                       "minimum final subsegment duration (s)");
  plan_cmd->add_option("--recording", dp_recording,
                       "recording id (default: lab filename stem)");
  plan_cmd->callback([&]() {
    std::string rec = dp_recording.empty()
                          ? std::filesystem::path(dp_vad).stem().string()
                          : dp_recording;
    std::vector<Segment> vad = kaldi_io::read_lab(dp_vad, rec);
    for (const Segment &sub : diarize::subsegment(vad, dp_plan))
      std::printf("%s %s %.3f %.3f\n", sub.speaker.c_str(), rec.c_str(),
                  sub.start, sub.end);
  });

  diarize_cmd->callback([&]() {
    if (plan_cmd->parsed()) return;  // handled by the plan subcommand
    if (di_vad.empty()) throw CLI::RequiredError("--vad");
    if (di_embeddings.empty() || di_output.empty())
      throw CLI::RequiredError("--embeddings and --output");
    std::string rec = di_recording.empty()
                          ? std::filesystem::path(di_vad).stem().string()
                          : di_recording;
    if (num_spk_opt->count() > 0) di_cfg.fixed_speakers = di_num_speakers;
    std::vector<Segment> vad = kaldi_io::read_lab(di_vad, rec);
    EmbeddingSet embeddings = kaldi_io::read_embeddings(di_embeddings);
    Diarization result =
        diarize::diarize_recording(vad, embeddings, di_plan, di_cfg);
    kaldi_io::write_rttm(result, di_output);
    std::cerr << result.segments.size() << " segments written to " << di_output
              << "\n";
  });

  // -------------------------------------------------------------- train-toy
  std::string tt_variant = "aam";
  double tt_margin = 0.2, tt_scale = 30.0, tt_topk_margin = 0.1, tt_lr = 1.0,
         tt_noise = 0.05;
  int tt_sub_centers = 1, tt_topk = 0, tt_steps = 500, tt_classes = 4,
      tt_per_class = 25, tt_dim = 8;
  std::uint64_t tt_seed = 1;
  CLI::App *toy_cmd = app.add_subcommand(
      "train-toy", "Desk-scale margin-loss training demonstration");
  toy_cmd->add_option("--variant", tt_variant,
                      "softmax | a_softmax | am_softmax | aam_softmax");
  toy_cmd->add_option("--margin", tt_margin, "margin m");
  toy_cmd->add_option("--scale", tt_scale, "logit scale s");
  toy_cmd->add_option("--sub-centers", tt_sub_centers, "sub-centers per class");
  toy_cmd->add_option("--topk", tt_topk, "inter-topK k");
  toy_cmd->add_option("--topk-margin", tt_topk_margin, "inter-topK penalty");
  toy_cmd->add_option("--lr", tt_lr, "learning rate");
  toy_cmd->add_option("--steps", tt_steps, "gradient steps");
  toy_cmd->add_option("--seed", tt_seed, "seed for data and init");
  toy_cmd->add_option("--classes", tt_classes, "synthetic class count");
  toy_cmd->add_option("--per-class", tt_per_class, "samples per class");
  toy_cmd->add_option("--dim", tt_dim, "embedding dimension");
  toy_cmd->add_option("--noise", tt_noise, "cluster noise sigma");
  toy_cmd->callback([&]() {
    margin::MarginConfig cfg;
    cfg.variant = margin::variant_from_string(tt_variant);
    cfg.s = tt_scale;
    cfg.m = tt_margin;
    margin::SubCenterConfig sub{tt_sub_centers};
    margin::InterTopKConfig itk{tt_topk, tt_topk_margin};
    margin::Batch data = margin::make_cluster_data(tt_classes, tt_per_class,
                                                   tt_dim, tt_noise, tt_seed);
    margin::TrainResult result =
        margin::toy_train(data, cfg, sub, itk, tt_lr, tt_steps, tt_seed);
    std::printf("step,loss\n");
    for (std::size_t i = 0; i < result.trace.size(); ++i)
      std::printf("%zu,%.6f\n", i, result.trace[i]);
    std::fprintf(stderr, "final training accuracy %.2f%%\n",
                 100.0 * margin::head_accuracy(result.head, data));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const sidkit::DataError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sidkit::NumericError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
