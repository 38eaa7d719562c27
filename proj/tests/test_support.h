// tests/test_support.h

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

#ifndef SIDKIT_TESTS_TEST_SUPPORT_H_
#define SIDKIT_TESTS_TEST_SUPPORT_H_

// Shared fixtures and, more importantly, independent reference
// implementations ("oracles") that the production code is checked against:
//   * a multivariate Gaussian log-density built on an eigendecomposition
//     (production uses Cholesky factorizations),
//   * the stacked-observation joint density of the two-covariance model,
//   * naive counting implementations of EER / minDCF,
//   * brute-force assignment enumeration for the speaker-mapping step.
// The oracles favor clarity over speed; none of them share code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sidkit/plda.h"
#include "sidkit/types.h"

#ifndef _WIN32
#include <sys/wait.h>
#include <unistd.h>
#endif

namespace test_support {

// ---------------------------------------------------------------- fixtures

// Self-cleaning scratch directory for file-format and CLI tests.
class TempDir {
 public:
  TempDir() {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      fs::path candidate =
          base / ("sidkit_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter_++));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::string file(const std::string &name) const {
    return (path_ / name).string();
  }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline void write_file(const std::string &path, const std::string &content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
  if (!os) throw std::runtime_error("cannot write " + path);
}

inline std::string read_file(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------- random data

inline std::vector<float> random_vector(std::mt19937 &rng, int dim,
                                        float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(static_cast<std::size_t>(dim));
  for (float &x : v) x = u(rng);
  return v;
}

inline std::vector<float> random_unit_vector(std::mt19937 &rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<float> v(static_cast<std::size_t>(dim));
  double ss = 0.0;
  do {
    ss = 0.0;
    for (float &x : v) {
      double d = g(rng);
      x = static_cast<float>(d);
      ss += d * d;
    }
  } while (ss < 1e-12);
  const float inv = static_cast<float>(1.0 / std::sqrt(ss));
  for (float &x : v) x *= inv;
  return v;
}

// Random symmetric positive-definite matrix R R' + jitter I.
inline Eigen::MatrixXd random_spd(std::mt19937 &rng, int dim,
                                  double jitter = 0.1) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd r(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) r(i, j) = g(rng);
  Eigen::MatrixXd s = r * r.transpose() / static_cast<double>(dim);
  s += jitter * Eigen::MatrixXd::Identity(dim, dim);
  return s;
}

// Draws one sample from N(mean, cov) through the symmetric square root, so
// this sampler shares nothing with the Cholesky-based production code.
inline Eigen::VectorXd sample_gaussian(std::mt19937 &rng,
                                       const Eigen::VectorXd &mean,
                                       const Eigen::MatrixXd &cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd sqrt_ev =
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < z.size(); ++i) z(i) = g(rng);
  return mean + es.eigenvectors() * sqrt_ev.asDiagonal() * z;
}

// -------------------------------------------------- Gaussian density oracle

// log N(x; mean, cov) evaluated through an eigendecomposition.
inline double mvn_logpdf(const Eigen::VectorXd &x, const Eigen::VectorXd &mean,
                         const Eigen::MatrixXd &cov) {
  const int d = static_cast<int>(x.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd ev = es.eigenvalues();
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) {
    if (ev(i) <= 0.0)
      throw std::runtime_error("oracle covariance is not positive-definite");
    logdet += std::log(ev(i));
  }
  const Eigen::VectorXd t = es.eigenvectors().transpose() * (x - mean);
  double quad = 0.0;
  for (int i = 0; i < d; ++i) quad += t(i) * t(i) / ev(i);
  return -0.5 * (d * std::log(2.0 * M_PI) + logdet + quad);
}

// Joint log-density of n observations of one speaker under the
// two-covariance model, evaluated the brute-force way: stack the
// observations into one n*F vector whose covariance has sigma_w + sigma_b
// blocks on the diagonal and sigma_b blocks off it.
inline double stacked_speaker_logpdf(const std::vector<Eigen::VectorXd> &xs,
                                     const sidkit::backend::PldaModel &model) {
  const int f = model.dim();
  const int n = static_cast<int>(xs.size());
  Eigen::VectorXd stacked(n * f);
  Eigen::VectorXd mean(n * f);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n * f, n * f);
  for (int i = 0; i < n; ++i) {
    stacked.segment(i * f, f) = xs[static_cast<std::size_t>(i)];
    mean.segment(i * f, f) = model.mu;
    for (int j = 0; j < n; ++j) {
      cov.block(i * f, j * f, f, f) = model.sigma_b;
      if (i == j) cov.block(i * f, j * f, f, f) += model.sigma_w;
    }
  }
  return mvn_logpdf(stacked, mean, cov);
}

// Brute-force same/different log-likelihood ratio for one trial.
inline double brute_force_llr(const sidkit::backend::PldaModel &model,
                              const Eigen::VectorXd &enroll,
                              const Eigen::VectorXd &test) {
  const double same = stacked_speaker_logpdf({enroll, test}, model);
  const Eigen::MatrixXd total = model.sigma_b + model.sigma_w;
  const double diff = mvn_logpdf(enroll, model.mu, total) +
                      mvn_logpdf(test, model.mu, total);
  return same - diff;
}

// ------------------------------------------------------ EER / minDCF oracle

// Error rates at one threshold by direct counting.
inline double naive_frr(const std::vector<double> &targets, double thr) {
  std::size_t miss = 0;
  for (double s : targets)
    if (s < thr) ++miss;
  return static_cast<double>(miss) / static_cast<double>(targets.size());
}

inline double naive_far(const std::vector<double> &nontargets, double thr) {
  std::size_t fa = 0;
  for (double s : nontargets)
    if (s >= thr) ++fa;
  return static_cast<double>(fa) / static_cast<double>(nontargets.size());
}

inline std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Equal error rate by scanning FAR - FRR over the swept thresholds and
// interpolating the sign change; a run of exact equality reports its
// midpoint threshold.
inline double naive_eer(const std::vector<double> &targets,
                        const std::vector<double> &nontargets,
                        double *thr_out = nullptr) {
  std::vector<double> all(targets);
  all.insert(all.end(), nontargets.begin(), nontargets.end());
  const std::vector<double> thr = distinct_sorted(all);

  std::vector<double> gs, frs, ts;
  for (double t : thr) {
    const double fr = naive_frr(targets, t);
    const double fa = naive_far(nontargets, t);
    gs.push_back(fa - fr);
    frs.push_back(fr);
    ts.push_back(t);
  }
  // Past the largest score everything is rejected.
  gs.push_back(0.0 - 1.0);
  frs.push_back(1.0);
  ts.push_back(thr.back());

  for (std::size_t i = 0; i + 1 < gs.size(); ++i) {
    if (gs[i] == 0.0) {
      std::size_t j = i;
      while (j + 1 < gs.size() && gs[j + 1] == 0.0) ++j;
      if (thr_out) *thr_out = 0.5 * (ts[i] + ts[j]);
      return frs[i];
    }
    if (gs[i] > 0.0 && gs[i + 1] < 0.0) {
      const double lam = gs[i] / (gs[i] - gs[i + 1]);
      if (thr_out) *thr_out = ts[i] + lam * (ts[i + 1] - ts[i]);
      return frs[i] + lam * (frs[i + 1] - frs[i]);
    }
  }
  throw std::runtime_error("oracle found no equal-error crossing");
}

// Minimum normalized detection cost by evaluating every candidate threshold;
// the lowest threshold wins ties.
inline double naive_min_dcf(const std::vector<double> &targets,
                            const std::vector<double> &nontargets,
                            double p_target, double c_miss, double c_fa,
                            double *thr_out = nullptr) {
  std::vector<double> all(targets);
  all.insert(all.end(), nontargets.begin(), nontargets.end());
  const std::vector<double> thr = distinct_sorted(all);
  const double denom =
      std::min(c_miss * p_target, c_fa * (1.0 - p_target));

  double best = std::numeric_limits<double>::infinity();
  double best_thr = 0.0;
  auto consider = [&](double frr, double far, double t) {
    const double dcf =
        (c_miss * p_target * frr + c_fa * (1.0 - p_target) * far) / denom;
    if (dcf < best) {
      best = dcf;
      best_thr = t;
    }
  };
  for (double t : thr)
    consider(naive_frr(targets, t), naive_far(nontargets, t), t);
  consider(1.0, 0.0, std::numeric_limits<double>::infinity());
  if (thr_out) *thr_out = best_thr;
  return best;
}

// --------------------------------------------------- assignment enumeration

// Maximum-total-weight one-to-one assignment by trying every injective
// mapping of the smaller side into the larger (feasible up to ~8x8).
inline double brute_force_assignment(const std::vector<double> &w, int rows,
                                     int cols) {
  const int n = std::max(rows, cols);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int r = 0; r < rows; ++r) {
      const int c = perm[static_cast<std::size_t>(r)];
      if (c < cols) total += w[static_cast<std::size_t>(r) * cols + c];
    }
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double assignment_total(const std::vector<double> &w, int rows,
                               int cols, const std::vector<int> &match) {
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    const int c = match[static_cast<std::size_t>(r)];
    if (c >= 0) total += w[static_cast<std::size_t>(r) * cols + c];
  }
  return total;
}

// -------------------------------------------------------------- CLI runner

#ifdef SIDKIT_CLI_PATH
struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary with the given argument string, capturing both
// streams.  Only usable where /bin/sh semantics hold (the test suite assumes
// POSIX).
inline CliResult run_cli(const std::string &args, const TempDir &dir) {
  static int invocation = 0;
  const std::string out_path =
      dir.file(".cli_out_" + std::to_string(invocation));
  const std::string err_path =
      dir.file(".cli_err_" + std::to_string(invocation));
  ++invocation;
  const std::string cmd = std::string(SIDKIT_CLI_PATH) + " " + args + " > " +
                          out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  if (status == -1)
    throw std::runtime_error("failed to launch the CLI");
#ifndef _WIN32
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -2;
#else
  r.exit_code = status;
#endif
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}
#endif  // SIDKIT_CLI_PATH

}  // namespace test_support

#endif  // SIDKIT_TESTS_TEST_SUPPORT_H_
