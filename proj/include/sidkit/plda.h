// include/sidkit/plda.h

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

#ifndef SIDKIT_PLDA_H_
#define SIDKIT_PLDA_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sidkit/types.h"

namespace sidkit::backend {

// Two-covariance PLDA: x_{s,j} = mu + y_s + e_{s,j} with speaker factor
// y_s ~ N(0, sigma_b) and residual e_{s,j} ~ N(0, sigma_w).
struct PldaModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma_b;  // between-speaker covariance, PSD
  Eigen::MatrixXd sigma_w;  // within-speaker covariance, PD

  int dim() const { return static_cast<int>(mu.size()); }
  // Symmetry within 1e-9, sigma_w positive-definite (Cholesky succeeds),
  // sigma_b positive-semidefinite.
  void validate() const;
};

struct PldaTrainResult {
  PldaModel model;
  // Total marginal data log-likelihood: entry 0 at initialization, then one
  // entry after each EM iteration (length iters + 1).  Non-decreasing.
  std::vector<double> loglik_trace;
};

// EM estimation of the two-covariance model.  Initialization is deterministic
// (mu = data mean, sigma_b = sigma_w = total covariance / 2 + eps I); the seed
// is reserved for future stochastic variants and does not affect the result.
PldaTrainResult plda_train(const EmbeddingSet &set, const SpeakerMap &spk,
                           int iters, std::uint64_t seed = 0);

// Same-vs-different-speaker log-likelihood ratio scorer.  Decompositions are
// done once at construction; llr() is cheap per pair.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel &model);
  double llr(std::span<const float> enroll, std::span<const float> test) const;
  int dim() const { return static_cast<int>(mu_.size()); }

 private:
  double log_density(const Eigen::VectorXd &x,
                     const Eigen::LLT<Eigen::MatrixXd> &llt,
                     double logdet) const;

  Eigen::VectorXd mu_;
  Eigen::LLT<Eigen::MatrixXd> llt_sum_;    // sigma_w + 2 sigma_b
  Eigen::LLT<Eigen::MatrixXd> llt_within_; // sigma_w
  Eigen::LLT<Eigen::MatrixXd> llt_total_;  // sigma_b + sigma_w
  double logdet_sum_ = 0.0;
  double logdet_within_ = 0.0;
  double logdet_total_ = 0.0;
};

// log p(enroll, test | same speaker) - log p(enroll, test | different
// speakers); equals the ratio of the two 2F-dimensional block-Gaussian
// densities.
double plda_llr(const PldaModel &model, std::span<const float> enroll,
                std::span<const float> test);

// Unsupervised domain adaptation: mu moves to the adaptation-set mean and the
// PSD-clipped excess covariance of the adaptation domain is distributed
// between sigma_b (fraction alpha*split) and sigma_w (fraction
// alpha*(1-split)).
PldaModel plda_adapt(const PldaModel &model, const EmbeddingSet &adapt_set,
                     double alpha, double split = 0.5);

// Binary model file: magic "WSPLDA1", int32 dimension, then mu, sigma_b,
// sigma_w as row-major little-endian float64.
void save_plda(const PldaModel &model, const std::string &path);
PldaModel load_plda(const std::string &path);

}  // namespace sidkit::backend

#endif  // SIDKIT_PLDA_H_
