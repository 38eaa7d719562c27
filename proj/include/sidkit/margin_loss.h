// include/sidkit/margin_loss.h

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

#ifndef SIDKIT_MARGIN_LOSS_H_
#define SIDKIT_MARGIN_LOSS_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sidkit::margin {

// Row-major so that per-sample and per-class rows are contiguous and can be
// handed to the low-level dot kernels.
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Variant { kSoftmax, kASoftmax, kAmSoftmax, kAamSoftmax };

Variant variant_from_string(const std::string &name);  // throws DataError
std::string variant_name(Variant v);

struct MarginConfig {
  Variant variant = Variant::kSoftmax;
  double s = 1.0;  // logit scale; forced to 1 for the plain softmax variant
  double m = 0.0;  // margin
  void validate() const;
};

struct SubCenterConfig {
  int K = 1;  // sub-centers per class
  void validate() const;
};

struct InterTopKConfig {
  int k = 0;           // number of penalized non-target classes
  double m_prime = 0.0;  // extra penalty margin
  void validate(int num_classes) const;
};

// The class-weight matrix behind all margin softmax variants: C*K rows of
// dimension F (rows c*K .. c*K+K-1 belong to class c).  Rows are
// L2-normalized inside the forward pass, not in storage.
struct ClassifierHead {
  int num_classes = 0;
  int sub_centers = 1;
  RowMajorMatrix weights;  // (num_classes * sub_centers) x F

  int dim() const { return static_cast<int>(weights.cols()); }
  void validate() const;

  // Rows drawn from a unit Gaussian and normalized to unit norm.
  static ClassifierHead random(int num_classes, int sub_centers, int dim,
                               std::uint64_t seed);
};

// Per-sample forward pass outputs kept around for gradient computation.
struct LogitsResult {
  Eigen::VectorXd logits;          // C, after the margin transform
  Eigen::VectorXd cosines;         // C, max over sub-centers
  std::vector<int> argmax_center;  // C, which sub-center won (ties -> lowest)
};

// Margin-transformed logits for one embedding.  cos theta_c is the max over
// the K sub-center cosines; the target logit is transformed per variant
// (plain: s*cos, am: s*(cos-m), aam: s*cos(theta+m), a-softmax: s*psi(theta)
// with psi(theta) = (-1)^n cos(m*theta) - 2n on theta in [n*pi/m,(n+1)*pi/m]);
// non-target logits are s*cos.  m == 0 reduces every variant to s*cos.
LogitsResult margin_logits(const Eigen::VectorXd &emb,
                           const ClassifierHead &head, const MarginConfig &cfg,
                           const SubCenterConfig &sub, int target);

// Replaces the logits of the k largest non-target cosines (ties broken toward
// the lower class index) with s*(cos + m_prime).  The target logit is never
// touched.
Eigen::VectorXd inter_topk_adjust(const Eigen::VectorXd &logits, int target,
                                  const InterTopKConfig &cfg, double s,
                                  const Eigen::VectorXd &cosines);

struct Batch {
  RowMajorMatrix embeddings;  // N x F, one row per sample
  std::vector<int> targets;    // N
};

struct LossGrad {
  double loss = 0.0;
  RowMajorMatrix grad_emb;   // N x F
  RowMajorMatrix grad_head;  // (C*K) x F
};

// Mean cross-entropy of the softmax over adjusted logits, with exact analytic
// gradients with respect to the embeddings and the head weights.
LossGrad loss_and_grad(const Batch &batch, const ClassifierHead &head,
                       const MarginConfig &cfg, const SubCenterConfig &sub,
                       const InterTopKConfig &itk);

struct TrainResult {
  ClassifierHead head;
  std::vector<double> trace;  // steps+1 losses: initial, then one per step
};

// Plain gradient descent on the head weights (embeddings stay fixed) for
// desk-scale demonstrations.  Deterministic given the seed; a non-finite loss
// raises a numeric error.
TrainResult toy_train(const Batch &data, const MarginConfig &cfg,
                      const SubCenterConfig &sub, const InterTopKConfig &itk,
                      double lr, int steps, std::uint64_t seed);

// Synthetic linearly separable clusters: one center per class (orthonormal
// directions when num_classes <= dim, random unit directions otherwise) plus
// Gaussian noise of the given sigma.
Batch make_cluster_data(int num_classes, int per_class, int dim,
                        double noise_sigma, std::uint64_t seed);

// Fraction of samples whose largest cosine (max over sub-centers) belongs to
// the true class.
double head_accuracy(const ClassifierHead &head, const Batch &batch);

}  // namespace sidkit::margin

#endif  // SIDKIT_MARGIN_LOSS_H_
