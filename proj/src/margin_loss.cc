// src/margin_loss.cc

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

#include "sidkit/margin_loss.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>

#include "sidkit/error.h"
#include "sidkit/kernels.h"

namespace sidkit::margin {

namespace {

constexpr double kCosClamp = 1.0 - 1e-12;

double effective_scale(const MarginConfig &cfg) {
  return cfg.variant == Variant::kSoftmax ? 1.0 : cfg.s;
}

double effective_margin(const MarginConfig &cfg) {
  return cfg.variant == Variant::kSoftmax ? 0.0 : cfg.m;
}

// Target-logit transform f(cos theta) and its derivative d f / d cos theta,
// before multiplication by the scale.  m == 0 is the identity for every
// variant; in particular the a-softmax psi would otherwise degenerate to the
// constant 1 at m = 0 instead of reducing to plain scaled softmax.
std::pair<double, double> target_transform(double c, Variant variant,
                                           double m) {
  if (m == 0.0 || variant == Variant::kSoftmax) return {c, 1.0};
  c = std::clamp(c, -kCosClamp, kCosClamp);
  switch (variant) {
    case Variant::kAmSoftmax:
      return {c - m, 1.0};
    case Variant::kAamSoftmax: {
      // cos(theta + m) = cos theta cos m - sin theta sin m, monotone in theta
      // only while theta + m <= pi; past that point fall back to a linear
      // penalty so the logit stays monotone in theta.
      if (c > std::cos(std::numbers::pi - m)) {
        double sin_theta = std::sqrt(1.0 - c * c);
        double f = c * std::cos(m) - sin_theta * std::sin(m);
        double df = std::cos(m) + c * std::sin(m) / sin_theta;
        return {f, df};
      }
      return {c - m * std::sin(m), 1.0};
    }
    case Variant::kASoftmax: {
      // psi(theta) = (-1)^n cos(m theta) - 2n on theta in [n pi/m, (n+1) pi/m]
      double theta = std::acos(c);
      double n = std::floor(theta * m / std::numbers::pi);
      double sign = std::fmod(n, 2.0) == 0.0 ? 1.0 : -1.0;
      double f = sign * std::cos(m * theta) - 2.0 * n;
      double df = sign * m * std::sin(m * theta) / std::sqrt(1.0 - c * c);
      return {f, df};
    }
    case Variant::kSoftmax:
      break;
  }
  return {c, 1.0};
}

// Class indices of the k largest non-target cosines, ties toward the lower
// class index.
std::vector<int> topk_nontarget(const Eigen::VectorXd &cosines, int target,
                                int k) {
  std::vector<int> classes;
  classes.reserve(cosines.size());
  for (int c = 0; c < cosines.size(); ++c)
    if (c != target) classes.push_back(c);
  int take = std::min<int>(k, static_cast<int>(classes.size()));
  std::partial_sort(classes.begin(), classes.begin() + take, classes.end(),
                    [&cosines](int a, int b) {
                      if (cosines[a] != cosines[b])
                        return cosines[a] > cosines[b];
                      return a < b;
                    });
  classes.resize(take);
  return classes;
}

}  // namespace

Variant variant_from_string(const std::string &name) {
  if (name == "softmax") return Variant::kSoftmax;
  if (name == "a_softmax") return Variant::kASoftmax;
  if (name == "am_softmax" || name == "am") return Variant::kAmSoftmax;
  if (name == "aam_softmax" || name == "aam") return Variant::kAamSoftmax;
  throw DataError("unknown loss variant \"" + name +
                  "\" (expected softmax, a_softmax, am_softmax or "
                  "aam_softmax)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kSoftmax: return "softmax";
    case Variant::kASoftmax: return "a_softmax";
    case Variant::kAmSoftmax: return "am_softmax";
    case Variant::kAamSoftmax: return "aam_softmax";
  }
  return "softmax";
}

void MarginConfig::validate() const {
  if (!(s > 0.0) || !std::isfinite(s))
    throw DataError("margin loss scale must be positive and finite");
  if (!(m >= 0.0) || !std::isfinite(m))
    throw DataError("margin must be nonnegative and finite");
  if (variant == Variant::kAamSoftmax && m >= std::numbers::pi / 2)
    throw DataError("aam_softmax margin must be below pi/2");
}

void SubCenterConfig::validate() const {
  if (K < 1) throw DataError("sub-center count must be at least 1");
}

void InterTopKConfig::validate(int num_classes) const {
  if (k < 0) throw DataError("inter-topK k must be nonnegative");
  if (k >= num_classes)
    throw DataError("inter-topK k must be smaller than the class count");
  if (!(m_prime >= 0.0) || !std::isfinite(m_prime))
    throw DataError("inter-topK margin must be nonnegative and finite");
}

void ClassifierHead::validate() const {
  if (num_classes < 1 || sub_centers < 1)
    throw DataError("classifier head needs at least one class and one "
                    "sub-center");
  if (weights.rows() != static_cast<Eigen::Index>(num_classes) * sub_centers ||
      weights.cols() < 1)
    throw DataError("classifier head weight matrix has inconsistent shape");
  if (!weights.allFinite())
    throw DataError("classifier head weights contain a non-finite value");
}

ClassifierHead ClassifierHead::random(int num_classes, int sub_centers,
                                      int dim, std::uint64_t seed) {
  ClassifierHead head;
  head.num_classes = num_classes;
  head.sub_centers = sub_centers;
  head.weights.resize(static_cast<Eigen::Index>(num_classes) * sub_centers,
                      dim);
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index r = 0; r < head.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) head.weights(r, c) = gauss(rng);
    head.weights.row(r).normalize();
  }
  head.validate();
  return head;
}

LogitsResult margin_logits(const Eigen::VectorXd &emb,
                           const ClassifierHead &head, const MarginConfig &cfg,
                           const SubCenterConfig &sub, int target) {
  cfg.validate();
  sub.validate();
  head.validate();
  const int C = head.num_classes, K = head.sub_centers, F = head.dim();
  if (sub.K != K)
    throw DataError("sub-center config disagrees with the head layout");
  if (emb.size() != F)
    throw DataError("embedding dimension " + std::to_string(emb.size()) +
                    " does not match head dimension " + std::to_string(F));
  if (target < 0 || target >= C)
    throw DataError("target class " + std::to_string(target) +
                    " out of range");
  double norm_e = std::sqrt(kernels::sumsq_f64(emb.data(), emb.size()));
  if (norm_e == 0.0)
    throw NumericError("cannot compute cosines for a zero-norm embedding");

  const double s = effective_scale(cfg);
  LogitsResult out;
  out.logits.resize(C);
  out.cosines.resize(C);
  out.argmax_center.assign(C, 0);
  Eigen::VectorXd ehat = emb / norm_e;
  for (int c = 0; c < C; ++c) {
    double best = -2.0;
    int best_k = 0;
    for (int k = 0; k < K; ++k) {
      const auto row = head.weights.row(static_cast<Eigen::Index>(c) * K + k);
      double norm_w = std::sqrt(kernels::sumsq_f64(row.data(), F));
      if (norm_w == 0.0)
        throw NumericError("zero-norm head row for class " +
                           std::to_string(c));
      double cos = kernels::dot_f64(row.data(), ehat.data(), F) / norm_w;
      if (cos > best) {
        best = cos;
        best_k = k;
      }
    }
    out.cosines[c] = best;
    out.argmax_center[c] = best_k;
    out.logits[c] = s * best;
  }
  auto [f, df] = target_transform(out.cosines[target], cfg.variant,
                                  effective_margin(cfg));
  (void)df;
  out.logits[target] = s * f;
  return out;
}

Eigen::VectorXd inter_topk_adjust(const Eigen::VectorXd &logits, int target,
                                  const InterTopKConfig &cfg, double s,
                                  const Eigen::VectorXd &cosines) {
  cfg.validate(static_cast<int>(logits.size()));
  Eigen::VectorXd out = logits;
  if (cfg.k == 0) return out;
  for (int c : topk_nontarget(cosines, target, cfg.k))
    out[c] = s * (cosines[c] + cfg.m_prime);
  return out;
}

LossGrad loss_and_grad(const Batch &batch, const ClassifierHead &head,
                       const MarginConfig &cfg, const SubCenterConfig &sub,
                       const InterTopKConfig &itk) {
  const int C = head.num_classes, K = head.sub_centers, F = head.dim();
  const Eigen::Index N = batch.embeddings.rows();
  if (N == 0) throw DataError("loss evaluation needs a nonempty batch");
  if (batch.targets.size() != static_cast<std::size_t>(N))
    throw DataError("batch targets do not match the embedding count");
  itk.validate(C);

  const double s = effective_scale(cfg);
  const double m = effective_margin(cfg);
  LossGrad out;
  out.grad_emb = RowMajorMatrix::Zero(N, F);
  out.grad_head = RowMajorMatrix::Zero(static_cast<Eigen::Index>(C) * K, F);

  double loss_sum = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    const int target = batch.targets[i];
    Eigen::VectorXd emb = batch.embeddings.row(i).transpose();
    LogitsResult fwd = margin_logits(emb, head, cfg, sub, target);
    Eigen::VectorXd logits =
        inter_topk_adjust(fwd.logits, target, itk, s, fwd.cosines);

    // Cross-entropy of the softmax, max-stabilized.
    double zmax = logits.maxCoeff();
    Eigen::ArrayXd p = (logits.array() - zmax).exp();
    double z_sum = p.sum();
    loss_sum += -(logits[target] - zmax) + std::log(z_sum);
    p /= z_sum;

    double norm_e = emb.norm();
    Eigen::VectorXd ehat = emb / norm_e;
    for (int c = 0; c < C; ++c) {
      double dz = p[c] - (c == target ? 1.0 : 0.0);
      // d logit / d cosine: the margin transform on the target, the plain
      // scale on everything else (the top-k adjustment is a shift).
      double dcos = s;
      if (c == target) dcos = s * target_transform(fwd.cosines[c], cfg.variant, m).second;
      double g = dz * dcos;
      Eigen::Index r = static_cast<Eigen::Index>(c) * K + fwd.argmax_center[c];
      Eigen::VectorXd w = head.weights.row(r).transpose();
      double norm_w = w.norm();
      Eigen::VectorXd what = w / norm_w;
      double cos = fwd.cosines[c];
      out.grad_emb.row(i) += g * ((what - cos * ehat) / norm_e).transpose();
      out.grad_head.row(r) += g * ((ehat - cos * what) / norm_w).transpose();
    }
  }
  out.loss = loss_sum / static_cast<double>(N);
  out.grad_emb /= static_cast<double>(N);
  out.grad_head /= static_cast<double>(N);
  return out;
}

TrainResult toy_train(const Batch &data, const MarginConfig &cfg,
                      const SubCenterConfig &sub, const InterTopKConfig &itk,
                      double lr, int steps, std::uint64_t seed) {
  if (data.embeddings.rows() == 0)
    throw DataError("toy training needs a nonempty batch");
  int num_classes = 0;
  for (int t : data.targets) {
    if (t < 0) throw DataError("negative class label in training data");
    num_classes = std::max(num_classes, t + 1);
  }
  if (num_classes < 2) throw DataError("toy training needs at least 2 classes");
  if (steps < 0) throw DataError("step count must be nonnegative");
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw DataError("learning rate must be positive and finite");

  TrainResult result;
  result.head = ClassifierHead::random(
      num_classes, sub.K, static_cast<int>(data.embeddings.cols()), seed);
  result.trace.reserve(static_cast<std::size_t>(steps) + 1);
  LossGrad lg = loss_and_grad(data, result.head, cfg, sub, itk);
  result.trace.push_back(lg.loss);
  for (int step = 0; step < steps; ++step) {
    if (!std::isfinite(lg.loss))
      throw NumericError("toy training diverged (non-finite loss at step " +
                         std::to_string(step) + ")");
    result.head.weights -= lr * lg.grad_head;
    lg = loss_and_grad(data, result.head, cfg, sub, itk);
    result.trace.push_back(lg.loss);
  }
  if (!std::isfinite(result.trace.back()))
    throw NumericError("toy training diverged (non-finite final loss)");
  return result;
}

Batch make_cluster_data(int num_classes, int per_class, int dim,
                        double noise_sigma, std::uint64_t seed) {
  if (num_classes < 1 || per_class < 1 || dim < 1)
    throw DataError("cluster data needs positive class count, size and dim");
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd centers(num_classes, dim);
  if (num_classes <= dim) {
    // Orthonormal directions via QR of a random Gaussian matrix.
    Eigen::MatrixXd g(dim, num_classes);
    for (Eigen::Index c = 0; c < g.cols(); ++c)
      for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() *
                        Eigen::MatrixXd::Identity(dim, num_classes);
    centers = q.transpose();
  } else {
    for (int c = 0; c < num_classes; ++c) {
      for (int f = 0; f < dim; ++f) centers(c, f) = gauss(rng);
      centers.row(c).normalize();
    }
  }

  Batch batch;
  batch.embeddings.resize(static_cast<Eigen::Index>(num_classes) * per_class,
                          dim);
  batch.targets.reserve(static_cast<std::size_t>(num_classes) * per_class);
  Eigen::Index row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < per_class; ++j, ++row) {
      for (int f = 0; f < dim; ++f)
        batch.embeddings(row, f) = centers(c, f) + noise_sigma * gauss(rng);
      batch.targets.push_back(c);
    }
  }
  return batch;
}

double head_accuracy(const ClassifierHead &head, const Batch &batch) {
  const Eigen::Index N = batch.embeddings.rows();
  if (N == 0) throw DataError("accuracy needs a nonempty batch");
  MarginConfig plain;  // margin-free cosine argmax
  SubCenterConfig sub{head.sub_centers};
  int correct = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::VectorXd emb = batch.embeddings.row(i).transpose();
    LogitsResult fwd = margin_logits(emb, head, plain, sub, 0);
    Eigen::Index best = 0;
    fwd.cosines.maxCoeff(&best);
    if (static_cast<int>(best) == batch.targets[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(N);
}

}  // namespace sidkit::margin
