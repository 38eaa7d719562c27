// src/plda.cc

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

#include "sidkit/plda.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>

#include "sidkit/error.h"

namespace sidkit::backend {

namespace {

constexpr char kPldaMagic[7] = {'W', 'S', 'P', 'L', 'D', 'A', '1'};

double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Cholesky with a conditioning ladder: on failure add eps I with eps doubling
// up to 3 times, then give up.  Desk-scale data is often rank-deficient.
Eigen::LLT<Eigen::MatrixXd> safe_llt(Eigen::MatrixXd m, const char *what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const int f = static_cast<int>(m.rows());
  double eps = 1e-6 * m.trace() / f;
  if (!(eps > 0.0))
    throw NumericError(std::string(what) +
                       " is singular and has no usable scale to condition on");
  for (int attempt = 0; attempt < 3; ++attempt) {
    m += eps * Eigen::MatrixXd::Identity(f, f);
    llt.compute(m);
    if (llt.info() == Eigen::Success) return llt;
    eps *= 2.0;
  }
  throw NumericError(std::string(what) +
                     " stayed singular after repeated conditioning");
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd &m) {
  return 0.5 * (m + m.transpose());
}

// Per-speaker views of the data plus the sufficient statistics EM needs.
struct SpeakerStats {
  std::string speaker;
  int count = 0;
  Eigen::VectorXd sum;        // per-speaker sum of embeddings
  Eigen::MatrixXd scatter;    // sum of (x - xbar)(x - xbar)'
};

// log N(x; 0, Sigma) via an existing decomposition.
double gaussian_logpdf(const Eigen::VectorXd &x,
                       const Eigen::LLT<Eigen::MatrixXd> &llt, double logdet) {
  double quad = x.dot(llt.solve(x));
  double f = static_cast<double>(x.size());
  return -0.5 * (f * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

// Total marginal log-likelihood of all speakers under (mu, sigma_b, sigma_w).
// Per speaker with n sessions, mean xbar and scatter S:
//   log p = log N(xbar; mu, sigma_b + sigma_w/n)
//           - ((n-1) F / 2) log(2 pi) - ((n-1)/2) logdet sigma_w
//           - (1/2) tr(sigma_w^{-1} S)
//           - (F/2) log n
// which follows from splitting the n observations into their mean and
// deviations (the deviations are speaker-factor-free and carry the scatter
// term; the log n piece is the Jacobian of that split).  Equivalent closed
// form used below: the mean part is written with n*sigma_b + sigma_w so the
// log n pieces cancel.
double total_loglik(const std::vector<SpeakerStats> &stats,
                    const Eigen::VectorXd &mu, const Eigen::MatrixXd &sigma_b,
                    const Eigen::MatrixXd &sigma_w) {
  const int f = static_cast<int>(mu.size());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Eigen::LLT<Eigen::MatrixXd> llt_w = safe_llt(sigma_w, "within covariance");
  double logdet_w = logdet_from_llt(llt_w);
  Eigen::MatrixXd w_inv =
      llt_w.solve(Eigen::MatrixXd::Identity(f, f));

  std::map<int, std::pair<Eigen::LLT<Eigen::MatrixXd>, double>> by_count;
  double total = 0.0;
  for (const SpeakerStats &s : stats) {
    auto it = by_count.find(s.count);
    if (it == by_count.end()) {
      Eigen::MatrixXd t = static_cast<double>(s.count) * sigma_b + sigma_w;
      Eigen::LLT<Eigen::MatrixXd> llt = safe_llt(t, "speaker-mean covariance");
      double ld = logdet_from_llt(llt);
      it = by_count.emplace(s.count, std::make_pair(std::move(llt), ld)).first;
    }
    const double n = static_cast<double>(s.count);
    Eigen::VectorXd centered = s.sum / n - mu;
    double quad = n * centered.dot(it->second.first.solve(centered));
    total += -0.5 * (f * log2pi + it->second.second + quad);
    total += -0.5 * ((n - 1.0) * (f * log2pi + logdet_w) +
                     w_inv.cwiseProduct(s.scatter).sum());
  }
  return total;
}

}  // namespace

void PldaModel::validate() const {
  const int f = dim();
  if (f < 1) throw DataError("PLDA model has no dimensions");
  if (sigma_b.rows() != f || sigma_b.cols() != f || sigma_w.rows() != f ||
      sigma_w.cols() != f)
    throw DataError("PLDA covariance shapes do not match the mean dimension");
  if (!mu.allFinite() || !sigma_b.allFinite() || !sigma_w.allFinite())
    throw DataError("PLDA model contains a non-finite value");
  double asym_b = (sigma_b - sigma_b.transpose()).cwiseAbs().maxCoeff();
  double asym_w = (sigma_w - sigma_w.transpose()).cwiseAbs().maxCoeff();
  if (asym_b > 1e-9 || asym_w > 1e-9)
    throw DataError("PLDA covariances are not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_w);
  if (llt.info() != Eigen::Success)
    throw NumericError("PLDA within covariance is not positive-definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_b,
                                                    Eigen::EigenvaluesOnly);
  double min_eig = es.eigenvalues().minCoeff();
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (min_eig < -1e-9 * scale)
    throw NumericError("PLDA between covariance is not PSD");
}

PldaTrainResult plda_train(const EmbeddingSet &set, const SpeakerMap &spk,
                           int iters, std::uint64_t seed) {
  (void)seed;  // initialization is deterministic; see header
  if (iters < 0) throw DataError("iteration count must be nonnegative");
  if (set.empty()) throw DataError("PLDA training needs a nonempty set");
  const int f = set.dim();
  const auto n_total = static_cast<Eigen::Index>(set.size());

  // Group utterances by speaker, speakers in sorted order for determinism.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string &key = set.key(i);
    if (!spk.contains(key))
      throw DataError("utterance \"" + key + "\" has no speaker mapping");
    groups[spk.speaker_of(key)].push_back(i);
  }
  if (groups.size() < 2)
    throw DataError("PLDA training needs at least 2 speakers, got " +
                    std::to_string(groups.size()));

  Eigen::MatrixXd x(n_total, f);
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto row = set.row(i);
    for (int d = 0; d < f; ++d) x(static_cast<Eigen::Index>(i), d) = row[d];
  }

  std::vector<SpeakerStats> stats;
  stats.reserve(groups.size());
  for (const auto &[speaker, rows] : groups) {
    SpeakerStats s;
    s.speaker = speaker;
    s.count = static_cast<int>(rows.size());
    s.sum = Eigen::VectorXd::Zero(f);
    for (std::size_t r : rows)
      s.sum += x.row(static_cast<Eigen::Index>(r)).transpose();
    Eigen::VectorXd xbar = s.sum / s.count;
    s.scatter = Eigen::MatrixXd::Zero(f, f);
    for (std::size_t r : rows) {
      Eigen::VectorXd d =
          x.row(static_cast<Eigen::Index>(r)).transpose() - xbar;
      s.scatter += d * d.transpose();
    }
    stats.push_back(std::move(s));
  }

  // Deterministic initialization: mu at the data mean, the total covariance
  // split evenly, a small ridge for rank-deficient desk-scale data.
  PldaModel model;
  model.mu = x.colwise().mean().transpose();
  Eigen::MatrixXd centered = x.rowwise() - model.mu.transpose();
  Eigen::MatrixXd total_cov =
      (centered.transpose() * centered) / static_cast<double>(n_total);
  double eps = 1e-6 * total_cov.trace() / f;
  if (!(eps > 0.0))
    throw NumericError("training data has zero total variance");
  Eigen::MatrixXd ridge = eps * Eigen::MatrixXd::Identity(f, f);
  model.sigma_b = symmetrize(0.5 * total_cov) + ridge;
  model.sigma_w = symmetrize(0.5 * total_cov) + ridge;

  PldaTrainResult result;
  result.loglik_trace.reserve(static_cast<std::size_t>(iters) + 1);
  result.loglik_trace.push_back(
      total_loglik(stats, model.mu, model.sigma_b, model.sigma_w));

  const double num_speakers = static_cast<double>(stats.size());
  for (int iter = 0; iter < iters; ++iter) {
    // E-step: posterior of each speaker factor given that speaker's data.
    //   yhat_s = sigma_b (sigma_b + sigma_w/n)^[-1] (xbar_s - mu)
    //   P_s    = sigma_b - sigma_b (sigma_b + sigma_w/n)^[-1] sigma_b
    // (conditioning y on the speaker mean; the deviations are independent of
    // y and do not enter the posterior).
    std::map<int, Eigen::LLT<Eigen::MatrixXd>> post_llt;
    std::vector<Eigen::VectorXd> yhat(stats.size());
    std::vector<Eigen::MatrixXd> pcov(stats.size());
    for (std::size_t si = 0; si < stats.size(); ++si) {
      const SpeakerStats &s = stats[si];
      auto it = post_llt.find(s.count);
      if (it == post_llt.end()) {
        Eigen::MatrixXd t = model.sigma_b + model.sigma_w / s.count;
        it = post_llt
                 .emplace(s.count, safe_llt(t, "speaker posterior covariance"))
                 .first;
      }
      Eigen::VectorXd xbar = s.sum / s.count;
      yhat[si] = model.sigma_b * it->second.solve(xbar - model.mu);
      pcov[si] = model.sigma_b -
                 model.sigma_b * it->second.solve(model.sigma_b);
    }

    // M-step, exact coordinate maximization of the EM objective:
    //   mu      <- (1/N) sum_s n_s (xbar_s - yhat_s)
    //   sigma_b <- (1/S) sum_s (P_s + yhat_s yhat_s')
    //   sigma_w <- (1/N) sum_s (n_s P_s + sum_j (x - mu - yhat_s)(...)')
    Eigen::VectorXd new_mu = Eigen::VectorXd::Zero(f);
    for (std::size_t si = 0; si < stats.size(); ++si)
      new_mu += stats[si].sum - stats[si].count * yhat[si];
    new_mu /= static_cast<double>(n_total);

    Eigen::MatrixXd new_b = Eigen::MatrixXd::Zero(f, f);
    Eigen::MatrixXd new_w = Eigen::MatrixXd::Zero(f, f);
    for (std::size_t si = 0; si < stats.size(); ++si) {
      const SpeakerStats &s = stats[si];
      new_b += pcov[si] + yhat[si] * yhat[si].transpose();
      // sum_j (x_j - mu - yhat)(x_j - mu - yhat)' expanded around xbar:
      //   scatter + n (xbar - mu - yhat)(xbar - mu - yhat)'
      Eigen::VectorXd r = s.sum / s.count - new_mu - yhat[si];
      new_w += static_cast<double>(s.count) * pcov[si] + s.scatter +
               static_cast<double>(s.count) * (r * r.transpose());
    }
    model.mu = new_mu;
    model.sigma_b = symmetrize(new_b / num_speakers);
    model.sigma_w = symmetrize(new_w / static_cast<double>(n_total));

    result.loglik_trace.push_back(
        total_loglik(stats, model.mu, model.sigma_b, model.sigma_w));
  }

  model.validate();
  result.model = std::move(model);
  return result;
}

PldaScorer::PldaScorer(const PldaModel &model) {
  model.validate();
  mu_ = model.mu;
  llt_sum_ = safe_llt(model.sigma_w + 2.0 * model.sigma_b,
                      "same-speaker sum covariance");
  llt_within_ = safe_llt(model.sigma_w, "within covariance");
  llt_total_ = safe_llt(model.sigma_b + model.sigma_w, "total covariance");
  logdet_sum_ = logdet_from_llt(llt_sum_);
  logdet_within_ = logdet_from_llt(llt_within_);
  logdet_total_ = logdet_from_llt(llt_total_);
}

double PldaScorer::log_density(const Eigen::VectorXd &x,
                               const Eigen::LLT<Eigen::MatrixXd> &llt,
                               double logdet) const {
  return gaussian_logpdf(x, llt, logdet);
}

double PldaScorer::llr(std::span<const float> enroll,
                       std::span<const float> test) const {
  const int f = dim();
  if (static_cast<int>(enroll.size()) != f ||
      static_cast<int>(test.size()) != f)
    throw DataError("PLDA scorer dimension mismatch: model is " +
                    std::to_string(f) + "-dimensional");
  Eigen::VectorXd a(f), b(f);
  for (int i = 0; i < f; ++i) {
    a[i] = static_cast<double>(enroll[i]) - mu_[i];
    b[i] = static_cast<double>(test[i]) - mu_[i];
  }
  // Rotate the joint (a, b) into sum and difference channels: under the
  // same-speaker hypothesis u and v are independent with covariances
  // sigma_w + 2 sigma_b and sigma_w; under the different-speaker hypothesis
  // a and b are independent with the total covariance each.  The rotation is
  // orthonormal, so densities carry over with no Jacobian factor.
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  Eigen::VectorXd u = (a + b) * inv_sqrt2;
  Eigen::VectorXd v = (a - b) * inv_sqrt2;
  double same = log_density(u, llt_sum_, logdet_sum_) +
                log_density(v, llt_within_, logdet_within_);
  double diff = log_density(a, llt_total_, logdet_total_) +
                log_density(b, llt_total_, logdet_total_);
  double llr = same - diff;
  if (!std::isfinite(llr))
    throw NumericError("PLDA log-likelihood ratio is not finite");
  return llr;
}

double plda_llr(const PldaModel &model, std::span<const float> enroll,
                std::span<const float> test) {
  return PldaScorer(model).llr(enroll, test);
}

PldaModel plda_adapt(const PldaModel &model, const EmbeddingSet &adapt_set,
                     double alpha, double split) {
  model.validate();
  if (adapt_set.empty())
    throw DataError("PLDA adaptation needs a nonempty embedding set");
  if (adapt_set.dim() != model.dim())
    throw DataError("adaptation set dimension " +
                    std::to_string(adapt_set.dim()) +
                    " does not match the model dimension " +
                    std::to_string(model.dim()));
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw DataError("adaptation alpha must lie in [0, 1]");
  if (!(split >= 0.0 && split <= 1.0))
    throw DataError("adaptation split must lie in [0, 1]");

  const int f = model.dim();
  const auto n = static_cast<double>(adapt_set.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(f);
  for (std::size_t i = 0; i < adapt_set.size(); ++i) {
    auto row = adapt_set.row(i);
    for (int d = 0; d < f; ++d) mean[d] += row[d];
  }
  mean /= n;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(f, f);
  for (std::size_t i = 0; i < adapt_set.size(); ++i) {
    auto row = adapt_set.row(i);
    Eigen::VectorXd d(f);
    for (int k = 0; k < f; ++k) d[k] = row[k] - mean[k];
    cov += d * d.transpose();
  }
  cov /= n;

  // Excess variance of the adaptation domain over what the model already
  // explains, clipped to PSD: directions where the new domain has *less*
  // variance are ignored rather than subtracted.
  Eigen::MatrixXd excess = symmetrize(cov - (model.sigma_b + model.sigma_w));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(excess);
  Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd excess_psd = es.eigenvectors() * clipped.asDiagonal() *
                               es.eigenvectors().transpose();

  PldaModel out;
  out.mu = mean;
  out.sigma_b = symmetrize(model.sigma_b + alpha * split * excess_psd);
  out.sigma_w =
      symmetrize(model.sigma_w + alpha * (1.0 - split) * excess_psd);
  out.validate();
  return out;
}

void save_plda(const PldaModel &model, const std::string &path) {
  model.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open \"" + path + "\" for writing");
  os.write(kPldaMagic, sizeof(kPldaMagic));
  std::int32_t f = model.dim();
  os.write(reinterpret_cast<const char *>(&f), 4);
  auto write_doubles = [&os](const double *p, std::size_t count) {
    os.write(reinterpret_cast<const char *>(p),
             static_cast<std::streamsize>(count * sizeof(double)));
  };
  write_doubles(model.mu.data(), static_cast<std::size_t>(f));
  // Eigen stores column-major; emit explicit row-major order.
  std::vector<double> buf(static_cast<std::size_t>(f) * f);
  auto dump = [&](const Eigen::MatrixXd &m) {
    for (int r = 0; r < f; ++r)
      for (int c = 0; c < f; ++c)
        buf[static_cast<std::size_t>(r) * f + c] = m(r, c);
    write_doubles(buf.data(), buf.size());
  };
  dump(model.sigma_b);
  dump(model.sigma_w);
  if (!os) throw DataError("write failed on \"" + path + "\"");
}

PldaModel load_plda(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open \"" + path + "\" for reading");
  char magic[sizeof(kPldaMagic)];
  is.read(magic, sizeof(magic));
  if (is.gcount() != sizeof(magic) ||
      std::memcmp(magic, kPldaMagic, sizeof(magic)) != 0)
    throw DataError("\"" + path + "\" is not a PLDA model file (bad magic)");
  std::int32_t f = 0;
  is.read(reinterpret_cast<char *>(&f), 4);
  if (is.gcount() != 4 || f < 1 || f > (1 << 20))
    throw DataError("\"" + path + "\" has an invalid dimension field");
  PldaModel model;
  model.mu.resize(f);
  model.sigma_b.resize(f, f);
  model.sigma_w.resize(f, f);
  std::vector<double> buf(static_cast<std::size_t>(f) * f);
  auto read_doubles = [&is, &path](double *p, std::size_t count) {
    is.read(reinterpret_cast<char *>(p),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != count * sizeof(double))
      throw DataError("\"" + path + "\" is truncated");
  };
  read_doubles(model.mu.data(), static_cast<std::size_t>(f));
  auto slurp = [&](Eigen::MatrixXd &m) {
    read_doubles(buf.data(), buf.size());
    for (int r = 0; r < f; ++r)
      for (int c = 0; c < f; ++c)
        m(r, c) = buf[static_cast<std::size_t>(r) * f + c];
  };
  slurp(model.sigma_b);
  slurp(model.sigma_w);
  if (is.peek() != EOF)
    throw DataError("\"" + path + "\" has trailing bytes");
  model.validate();
  return model;
}

}  // namespace sidkit::backend
