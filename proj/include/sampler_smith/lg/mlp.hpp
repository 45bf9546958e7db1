/*
 * Copyright 2026 The sampler-smith Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Feed-forward proposal network: 20 inputs, a sigmoid hidden layer of 25 and
// two outputs, the mean (identity) and the standard deviation (exponential)
// of a Normal over the next latent state. Trained by minibatch SGD on the
// weighted negative log-likelihood of sampled latent values.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sampler_smith/rng.hpp"

namespace sampler_smith::lg {

inline constexpr int kFeatures = 20;
inline constexpr int kHidden = 25;

struct MlpParams {
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(kHidden, kFeatures);
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(kHidden);
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(2, kHidden);  // row 0: mean, row 1: log sd
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(2);

  int size() const { return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size()); }

  // Row-major flattening in the order w1, b1, w2, b2.
  std::vector<double> flatten() const {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(size()));
    for (int i = 0; i < w1.rows(); ++i)
      for (int j = 0; j < w1.cols(); ++j) v.push_back(w1(i, j));
    for (int i = 0; i < b1.size(); ++i) v.push_back(b1(i));
    for (int i = 0; i < w2.rows(); ++i)
      for (int j = 0; j < w2.cols(); ++j) v.push_back(w2(i, j));
    for (int i = 0; i < b2.size(); ++i) v.push_back(b2(i));
    return v;
  }

  void unflatten(const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != size()) throw std::invalid_argument("parameter vector has the wrong length");
    std::size_t k = 0;
    for (int i = 0; i < w1.rows(); ++i)
      for (int j = 0; j < w1.cols(); ++j) w1(i, j) = v[k++];
    for (int i = 0; i < b1.size(); ++i) b1(i) = v[k++];
    for (int i = 0; i < w2.rows(); ++i)
      for (int j = 0; j < w2.cols(); ++j) w2(i, j) = v[k++];
    for (int i = 0; i < b2.size(); ++i) b2(i) = v[k++];
  }
};

// Weights uniform on (-r, r) with r = sqrt(6 / (fan_in + fan_out)); zero biases.
inline MlpParams init_mlp(Rng& rng) {
  MlpParams p;
  const double r1 = std::sqrt(6.0 / (kFeatures + kHidden)), r2 = std::sqrt(6.0 / (kHidden + 2));
  for (int i = 0; i < p.w1.rows(); ++i)
    for (int j = 0; j < p.w1.cols(); ++j) p.w1(i, j) = r1 * (2.0 * uniform01(rng) - 1.0);
  for (int i = 0; i < p.w2.rows(); ++i)
    for (int j = 0; j < p.w2.cols(); ++j) p.w2(i, j) = r2 * (2.0 * uniform01(rng) - 1.0);
  return p;
}

struct NormalParams {
  double mean = 0.0;
  double sd = 1.0;
};

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

inline NormalParams mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
  const Eigen::VectorXd h = sigmoid(p.w1 * x + p.b1);
  const Eigen::VectorXd o = p.w2 * h + p.b2;
  return {o(0), std::exp(o(1))};
}

// Training data: features in columns, one response and weight per column.
struct TrainPair {
  Eigen::VectorXd features;
  double response = 0.0;
  double weight = 0.0;
};

struct LossGrad {
  double loss = 0.0;  // sum of weight * negative log-likelihood
  MlpParams grad;
};

// Loss sum_j c_j * -log N(x_j; mu_j, sigma_j^2) over the given pairs with
// coefficients `coef`, and its gradient.
inline LossGrad loss_and_grad(const MlpParams& p, const std::vector<TrainPair>& pairs,
                              const std::vector<std::size_t>& idx, const std::vector<double>& coef) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd x(kFeatures, n);
  Eigen::RowVectorXd y(n), c(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& pr = pairs[idx[static_cast<std::size_t>(k)]];
    x.col(k) = pr.features;
    y(k) = pr.response;
    c(k) = coef[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXd h = (1.0 + (-((p.w1 * x).colwise() + p.b1)).array().exp()).inverse().matrix();
  const Eigen::MatrixXd o = (p.w2 * h).colwise() + p.b2;
  const Eigen::ArrayXXd mu = o.row(0).array(), log_sd = o.row(1).array();
  const Eigen::ArrayXXd z = (y.array() - mu) * (-log_sd).exp();
  LossGrad out;
  out.loss = (c.array() * (0.5 * z.square() + log_sd + kLogSqrt2Pi)).sum();
  // Derivatives of the loss with respect to the two outputs.
  Eigen::MatrixXd d_out(2, n);
  d_out.row(0) = (-c.array() * z * (-log_sd).exp()).matrix();
  d_out.row(1) = (c.array() * (1.0 - z.square())).matrix();
  out.grad.w2 = d_out * h.transpose();
  out.grad.b2 = d_out.rowwise().sum();
  const Eigen::MatrixXd d_h = (p.w2.transpose() * d_out).array() * h.array() * (1.0 - h.array());
  out.grad.w1 = d_h * x.transpose();
  out.grad.b1 = d_h.rowwise().sum();
  return out;
}

struct TrainConfig {
  double lr = 1e-2;
  int epochs = 200;
  int batch = 32;
  int max_retries = 5;
  double clip_norm = 1.0;  // rescale batch gradients longer than this; 0 disables
};

inline void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (c.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (c.batch < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(c.clip_norm >= 0.0)) throw std::invalid_argument("clip norm must be >= 0");
}

struct TrainResult {
  MlpParams params;
  std::vector<double> epoch_loss;  // weighted mean negative log-likelihood after each epoch
  double lr = 0.0;                 // learning rate that succeeded
  int retries = 0;
};

// Weighted mean negative log-likelihood over all pairs.
inline double mean_loss(const MlpParams& p, const std::vector<TrainPair>& pairs) {
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> coef(pairs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) total += coef[i] = pairs[i].weight;
  if (!(total > 0.0)) throw std::invalid_argument("training pairs carry no weight");
  return loss_and_grad(p, pairs, idx, coef).loss / total;
}

// Minibatch SGD on the weighted loss. Pair weights are rescaled to average one,
// and each step follows the batch mean, so the learning rate does not depend
// on how many pairs there are. Batch gradients longer than `clip_norm` are
// shortened: an observation jump far outside the predicted sd otherwise throws
// the network off for several epochs. A non-finite loss restarts from `init`
// with half the learning rate.
inline TrainResult mlp_train(const MlpParams& init, const std::vector<TrainPair>& pairs, const TrainConfig& cfg,
                             Rng& rng) {
  validate(cfg);
  if (pairs.empty()) throw std::invalid_argument("no training pairs");
  double total = 0.0;
  for (const auto& p : pairs) {
    if (!(p.weight >= 0.0) || !p.features.allFinite() || !std::isfinite(p.response))
      throw std::invalid_argument("training pairs must be finite with weight >= 0");
    total += p.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("training pairs carry no weight");
  const double scale = static_cast<double>(pairs.size()) / total;

  TrainResult res;
  res.lr = cfg.lr;
  for (res.retries = 0; res.retries <= cfg.max_retries; ++res.retries) {
    Rng local = rng;
    MlpParams p = init;
    res.epoch_loss.clear();
    bool finite = true;
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < cfg.epochs && finite; ++epoch) {
      std::shuffle(order.begin(), order.end(), local);
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<double> coef(idx.size());
        const double norm = scale / static_cast<double>(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) coef[k] = pairs[idx[k]].weight * norm;
        const LossGrad g = loss_and_grad(p, pairs, idx, coef);
        double step = res.lr;
        if (cfg.clip_norm > 0.0) {
          const double norm = std::sqrt(g.grad.w1.squaredNorm() + g.grad.b1.squaredNorm() +
                                        g.grad.w2.squaredNorm() + g.grad.b2.squaredNorm());
          if (norm > cfg.clip_norm) step *= cfg.clip_norm / norm;
        }
        p.w1 -= step * g.grad.w1;
        p.b1 -= step * g.grad.b1;
        p.w2 -= step * g.grad.w2;
        p.b2 -= step * g.grad.b2;
      }
      const double l = mean_loss(p, pairs);
      finite = std::isfinite(l) && p.w1.allFinite() && p.w2.allFinite() && p.b1.allFinite() && p.b2.allFinite();
      res.epoch_loss.push_back(l);
    }
    if (finite) {
      rng = local;
      res.params = p;
      return res;
    }
    res.lr *= 0.5;
  }
  throw std::runtime_error("training diverged after " + std::to_string(cfg.max_retries) + " learning-rate halvings");
}

inline nlohmann::json to_json(const MlpParams& p) {
  auto rows = [](const Eigen::MatrixXd& m) {
    std::vector<double> v;
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
    return v;
  };
  nlohmann::json j;
  j["layers"] = {kFeatures, kHidden, 2};
  j["w1"] = rows(p.w1);
  j["b1"] = std::vector<double>(p.b1.data(), p.b1.data() + p.b1.size());
  j["w2"] = rows(p.w2);
  j["b2"] = std::vector<double>(p.b2.data(), p.b2.data() + p.b2.size());
  return j;
}

inline MlpParams mlp_from_json(const nlohmann::json& j) {
  if (j.at("layers") != nlohmann::json({kFeatures, kHidden, 2}))
    throw std::invalid_argument("network layers must be [20, 25, 2]");
  std::vector<double> v;
  for (const char* key : {"w1", "b1", "w2", "b2"}) {
    auto part = j.at(key).get<std::vector<double>>();
    v.insert(v.end(), part.begin(), part.end());
  }
  MlpParams p;
  p.unflatten(v);
  return p;
}

}  // namespace sampler_smith::lg
