// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "sld/errors.hpp"

namespace sld {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Probability entries below this floor are clamped before taking logs in
/// KL terms; keeps the divergence finite when the model starves a class.
constexpr double kProbFloor = 1e-12;

/// Raw pre-softmax scores, one row per sample, one column per class.
struct logit_batch {
  Matrix values;
  int num_classes = 0;

  logit_batch() = default;
  explicit logit_batch(Matrix v) : values(std::move(v)), num_classes(static_cast<int>(values.cols())) {}

  int batch_size() const { return static_cast<int>(values.rows()); }

  void validate() const {
    if (num_classes < 2 || values.rows() < 1)
      throw shape_error("logit_batch: need at least 1 row and 2 classes");
    if (values.cols() != num_classes)
      throw shape_error("logit_batch: column count does not match num_classes");
    if (!values.allFinite())
      throw std::invalid_argument("logit_batch: non-finite entries");
  }
};

/// Temperature-softmaxed probabilities; rows sum to 1.
struct prob_batch {
  Matrix values;
  double temperature = 1.0;

  void validate(double tol = 1e-9) const {
    if ((values.array() < 0.0).any() || (values.array() > 1.0).any())
      throw std::invalid_argument("prob_batch: entries outside [0, 1]");
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      if (std::abs(values.row(i).sum() - 1.0) > tol)
        throw std::invalid_argument("prob_batch: row " + std::to_string(i) +
                                    " does not sum to 1");
    }
  }
};

inline void require_finite_row(const Vector& z, const char* what) {
  if (!z.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

/// log softmax(z / T), computed with max-subtraction.
inline Vector log_softmax_temp(const Vector& z, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("log_softmax_temp: temperature must be positive");
  require_finite_row(z, "log_softmax_temp");
  const double m = z.maxCoeff();
  Vector shifted = (z.array() - m) / temperature;
  const double lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

/// softmax(z / T); rows sum to 1 within 1e-9.
inline Vector softmax_temp(const Vector& z, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("softmax_temp: temperature must be positive");
  require_finite_row(z, "softmax_temp");
  const double m = z.maxCoeff();
  Vector e = ((z.array() - m) / temperature).exp();
  return e / e.sum();
}

/// Row-wise softmax over a batch of logits.
inline Matrix softmax_temp_rows(const Matrix& z, double temperature) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    p.row(i) = softmax_temp(Vector(z.row(i)), temperature).transpose();
  return p;
}

/// KL(p_ref || p_model) = sum_j p_ref_j log(p_ref_j / p_model_j), with the
/// 0 log 0 = 0 convention on the reference side and the model side floored
/// at kProbFloor before the log.
inline double kl_divergence(const Vector& p_ref, const Vector& p_model) {
  if (p_ref.size() != p_model.size())
    throw shape_error("kl_divergence: row lengths differ");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p_ref.size(); ++j) {
    const double q = p_ref[j];
    if (q == 0.0) continue;
    acc += q * (std::log(q) - std::log(std::max(p_model[j], kProbFloor)));
  }
  return acc;
}

/// Supervised loss: -log softmax(z)[target] at T = 1.
inline double cross_entropy(const Vector& z, int target) {
  if (target < 0 || target >= z.size())
    throw std::out_of_range("cross_entropy: target index out of range");
  return -log_softmax_temp(z, 1.0)[target];
}

/// d cross_entropy / d z = softmax(z) - onehot(target).
inline Vector cross_entropy_grad(const Vector& z, int target) {
  Vector g = softmax_temp(z, 1.0);
  g[target] -= 1.0;
  return g;
}

/// Gradient of KL(p_ref || softmax(z / T)) with respect to z, where p_ref
/// is a constant. Accounts for the kProbFloor clamp: entries at the floor
/// contribute no log-gradient.
inline Vector kl_vs_const_grad(const Vector& p_ref, const Vector& p_model, double temperature) {
  double ref_mass_active = 0.0;
  for (Eigen::Index j = 0; j < p_ref.size(); ++j)
    if (p_model[j] > kProbFloor) ref_mass_active += p_ref[j];
  Vector g(p_ref.size());
  for (Eigen::Index j = 0; j < p_ref.size(); ++j) {
    const double direct = (p_model[j] > kProbFloor) ? p_ref[j] : 0.0;
    g[j] = (p_model[j] * ref_mass_active - direct) / temperature;
  }
  return g;
}

}  // namespace sld
