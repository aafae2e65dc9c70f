// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <iostream>
#include <vector>

#include "sld/numeric.hpp"

namespace sld {

/// Fraction of samples whose target ranks among the k largest logits;
/// ties rank the lower index first.
inline double topk_accuracy(const logit_batch& logits, const std::vector<int>& targets, int k) {
  const auto& z = logits.values;
  if (static_cast<std::size_t>(z.rows()) != targets.size())
    throw shape_error("topk_accuracy: batch and target counts differ");
  if (k < 1 || k > z.cols())
    throw std::invalid_argument("topk_accuracy: k must be in [1, num_classes]");
  int hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= z.cols())
      throw std::out_of_range("topk_accuracy: target index out of range");
    int rank = 0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (z(i, j) > z(i, t) || (z(i, j) == z(i, t) && j < t)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(z.rows());
}

struct correlation_diff_result {
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

namespace detail {

/// Pearson correlation matrix across classes (columns) over the sample
/// axis. Zero-variance columns get correlation 0 with a warning.
inline Matrix class_correlation(const Matrix& logits, const char* label) {
  const auto c = logits.cols();
  Matrix centered = logits.rowwise() - logits.colwise().mean();
  Vector var(c);
  for (Eigen::Index j = 0; j < c; ++j) var[j] = centered.col(j).squaredNorm();
  Matrix corr = Matrix::Zero(c, c);
  bool warned = false;
  for (Eigen::Index a = 0; a < c; ++a) {
    for (Eigen::Index b = 0; b < c; ++b) {
      const double denom = std::sqrt(var[a] * var[b]);
      if (denom == 0.0) {
        if (!warned) {
          std::cerr << "warning: zero-variance class column in " << label
                    << " logits; correlations set to 0\n";
          warned = true;
        }
        corr(a, b) = 0.0;
      } else {
        corr(a, b) = centered.col(a).dot(centered.col(b)) / denom;
      }
    }
  }
  return corr;
}

}  // namespace detail

/// Elementwise |corr(student) - corr(teacher)| reduced to max and mean
/// over the off-diagonal entries.
inline correlation_diff_result correlation_diff(const logit_batch& stu_logits,
                                                const logit_batch& tea_logits) {
  if (stu_logits.values.rows() != tea_logits.values.rows() ||
      stu_logits.values.cols() != tea_logits.values.cols())
    throw shape_error("correlation_diff: sample count or class count differ");
  const Matrix cs = detail::class_correlation(stu_logits.values, "student");
  const Matrix ct = detail::class_correlation(tea_logits.values, "teacher");
  const auto c = cs.rows();
  correlation_diff_result out;
  double acc = 0.0;
  int count = 0;
  for (Eigen::Index a = 0; a < c; ++a) {
    for (Eigen::Index b = 0; b < c; ++b) {
      if (a == b) continue;
      const double d = std::abs(cs(a, b) - ct(a, b));
      out.max_abs = std::max(out.max_abs, d);
      acc += d;
      ++count;
    }
  }
  out.mean_abs = count > 0 ? acc / count : 0.0;
  return out;
}

/// Confusion-matrix rows restricted to the classes of interest: for each
/// listed true class, how often each class was predicted.
struct pred_distribution {
  std::vector<int> classes;   // true classes of interest, row order
  Eigen::MatrixXi counts;     // classes.size() x num_classes
};

inline pred_distribution prediction_distribution(const logit_batch& logits,
                                                 const std::vector<int>& targets,
                                                 const std::vector<int>& classes_of_interest) {
  const auto& z = logits.values;
  if (static_cast<std::size_t>(z.rows()) != targets.size())
    throw shape_error("prediction_distribution: batch and target counts differ");
  for (int c : classes_of_interest)
    if (c < 0 || c >= z.cols())
      throw std::out_of_range("prediction_distribution: class of interest out of range");
  pred_distribution out;
  out.classes = classes_of_interest;
  out.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(classes_of_interest.size()),
                                     z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    for (std::size_t r = 0; r < classes_of_interest.size(); ++r) {
      if (classes_of_interest[r] != t) continue;
      int pred = 0;
      for (Eigen::Index j = 1; j < z.cols(); ++j)
        if (z(i, j) > z(i, pred)) pred = static_cast<int>(j);
      out.counts(static_cast<Eigen::Index>(r), pred) += 1;
    }
  }
  return out;
}

/// Teacher-minus-student accuracy; negative when the student wins.
inline double gap_report(double teacher_acc, double student_acc) {
  if (teacher_acc < 0.0 || teacher_acc > 1.0 || student_acc < 0.0 || student_acc > 1.0)
    throw std::invalid_argument("gap_report: accuracies must be in [0, 1]");
  return teacher_acc - student_acc;
}

}  // namespace sld
