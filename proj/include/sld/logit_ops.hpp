// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sld/numeric.hpp"

namespace sld {

/// Swap only when the gap between the top confidence and the target
/// confidence (softmax at T = 1) falls on the configured side of the
/// threshold.
struct conditional_swap_rule {
  enum class mode_t { less_than, more_than };
  double alpha_threshold = 0.0;
  mode_t mode = mode_t::more_than;
};

/// How logit rows are corrected toward the target: a single swap, or a
/// cascade through the top-`depth` non-target ranks.
struct swap_rule {
  int depth = 1;
  std::optional<conditional_swap_rule> condition;
};

/// Parameters of the label-smoothing / ground-truth-scaling schemes.
struct scheme_params {
  double epsilon = 0.1;  // LSR smoothing weight
  double w = 0.1;        // soft-addition fraction (GA, MA)
  double n = 2.0;        // extreme scale factor (EGA, EGR)
};

/// Lowest index attaining the maximum value.
inline int argmax_lowest(const Vector& z) {
  int best = 0;
  for (Eigen::Index j = 1; j < z.size(); ++j)
    if (z[j] > z[best]) best = static_cast<int>(j);
  return best;
}

inline void check_target(const Vector& z, int target, const char* what) {
  if (target < 0 || target >= z.size())
    throw std::out_of_range(std::string(what) + ": target index out of range");
}

// Permutation form of the swap ops: perm[j] is the source index of output
// position j, so out[j] = z[perm[j]]. Training uses the permutation to
// route gradients through a non-detached pseudo-teacher.

inline std::vector<int> identity_perm(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

/// Exchange the target entry with the current maximum. No-op when the
/// target already attains the maximum value (ties included).
inline std::vector<int> swap_to_target_perm(const Vector& z, int target) {
  check_target(z, target, "swap_to_target");
  auto perm = identity_perm(static_cast<int>(z.size()));
  const int top = argmax_lowest(z);
  if (z[target] != z[top]) std::swap(perm[static_cast<std::size_t>(target)], perm[static_cast<std::size_t>(top)]);
  return perm;
}

inline Vector apply_perm(const Vector& z, const std::vector<int>& perm) {
  Vector out(z.size());
  for (std::size_t j = 0; j < perm.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = z[perm[j]];
  return out;
}

inline bool is_identity_perm(const std::vector<int>& perm) {
  for (std::size_t j = 0; j < perm.size(); ++j)
    if (perm[j] != static_cast<int>(j)) return false;
  return true;
}

inline Vector swap_to_target(const Vector& z, int target) {
  return apply_perm(z, swap_to_target_perm(z, target));
}

/// Cascade swap: exchange the target with the depth-th, depth-1-th, ...,
/// 1st ranked non-target entry of the original row, skipping steps that
/// would not raise the target. depth = 1 is exactly swap_to_target.
inline std::vector<int> multi_swap_perm(const Vector& z, int target, int depth) {
  check_target(z, target, "multi_swap");
  const int C = static_cast<int>(z.size());
  if (depth < 1 || depth > C - 1)
    throw std::invalid_argument("multi_swap: depth must be in [1, C-1]");

  // Non-target ranks from the original row; ties rank the lower index first.
  std::vector<int> ranked;
  ranked.reserve(static_cast<std::size_t>(C - 1));
  for (int j = 0; j < C; ++j)
    if (j != target) ranked.push_back(j);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](int a, int b) { return z[a] > z[b]; });

  auto perm = identity_perm(C);
  Vector cur = z;
  for (int r = depth; r >= 1; --r) {
    const int j = ranked[static_cast<std::size_t>(r - 1)];
    if (cur[j] <= cur[target]) continue;
    std::swap(perm[static_cast<std::size_t>(target)], perm[static_cast<std::size_t>(j)]);
    std::swap(cur[target], cur[j]);
  }
  return perm;
}

inline Vector multi_swap(const Vector& z, int target, int depth) {
  return apply_perm(z, multi_swap_perm(z, target, depth));
}

/// Gap between the top softmax confidence and the target confidence at
/// T = 1; the conditional swap thresholds on this.
inline double swap_alpha(const Vector& z, int target) {
  check_target(z, target, "swap_alpha");
  Vector p = softmax_temp(z, 1.0);
  return std::abs(p.maxCoeff() - p[target]);
}

inline std::vector<int> conditional_swap_perm(const Vector& z, int target,
                                              const conditional_swap_rule& rule) {
  if (rule.alpha_threshold < 0.0 || rule.alpha_threshold > 1.0)
    throw std::invalid_argument("conditional_swap: alpha threshold must be in [0, 1]");
  const double alpha = swap_alpha(z, target);
  const bool fire = rule.mode == conditional_swap_rule::mode_t::less_than
                        ? alpha < rule.alpha_threshold
                        : alpha > rule.alpha_threshold;
  return fire ? swap_to_target_perm(z, target) : identity_perm(static_cast<int>(z.size()));
}

inline Vector conditional_swap(const Vector& z, int target, const conditional_swap_rule& rule) {
  return apply_perm(z, conditional_swap_perm(z, target, rule));
}

/// Apply a full swap_rule (depth + optional alpha condition).
inline std::vector<int> swap_rule_perm(const Vector& z, int target, const swap_rule& rule) {
  if (rule.condition) {
    if (rule.depth != 1)
      throw std::invalid_argument("swap_rule: conditional swap only supports depth 1");
    return conditional_swap_perm(z, target, *rule.condition);
  }
  if (rule.depth == 1) return swap_to_target_perm(z, target);
  return multi_swap_perm(z, target, rule.depth);
}

/// Smoothed one-hot distribution: 1-eps at the target, eps/C elsewhere.
/// Follows the scheme's formula verbatim, so the row sums to
/// (1-eps) + eps*(C-1)/C rather than exactly 1; no renormalization.
inline Vector label_smoothing_target(int target, const scheme_params& params, int num_classes) {
  if (!(params.epsilon > 0.0 && params.epsilon < 1.0))
    throw std::invalid_argument("label_smoothing_target: epsilon must be in (0, 1)");
  if (target < 0 || target >= num_classes)
    throw std::out_of_range("label_smoothing_target: target index out of range");
  Vector row = Vector::Constant(num_classes, params.epsilon / num_classes);
  row[target] = 1.0 - params.epsilon;
  return row;
}

enum class gt_scheme { ega, egr, ga, ma };

/// Ground-truth scaling schemes; only the target logit changes.
///   ega: z_t' = n * z_t        egr: z_t' = z_t / n
///   ga:  z_t' = z_t * (1 + w)  ma:  z_t' = max(z) * (1 + w)
inline Vector scale_ground_truth(const Vector& z, int target, gt_scheme scheme,
                                 const scheme_params& params) {
  check_target(z, target, "scale_ground_truth");
  Vector out = z;
  switch (scheme) {
    case gt_scheme::ega:
      if (!(params.n > 1.0)) throw std::invalid_argument("scale_ground_truth: n must be > 1");
      out[target] = params.n * z[target];
      break;
    case gt_scheme::egr:
      if (!(params.n > 1.0)) throw std::invalid_argument("scale_ground_truth: n must be > 1");
      out[target] = z[target] / params.n;
      break;
    case gt_scheme::ga:
      if (!(params.w > 0.0)) throw std::invalid_argument("scale_ground_truth: w must be > 0");
      out[target] = z[target] + z[target] * params.w;
      break;
    case gt_scheme::ma: {
      if (!(params.w > 0.0)) throw std::invalid_argument("scale_ground_truth: w must be > 0");
      const double m = z.maxCoeff();
      out[target] = m + m * params.w;
      break;
    }
    default:
      throw std::invalid_argument("scale_ground_truth: unknown scheme");
  }
  return out;
}

/// Fraction of rows whose prediction misses the target, i.e. where the
/// swap would fire.
inline double swap_rate(const logit_batch& z, const std::vector<int>& targets) {
  if (static_cast<std::size_t>(z.values.rows()) != targets.size())
    throw shape_error("swap_rate: batch and target counts differ");
  int wrong = 0;
  for (Eigen::Index i = 0; i < z.values.rows(); ++i) {
    check_target(Vector(z.values.row(i)), targets[static_cast<std::size_t>(i)], "swap_rate");
    if (z.values(i, targets[static_cast<std::size_t>(i)]) != z.values.row(i).maxCoeff()) ++wrong;
  }
  return z.values.rows() == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(z.values.rows());
}

}  // namespace sld
