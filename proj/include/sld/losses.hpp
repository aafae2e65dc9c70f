// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sld/logit_ops.hpp"
#include "sld/numeric.hpp"

namespace sld {

/// Temperatures used for prediction augmentation, strictly increasing.
struct temperature_set {
  std::vector<double> temps{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};

  void validate() const {
    if (temps.empty()) throw std::invalid_argument("temperature_set: empty");
    double prev = 0.0;
    for (double t : temps) {
      if (!(t > 0.0)) throw std::invalid_argument("temperature_set: temperatures must be positive");
      if (!(t > prev)) throw std::invalid_argument("temperature_set: must be strictly increasing");
      prev = t;
    }
  }
};

/// Temperature used when prediction augmentation is disabled.
constexpr double kSingleTemperature = 4.0;

/// How a reference (teacher or pseudo-teacher) row is corrected before it
/// is softmaxed into a teaching distribution.
enum class correction_kind { none, swap, lsr, ega, egr, ga, ma };

inline std::string to_string(correction_kind k) {
  switch (k) {
    case correction_kind::none: return "none";
    case correction_kind::swap: return "swap";
    case correction_kind::lsr: return "lsr";
    case correction_kind::ega: return "ega";
    case correction_kind::egr: return "egr";
    case correction_kind::ga: return "ga";
    case correction_kind::ma: return "ma";
  }
  return "?";
}

inline correction_kind correction_from_string(const std::string& s) {
  if (s == "none") return correction_kind::none;
  if (s == "swap") return correction_kind::swap;
  if (s == "lsr") return correction_kind::lsr;
  if (s == "ega") return correction_kind::ega;
  if (s == "egr") return correction_kind::egr;
  if (s == "ga") return correction_kind::ga;
  if (s == "ma") return correction_kind::ma;
  throw config_error("unknown correction kind '" + s + "'");
}

struct distill_config {
  temperature_set temps;
  int gamma = 0;                 // student-swap loss activates strictly after this epoch
  bool use_ts = true;
  bool use_ss = true;
  bool use_pa = true;
  double ce_weight = 1.0;
  bool t_squared_scaling = true;
  swap_rule rule;                // depth / alpha condition for swap corrections
  bool detach_pseudo_teacher = true;
  correction_kind teacher_correction = correction_kind::swap;
  correction_kind student_correction = correction_kind::swap;
  scheme_params scheme;

  void validate() const {
    temps.validate();
    if (gamma < 0) throw config_error("distill.gamma must be >= 0");
    if (ce_weight < 0.0) throw config_error("distill.ce_weight must be >= 0");
    if (rule.depth < 1) throw config_error("distill.swap_depth must be >= 1");
    const bool scheme_student = student_correction == correction_kind::ega ||
                                student_correction == correction_kind::egr ||
                                student_correction == correction_kind::ga ||
                                student_correction == correction_kind::ma;
    if (scheme_student && !detach_pseudo_teacher)
      throw config_error(
          "distill: ground-truth-scaling student corrections require detach_pseudo_teacher");
  }

  std::vector<double> effective_temps() const {
    return use_pa ? temps.temps : std::vector<double>{kSingleTemperature};
  }
};

struct loss_breakdown {
  double l_ts = 0.0;
  double l_ss = 0.0;
  double l_kd = 0.0;   // single-temperature KD value, recorded for monitoring
  double l_ce = 0.0;
  double l_sld = 0.0;  // l_ts + l_ss
  double total = 0.0;  // ce_weight * l_ce + l_sld
};

/// Probability rows of one logit row at every temperature in the set.
inline std::vector<Vector> prediction_augment(const Vector& z, const temperature_set& temps) {
  temps.validate();
  std::vector<Vector> out;
  out.reserve(temps.temps.size());
  for (double t : temps.temps) out.push_back(softmax_temp(z, t));
  return out;
}

/// Strict gate of the student-swap loss: active only after epoch gamma.
inline bool schedule_gate(int epoch, int gamma) { return epoch > gamma; }

namespace detail {

/// Reference row after correction: either corrected logits (softmaxed per
/// temperature) or a fixed distribution (label smoothing).
struct corrected_ref {
  Vector logits;
  Vector fixed_probs;
  bool is_fixed = false;
  std::vector<int> perm;  // non-empty iff the correction is a permutation
};

inline corrected_ref apply_correction(const Vector& z, int target, correction_kind kind,
                                      const swap_rule& rule, const scheme_params& sp) {
  corrected_ref ref;
  switch (kind) {
    case correction_kind::none:
      ref.logits = z;
      break;
    case correction_kind::swap:
      ref.perm = swap_rule_perm(z, target, rule);
      ref.logits = apply_perm(z, ref.perm);
      break;
    case correction_kind::lsr:
      ref.fixed_probs = label_smoothing_target(target, sp, static_cast<int>(z.size()));
      ref.is_fixed = true;
      break;
    case correction_kind::ega:
      ref.logits = scale_ground_truth(z, target, gt_scheme::ega, sp);
      break;
    case correction_kind::egr:
      ref.logits = scale_ground_truth(z, target, gt_scheme::egr, sp);
      break;
    case correction_kind::ga:
      ref.logits = scale_ground_truth(z, target, gt_scheme::ga, sp);
      break;
    case correction_kind::ma:
      ref.logits = scale_ground_truth(z, target, gt_scheme::ma, sp);
      break;
  }
  return ref;
}

inline void check_batch_shapes(const Matrix& a, const Matrix& b, const std::vector<int>& targets,
                               const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw shape_error(std::string(what) + ": teacher/student shapes differ");
  if (static_cast<std::size_t>(a.rows()) != targets.size())
    throw shape_error(std::string(what) + ": batch and target counts differ");
}

/// Multi-temperature KL alignment of constant references against the
/// student. refs[i] describes sample i. Returns sum over temperatures of
/// scale_k * mean_i KL(q_ik || p_ik); optionally accumulates d/d z_stu.
/// skip[i] (when provided) drops sample i from value and gradient exactly.
inline double alignment_loss(const std::vector<corrected_ref>& refs, const Matrix& z_stu,
                             const std::vector<double>& temps, bool t_squared,
                             const std::vector<char>* skip, bool through_perm, Matrix* grad) {
  const auto B = z_stu.rows();
  double value = 0.0;
  for (double T : temps) {
    const double scale = t_squared ? T * T : 1.0;
    const double w = scale / static_cast<double>(B);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < B; ++i) {
      if (skip && (*skip)[static_cast<std::size_t>(i)]) continue;
      const auto& ref = refs[static_cast<std::size_t>(i)];
      const Vector p = softmax_temp(Vector(z_stu.row(i)), T);
      const Vector q = ref.is_fixed ? ref.fixed_probs : softmax_temp(ref.logits, T);
      const double kl = kl_divergence(q, p);
      acc += kl;
      if (!grad) continue;
      grad->row(i) += (w * kl_vs_const_grad(q, p, T)).transpose();
      if (through_perm && !ref.is_fixed && !ref.perm.empty()) {
        // Gradient through the permuted reference branch (pseudo-teacher
        // not detached): d KL / d s_m = q_m ((log q_m - log pf_m) - KL) / T,
        // scattered back through the permutation.
        const Vector log_q = log_softmax_temp(ref.logits, T);
        for (Eigen::Index m = 0; m < p.size(); ++m) {
          if (q[m] == 0.0) continue;
          const double c = log_q[m] - std::log(std::max(p[m], kProbFloor));
          const double gs = w * q[m] * (c - kl) / T;
          grad->row(i)[ref.perm[static_cast<std::size_t>(m)]] += gs;
        }
      }
    }
    value += scale * (acc / static_cast<double>(B));
  }
  return value;
}

}  // namespace detail

/// Plain KD: mean over the batch of KL between teacher and student
/// distributions at one temperature, times T^2 when enabled.
inline double kd_loss(const Matrix& z_tea, const Matrix& z_stu, double temperature,
                      bool t_squared = true) {
  if (z_tea.rows() != z_stu.rows() || z_tea.cols() != z_stu.cols())
    throw shape_error("kd_loss: shapes differ");
  if (!(temperature > 0.0)) throw std::invalid_argument("kd_loss: temperature must be positive");
  const double scale = t_squared ? temperature * temperature : 1.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z_tea.rows(); ++i) {
    const Vector p = softmax_temp(Vector(z_stu.row(i)), temperature);
    const Vector q = softmax_temp(Vector(z_tea.row(i)), temperature);
    acc += kl_divergence(q, p);
  }
  return scale * (acc / static_cast<double>(z_tea.rows()));
}

/// Teacher-side alignment: corrected teacher rows teach the student at
/// every temperature. The teacher is a constant; no gradient reaches it.
inline double teacher_swap_loss(const Matrix& z_tea, const Matrix& z_stu,
                                const std::vector<int>& targets, const distill_config& cfg,
                                Matrix* grad = nullptr) {
  detail::check_batch_shapes(z_tea, z_stu, targets, "teacher_swap_loss");
  std::vector<detail::corrected_ref> refs(static_cast<std::size_t>(z_tea.rows()));
  for (Eigen::Index i = 0; i < z_tea.rows(); ++i)
    refs[static_cast<std::size_t>(i)] =
        detail::apply_correction(Vector(z_tea.row(i)), targets[static_cast<std::size_t>(i)],
                                 cfg.teacher_correction, cfg.rule, cfg.scheme);
  return detail::alignment_loss(refs, z_stu, cfg.effective_temps(), cfg.t_squared_scaling,
                                nullptr, false, grad);
}

/// Pseudo-teacher alignment: the student's own corrected rows teach it.
/// Samples whose correction is the identity contribute exactly zero. With
/// detach_pseudo_teacher the reference branch is a constant; otherwise the
/// gradient also flows through the permuted branch.
inline double student_swap_loss(const Matrix& z_stu, const std::vector<int>& targets,
                                const distill_config& cfg, Matrix* grad = nullptr) {
  if (static_cast<std::size_t>(z_stu.rows()) != targets.size())
    throw shape_error("student_swap_loss: batch and target counts differ");
  if (cfg.student_correction == correction_kind::none) return 0.0;

  const auto B = z_stu.rows();
  std::vector<detail::corrected_ref> refs(static_cast<std::size_t>(B));
  std::vector<char> skip(static_cast<std::size_t>(B), 0);
  for (Eigen::Index i = 0; i < B; ++i) {
    auto& ref = refs[static_cast<std::size_t>(i)];
    ref = detail::apply_correction(Vector(z_stu.row(i)), targets[static_cast<std::size_t>(i)],
                                   cfg.student_correction, cfg.rule, cfg.scheme);
    if (!ref.perm.empty() && is_identity_perm(ref.perm)) skip[static_cast<std::size_t>(i)] = 1;
  }
  const bool through = !cfg.detach_pseudo_teacher;
  return detail::alignment_loss(refs, z_stu, cfg.effective_temps(), cfg.t_squared_scaling, &skip,
                                through, grad);
}

/// Full objective: ce_weight * CE + L_TS + gated L_SS. When the gate is
/// closed (epoch <= gamma) the student-swap term is skipped entirely, so
/// the parameter trajectory matches a use_ss=false run bit for bit.
inline loss_breakdown sld_loss(const Matrix& z_tea, const Matrix& z_stu,
                               const std::vector<int>& targets, int epoch,
                               const distill_config& cfg, Matrix* grad = nullptr) {
  detail::check_batch_shapes(z_tea, z_stu, targets, "sld_loss");
  if (grad) grad->setZero(z_stu.rows(), z_stu.cols());

  loss_breakdown out;
  const auto B = z_stu.rows();
  for (Eigen::Index i = 0; i < B; ++i) {
    const Vector row(z_stu.row(i));
    const int t = targets[static_cast<std::size_t>(i)];
    out.l_ce += cross_entropy(row, t);
    if (grad && cfg.ce_weight != 0.0)
      grad->row(i) += (cfg.ce_weight / static_cast<double>(B)) * cross_entropy_grad(row, t).transpose();
  }
  out.l_ce /= static_cast<double>(B);

  if (cfg.use_ts) out.l_ts = teacher_swap_loss(z_tea, z_stu, targets, cfg, grad);
  if (cfg.use_ss && schedule_gate(epoch, cfg.gamma))
    out.l_ss = student_swap_loss(z_stu, targets, cfg, grad);

  out.l_kd = kd_loss(z_tea, z_stu, kSingleTemperature, cfg.t_squared_scaling);
  out.l_sld = out.l_ts + out.l_ss;
  out.total = cfg.ce_weight * out.l_ce + out.l_sld;
  return out;
}

}  // namespace sld
