// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sld/analysis.hpp"
#include "sld/data.hpp"
#include "sld/losses.hpp"
#include "sld/model.hpp"

namespace sld {

struct train_schedule {
  int epochs = 60;
  int batch_size = 64;
  double lr0 = 0.05;
  double lr_decay_factor = 0.1;
  std::vector<int> decay_epochs{30, 45};
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs < 0) throw config_error("schedule.epochs must be >= 0");
    if (batch_size < 1) throw config_error("schedule.batch_size must be >= 1");
    if (!(lr0 > 0.0)) throw config_error("schedule.lr0 must be > 0");
    if (!(lr_decay_factor > 0.0)) throw config_error("schedule.lr_decay_factor must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
      throw config_error("schedule.momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw config_error("schedule.weight_decay must be >= 0");
    int prev = 0;
    for (int d : decay_epochs) {
      if (d <= prev) throw config_error("schedule.decay_epochs must be strictly increasing");
      prev = d;
    }
  }
};

/// Piecewise-constant step schedule: the rate multiplies by decay_factor
/// after each listed epoch completes.
inline double lr_at(int epoch, const train_schedule& sched) {
  int crossed = 0;
  for (int d : sched.decay_epochs)
    if (d <= epoch - 1) ++crossed;
  return sched.lr0 * std::pow(sched.lr_decay_factor, crossed);
}

// ---------------------------------------------------------------------------
// SGD with momentum; weight decay folds into the gradient before momentum:
//   v <- momentum * v + g + wd * p;  p <- p - lr * v
// Values are re-quantized to the f32 grid after every update so that f32
// checkpoints restore training exactly.
// ---------------------------------------------------------------------------

inline void sgd_step(Matrix& param, const Matrix& grad, Matrix& velocity, double lr,
                     double momentum, double weight_decay) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      param.rows() != velocity.rows() || param.cols() != velocity.cols())
    throw shape_error("sgd_step: parameter/gradient/velocity shapes differ");
  velocity = quantize_f32(Matrix(momentum * velocity + grad + weight_decay * param));
  param = quantize_f32(Matrix(param - lr * velocity));
}

struct sgd_state {
  std::vector<Matrix> vel_weights;
  std::vector<Vector> vel_biases;

  static sgd_state zeros_like(const model& m) {
    sgd_state s;
    for (const auto& w : m.weights) s.vel_weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& b : m.biases) s.vel_biases.push_back(Vector::Zero(b.size()));
    return s;
  }
};

inline void sgd_step(model& m, const model_grads& grads, sgd_state& state, double lr,
                     double momentum, double weight_decay) {
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    sgd_step(m.weights[l], grads.weights[l], state.vel_weights[l], lr, momentum, weight_decay);
    Matrix b = m.biases[l].transpose(), gb = grads.biases[l].transpose(),
           vb = state.vel_biases[l].transpose();
    sgd_step(b, gb, vb, lr, momentum, weight_decay);
    m.biases[l] = b.transpose();
    state.vel_biases[l] = vb.transpose();
  }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct epoch_record {
  int epoch = 0;
  double lr = 0.0;
  loss_breakdown losses;
  double train_top1 = 0.0;
  double val_top1 = 0.0;
  double swap_rate_teacher = 0.0;
  double swap_rate_student = 0.0;
};

struct run_report {
  std::vector<epoch_record> epochs;
  std::uint64_t seed = 0;
  double final_train_top1 = 0.0;
  double final_val_top1 = 0.0;
  std::string config_echo;
  double wall_time_sec = 0.0;
};

/// One JSON object per epoch, then a final summary record. wall_time_sec
/// is the only field expected to differ between identical reruns.
inline void write_report_jsonl(const run_report& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw format_error("report: cannot open for writing: " + path.string());
  for (const auto& e : report.epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["lr"] = e.lr;
    j["l_ts"] = e.losses.l_ts;
    j["l_ss"] = e.losses.l_ss;
    j["l_kd"] = e.losses.l_kd;
    j["l_ce"] = e.losses.l_ce;
    j["l_sld"] = e.losses.l_sld;
    j["total"] = e.losses.total;
    j["train_top1"] = e.train_top1;
    j["val_top1"] = e.val_top1;
    j["swap_rate_teacher"] = e.swap_rate_teacher;
    j["swap_rate_student"] = e.swap_rate_student;
    os << j.dump() << "\n";
  }
  nlohmann::json f;
  f["final"] = true;
  f["seed"] = report.seed;
  f["final_train_top1"] = report.final_train_top1;
  f["final_val_top1"] = report.final_val_top1;
  f["config_echo"] = report.config_echo;
  f["wall_time_sec"] = report.wall_time_sec;
  os << f.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

constexpr int kEvalChunk = 512;

/// Forward over an arbitrary number of rows in fixed-size chunks. The
/// chunk size is a constant so cached and fresh teacher logits agree
/// bit for bit.
inline Matrix forward_all(const model& m, const Matrix& features) {
  Matrix logits(features.rows(), m.spec.num_classes);
  for (Eigen::Index start = 0; start < features.rows(); start += kEvalChunk) {
    const auto len = std::min<Eigen::Index>(kEvalChunk, features.rows() - start);
    logits.middleRows(start, len) = forward(m, Matrix(features.middleRows(start, len)));
  }
  return logits;
}

inline double eval_top1(const model& m, const dataset& ds) {
  return topk_accuracy(logit_batch(forward_all(m, ds.features)), ds.targets, 1);
}

namespace detail {

inline std::uint64_t epoch_shuffle_key(std::uint64_t seed, int epoch) {
  return derive_key(seed, 0xe90c0000ull + static_cast<std::uint64_t>(epoch));
}

inline std::uint64_t epoch_augment_key(std::uint64_t seed, int epoch) {
  return derive_key(seed, 0xa0600000ull + static_cast<std::uint64_t>(epoch));
}

inline int batch_correct_top1(const Matrix& z, const std::vector<int>& targets) {
  int hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    bool beaten = false;
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      if (z(i, j) > z(i, t) || (z(i, j) == z(i, t) && j < t)) { beaten = true; break; }
    if (!beaten) ++hits;
  }
  return hits;
}

inline int batch_swap_fires(const Matrix& z, const std::vector<int>& targets) {
  int fires = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    if (z(i, targets[static_cast<std::size_t>(i)]) != z.row(i).maxCoeff()) ++fires;
  return fires;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Teacher pretraining: plain cross-entropy, SGD with momentum, step LR.
// ---------------------------------------------------------------------------

struct train_result {
  checkpoint ckpt;
  run_report report;
};

inline train_result train_teacher(const model_spec& spec, const dataset& train,
                                  const dataset& val, const train_schedule& sched,
                                  const augment_config& aug = {},
                                  const std::optional<checkpoint>& resume = {}) {
  spec.validate();
  sched.validate();
  if (train.dim() != spec.input_dim)
    throw config_error("train_teacher: dataset dim does not match model input_dim");
  if (train.num_classes != spec.num_classes)
    throw config_error("train_teacher: dataset classes do not match model num_classes");

  const auto t0 = std::chrono::steady_clock::now();
  model m = resume ? resume->m : init_params(spec, sched.seed);
  sgd_state opt = sgd_state::zeros_like(m);
  int start_epoch = 1;
  if (resume) {
    start_epoch = resume->epoch + 1;
    if (resume->has_velocity) {
      opt.vel_weights = resume->vel_weights;
      opt.vel_biases = resume->vel_biases;
    }
  }

  run_report report;
  report.seed = sched.seed;
  for (int epoch = start_epoch; epoch <= sched.epochs; ++epoch) {
    const double lr = lr_at(epoch, sched);
    auto stream = batches(train, sched.batch_size, detail::epoch_shuffle_key(sched.seed, epoch),
                          /*shuffle=*/true);
    double loss_acc = 0.0;
    int correct = 0, fires = 0;
    for (std::size_t bi = 0; bi < stream.size(); ++bi) {
      labeled_batch batch = stream.get(bi);
      if (aug.enabled())
        augment_batch(batch, stream.indices(bi), aug, train.image_rows, train.image_cols,
                      detail::epoch_augment_key(sched.seed, epoch));
      gradient_tape tape;
      const Matrix z = forward(m, batch.features, &tape);
      if (!z.allFinite())
        throw training_error("train_teacher: non-finite logits at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(bi) +
                             " (diverged)");
      const auto B = z.rows();
      // Same arithmetic as the cross-entropy term in sld_loss, so a
      // distillation run with every distill term disabled reproduces this
      // loop bit for bit.
      const double inv_b = 1.0 / static_cast<double>(B);
      double ce = 0.0;
      Matrix dz(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < B; ++i) {
        const Vector row(z.row(i));
        const int t = batch.targets[static_cast<std::size_t>(i)];
        ce += cross_entropy(row, t);
        dz.row(i) = (inv_b * cross_entropy_grad(row, t)).transpose();
      }
      ce /= static_cast<double>(B);
      if (!std::isfinite(ce))
        throw training_error("train_teacher: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(bi));
      loss_acc += ce * static_cast<double>(B);
      correct += detail::batch_correct_top1(z, batch.targets);
      fires += detail::batch_swap_fires(z, batch.targets);
      const model_grads grads = backward(m, tape, dz);
      sgd_step(m, grads, opt, lr, sched.momentum, sched.weight_decay);
    }
    epoch_record rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.losses.l_ce = loss_acc / train.size();
    rec.losses.total = rec.losses.l_ce;
    rec.train_top1 = static_cast<double>(correct) / train.size();
    rec.val_top1 = val.size() > 0 ? eval_top1(m, val) : 0.0;
    rec.swap_rate_teacher = static_cast<double>(fires) / train.size();
    report.epochs.push_back(rec);
  }

  report.final_train_top1 = report.epochs.empty() ? 0.0 : report.epochs.back().train_top1;
  report.final_val_top1 = report.epochs.empty() ? 0.0 : report.epochs.back().val_top1;
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  checkpoint ckpt;
  ckpt.m = std::move(m);
  ckpt.seed = sched.seed;
  ckpt.epoch = sched.epochs;
  ckpt.has_velocity = true;
  ckpt.vel_weights = std::move(opt.vel_weights);
  ckpt.vel_biases = std::move(opt.vel_biases);
  return {std::move(ckpt), std::move(report)};
}

// ---------------------------------------------------------------------------
// Student distillation under the configured loss stack.
// ---------------------------------------------------------------------------

inline train_result distill(const model& teacher, const model_spec& student_spec,
                            const dataset& train, const dataset& val,
                            const train_schedule& sched, const distill_config& dcfg,
                            const augment_config& aug = {},
                            const std::optional<checkpoint>& resume = {},
                            const Matrix* precomputed_teacher_logits = nullptr) {
  student_spec.validate();
  sched.validate();
  dcfg.validate();
  if (teacher.spec.num_classes != student_spec.num_classes ||
      teacher.spec.num_classes != train.num_classes)
    throw config_error("distill: teacher, student and dataset class counts must match");
  if (train.dim() != student_spec.input_dim || train.dim() != teacher.spec.input_dim)
    throw config_error("distill: dataset dim does not match model input_dim");

  const auto t0 = std::chrono::steady_clock::now();
  model stu = resume ? resume->m : init_params(student_spec, sched.seed);
  sgd_state opt = sgd_state::zeros_like(stu);
  int start_epoch = 1;
  if (resume) {
    start_epoch = resume->epoch + 1;
    if (resume->has_velocity) {
      opt.vel_weights = resume->vel_weights;
      opt.vel_biases = resume->vel_biases;
    }
  }

  // The teacher is frozen, so without augmentation its logits per sample
  // never change; compute them once (or accept them precomputed when many
  // runs share one teacher).
  Matrix teacher_cache_local;
  const Matrix* teacher_cache = nullptr;
  double cached_teacher_rate = 0.0;
  if (!aug.enabled()) {
    if (precomputed_teacher_logits) {
      teacher_cache = precomputed_teacher_logits;
    } else {
      teacher_cache_local = forward_all(teacher, train.features);
      teacher_cache = &teacher_cache_local;
    }
    if (teacher_cache->rows() != train.features.rows())
      throw shape_error("distill: teacher logit cache row count does not match dataset");
    cached_teacher_rate = swap_rate(logit_batch(*teacher_cache), train.targets);
  }

  run_report report;
  report.seed = sched.seed;
  for (int epoch = start_epoch; epoch <= sched.epochs; ++epoch) {
    const double lr = lr_at(epoch, sched);
    auto stream = batches(train, sched.batch_size, detail::epoch_shuffle_key(sched.seed, epoch),
                          /*shuffle=*/true);
    loss_breakdown sums;
    int correct = 0, stu_fires = 0, tea_fires = 0;
    for (std::size_t bi = 0; bi < stream.size(); ++bi) {
      labeled_batch batch = stream.get(bi);
      const auto& ids = stream.indices(bi);
      Matrix z_tea;
      if (aug.enabled()) {
        augment_batch(batch, ids, aug, train.image_rows, train.image_cols,
                      detail::epoch_augment_key(sched.seed, epoch));
        z_tea = forward(teacher, batch.features);
        tea_fires += detail::batch_swap_fires(z_tea, batch.targets);
      } else {
        z_tea.resize(static_cast<Eigen::Index>(ids.size()), teacher_cache->cols());
        for (std::size_t i = 0; i < ids.size(); ++i)
          z_tea.row(static_cast<Eigen::Index>(i)) = teacher_cache->row(ids[i]);
      }

      gradient_tape tape;
      const Matrix z_stu = forward(stu, batch.features, &tape);
      if (!z_stu.allFinite())
        throw training_error("distill: non-finite student logits at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(bi) +
                             " (diverged)");
      Matrix dz;
      const loss_breakdown bd = sld_loss(z_tea, z_stu, batch.targets, epoch, dcfg, &dz);
      if (!std::isfinite(bd.total))
        throw training_error("distill: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(bi));
      const auto B = static_cast<double>(z_stu.rows());
      sums.l_ts += bd.l_ts * B;
      sums.l_ss += bd.l_ss * B;
      sums.l_kd += bd.l_kd * B;
      sums.l_ce += bd.l_ce * B;
      sums.l_sld += bd.l_sld * B;
      sums.total += bd.total * B;
      correct += detail::batch_correct_top1(z_stu, batch.targets);
      stu_fires += detail::batch_swap_fires(z_stu, batch.targets);

      const model_grads grads = backward(stu, tape, dz);
      sgd_step(stu, grads, opt, lr, sched.momentum, sched.weight_decay);
    }

    epoch_record rec;
    rec.epoch = epoch;
    rec.lr = lr;
    const double n = static_cast<double>(train.size());
    rec.losses = {sums.l_ts / n, sums.l_ss / n, sums.l_kd / n,
                  sums.l_ce / n, sums.l_sld / n, sums.total / n};
    rec.train_top1 = static_cast<double>(correct) / train.size();
    rec.val_top1 = val.size() > 0 ? eval_top1(stu, val) : 0.0;
    rec.swap_rate_teacher =
        aug.enabled() ? static_cast<double>(tea_fires) / train.size() : cached_teacher_rate;
    rec.swap_rate_student = static_cast<double>(stu_fires) / train.size();
    report.epochs.push_back(rec);
  }

  report.final_train_top1 = report.epochs.empty() ? 0.0 : report.epochs.back().train_top1;
  report.final_val_top1 = report.epochs.empty() ? 0.0 : report.epochs.back().val_top1;
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  checkpoint ckpt;
  ckpt.m = std::move(stu);
  ckpt.seed = sched.seed;
  ckpt.epoch = sched.epochs;
  ckpt.has_velocity = true;
  ckpt.vel_weights = std::move(opt.vel_weights);
  ckpt.vel_biases = std::move(opt.vel_biases);
  return {std::move(ckpt), std::move(report)};
}

}  // namespace sld
