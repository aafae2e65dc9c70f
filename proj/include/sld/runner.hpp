// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sld/analysis.hpp"
#include "sld/config.hpp"
#include "sld/trainer.hpp"

namespace sld {

namespace fs = std::filesystem;

inline std::string csv_num(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

namespace detail {

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw format_error("cannot open for writing: " + path.string());
  os << text;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// train-teacher
// ---------------------------------------------------------------------------

struct teacher_run_result {
  fs::path checkpoint_path;
  fs::path report_path;
  run_report report;
};

inline teacher_run_result run_train_teacher(const run_config& cfg) {
  validate_input_files(cfg, /*needs_teacher_checkpoint=*/false);
  auto [train, val] = load_dataset(cfg.dataset);
  const model_spec spec =
      resolve_model_spec(cfg.teacher, "teacher", train.dim(), train.num_classes);

  fs::create_directories(cfg.output_dir);
  const std::string echo = write_resolved_toml(cfg);
  detail::write_text_file(fs::path(cfg.output_dir) / "config.resolved.toml", echo);

  train_schedule sched = cfg.schedule;
  sched.seed = cfg.seeds.front();
  train_result result = train_teacher(spec, train, val, sched, cfg.dataset.augment);
  result.report.config_echo = echo;

  teacher_run_result out;
  out.checkpoint_path = fs::path(cfg.output_dir) / "teacher.ckpt";
  out.report_path = fs::path(cfg.output_dir) / "teacher_report.jsonl";
  save_checkpoint(result.ckpt, out.checkpoint_path);
  write_report_jsonl(result.report, out.report_path);
  out.report = std::move(result.report);
  return out;
}

// ---------------------------------------------------------------------------
// distill (shared by the ablation cells)
// ---------------------------------------------------------------------------

struct distill_run_result {
  fs::path dir;
  std::vector<double> final_val_top1;    // per seed
  std::vector<double> final_train_top1;  // per seed
  double mean_final_val_top1 = 0.0;
  double stddev_final_val_top1 = 0.0;
};

namespace detail {

inline distill_run_result run_distill_into(const run_config& cfg, const fs::path& dir,
                                           const model& teacher, const dataset& train,
                                           const dataset& val, const Matrix* teacher_cache) {
  const model_spec student_spec =
      resolve_model_spec(cfg.student, "student", train.dim(), train.num_classes);
  if (teacher.spec.num_classes != train.num_classes)
    throw config_error("distill: teacher checkpoint has " +
                       std::to_string(teacher.spec.num_classes) + " classes, dataset has " +
                       std::to_string(train.num_classes));

  fs::create_directories(dir);
  const std::string echo = write_resolved_toml(cfg);
  detail::write_text_file(dir / "config.resolved.toml", echo);

  distill_run_result out;
  out.dir = dir;
  for (std::uint64_t seed : cfg.seeds) {
    train_schedule sched = cfg.schedule;
    sched.seed = seed;
    train_result result =
        distill(teacher, student_spec, train, val, sched, cfg.distill, cfg.dataset.augment,
                /*resume=*/{}, teacher_cache);
    result.report.config_echo = echo;
    save_checkpoint(result.ckpt, dir / ("student_seed" + std::to_string(seed) + ".ckpt"));
    write_report_jsonl(result.report, dir / ("report_seed" + std::to_string(seed) + ".jsonl"));
    out.final_val_top1.push_back(result.report.final_val_top1);
    out.final_train_top1.push_back(result.report.final_train_top1);
  }
  out.mean_final_val_top1 = detail::mean_of(out.final_val_top1);
  out.stddev_final_val_top1 = detail::stddev_of(out.final_val_top1);

  std::ostringstream agg;
  agg << "seed,final_val_top1,final_train_top1\n";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    agg << cfg.seeds[i] << "," << csv_num(out.final_val_top1[i]) << ","
        << csv_num(out.final_train_top1[i]) << "\n";
  agg << "mean," << csv_num(out.mean_final_val_top1) << ","
      << csv_num(detail::mean_of(out.final_train_top1)) << "\n";
  agg << "stddev," << csv_num(out.stddev_final_val_top1) << ","
      << csv_num(detail::stddev_of(out.final_train_top1)) << "\n";
  detail::write_text_file(dir / "aggregate.csv", agg.str());
  return out;
}

}  // namespace detail

inline distill_run_result run_distill(const run_config& cfg) {
  validate_input_files(cfg, /*needs_teacher_checkpoint=*/true);
  auto [train, val] = load_dataset(cfg.dataset);
  const checkpoint teacher_ckpt = load_checkpoint(cfg.teacher_checkpoint);
  Matrix teacher_cache;
  const Matrix* cache_ptr = nullptr;
  if (!cfg.dataset.augment.enabled()) {
    teacher_cache = forward_all(teacher_ckpt.m, train.features);
    cache_ptr = &teacher_cache;
  }
  return detail::run_distill_into(cfg, cfg.output_dir, teacher_ckpt.m, train, val, cache_ptr);
}

// ---------------------------------------------------------------------------
// ablate: preset grids over the distill config
// ---------------------------------------------------------------------------

struct ablate_cell {
  std::string name;
  distill_config distill;
};

/// The named grids. Every cell shares the dataset, teacher, schedule and
/// seeds; only the distillation config varies.
inline std::vector<ablate_cell> ablate_cells(const std::string& preset,
                                             const distill_config& base) {
  std::vector<ablate_cell> cells;
  auto push = [&](const std::string& name, distill_config d) {
    cells.push_back({name, std::move(d)});
  };

  if (preset == "components") {
    // Baseline KD+PA, add the teacher swap, add the student swap from
    // epoch 1, then the full method with the scheduled student swap.
    distill_config d = base;
    d.teacher_correction = correction_kind::none;
    d.student_correction = correction_kind::swap;
    d.use_ts = true;
    d.use_ss = false;
    push("kd_pa", d);
    d.teacher_correction = correction_kind::swap;
    push("ts", d);
    d.use_ss = true;
    d.gamma = 0;
    push("ts_ss", d);
    d.gamma = base.gamma;
    push("full", d);
  } else if (preset == "schemes") {
    auto both = [&](correction_kind k) {
      distill_config d = base;
      d.use_ts = true;
      d.use_ss = true;
      d.teacher_correction = k;
      d.student_correction = k;
      if (k == correction_kind::ega || k == correction_kind::egr || k == correction_kind::ga ||
          k == correction_kind::ma)
        d.detach_pseudo_teacher = true;
      return d;
    };
    push("na", both(correction_kind::none));
    {
      // Label smoothing replaces the pseudo-teacher; the real teacher
      // keeps the swap.
      distill_config d = both(correction_kind::lsr);
      d.teacher_correction = correction_kind::swap;
      push("lsr", d);
    }
    push("ega", both(correction_kind::ega));
    push("egr", both(correction_kind::egr));
    push("ga", both(correction_kind::ga));
    push("ma", both(correction_kind::ma));
    push("sld", both(correction_kind::swap));
  } else if (preset == "multiswap") {
    for (bool with_ss : {false, true}) {
      for (int depth = 1; depth <= 3; ++depth) {
        distill_config d = base;
        d.use_ts = true;
        d.use_ss = with_ss;
        d.teacher_correction = correction_kind::swap;
        d.student_correction = correction_kind::swap;
        d.rule.depth = depth;
        d.rule.condition.reset();
        push((with_ss ? std::string("sld_top") : std::string("wo_ss_top")) +
                 std::to_string(depth),
             d);
      }
    }
  } else if (preset == "conditional") {
    for (auto mode : {conditional_swap_rule::mode_t::less_than,
                      conditional_swap_rule::mode_t::more_than}) {
      for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        distill_config d = base;
        d.teacher_correction = correction_kind::swap;
        d.student_correction = correction_kind::swap;
        d.rule.depth = 1;
        d.rule.condition = conditional_swap_rule{alpha, mode};
        const char* m = mode == conditional_swap_rule::mode_t::less_than ? "lt" : "mt";
        char name[16];
        std::snprintf(name, sizeof(name), "%s_%03d", m, static_cast<int>(alpha * 100 + 0.5));
        push(name, d);
      }
    }
  } else {
    throw config_error("unknown ablation preset '" + preset +
                       "' (expected components, schemes, multiswap or conditional)");
  }
  return cells;
}

struct ablate_result {
  fs::path dir;
  std::vector<std::string> cell_names;
  std::vector<distill_run_result> cells;
};

inline ablate_result run_ablate(const run_config& cfg, const std::string& preset, int jobs = 1) {
  if (jobs < 1) throw config_error("--jobs must be >= 1");
  const auto cells = ablate_cells(preset, cfg.distill);
  validate_input_files(cfg, /*needs_teacher_checkpoint=*/true);
  auto [train, val] = load_dataset(cfg.dataset);
  const checkpoint teacher_ckpt = load_checkpoint(cfg.teacher_checkpoint);
  Matrix teacher_cache;
  const Matrix* cache_ptr = nullptr;
  if (!cfg.dataset.augment.enabled()) {
    teacher_cache = forward_all(teacher_ckpt.m, train.features);
    cache_ptr = &teacher_cache;
  }

  const fs::path root = fs::path(cfg.output_dir) / preset;
  fs::create_directories(root);

  ablate_result out;
  out.dir = root;
  out.cells.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        run_config cell_cfg = cfg;
        cell_cfg.distill = cells[i].distill;
        cell_cfg.output_dir = (root / cells[i].name).string();
        out.cells[i] = detail::run_distill_into(cell_cfg, root / cells[i].name, teacher_ckpt.m,
                                                train, val, cache_ptr);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (const auto& c : cells) out.cell_names.push_back(c.name);

  std::ostringstream per_seed, summary;
  per_seed << "cell,seed,final_val_top1,final_train_top1\n";
  summary << "cell,seeds,mean_final_val_top1,stddev_final_val_top1\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
      per_seed << cells[i].name << "," << cfg.seeds[s] << ","
               << csv_num(out.cells[i].final_val_top1[s]) << ","
               << csv_num(out.cells[i].final_train_top1[s]) << "\n";
    summary << cells[i].name << "," << cfg.seeds.size() << ","
            << csv_num(out.cells[i].mean_final_val_top1) << ","
            << csv_num(out.cells[i].stddev_final_val_top1) << "\n";
  }
  detail::write_text_file(root / (preset + "_cells.csv"), per_seed.str());
  detail::write_text_file(root / (preset + "_summary.csv"), summary.str());
  return out;
}

// ---------------------------------------------------------------------------
// analyze: post-hoc metric tables from a finished distill run directory
// ---------------------------------------------------------------------------

struct analyze_result {
  fs::path dir;  // <run_dir>/analysis
};

inline analyze_result run_analyze(const fs::path& run_dir) {
  const fs::path cfg_path = run_dir / "config.resolved.toml";
  if (!fs::exists(cfg_path))
    throw config_error("analyze: missing " + cfg_path.string() +
                       " (expected a finished distill run directory)");
  const run_config cfg = load_run_config(cfg_path);
  if (cfg.teacher_checkpoint.empty())
    throw config_error("analyze: run config names no teacher checkpoint");
  if (!fs::exists(cfg.teacher_checkpoint))
    throw config_error("analyze: teacher checkpoint does not exist: " + cfg.teacher_checkpoint);

  auto [train, val] = load_dataset(cfg.dataset);
  const dataset& eval = val.size() > 0 ? val : train;
  const checkpoint teacher = load_checkpoint(cfg.teacher_checkpoint);
  const logit_batch tea_logits(forward_all(teacher.m, eval.features));
  const double teacher_top1 = topk_accuracy(tea_logits, eval.targets, 1);

  // Classes of interest: the confusable pairs when present, else all.
  std::vector<int> interest;
  if (cfg.dataset.kind == dataset_kind::synthetic && !cfg.dataset.synth.superclass_pairs.empty()) {
    for (auto [a, b] : cfg.dataset.synth.superclass_pairs) {
      interest.push_back(a);
      interest.push_back(b);
    }
  } else {
    for (int c = 0; c < eval.num_classes; ++c) interest.push_back(c);
  }

  const fs::path out_dir = run_dir / "analysis";
  fs::create_directories(out_dir);
  std::ostringstream corr_csv, gap_csv, dist_csv, summary;
  corr_csv << "seed,max_abs,mean_abs\n";
  gap_csv << "seed,teacher_top1,student_top1,gap\n";
  dist_csv << "seed,true_class";
  for (int c = 0; c < eval.num_classes; ++c) dist_csv << ",pred_" << c;
  dist_csv << "\n";
  summary << "analysis of " << run_dir.string() << "\n";
  summary << "teacher top-1 on eval split: " << csv_num(teacher_top1) << "\n";

  bool any_student = false;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path ckpt_path = run_dir / ("student_seed" + std::to_string(seed) + ".ckpt");
    if (!fs::exists(ckpt_path))
      throw config_error("analyze: missing student checkpoint " + ckpt_path.string());
    any_student = true;
    const checkpoint student = load_checkpoint(ckpt_path);
    const logit_batch stu_logits(forward_all(student.m, eval.features));
    const double student_top1 = topk_accuracy(stu_logits, eval.targets, 1);
    const auto corr = correlation_diff(stu_logits, tea_logits);
    const auto dist = prediction_distribution(stu_logits, eval.targets, interest);

    corr_csv << seed << "," << csv_num(corr.max_abs) << "," << csv_num(corr.mean_abs) << "\n";
    gap_csv << seed << "," << csv_num(teacher_top1) << "," << csv_num(student_top1) << ","
            << csv_num(gap_report(teacher_top1, student_top1)) << "\n";
    for (std::size_t r = 0; r < dist.classes.size(); ++r) {
      dist_csv << seed << "," << dist.classes[r];
      for (Eigen::Index c = 0; c < dist.counts.cols(); ++c)
        dist_csv << "," << dist.counts(static_cast<Eigen::Index>(r), c);
      dist_csv << "\n";
    }
    summary << "seed " << seed << ": student top-1 " << csv_num(student_top1) << ", gap "
            << csv_num(gap_report(teacher_top1, student_top1)) << ", corr diff mean "
            << csv_num(corr.mean_abs) << " max " << csv_num(corr.max_abs) << "\n";
  }
  if (!any_student) throw config_error("analyze: no student checkpoints found");

  detail::write_text_file(out_dir / "correlation_diff.csv", corr_csv.str());
  detail::write_text_file(out_dir / "gap.csv", gap_csv.str());
  detail::write_text_file(out_dir / "prediction_distribution.csv", dist_csv.str());
  detail::write_text_file(out_dir / "summary.txt", summary.str());
  return {out_dir};
}

}  // namespace sld
