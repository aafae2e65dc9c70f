// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion. Exits with the
// number of failed criteria. Training artifacts land in ./acceptance_work.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sld/runner.hpp"

namespace fs = std::filesystem;
using sld::Matrix;
using sld::Vector;

namespace {

int g_failures = 0;

class stopwatch {
public:
  stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

void report(int idx, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  if (!pass) ++g_failures;
  std::ostringstream line;
  line << (pass ? "[PASS]" : "[FAIL]") << " criterion " << idx << ": " << name;
  if (!detail.empty()) line << " — " << detail;
  line << " (" << std::fixed << std::setprecision(1) << seconds << "s)";
  std::cout << line.str() << std::endl;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// criterion 1: swap invariants on 10^5 rows per class count
// ---------------------------------------------------------------------------

void criterion_1() {
  stopwatch sw;
  std::mt19937_64 rng(710001);
  std::uniform_real_distribution<double> dist(-12.0, 12.0);
  long failures = 0;
  for (int C : {3, 10, 100}) {
    for (int it = 0; it < 100000; ++it) {
      Vector z(C);
      for (int j = 0; j < C; ++j) z[j] = dist(rng);
      const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(C));
      const int a = sld::argmax_lowest(z);
      const Vector out = sld::swap_to_target(z, t);
      // bitwise multiset permutation
      Vector sz = z, so = out;
      std::sort(sz.data(), sz.data() + C);
      std::sort(so.data(), so.data() + C);
      if (std::memcmp(sz.data(), so.data(), sizeof(double) * static_cast<std::size_t>(C)) != 0)
        ++failures;
      // the target attains the maximum
      if (out[t] != out.maxCoeff()) ++failures;
      // untouched coordinates are bit-identical
      for (int j = 0; j < C; ++j)
        if (j != t && j != a && out[j] != z[j]) ++failures;
    }
  }
  const double secs = sw.seconds();
  report(1, "swap invariant suite (3x100000 rows, C in {3,10,100})",
         failures == 0 && secs < 10.0,
         std::to_string(failures) + " violations, runtime " + fmt(secs) + "s < 10s", secs);
}

// ---------------------------------------------------------------------------
// criterion 2: softmax/swap equivariance within 1e-12
// ---------------------------------------------------------------------------

void criterion_2() {
  stopwatch sw;
  std::mt19937_64 rng(710002);
  std::uniform_real_distribution<double> zdist(-8.0, 8.0);
  std::uniform_real_distribution<double> tdist(0.5, 8.0);
  long failures = 0;
  double worst = 0.0;
  for (int it = 0; it < 10000; ++it) {
    const int C = 3 + static_cast<int>(rng() % 10);
    Vector z(C);
    for (int j = 0; j < C; ++j) z[j] = zdist(rng);
    const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(C));
    const double T = tdist(rng);
    const auto perm = sld::swap_to_target_perm(z, t);
    const Vector lhs = sld::softmax_temp(sld::apply_perm(z, perm), T);
    const Vector rhs = sld::apply_perm(sld::softmax_temp(z, T), perm);
    const double err = (lhs - rhs).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, err);
    if (err > 1e-12) ++failures;
  }
  report(2, "swap/softmax equivariance (10^4 cases, T in [0.5, 8])", failures == 0,
         "max per-entry error " + fmt(worst) + " <= 1e-12", sw.seconds());
}

// ---------------------------------------------------------------------------
// criterion 3: finite-difference gradient checks
// ---------------------------------------------------------------------------

bool fd_scalar(const std::function<double(const Vector&)>& f, const Vector& x0,
               const Vector& analytic, double* worst) {
  const double h = 1e-5, tol = 1e-4;
  Vector x = x0;
  bool ok = true;
  for (Eigen::Index j = 0; j < x0.size(); ++j) {
    x[j] = x0[j] + h;
    const double fp = f(x);
    x[j] = x0[j] - h;
    const double fm = f(x);
    x[j] = x0[j];
    const double fd = (fp - fm) / (2.0 * h);
    const double err = std::abs(analytic[j] - fd);
    if (err <= 1e-7) continue;
    const double rel = err / std::max({std::abs(analytic[j]), std::abs(fd), 1e-12});
    *worst = std::max(*worst, rel);
    if (rel > tol) ok = false;
  }
  return ok;
}

Vector margin_logits(std::mt19937_64& rng, int C) {
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  while (true) {
    Vector z(C);
    for (int j = 0; j < C; ++j) z[j] = dist(rng);
    bool ok = true;
    for (int a = 0; a < C && ok; ++a)
      for (int b = a + 1; b < C && ok; ++b)
        if (std::abs(z[a] - z[b]) < 1e-3) ok = false;
    if (ok) return z;
  }
}

void criterion_3() {
  stopwatch sw;
  std::mt19937_64 rng(710003);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int fail = 0;
  double worst = 0.0;

  for (int it = 0; it < 100; ++it) {  // KL through softmax
    const Vector z = margin_logits(rng, 6);
    Vector q(6);
    for (int j = 0; j < 6; ++j) q[j] = 0.05 + u01(rng);
    q /= q.sum();
    const double T = 0.5 + 4.0 * u01(rng);
    const Vector g = sld::kl_vs_const_grad(q, sld::softmax_temp(z, T), T);
    if (!fd_scalar([&](const Vector& x) { return sld::kl_divergence(q, sld::softmax_temp(x, T)); },
                   z, g, &worst))
      ++fail;
  }
  for (int it = 0; it < 100; ++it) {  // cross-entropy
    const Vector z = margin_logits(rng, 6);
    const int t = static_cast<int>(rng() % 6);
    if (!fd_scalar([&](const Vector& x) { return sld::cross_entropy(x, t); }, z,
                   sld::cross_entropy_grad(z, t), &worst))
      ++fail;
  }
  for (int it = 0; it < 100; ++it) {  // temperature softmax via a random projection
    const Vector z = margin_logits(rng, 5);
    Vector c(5);
    for (int j = 0; j < 5; ++j) c[j] = 2.0 * u01(rng) - 1.0;
    const double T = 0.5 + 4.0 * u01(rng);
    const Vector p = sld::softmax_temp(z, T);
    const Vector g = (p.asDiagonal() * c - p * p.dot(c)) / T;
    if (!fd_scalar([&](const Vector& x) { return c.dot(sld::softmax_temp(x, T)); }, z, g,
                   &worst))
      ++fail;
  }
  // full sld_loss with gradient flowing through the pseudo-teacher
  sld::distill_config cfg;
  cfg.gamma = 0;
  cfg.detach_pseudo_teacher = false;
  for (int it = 0; it < 100; ++it) {
    Matrix z_tea(2, 4), z_stu(2, 4);
    std::vector<int> targets(2);
    for (int i = 0; i < 2; ++i) {
      z_tea.row(i) = margin_logits(rng, 4).transpose();
      z_stu.row(i) = margin_logits(rng, 4).transpose();
      targets[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4);
    }
    Matrix grad;
    sld::sld_loss(z_tea, z_stu, targets, 1, cfg, &grad);
    Vector x0(8), g0(8);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 4; ++j) {
        x0[i * 4 + j] = z_stu(i, j);
        g0[i * 4 + j] = grad(i, j);
      }
    if (!fd_scalar(
            [&](const Vector& x) {
              Matrix zs(2, 4);
              for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 4; ++j) zs(i, j) = x[i * 4 + j];
              return sld::sld_loss(z_tea, zs, targets, 1, cfg).total;
            },
            x0, g0, &worst))
      ++fail;
  }
  // and end to end through model parameters on a tiny network
  sld::model_spec spec;
  spec.kind = sld::model_spec::kind_t::mlp;
  spec.input_dim = 6;
  spec.num_classes = 4;
  spec.layer_sizes = {5, 4};
  for (int it = 0; it < 10; ++it) {
    auto m = sld::init_params(spec, 500 + static_cast<std::uint64_t>(it));
    Matrix x(3, 6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 6; ++j) x(i, j) = gauss(rng);
    Matrix z_tea(3, 4);
    std::vector<int> targets(3);
    for (int i = 0; i < 3; ++i) {
      z_tea.row(i) = margin_logits(rng, 4).transpose();
      targets[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4);
    }
    auto loss_of = [&](const sld::model& mm) {
      return sld::sld_loss(z_tea, sld::forward(mm, x), targets, 1, cfg).total;
    };
    sld::gradient_tape tape;
    const Matrix z = sld::forward(m, x, &tape);
    Matrix dz;
    sld::sld_loss(z_tea, z, targets, 1, cfg, &dz);
    const auto grads = sld::backward(m, tape, dz);
    const double h = 1e-5;
    for (std::size_t l = 0; l < m.weights.size() && fail == 0; ++l) {
      for (Eigen::Index k = 0; k < m.weights[l].size(); k += 7) {
        const double orig = m.weights[l].data()[k];
        m.weights[l].data()[k] = orig + h;
        const double fp = loss_of(m);
        m.weights[l].data()[k] = orig - h;
        const double fm = loss_of(m);
        m.weights[l].data()[k] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double a = grads.weights[l].data()[k];
        const double err = std::abs(a - fd);
        if (err > 1e-7 && err / std::max({std::abs(a), std::abs(fd), 1e-12}) > 1e-4) ++fail;
      }
    }
  }
  report(3, "gradient checks (KL, CE, softmax, sld_loss; 100 instances each)", fail == 0,
         std::to_string(fail) + " failures, worst rel err " + fmt(worst), sw.seconds());
}

// ---------------------------------------------------------------------------
// shared desk-scale fixtures
// ---------------------------------------------------------------------------

struct workdir {
  fs::path root;
  explicit workdir(const fs::path& p) : root(p) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
};

std::string synth_block(int classes, int dim, double overlap, int per_class, int val_per_class,
                        int seed) {
  std::ostringstream os;
  os << "[dataset]\nkind = \"synthetic\"\nnum_classes = " << classes << "\ndim = " << dim
     << "\ncluster_overlap = " << overlap << "\nsuperclass_pairs = [[0, 1], [2, 3]]\n"
     << "samples_per_class = " << per_class << "\nval_samples_per_class = " << val_per_class
     << "\nseed = " << seed << "\n";
  return os.str();
}

sld::run_config parse_cfg(const std::string& text) {
  return sld::parse_run_config(sld::toml::parse(text));
}

// criterion 7 fixture: shared by criteria 7, 8 and 10
struct desk_experiment {
  fs::path teacher_ckpt;
  fs::path grid_dir;
  fs::path vanilla_kd_dir;  // classic single-temperature KD baseline runs
  sld::run_config distill_cfg;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  double teacher_val_top1 = 0.0;
  double teacher_train_swap_rate = 0.0;
  bool ready = false;
  double mean_kd_pa = 0.0, mean_ts = 0.0, mean_full = 0.0;
  std::vector<double> per_seed_ts, per_seed_full, per_seed_kd_pa;
};

desk_experiment run_desk_experiment(const fs::path& work) {
  desk_experiment exp;
  const std::string data_block =
      synth_block(/*classes=*/10, /*dim=*/784, /*overlap=*/16.0, /*per_class=*/500,
                  /*val_per_class=*/500, /*seed=*/77);

  // teacher: 784-512-256-10. Five epochs leave it with the systematic
  // confusable-pair bias the swap correction targets (val ~0.80, train
  // swap rate ~0.19) rather than a memorized training set.
  std::ostringstream tcfg;
  tcfg << data_block << R"(
[teacher]
hidden = [512, 256]

[student]
hidden = [64]

[schedule]
epochs = 5
batch_size = 64
lr0 = 0.05
decay_epochs = [3]
momentum = 0.9
weight_decay = 5e-4

[run]
output_dir = ")" << (work / "teacher").string()
       << R"("
seeds = [9]
)";
  const auto teacher = sld::run_train_teacher(parse_cfg(tcfg.str()));
  exp.teacher_ckpt = teacher.checkpoint_path;
  exp.teacher_val_top1 = teacher.report.final_val_top1;
  exp.teacher_train_swap_rate = teacher.report.epochs.back().swap_rate_teacher;

  std::ostringstream dcfg;
  dcfg << data_block << R"(
[teacher]
hidden = [512, 256]

[student]
hidden = [64]

[schedule]
epochs = 60
batch_size = 64
lr0 = 0.01
decay_epochs = [30, 45]
momentum = 0.9
weight_decay = 5e-4

[distill]
gamma = 30
teacher_checkpoint = ")"
       << exp.teacher_ckpt.string() << R"("

[run]
output_dir = ")" << (work / "grid").string()
       << R"("
seeds = [1, 2, 3, 4]
)";
  exp.distill_cfg = parse_cfg(dcfg.str());
  const auto grid = sld::run_ablate(exp.distill_cfg, "components", /*jobs=*/1);
  exp.grid_dir = grid.dir;
  for (std::size_t i = 0; i < grid.cell_names.size(); ++i) {
    if (grid.cell_names[i] == "kd_pa") {
      exp.mean_kd_pa = grid.cells[i].mean_final_val_top1;
      exp.per_seed_kd_pa = grid.cells[i].final_val_top1;
    } else if (grid.cell_names[i] == "ts") {
      exp.mean_ts = grid.cells[i].mean_final_val_top1;
      exp.per_seed_ts = grid.cells[i].final_val_top1;
    } else if (grid.cell_names[i] == "full") {
      exp.mean_full = grid.cells[i].mean_final_val_top1;
      exp.per_seed_full = grid.cells[i].final_val_top1;
    }
  }

  // classic KD baseline (single temperature, no corrections) for the
  // correlation-matrix analog
  sld::run_config vanilla = exp.distill_cfg;
  vanilla.distill.use_pa = false;
  vanilla.distill.use_ss = false;
  vanilla.distill.teacher_correction = sld::correction_kind::none;
  vanilla.output_dir = (work / "kd_vanilla").string();
  const auto kd_runs = sld::run_distill(vanilla);
  exp.vanilla_kd_dir = kd_runs.dir;

  exp.ready = true;
  return exp;
}

// ---------------------------------------------------------------------------
// criterion 4: scheduling gate bit-exactness over 5 epochs
// ---------------------------------------------------------------------------

void criterion_4(const fs::path& work) {
  stopwatch sw;
  sld::synth_spec spec;
  spec.num_classes = 6;
  spec.dim = 64;
  spec.cluster_overlap = 2.0;
  spec.superclass_pairs = {{0, 1}, {2, 3}};
  spec.samples_per_class = 100;
  spec.val_samples_per_class = 50;
  spec.seed = 13;
  const auto [train, val] = sld::generate_confusable(spec);

  sld::model_spec tspec;
  tspec.input_dim = spec.dim;
  tspec.num_classes = spec.num_classes;
  tspec.layer_sizes = {64, 6};
  sld::train_schedule tsched;
  tsched.epochs = 8;
  tsched.batch_size = 32;
  tsched.decay_epochs = {5};
  tsched.seed = 3;
  const auto teacher = sld::train_teacher(tspec, train, val, tsched);

  sld::model_spec sspec;
  sspec.input_dim = spec.dim;
  sspec.num_classes = spec.num_classes;
  sspec.layer_sizes = {12, 6};
  sld::train_schedule ssched = tsched;
  ssched.epochs = 5;
  ssched.seed = 4;

  sld::distill_config gated;
  gated.gamma = 5;  // every epoch <= gamma
  sld::distill_config off = gated;
  off.use_ss = false;

  const auto a = sld::distill(teacher.ckpt.m, sspec, train, val, ssched, gated);
  const auto b = sld::distill(teacher.ckpt.m, sspec, train, val, ssched, off);

  bool zeros = true;
  for (const auto& e : a.report.epochs) zeros = zeros && e.losses.l_ss == 0.0;
  bool identical = true;
  for (std::size_t l = 0; l < a.ckpt.m.weights.size(); ++l) {
    identical = identical && std::memcmp(a.ckpt.m.weights[l].data(), b.ckpt.m.weights[l].data(),
                                         sizeof(double) * static_cast<std::size_t>(
                                                              a.ckpt.m.weights[l].size())) == 0;
    identical = identical && std::memcmp(a.ckpt.m.biases[l].data(), b.ckpt.m.biases[l].data(),
                                         sizeof(double) * static_cast<std::size_t>(
                                                              a.ckpt.m.biases[l].size())) == 0;
  }
  (void)work;
  report(4, "scheduling gate: l_ss recorded 0 and trajectory bit-identical over 5 epochs",
         zeros && identical,
         std::string(zeros ? "l_ss all zero" : "l_ss nonzero!") + ", params " +
             (identical ? "bit-identical" : "differ"),
         sw.seconds());
}

// ---------------------------------------------------------------------------
// criterion 5: KD degeneration
// ---------------------------------------------------------------------------

void criterion_5() {
  stopwatch sw;
  std::mt19937_64 rng(710005);
  sld::distill_config cfg;
  cfg.use_pa = false;  // single temperature 4.0
  cfg.use_ss = false;
  cfg.gamma = 0;
  double worst = 0.0;
  for (int it = 0; it < 200; ++it) {
    Matrix z_tea(8, 10), z_stu(8, 10);
    std::vector<int> targets(8);
    for (int i = 0; i < 8; ++i) {
      z_tea.row(i) = margin_logits(rng, 10).transpose();
      z_stu.row(i) = margin_logits(rng, 10).transpose();
      targets[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 10);
      z_tea(i, targets[static_cast<std::size_t>(i)]) = z_tea.row(i).maxCoeff() + 1.0;
    }
    const auto bd = sld::sld_loss(z_tea, z_stu, targets, 1, cfg);
    const double kd = sld::kd_loss(z_tea, z_stu, 4.0, cfg.t_squared_scaling);
    worst = std::max(worst, std::abs(bd.l_ts - kd));
  }
  report(5, "KD degeneration: sld_loss(l_ts only) == kd_loss at T=4 with a correct teacher",
         worst < 1e-12, "max |l_ts - kd| = " + fmt(worst), sw.seconds());
}

// ---------------------------------------------------------------------------
// criterion 6: conditional swap consistency
// ---------------------------------------------------------------------------

void criterion_6() {
  stopwatch sw;
  std::mt19937_64 rng(710006);
  std::uniform_real_distribution<double> dist(-6.0, 6.0);
  long failures = 0;
  const sld::conditional_swap_rule more0{0.0, sld::conditional_swap_rule::mode_t::more_than};
  const sld::conditional_swap_rule less0{0.0, sld::conditional_swap_rule::mode_t::less_than};
  for (int it = 0; it < 10000; ++it) {
    const int C = 3 + static_cast<int>(rng() % 10);
    Vector z(C);
    for (int j = 0; j < C; ++j) z[j] = dist(rng);
    const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(C));
    const Vector a = sld::conditional_swap(z, t, more0);
    const Vector b = sld::swap_to_target(z, t);
    if (std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(C)) != 0)
      ++failures;
    const Vector c = sld::conditional_swap(z, t, less0);
    if (std::memcmp(c.data(), z.data(), sizeof(double) * static_cast<std::size_t>(C)) != 0)
      ++failures;
  }
  report(6, "conditional swap: (more_than, 0) == swap, (less_than, 0) == identity",
         failures == 0, std::to_string(failures) + " mismatches over 10^4 rows", sw.seconds());
}

// ---------------------------------------------------------------------------
// criteria 7 and 8: desk-scale directional experiment + correlation analog
// ---------------------------------------------------------------------------

void criterion_7(const desk_experiment& exp, double seconds) {
  std::vector<double> diffs;
  for (std::size_t i = 0; i < exp.per_seed_full.size(); ++i)
    diffs.push_back(exp.per_seed_full[i] - exp.per_seed_ts[i]);
  std::sort(diffs.begin(), diffs.end());
  const double median =
      diffs.size() % 2 == 1
          ? diffs[diffs.size() / 2]
          : 0.5 * (diffs[diffs.size() / 2 - 1] + diffs[diffs.size() / 2]);

  const bool ts_improves = exp.mean_ts >= exp.mean_kd_pa;
  const bool full_holds = exp.mean_full >= exp.mean_ts - 0.002;
  const bool median_ok = median >= 0.0;
  const bool in_time = seconds < 900.0;
  report(7, "desk-scale directional experiment (4 seeds, 60 epochs)",
         ts_improves && full_holds && median_ok && in_time,
         "teacher val " + fmt(exp.teacher_val_top1) + ", swap rate " +
             fmt(exp.teacher_train_swap_rate) + "; mean kd_pa " + fmt(exp.mean_kd_pa) +
             ", +l_ts " + fmt(exp.mean_ts) + ", full " + fmt(exp.mean_full) +
             ", median(full-ts) " + fmt(median) + ", runtime " + fmt(seconds) + "s < 900s",
         seconds);
}

void criterion_8(const desk_experiment& exp) {
  stopwatch sw;
  const auto [train, val] = sld::load_dataset(exp.distill_cfg.dataset);
  const auto teacher = sld::load_checkpoint(exp.teacher_ckpt);
  const sld::logit_batch tea_logits(sld::forward_all(teacher.m, val.features));
  int wins = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : exp.seeds) {
    // "KD" is the classic single-temperature baseline, as in the
    // correlation table being mirrored.
    const auto kd = sld::load_checkpoint(exp.vanilla_kd_dir /
                                         ("student_seed" + std::to_string(seed) + ".ckpt"));
    const auto full = sld::load_checkpoint(exp.grid_dir / "full" /
                                           ("student_seed" + std::to_string(seed) + ".ckpt"));
    const auto d_kd = sld::correlation_diff(
        sld::logit_batch(sld::forward_all(kd.m, val.features)), tea_logits);
    const auto d_full = sld::correlation_diff(
        sld::logit_batch(sld::forward_all(full.m, val.features)), tea_logits);
    if (d_full.mean_abs <= d_kd.mean_abs) ++wins;
    detail << " s" << seed << ": " << fmt(d_full.mean_abs) << (d_full.mean_abs <= d_kd.mean_abs ? " <= " : " > ")
           << fmt(d_kd.mean_abs) << ";";
  }
  report(8, "correlation-matrix analog: mean_abs(SLD) <= mean_abs(KD) in >= 3 of 4 seeds",
         wins >= 3, std::to_string(wins) + "/4 seeds" + detail.str(), sw.seconds());
}

// ---------------------------------------------------------------------------
// criterion 9: byte-identical metric reproduction
// ---------------------------------------------------------------------------

std::string metrics_without_walltime(const fs::path& report_path) {
  std::ifstream is(report_path);
  std::string line, out;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    j.erase("wall_time_sec");
    out += j.dump() + "\n";
  }
  return out;
}

std::string file_text(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void criterion_9(const fs::path& work) {
  stopwatch sw;
  const std::string data_block = synth_block(6, 64, 2.0, 100, 50, 31);
  std::ostringstream cfg_text;
  cfg_text << data_block << R"(
[teacher]
hidden = [48]

[student]
hidden = [10]

[schedule]
epochs = 6
batch_size = 32
lr0 = 0.05
decay_epochs = [3]

[run]
output_dir = ")" << (work / "det_teacher").string()
           << R"("
seeds = [1]
)";
  auto cfg = parse_cfg(cfg_text.str());
  const auto teacher1 = sld::run_train_teacher(cfg);
  const std::string teacher_metrics = metrics_without_walltime(teacher1.report_path);
  fs::rename(work / "det_teacher", work / "det_teacher_1");
  const auto teacher2 = sld::run_train_teacher(cfg);
  const bool teacher_ok = metrics_without_walltime(teacher2.report_path) == teacher_metrics;

  auto dcfg = cfg;
  dcfg.teacher_checkpoint = teacher2.checkpoint_path.string();
  dcfg.output_dir = (work / "det_students").string();
  const auto run1 = sld::run_distill(dcfg);
  const std::string distill_metrics =
      metrics_without_walltime(work / "det_students" / "report_seed1.jsonl");
  const std::string agg1 = file_text(work / "det_students" / "aggregate.csv");
  (void)sld::run_analyze(work / "det_students");
  const std::string corr1 = file_text(work / "det_students" / "analysis" / "correlation_diff.csv");
  fs::rename(work / "det_students", work / "det_students_1");
  const auto run2 = sld::run_distill(dcfg);
  (void)sld::run_analyze(work / "det_students");
  const bool distill_ok =
      metrics_without_walltime(work / "det_students" / "report_seed1.jsonl") == distill_metrics;
  const bool agg_ok = file_text(work / "det_students" / "aggregate.csv") == agg1;
  const bool analyze_ok =
      file_text(work / "det_students" / "analysis" / "correlation_diff.csv") == corr1;
  (void)run1;
  (void)run2;
  report(9, "determinism: rerun reproduces every reported metric byte-identically",
         teacher_ok && distill_ok && agg_ok && analyze_ok,
         std::string("train-teacher ") + (teacher_ok ? "ok" : "DIFFERS") + ", distill " +
             (distill_ok ? "ok" : "DIFFERS") + ", aggregate " + (agg_ok ? "ok" : "DIFFERS") +
             ", analyze " + (analyze_ok ? "ok" : "DIFFERS"),
         sw.seconds());
}

// ---------------------------------------------------------------------------
// criterion 10: scheme transforms exact + schemes preset completes
// ---------------------------------------------------------------------------

void criterion_10(const desk_experiment& exp, const fs::path& work) {
  stopwatch sw;
  bool exact = true;
  {
    sld::scheme_params p;  // eps 0.1, w 0.1, n 2
    Vector z(3);
    z << 2.0, 5.0, 1.0;
    Vector want(3);
    want << 4.0, 5.0, 1.0;
    exact = exact && (sld::scale_ground_truth(z, 0, sld::gt_scheme::ega, p) - want).cwiseAbs().maxCoeff() == 0.0;
    want << 1.0, 5.0, 1.0;
    exact = exact && (sld::scale_ground_truth(z, 0, sld::gt_scheme::egr, p) - want).cwiseAbs().maxCoeff() == 0.0;
    want << 2.2, 5.0, 1.0;
    exact = exact && (sld::scale_ground_truth(z, 0, sld::gt_scheme::ga, p) - want).cwiseAbs().maxCoeff() == 0.0;
    want << 5.5, 5.0, 1.0;
    exact = exact && (sld::scale_ground_truth(z, 0, sld::gt_scheme::ma, p) - want).cwiseAbs().maxCoeff() == 0.0;
    const Vector lsr = sld::label_smoothing_target(0, p, 100);
    exact = exact && lsr[0] == 0.9 && lsr[1] == 0.1 / 100.0;
  }

  auto cfg = exp.distill_cfg;
  cfg.output_dir = (work / "schemes_grid").string();
  cfg.seeds = {1, 2};
  const auto grid = sld::run_ablate(cfg, "schemes", /*jobs=*/1);
  bool complete = grid.cell_names.size() == 7;
  for (const auto& name : grid.cell_names)
    complete = complete && fs::exists(grid.dir / name / "aggregate.csv");
  const double secs = sw.seconds();
  std::ostringstream detail;
  detail << (exact ? "transforms exact" : "TRANSFORM MISMATCH") << "; "
         << grid.cell_names.size() << " cells in " << fmt(secs) << "s < 1800s:";
  for (std::size_t i = 0; i < grid.cell_names.size(); ++i)
    detail << " " << grid.cell_names[i] << "=" << fmt(grid.cells[i].mean_final_val_top1);
  report(10, "scheme suite: closed-form transforms exact, 7-cell grid completes",
         exact && complete && secs < 1800.0, detail.str(), secs);
}

}  // namespace

int main() {
  std::cout << "swapped-logit distillation acceptance suite\n";
  const fs::path work = fs::current_path() / "acceptance_work";
  workdir wd(work);

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4(work);
  criterion_5();
  criterion_6();

  stopwatch exp_timer;
  const desk_experiment exp = run_desk_experiment(work);
  const double exp_seconds = exp_timer.seconds();
  criterion_7(exp, exp_seconds);
  criterion_8(exp);
  criterion_9(work);
  criterion_10(exp, work);

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(g_failures) + " CRITERIA FAILED")
            << std::endl;
  return g_failures;
}
