// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sld/data.hpp"
#include "sld/losses.hpp"
#include "sld/model.hpp"
#include "sld/toml.hpp"
#include "sld/trainer.hpp"

namespace sld {

enum class dataset_kind { synthetic, idx, csv };

inline std::string to_string(dataset_kind k) {
  switch (k) {
    case dataset_kind::synthetic: return "synthetic";
    case dataset_kind::idx: return "idx";
    case dataset_kind::csv: return "csv";
  }
  return "?";
}

struct dataset_config {
  dataset_kind kind = dataset_kind::synthetic;
  synth_spec synth;
  std::string train_images, train_labels, val_images, val_labels;  // idx
  std::string train_path, val_path;                                // csv
  int num_classes_hint = -1;  // idx/csv: expected class count, else inferred
  augment_config augment;
};

struct model_entry {
  model_spec::kind_t kind = model_spec::kind_t::mlp;
  std::vector<int> hidden;    // mlp hidden widths
  std::vector<int> channels;  // small_cnn conv channels {c1, c2}
};

struct run_config {
  dataset_config dataset;
  model_entry teacher;
  model_entry student;
  train_schedule schedule;
  distill_config distill;
  std::string teacher_checkpoint;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
};

/// Finalize a model spec once the dataset dimensions are known.
inline model_spec resolve_model_spec(const model_entry& entry, const std::string& which,
                                     int input_dim, int num_classes) {
  model_spec spec;
  spec.kind = entry.kind;
  spec.input_dim = input_dim;
  spec.num_classes = num_classes;
  if (entry.kind == model_spec::kind_t::mlp) {
    if (entry.hidden.empty())
      throw config_error(which + ".hidden must be a non-empty array for kind 'mlp'");
    spec.layer_sizes = entry.hidden;
    spec.layer_sizes.push_back(num_classes);
  } else {
    if (entry.channels.size() != 2)
      throw config_error(which + ".channels must be [c1, c2] for kind 'small_cnn'");
    spec.layer_sizes = {entry.channels[0], entry.channels[1], num_classes};
  }
  spec.validate();
  return spec;
}

/// Load the train/val splits named by the dataset section.
inline std::pair<dataset, dataset> load_dataset(const dataset_config& cfg) {
  switch (cfg.kind) {
    case dataset_kind::synthetic:
      return generate_confusable(cfg.synth);
    case dataset_kind::idx: {
      dataset train = load_idx(cfg.train_images, cfg.train_labels, cfg.num_classes_hint);
      dataset val;
      if (!cfg.val_images.empty()) {
        val = load_idx(cfg.val_images, cfg.val_labels, train.num_classes);
        if (val.dim() != train.dim())
          throw config_error("dataset: train/val feature dimensions differ");
      }
      return {std::move(train), std::move(val)};
    }
    case dataset_kind::csv: {
      dataset train = load_csv(cfg.train_path, cfg.num_classes_hint);
      dataset val;
      if (!cfg.val_path.empty()) {
        val = load_csv(cfg.val_path, train.num_classes);
        if (val.dim() != train.dim())
          throw config_error("dataset: train/val feature dimensions differ");
      }
      return {std::move(train), std::move(val)};
    }
  }
  throw config_error("dataset.kind: unknown kind");
}

namespace detail {

inline void check_known_keys(const std::map<std::string, toml::value>& section,
                             const std::string& name, const std::set<std::string>& allowed) {
  for (const auto& [key, v] : section) {
    if (!allowed.count(key))
      throw config_error("unknown key '" + (name.empty() ? key : name + "." + key) +
                         "' (line " + std::to_string(v.line) + ")");
  }
}

inline const toml::value* find(const toml::table& t, const std::string& section,
                               const std::string& key) {
  auto sit = t.find(section);
  if (sit == t.end()) return nullptr;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

inline std::vector<int> int_list(const toml::value& v, const std::string& key) {
  std::vector<int> out;
  for (const auto& e : v.as_array(key)) out.push_back(static_cast<int>(e.as_int(key)));
  return out;
}

inline std::vector<double> double_list(const toml::value& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& e : v.as_array(key)) out.push_back(e.as_double(key));
  return out;
}

inline model_entry parse_model_entry(const toml::table& t, const std::string& section) {
  model_entry entry;
  if (!t.count(section)) throw config_error("missing [" + section + "] section");
  check_known_keys(t.at(section), section, {"kind", "hidden", "channels"});
  if (const auto* v = find(t, section, "kind"))
    entry.kind = model_kind_from_string(v->as_string(section + ".kind"));
  if (const auto* v = find(t, section, "hidden"))
    entry.hidden = int_list(*v, section + ".hidden");
  if (const auto* v = find(t, section, "channels"))
    entry.channels = int_list(*v, section + ".channels");
  if (entry.kind == model_spec::kind_t::mlp && entry.hidden.empty())
    throw config_error(section + ".hidden is required for kind 'mlp'");
  if (entry.kind == model_spec::kind_t::small_cnn && entry.channels.size() != 2)
    throw config_error(section + ".channels = [c1, c2] is required for kind 'small_cnn'");
  return entry;
}

inline std::int64_t seed_offset_from_env() {
  const char* env = std::getenv("SLD_SEED_OFFSET");
  if (!env || *env == '\0') return 0;
  char* end = nullptr;
  const long long v = std::strtoll(env, &end, 10);
  if (end == env || *end != '\0')
    throw config_error("SLD_SEED_OFFSET must be an integer, got '" + std::string(env) + "'");
  return v;
}

}  // namespace detail

/// Parse and validate a run config. Unknown keys are hard errors. The
/// SLD_SEED_OFFSET environment variable shifts every seed in the config
/// (run seeds and the synthetic-dataset seed) for robustness sweeps.
inline run_config parse_run_config(const toml::table& t) {
  run_config cfg;
  for (const auto& [section, _] : t) {
    static const std::set<std::string> known_sections{"",         "dataset", "teacher",
                                                      "student",  "schedule", "distill",
                                                      "run"};
    if (!known_sections.count(section))
      throw config_error("unknown section [" + section + "]");
  }
  if (t.count("") && !t.at("").empty())
    throw config_error("unknown key '" + t.at("").begin()->first + "' outside any section");

  // [dataset]
  if (!t.count("dataset")) throw config_error("missing [dataset] section");
  const auto& ds = t.at("dataset");
  detail::check_known_keys(
      ds, "dataset",
      {"kind", "num_classes", "dim", "cluster_overlap", "superclass_pairs", "samples_per_class",
       "val_samples_per_class", "seed", "train_images", "train_labels", "val_images",
       "val_labels", "train_path", "val_path", "augment_hflip", "augment_jitter"});
  std::string kind = "synthetic";
  if (const auto* v = detail::find(t, "dataset", "kind")) kind = v->as_string("dataset.kind");
  std::set<std::string> valid_for_kind{"kind", "augment_hflip", "augment_jitter"};
  if (kind == "synthetic") {
    cfg.dataset.kind = dataset_kind::synthetic;
    valid_for_kind.insert({"num_classes", "dim", "cluster_overlap", "superclass_pairs",
                           "samples_per_class", "val_samples_per_class", "seed"});
  } else if (kind == "idx") {
    cfg.dataset.kind = dataset_kind::idx;
    valid_for_kind.insert({"train_images", "train_labels", "val_images", "val_labels",
                           "num_classes"});
  } else if (kind == "csv") {
    cfg.dataset.kind = dataset_kind::csv;
    valid_for_kind.insert({"train_path", "val_path", "num_classes"});
  } else {
    throw config_error("dataset.kind must be one of 'synthetic', 'idx', 'csv'");
  }
  for (const auto& [key, v] : ds)
    if (!valid_for_kind.count(key))
      throw config_error("dataset." + key + " is not valid for kind '" + kind + "' (line " +
                         std::to_string(v.line) + ")");

  if (cfg.dataset.kind == dataset_kind::synthetic) {
    auto& sp = cfg.dataset.synth;
    const auto* nc = detail::find(t, "dataset", "num_classes");
    const auto* dim = detail::find(t, "dataset", "dim");
    const auto* spc = detail::find(t, "dataset", "samples_per_class");
    if (!nc) throw config_error("dataset.num_classes is required for kind 'synthetic'");
    if (!dim) throw config_error("dataset.dim is required for kind 'synthetic'");
    if (!spc) throw config_error("dataset.samples_per_class is required for kind 'synthetic'");
    sp.num_classes = static_cast<int>(nc->as_int("dataset.num_classes"));
    sp.dim = static_cast<int>(dim->as_int("dataset.dim"));
    sp.samples_per_class = static_cast<int>(spc->as_int("dataset.samples_per_class"));
    sp.val_samples_per_class = std::max(1, sp.samples_per_class / 5);
    if (const auto* v = detail::find(t, "dataset", "val_samples_per_class"))
      sp.val_samples_per_class = static_cast<int>(v->as_int("dataset.val_samples_per_class"));
    if (const auto* v = detail::find(t, "dataset", "cluster_overlap"))
      sp.cluster_overlap = v->as_double("dataset.cluster_overlap");
    if (const auto* v = detail::find(t, "dataset", "seed"))
      sp.seed = static_cast<std::uint64_t>(v->as_int("dataset.seed"));
    if (const auto* v = detail::find(t, "dataset", "superclass_pairs")) {
      for (const auto& pair : v->as_array("dataset.superclass_pairs")) {
        const auto& p = pair.as_array("dataset.superclass_pairs");
        if (p.size() != 2)
          throw config_error("dataset.superclass_pairs entries must be [a, b] pairs");
        sp.superclass_pairs.emplace_back(
            static_cast<int>(p[0].as_int("dataset.superclass_pairs")),
            static_cast<int>(p[1].as_int("dataset.superclass_pairs")));
      }
    }
    sp.validate();
  } else if (cfg.dataset.kind == dataset_kind::idx) {
    const auto* ti = detail::find(t, "dataset", "train_images");
    const auto* tl = detail::find(t, "dataset", "train_labels");
    if (!ti || !tl)
      throw config_error("dataset.train_images and dataset.train_labels are required for kind 'idx'");
    cfg.dataset.train_images = ti->as_string("dataset.train_images");
    cfg.dataset.train_labels = tl->as_string("dataset.train_labels");
    if (const auto* v = detail::find(t, "dataset", "val_images"))
      cfg.dataset.val_images = v->as_string("dataset.val_images");
    if (const auto* v = detail::find(t, "dataset", "val_labels"))
      cfg.dataset.val_labels = v->as_string("dataset.val_labels");
    if (cfg.dataset.val_images.empty() != cfg.dataset.val_labels.empty())
      throw config_error("dataset.val_images and dataset.val_labels must be given together");
    if (const auto* v = detail::find(t, "dataset", "num_classes"))
      cfg.dataset.num_classes_hint = static_cast<int>(v->as_int("dataset.num_classes"));
  } else {
    const auto* tp = detail::find(t, "dataset", "train_path");
    if (!tp) throw config_error("dataset.train_path is required for kind 'csv'");
    cfg.dataset.train_path = tp->as_string("dataset.train_path");
    if (const auto* v = detail::find(t, "dataset", "val_path"))
      cfg.dataset.val_path = v->as_string("dataset.val_path");
    if (const auto* v = detail::find(t, "dataset", "num_classes"))
      cfg.dataset.num_classes_hint = static_cast<int>(v->as_int("dataset.num_classes"));
  }
  if (const auto* v = detail::find(t, "dataset", "augment_hflip"))
    cfg.dataset.augment.hflip = v->as_bool("dataset.augment_hflip");
  if (const auto* v = detail::find(t, "dataset", "augment_jitter"))
    cfg.dataset.augment.jitter = v->as_double("dataset.augment_jitter");
  if (cfg.dataset.augment.jitter < 0.0)
    throw config_error("dataset.augment_jitter must be >= 0");

  // [teacher], [student]
  cfg.teacher = detail::parse_model_entry(t, "teacher");
  cfg.student = detail::parse_model_entry(t, "student");

  // [schedule]
  if (t.count("schedule")) {
    detail::check_known_keys(t.at("schedule"), "schedule",
                             {"epochs", "batch_size", "lr0", "lr_decay_factor", "decay_epochs",
                              "momentum", "weight_decay"});
    if (const auto* v = detail::find(t, "schedule", "epochs"))
      cfg.schedule.epochs = static_cast<int>(v->as_int("schedule.epochs"));
    if (const auto* v = detail::find(t, "schedule", "batch_size"))
      cfg.schedule.batch_size = static_cast<int>(v->as_int("schedule.batch_size"));
    if (const auto* v = detail::find(t, "schedule", "lr0"))
      cfg.schedule.lr0 = v->as_double("schedule.lr0");
    if (const auto* v = detail::find(t, "schedule", "lr_decay_factor"))
      cfg.schedule.lr_decay_factor = v->as_double("schedule.lr_decay_factor");
    if (const auto* v = detail::find(t, "schedule", "decay_epochs"))
      cfg.schedule.decay_epochs = detail::int_list(*v, "schedule.decay_epochs");
    if (const auto* v = detail::find(t, "schedule", "momentum"))
      cfg.schedule.momentum = v->as_double("schedule.momentum");
    if (const auto* v = detail::find(t, "schedule", "weight_decay"))
      cfg.schedule.weight_decay = v->as_double("schedule.weight_decay");
  }
  cfg.schedule.validate();

  // [distill]
  cfg.distill.gamma = cfg.schedule.decay_epochs.empty() ? 0 : cfg.schedule.decay_epochs.front();
  if (t.count("distill")) {
    detail::check_known_keys(
        t.at("distill"), "distill",
        {"temps", "gamma", "use_ts", "use_ss", "use_pa", "ce_weight", "t_squared_scaling",
         "swap_depth", "swap_alpha_threshold", "swap_alpha_mode", "detach_pseudo_teacher",
         "teacher_correction", "student_correction", "epsilon", "w", "n", "teacher_checkpoint"});
    if (const auto* v = detail::find(t, "distill", "temps"))
      cfg.distill.temps.temps = detail::double_list(*v, "distill.temps");
    if (const auto* v = detail::find(t, "distill", "gamma"))
      cfg.distill.gamma = static_cast<int>(v->as_int("distill.gamma"));
    if (const auto* v = detail::find(t, "distill", "use_ts"))
      cfg.distill.use_ts = v->as_bool("distill.use_ts");
    if (const auto* v = detail::find(t, "distill", "use_ss"))
      cfg.distill.use_ss = v->as_bool("distill.use_ss");
    if (const auto* v = detail::find(t, "distill", "use_pa"))
      cfg.distill.use_pa = v->as_bool("distill.use_pa");
    if (const auto* v = detail::find(t, "distill", "ce_weight"))
      cfg.distill.ce_weight = v->as_double("distill.ce_weight");
    if (const auto* v = detail::find(t, "distill", "t_squared_scaling"))
      cfg.distill.t_squared_scaling = v->as_bool("distill.t_squared_scaling");
    if (const auto* v = detail::find(t, "distill", "swap_depth"))
      cfg.distill.rule.depth = static_cast<int>(v->as_int("distill.swap_depth"));
    const auto* thr = detail::find(t, "distill", "swap_alpha_threshold");
    const auto* mode = detail::find(t, "distill", "swap_alpha_mode");
    if ((thr == nullptr) != (mode == nullptr))
      throw config_error(
          "distill.swap_alpha_threshold and distill.swap_alpha_mode must be given together");
    if (thr) {
      conditional_swap_rule rule;
      rule.alpha_threshold = thr->as_double("distill.swap_alpha_threshold");
      const auto& m = mode->as_string("distill.swap_alpha_mode");
      if (m == "less_than") rule.mode = conditional_swap_rule::mode_t::less_than;
      else if (m == "more_than") rule.mode = conditional_swap_rule::mode_t::more_than;
      else throw config_error("distill.swap_alpha_mode must be 'less_than' or 'more_than'");
      if (rule.alpha_threshold < 0.0 || rule.alpha_threshold > 1.0)
        throw config_error("distill.swap_alpha_threshold must be in [0, 1]");
      cfg.distill.rule.condition = rule;
    }
    if (const auto* v = detail::find(t, "distill", "detach_pseudo_teacher"))
      cfg.distill.detach_pseudo_teacher = v->as_bool("distill.detach_pseudo_teacher");
    if (const auto* v = detail::find(t, "distill", "teacher_correction"))
      cfg.distill.teacher_correction = correction_from_string(v->as_string("distill.teacher_correction"));
    if (const auto* v = detail::find(t, "distill", "student_correction"))
      cfg.distill.student_correction = correction_from_string(v->as_string("distill.student_correction"));
    if (const auto* v = detail::find(t, "distill", "epsilon"))
      cfg.distill.scheme.epsilon = v->as_double("distill.epsilon");
    if (const auto* v = detail::find(t, "distill", "w"))
      cfg.distill.scheme.w = v->as_double("distill.w");
    if (const auto* v = detail::find(t, "distill", "n"))
      cfg.distill.scheme.n = v->as_double("distill.n");
    if (const auto* v = detail::find(t, "distill", "teacher_checkpoint"))
      cfg.teacher_checkpoint = v->as_string("distill.teacher_checkpoint");
  }
  cfg.distill.validate();

  // [run]
  if (!t.count("run")) throw config_error("missing [run] section");
  detail::check_known_keys(t.at("run"), "run", {"output_dir", "seeds"});
  const auto* od = detail::find(t, "run", "output_dir");
  if (!od) throw config_error("run.output_dir is required");
  cfg.output_dir = od->as_string("run.output_dir");
  const auto* seeds = detail::find(t, "run", "seeds");
  if (!seeds) throw config_error("run.seeds is required");
  for (const auto& s : seeds->as_array("run.seeds"))
    cfg.seeds.push_back(static_cast<std::uint64_t>(s.as_int("run.seeds")));
  if (cfg.seeds.empty()) throw config_error("run.seeds must be non-empty");

  const std::int64_t offset = detail::seed_offset_from_env();
  if (offset != 0) {
    for (auto& s : cfg.seeds) s = static_cast<std::uint64_t>(static_cast<std::int64_t>(s) + offset);
    cfg.dataset.synth.seed =
        static_cast<std::uint64_t>(static_cast<std::int64_t>(cfg.dataset.synth.seed) + offset);
  }
  return cfg;
}

inline run_config load_run_config(const std::filesystem::path& path) {
  return parse_run_config(toml::parse_file(path));
}

/// File-existence checks performed at command start; exit code 2 territory.
inline void validate_input_files(const run_config& cfg, bool needs_teacher_checkpoint) {
  namespace fs = std::filesystem;
  if (cfg.dataset.kind == dataset_kind::idx) {
    for (const auto& [field, path] :
         {std::pair{"dataset.train_images", cfg.dataset.train_images},
          std::pair{"dataset.train_labels", cfg.dataset.train_labels},
          std::pair{"dataset.val_images", cfg.dataset.val_images},
          std::pair{"dataset.val_labels", cfg.dataset.val_labels}}) {
      if (!path.empty() && !fs::exists(path))
        throw config_error(std::string(field) + ": file does not exist: " + path);
    }
  }
  if (cfg.dataset.kind == dataset_kind::csv) {
    for (const auto& [field, path] : {std::pair{"dataset.train_path", cfg.dataset.train_path},
                                      std::pair{"dataset.val_path", cfg.dataset.val_path}}) {
      if (!path.empty() && !fs::exists(path))
        throw config_error(std::string(field) + ": file does not exist: " + path);
    }
  }
  if (needs_teacher_checkpoint) {
    if (cfg.teacher_checkpoint.empty())
      throw config_error("distill.teacher_checkpoint is required for this command");
    if (!fs::exists(cfg.teacher_checkpoint))
      throw config_error("distill.teacher_checkpoint: file does not exist: " +
                         cfg.teacher_checkpoint);
  }
}

/// Canonical serialization of the fully defaulted config; written into
/// every run directory so results are re-derivable. Byte-stable.
inline std::string write_resolved_toml(const run_config& cfg) {
  std::ostringstream os;
  auto ints = [](const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
  };
  os << "[dataset]\n";
  os << "kind = \"" << to_string(cfg.dataset.kind) << "\"\n";
  if (cfg.dataset.kind == dataset_kind::synthetic) {
    const auto& sp = cfg.dataset.synth;
    os << "num_classes = " << sp.num_classes << "\n";
    os << "dim = " << sp.dim << "\n";
    os << "cluster_overlap = " << toml::format_float(sp.cluster_overlap) << "\n";
    os << "superclass_pairs = [";
    for (std::size_t i = 0; i < sp.superclass_pairs.size(); ++i)
      os << (i ? ", " : "") << "[" << sp.superclass_pairs[i].first << ", "
         << sp.superclass_pairs[i].second << "]";
    os << "]\n";
    os << "samples_per_class = " << sp.samples_per_class << "\n";
    os << "val_samples_per_class = " << sp.val_samples_per_class << "\n";
    os << "seed = " << sp.seed << "\n";
  } else if (cfg.dataset.kind == dataset_kind::idx) {
    os << "train_images = \"" << cfg.dataset.train_images << "\"\n";
    os << "train_labels = \"" << cfg.dataset.train_labels << "\"\n";
    if (!cfg.dataset.val_images.empty()) {
      os << "val_images = \"" << cfg.dataset.val_images << "\"\n";
      os << "val_labels = \"" << cfg.dataset.val_labels << "\"\n";
    }
    if (cfg.dataset.num_classes_hint > 0)
      os << "num_classes = " << cfg.dataset.num_classes_hint << "\n";
  } else {
    os << "train_path = \"" << cfg.dataset.train_path << "\"\n";
    if (!cfg.dataset.val_path.empty()) os << "val_path = \"" << cfg.dataset.val_path << "\"\n";
    if (cfg.dataset.num_classes_hint > 0)
      os << "num_classes = " << cfg.dataset.num_classes_hint << "\n";
  }
  os << "augment_hflip = " << (cfg.dataset.augment.hflip ? "true" : "false") << "\n";
  os << "augment_jitter = " << toml::format_float(cfg.dataset.augment.jitter) << "\n";

  for (const auto& [name, entry] : {std::pair{"teacher", cfg.teacher},
                                    std::pair{"student", cfg.student}}) {
    os << "\n[" << name << "]\n";
    os << "kind = \"" << to_string(entry.kind) << "\"\n";
    if (entry.kind == model_spec::kind_t::mlp) os << "hidden = " << ints(entry.hidden) << "\n";
    else os << "channels = " << ints(entry.channels) << "\n";
  }

  os << "\n[schedule]\n";
  os << "epochs = " << cfg.schedule.epochs << "\n";
  os << "batch_size = " << cfg.schedule.batch_size << "\n";
  os << "lr0 = " << toml::format_float(cfg.schedule.lr0) << "\n";
  os << "lr_decay_factor = " << toml::format_float(cfg.schedule.lr_decay_factor) << "\n";
  os << "decay_epochs = " << ints(cfg.schedule.decay_epochs) << "\n";
  os << "momentum = " << toml::format_float(cfg.schedule.momentum) << "\n";
  os << "weight_decay = " << toml::format_float(cfg.schedule.weight_decay) << "\n";

  os << "\n[distill]\n";
  os << "temps = [";
  for (std::size_t i = 0; i < cfg.distill.temps.temps.size(); ++i)
    os << (i ? ", " : "") << toml::format_float(cfg.distill.temps.temps[i]);
  os << "]\n";
  os << "gamma = " << cfg.distill.gamma << "\n";
  os << "use_ts = " << (cfg.distill.use_ts ? "true" : "false") << "\n";
  os << "use_ss = " << (cfg.distill.use_ss ? "true" : "false") << "\n";
  os << "use_pa = " << (cfg.distill.use_pa ? "true" : "false") << "\n";
  os << "ce_weight = " << toml::format_float(cfg.distill.ce_weight) << "\n";
  os << "t_squared_scaling = " << (cfg.distill.t_squared_scaling ? "true" : "false") << "\n";
  os << "swap_depth = " << cfg.distill.rule.depth << "\n";
  if (cfg.distill.rule.condition) {
    os << "swap_alpha_threshold = " << toml::format_float(cfg.distill.rule.condition->alpha_threshold)
       << "\n";
    os << "swap_alpha_mode = \""
       << (cfg.distill.rule.condition->mode == conditional_swap_rule::mode_t::less_than
               ? "less_than"
               : "more_than")
       << "\"\n";
  }
  os << "detach_pseudo_teacher = " << (cfg.distill.detach_pseudo_teacher ? "true" : "false")
     << "\n";
  os << "teacher_correction = \"" << to_string(cfg.distill.teacher_correction) << "\"\n";
  os << "student_correction = \"" << to_string(cfg.distill.student_correction) << "\"\n";
  os << "epsilon = " << toml::format_float(cfg.distill.scheme.epsilon) << "\n";
  os << "w = " << toml::format_float(cfg.distill.scheme.w) << "\n";
  os << "n = " << toml::format_float(cfg.distill.scheme.n) << "\n";
  if (!cfg.teacher_checkpoint.empty())
    os << "teacher_checkpoint = \"" << cfg.teacher_checkpoint << "\"\n";

  os << "\n[run]\n";
  os << "output_dir = \"" << cfg.output_dir << "\"\n";
  os << "seeds = [";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) os << (i ? ", " : "") << cfg.seeds[i];
  os << "]\n";
  return os.str();
}

}  // namespace sld
