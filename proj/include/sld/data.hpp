// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sld/errors.hpp"
#include "sld/numeric.hpp"
#include "sld/rng.hpp"

namespace sld {

struct dataset {
  Matrix features;           // N x D
  std::vector<int> targets;  // N class indices in [0, num_classes)
  int num_classes = 0;
  int image_rows = 0;        // set for image sources (IDX); 0 otherwise
  int image_cols = 0;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

struct labeled_batch {
  Matrix features;
  std::vector<int> targets;
  int num_classes = 0;
};

inline labeled_batch gather(const dataset& ds, const std::vector<int>& indices) {
  labeled_batch b;
  b.num_classes = ds.num_classes;
  b.features.resize(static_cast<Eigen::Index>(indices.size()), ds.features.cols());
  b.targets.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    b.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(indices[i]);
    b.targets.push_back(ds.targets[static_cast<std::size_t>(indices[i])]);
  }
  return b;
}

// ---------------------------------------------------------------------------
// IDX ingestion (big-endian; 0x00000803 image files, 0x00000801 label files).
// Pixels are scaled to [0, 1].
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_be_u32(std::istream& is, std::ptrdiff_t offset, const char* field) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw format_error(std::string("idx: truncated while reading ") + field, offset);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace detail

inline dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, int expected_classes = -1) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw format_error("idx: cannot open images file: " + images_path.string());
  const std::uint32_t img_magic = detail::read_be_u32(img, 0, "images magic");
  if (img_magic != 0x00000803u)
    throw format_error("idx: bad images magic (expected 0x00000803)", 0);
  const std::uint32_t n = detail::read_be_u32(img, 4, "image count");
  const std::uint32_t rows = detail::read_be_u32(img, 8, "image rows");
  const std::uint32_t cols = detail::read_be_u32(img, 12, "image cols");
  if (n == 0) throw format_error("idx: image count is zero", 4);
  if (rows == 0 || cols == 0) throw format_error("idx: zero image dimensions", 8);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw format_error("idx: cannot open labels file: " + labels_path.string());
  const std::uint32_t lab_magic = detail::read_be_u32(lab, 0, "labels magic");
  if (lab_magic != 0x00000801u)
    throw format_error("idx: bad labels magic (expected 0x00000801)", 0);
  const std::uint32_t n_lab = detail::read_be_u32(lab, 4, "label count");
  if (n_lab != n)
    throw format_error("idx: label count " + std::to_string(n_lab) +
                           " does not match image count " + std::to_string(n),
                       4);

  dataset ds;
  ds.image_rows = static_cast<int>(rows);
  ds.image_cols = static_cast<int>(cols);
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  ds.features.resize(n, static_cast<Eigen::Index>(dim));
  std::vector<unsigned char> buf(dim);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim)))
      throw format_error("idx: truncated image data at sample " + std::to_string(i),
                         16 + static_cast<std::ptrdiff_t>(i) * static_cast<std::ptrdiff_t>(dim));
    for (std::size_t j = 0; j < dim; ++j)
      ds.features(i, static_cast<Eigen::Index>(j)) = static_cast<double>(buf[j]) / 255.0;
  }

  std::vector<unsigned char> labels(n);
  if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n)))
    throw format_error("idx: truncated label data", 8);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) max_label = std::max(max_label, static_cast<int>(labels[i]));
  ds.num_classes = expected_classes > 0 ? expected_classes : max_label + 1;
  ds.targets.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(labels[i]);
    if (label >= ds.num_classes)
      throw format_error("idx: label " + std::to_string(label) + " at sample " +
                             std::to_string(i) + " outside [0, " +
                             std::to_string(ds.num_classes) + ")",
                         8 + static_cast<std::ptrdiff_t>(i));
    ds.targets.push_back(label);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// CSV ingestion: header "label,f0,f1,...", one sample per line.
// ---------------------------------------------------------------------------

inline dataset load_csv(const std::filesystem::path& path, int expected_classes = -1) {
  std::ifstream is(path);
  if (!is) throw format_error("csv: cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw format_error("csv: empty file", 0);
  std::size_t dim = 0;
  {
    std::stringstream hs(line);
    std::string col;
    if (!std::getline(hs, col, ',') || col != "label")
      throw format_error("csv: header must start with 'label'", 0);
    while (std::getline(hs, col, ',')) {
      if (col != "f" + std::to_string(dim))
        throw format_error("csv: expected header column f" + std::to_string(dim) + ", got '" +
                           col + "'");
      ++dim;
    }
    if (dim == 0) throw format_error("csv: no feature columns");
  }

  std::vector<double> values;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    if (!std::getline(ls, cell, ','))
      throw format_error("csv: bad row at line " + std::to_string(line_no));
    labels.push_back(std::stoi(cell));
    std::size_t got = 0;
    while (std::getline(ls, cell, ',')) {
      const double v = std::stod(cell);
      if (!std::isfinite(v))
        throw format_error("csv: non-finite feature at line " + std::to_string(line_no));
      values.push_back(v);
      ++got;
    }
    if (got != dim)
      throw format_error("csv: line " + std::to_string(line_no) + " has " + std::to_string(got) +
                         " features, header declares " + std::to_string(dim));
  }
  if (labels.empty()) throw format_error("csv: no data rows");

  dataset ds;
  const auto n = static_cast<Eigen::Index>(labels.size());
  ds.features.resize(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      ds.features(i, static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(i) * dim + j];
  int max_label = 0;
  for (int l : labels) {
    if (l < 0) throw format_error("csv: negative label");
    max_label = std::max(max_label, l);
  }
  ds.num_classes = expected_classes > 0 ? expected_classes : max_label + 1;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= ds.num_classes)
      throw format_error("csv: label " + std::to_string(labels[i]) + " outside [0, " +
                         std::to_string(ds.num_classes) + ")");
  ds.targets = std::move(labels);
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic confusable-class generator: Gaussian clusters, with designated
// class pairs drawn close together so a trained teacher keeps confusing
// them (the failure mode the swap correction targets).
// ---------------------------------------------------------------------------

struct synth_spec {
  int num_classes = 10;
  int dim = 784;
  double cluster_overlap = 0.0;  // larger -> paired centers closer together
  std::vector<std::pair<int, int>> superclass_pairs;
  int samples_per_class = 500;
  int val_samples_per_class = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_classes < 2) throw config_error("dataset.num_classes must be >= 2");
    if (dim < 1) throw config_error("dataset.dim must be >= 1");
    if (cluster_overlap < 0.0) throw config_error("dataset.cluster_overlap must be >= 0");
    if (samples_per_class < 1) throw config_error("dataset.samples_per_class must be >= 1");
    if (val_samples_per_class < 0) throw config_error("dataset.val_samples_per_class must be >= 0");
    for (auto [a, b] : superclass_pairs)
      if (a < 0 || b < 0 || a >= num_classes || b >= num_classes || a == b)
        throw config_error("dataset.superclass_pairs reference invalid classes");
  }
};

namespace detail {

// Distance between paired class centers when cluster_overlap = 0; per-dim
// sample noise is unit, so a pair's one-dimensional separation-to-noise
// ratio is pair_separation / 2 (before the global feature rescale).
constexpr double kPairSeparation = 6.0;

// Samples are rescaled to a dimension-independent norm (about
// kFeatureNorm), so gradient step sizes do not grow with dim.
constexpr double kFeatureNorm = 4.0;

inline Vector gaussian_vector(const counter_rng& rng, int dim, std::uint64_t base) {
  Vector v(dim);
  for (int j = 0; j < dim; ++j)
    v[j] = rng.gaussian(base + static_cast<std::uint64_t>(j));
  return v;
}

}  // namespace detail

inline std::pair<dataset, dataset> generate_confusable(const synth_spec& spec) {
  spec.validate();
  counter_rng center_rng(spec.seed, 1);
  std::vector<Vector> centers;
  centers.reserve(static_cast<std::size_t>(spec.num_classes));
  const auto draws_per_class = static_cast<std::uint64_t>(2 * spec.dim + 16);
  for (int c = 0; c < spec.num_classes; ++c)
    centers.push_back(detail::gaussian_vector(center_rng, spec.dim,
                                              static_cast<std::uint64_t>(c) * draws_per_class));

  // Pull the second class of each pair next to the first; distance shrinks
  // as cluster_overlap grows.
  const double pair_dist = detail::kPairSeparation / (1.0 + spec.cluster_overlap);
  counter_rng dir_rng(spec.seed, 2);
  std::uint64_t dir_base = 0;
  for (auto [a, b] : spec.superclass_pairs) {
    Vector dir = detail::gaussian_vector(dir_rng, spec.dim, dir_base);
    dir_base += draws_per_class;
    dir /= dir.norm();
    centers[static_cast<std::size_t>(b)] = centers[static_cast<std::size_t>(a)] + pair_dist * dir;
  }

  const double feature_scale = detail::kFeatureNorm / std::sqrt(static_cast<double>(spec.dim));
  auto make_split = [&](int per_class, std::uint64_t stream) {
    dataset ds;
    ds.num_classes = spec.num_classes;
    const auto n = static_cast<Eigen::Index>(per_class) * spec.num_classes;
    ds.features.resize(n, spec.dim);
    ds.targets.reserve(static_cast<std::size_t>(n));
    counter_rng rng(spec.seed, stream);
    Eigen::Index row = 0;
    std::uint64_t base = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
      for (int s = 0; s < per_class; ++s) {
        const Vector noise = detail::gaussian_vector(rng, spec.dim, base);
        base += static_cast<std::uint64_t>(spec.dim);
        ds.features.row(row) =
            (feature_scale * (centers[static_cast<std::size_t>(c)] + noise)).transpose();
        ds.targets.push_back(c);
        ++row;
      }
    }
    return ds;
  };

  return {make_split(spec.samples_per_class, 3), make_split(spec.val_samples_per_class, 4)};
}

// ---------------------------------------------------------------------------
// Deterministic batching: every sample appears exactly once per epoch; the
// final partial batch is kept.
// ---------------------------------------------------------------------------

class batch_stream {
public:
  batch_stream(const dataset& ds, int batch_size, std::uint64_t seed, bool shuffle)
      : ds_(&ds) {
    if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
    std::vector<int> order;
    if (shuffle) {
      order = shuffled_indices(ds.size(), seed);
    } else {
      order.resize(static_cast<std::size_t>(ds.size()));
      std::iota(order.begin(), order.end(), 0);
    }
    for (int start = 0; start < ds.size(); start += batch_size) {
      const int end = std::min(start + batch_size, ds.size());
      plan_.emplace_back(order.begin() + start, order.begin() + end);
    }
  }

  std::size_t size() const { return plan_.size(); }
  const std::vector<int>& indices(std::size_t i) const { return plan_[i]; }
  labeled_batch get(std::size_t i) const { return gather(*ds_, plan_[i]); }

private:
  const dataset* ds_;
  std::vector<std::vector<int>> plan_;
};

inline batch_stream batches(const dataset& ds, int batch_size, std::uint64_t seed, bool shuffle) {
  return batch_stream(ds, batch_size, seed, shuffle);
}

// ---------------------------------------------------------------------------
// Light augmentation: horizontal flip and per-pixel jitter, deterministic
// per (key, sample). Only meaningful for image datasets.
// ---------------------------------------------------------------------------

struct augment_config {
  bool hflip = false;
  double jitter = 0.0;

  bool enabled() const { return hflip || jitter > 0.0; }
};

inline void augment_batch(labeled_batch& batch, const std::vector<int>& sample_ids,
                          const augment_config& aug, int image_rows, int image_cols,
                          std::uint64_t key) {
  if (!aug.enabled()) return;
  if (image_rows <= 0 || image_cols <= 0)
    throw config_error("dataset.augment: augmentation requires image-shaped data");
  counter_rng rng(key);
  for (Eigen::Index i = 0; i < batch.features.rows(); ++i) {
    const auto sid = static_cast<std::uint64_t>(sample_ids[static_cast<std::size_t>(i)]);
    const std::uint64_t base = sid * static_cast<std::uint64_t>(image_rows * image_cols + 1);
    if (aug.hflip && rng.uniform(base) < 0.5) {
      for (int r = 0; r < image_rows; ++r)
        for (int c = 0; c < image_cols / 2; ++c)
          std::swap(batch.features(i, r * image_cols + c),
                    batch.features(i, r * image_cols + (image_cols - 1 - c)));
    }
    if (aug.jitter > 0.0) {
      for (int j = 0; j < image_rows * image_cols; ++j) {
        const double noise =
            rng.uniform(base + 1 + static_cast<std::uint64_t>(j), -aug.jitter, aug.jitter);
        batch.features(i, j) = std::clamp(batch.features(i, j) + noise, 0.0, 1.0);
      }
    }
  }
}

}  // namespace sld
