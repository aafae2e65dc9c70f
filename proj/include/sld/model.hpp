// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sld/errors.hpp"
#include "sld/numeric.hpp"
#include "sld/rng.hpp"

namespace sld {

/// Round to the nearest float32-representable value. Parameters live on
/// the f32 grid so checkpoints (stored as f32) round-trip bit-exactly,
/// while all arithmetic stays in double.
inline double quantize_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

inline Matrix quantize_f32(const Matrix& m) {
  return m.unaryExpr([](double x) { return quantize_f32(x); });
}
inline Vector quantize_f32(const Vector& v) {
  return v.unaryExpr([](double x) { return quantize_f32(x); });
}

struct model_spec {
  enum class kind_t { mlp, small_cnn };
  kind_t kind = kind_t::mlp;
  std::vector<int> layer_sizes;  // mlp: hidden widths then C; small_cnn: {c1, c2, C}
  int input_dim = 0;
  int num_classes = 0;
  std::string activation = "relu";

  void validate() const {
    if (input_dim < 1) throw config_error("model_spec.input_dim must be >= 1");
    if (num_classes < 2) throw config_error("model_spec.num_classes must be >= 2");
    if (layer_sizes.empty()) throw config_error("model_spec.layer_sizes must be non-empty");
    for (int w : layer_sizes)
      if (w < 1) throw config_error("model_spec.layer_sizes entries must be >= 1");
    if (layer_sizes.back() != num_classes)
      throw config_error("model_spec: last layer width must equal num_classes");
    if (activation != "relu") throw config_error("model_spec.activation must be 'relu'");
    if (kind == kind_t::small_cnn) {
      if (layer_sizes.size() != 3)
        throw config_error("model_spec: small_cnn expects layer_sizes {c1, c2, num_classes}");
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(input_dim))));
      if (side * side != input_dim || side % 4 != 0)
        throw config_error("model_spec: small_cnn input_dim must be a square of a multiple of 4");
    }
  }

  int image_side() const {
    return static_cast<int>(std::lround(std::sqrt(static_cast<double>(input_dim))));
  }
};

inline std::string to_string(model_spec::kind_t k) {
  return k == model_spec::kind_t::mlp ? "mlp" : "small_cnn";
}
inline model_spec::kind_t model_kind_from_string(const std::string& s) {
  if (s == "mlp") return model_spec::kind_t::mlp;
  if (s == "small_cnn") return model_spec::kind_t::small_cnn;
  throw config_error("unknown model kind '" + s + "'");
}

/// Shapes of the weighted layers implied by a spec, as {rows, cols} of the
/// weight matrix plus the bias length (== cols for mlp/fc, == rows for conv).
struct layer_shape {
  int w_rows, w_cols, b_len;
};

inline std::vector<layer_shape> layer_shapes(const model_spec& spec) {
  std::vector<layer_shape> shapes;
  if (spec.kind == model_spec::kind_t::mlp) {
    int in = spec.input_dim;
    for (int width : spec.layer_sizes) {
      shapes.push_back({in, width, width});
      in = width;
    }
  } else {
    const int c1 = spec.layer_sizes[0], c2 = spec.layer_sizes[1];
    const int side = spec.image_side();
    const int flat = c2 * (side / 4) * (side / 4);
    shapes.push_back({c1, 9, c1});        // conv1: 1 input channel, 3x3
    shapes.push_back({c2, c1 * 9, c2});   // conv2
    shapes.push_back({flat, spec.num_classes, spec.num_classes});
  }
  return shapes;
}

struct model {
  model_spec spec;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Fan-in-scaled uniform weight init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// from a counter-based PRNG; biases start at zero (a random negative bias
/// can leave a narrow relu net dead on all-positive inputs). Identical
/// (spec, seed) gives identical parameters.
inline model init_params(const model_spec& spec, std::uint64_t seed) {
  spec.validate();
  model m{spec, {}, {}};
  const auto shapes = layer_shapes(spec);
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    int fan_in = shapes[l].w_cols;
    if (spec.kind == model_spec::kind_t::mlp || l == shapes.size() - 1)
      fan_in = shapes[l].w_rows;  // mlp/fc weights are (in x out)
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    counter_rng wrng(seed, 2 * l);
    Matrix W(shapes[l].w_rows, shapes[l].w_cols);
    std::uint64_t c = 0;
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        W(r, j) = quantize_f32(wrng.uniform(c++, -bound, bound));
    m.weights.push_back(std::move(W));
    m.biases.push_back(Vector::Zero(shapes[l].b_len));
  }
  return m;
}

/// Forward values recorded for the backward pass. A tape is single-use.
struct gradient_tape {
  std::vector<Matrix> inputs;              // input to each weighted layer
  std::vector<Matrix> relu_masks;          // 0/1 masks where relu was applied
  std::vector<Eigen::MatrixXi> pool_src;   // cnn: source flat index per pooled cell
  bool recorded = false;
  bool consumed = false;
};

namespace detail {

// Channel-major flat layout per sample: index(c, y, x) = (c*H + y)*W + x.

inline void conv3x3_forward(const Matrix& in, int c_in, int side, const Matrix& W,
                            const Vector& b, Matrix& out) {
  const Eigen::Index B = in.rows();
  const int c_out = static_cast<int>(W.rows());
  out.setZero(B, static_cast<Eigen::Index>(c_out) * side * side);
  for (Eigen::Index s = 0; s < B; ++s) {
    for (int f = 0; f < c_out; ++f) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          double acc = b[f];
          for (int ci = 0; ci < c_in; ++ci) {
            for (int ki = 0; ki < 3; ++ki) {
              const int yy = y + ki - 1;
              if (yy < 0 || yy >= side) continue;
              for (int kj = 0; kj < 3; ++kj) {
                const int xx = x + kj - 1;
                if (xx < 0 || xx >= side) continue;
                acc += W(f, ci * 9 + ki * 3 + kj) * in(s, (ci * side + yy) * side + xx);
              }
            }
          }
          out(s, (f * side + y) * side + x) = acc;
        }
      }
    }
  }
}

inline void conv3x3_backward(const Matrix& in, int c_in, int side, const Matrix& W,
                             const Matrix& d_out, Matrix& dW, Vector& db, Matrix* d_in) {
  const Eigen::Index B = in.rows();
  const int c_out = static_cast<int>(W.rows());
  dW.setZero(W.rows(), W.cols());
  db.setZero(c_out);
  if (d_in) d_in->setZero(in.rows(), in.cols());
  for (Eigen::Index s = 0; s < B; ++s) {
    for (int f = 0; f < c_out; ++f) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          const double g = d_out(s, (f * side + y) * side + x);
          if (g == 0.0) continue;
          db[f] += g;
          for (int ci = 0; ci < c_in; ++ci) {
            for (int ki = 0; ki < 3; ++ki) {
              const int yy = y + ki - 1;
              if (yy < 0 || yy >= side) continue;
              for (int kj = 0; kj < 3; ++kj) {
                const int xx = x + kj - 1;
                if (xx < 0 || xx >= side) continue;
                dW(f, ci * 9 + ki * 3 + kj) += g * in(s, (ci * side + yy) * side + xx);
                if (d_in) (*d_in)(s, (ci * side + yy) * side + xx) += g * W(f, ci * 9 + ki * 3 + kj);
              }
            }
          }
        }
      }
    }
  }
}

// 2x2 max pool, stride 2; ties resolve to the first cell in scan order.
inline void maxpool2_forward(const Matrix& in, int channels, int side, Matrix& out,
                             Eigen::MatrixXi& src) {
  const Eigen::Index B = in.rows();
  const int half = side / 2;
  out.resize(B, static_cast<Eigen::Index>(channels) * half * half);
  src.resize(B, out.cols());
  for (Eigen::Index s = 0; s < B; ++s) {
    for (int c = 0; c < channels; ++c) {
      for (int y = 0; y < half; ++y) {
        for (int x = 0; x < half; ++x) {
          int best = (c * side + 2 * y) * side + 2 * x;
          double bv = in(s, best);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = (c * side + 2 * y + dy) * side + 2 * x + dx;
              if (in(s, idx) > bv) {
                bv = in(s, idx);
                best = idx;
              }
            }
          }
          const Eigen::Index o = (c * half + y) * half + x;
          out(s, o) = bv;
          src(s, o) = best;
        }
      }
    }
  }
}

inline void maxpool2_backward(const Matrix& d_out, const Eigen::MatrixXi& src,
                              Eigen::Index in_cols, Matrix& d_in) {
  d_in.setZero(d_out.rows(), in_cols);
  for (Eigen::Index s = 0; s < d_out.rows(); ++s)
    for (Eigen::Index j = 0; j < d_out.cols(); ++j)
      d_in(s, src(s, j)) += d_out(s, j);
}

}  // namespace detail

/// Forward pass producing logits (no softmax). When a tape is supplied the
/// values needed for an exact backward pass are recorded.
inline Matrix forward(const model& m, const Matrix& batch, gradient_tape* tape = nullptr) {
  if (batch.cols() != m.spec.input_dim)
    throw shape_error("forward: batch feature dim " + std::to_string(batch.cols()) +
                      " != input_dim " + std::to_string(m.spec.input_dim));
  if (tape) {
    *tape = gradient_tape{};
    tape->recorded = true;
  }
  if (m.spec.kind == model_spec::kind_t::mlp) {
    Matrix h = batch;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      if (tape) tape->inputs.push_back(h);
      Matrix a = h * m.weights[l];
      a.rowwise() += m.biases[l].transpose();
      if (l + 1 < m.weights.size()) {
        Matrix mask = (a.array() > 0.0).cast<double>();
        if (tape) tape->relu_masks.push_back(mask);
        h = a.cwiseProduct(mask);
      } else {
        h = std::move(a);
      }
    }
    return h;
  }

  const int side = m.spec.image_side();
  const int c1 = m.spec.layer_sizes[0], c2 = m.spec.layer_sizes[1];
  Matrix a1, p1, a2, p2;
  Eigen::MatrixXi src1, src2;
  detail::conv3x3_forward(batch, 1, side, m.weights[0], m.biases[0], a1);
  Matrix mask1 = (a1.array() > 0.0).cast<double>();
  Matrix h1 = a1.cwiseProduct(mask1);
  detail::maxpool2_forward(h1, c1, side, p1, src1);
  detail::conv3x3_forward(p1, c1, side / 2, m.weights[1], m.biases[1], a2);
  Matrix mask2 = (a2.array() > 0.0).cast<double>();
  Matrix h2 = a2.cwiseProduct(mask2);
  detail::maxpool2_forward(h2, c2, side / 2, p2, src2);
  Matrix logits = p2 * m.weights[2];
  logits.rowwise() += m.biases[2].transpose();
  if (tape) {
    tape->inputs = {batch, p1, p2};
    tape->relu_masks = {std::move(mask1), std::move(mask2)};
    tape->pool_src = {std::move(src1), std::move(src2)};
  }
  return logits;
}

struct model_grads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Exact reverse-mode gradients of a scalar loss with upstream d_logits.
/// Consumes the tape; a second call on the same tape is a usage error.
inline model_grads backward(const model& m, gradient_tape& tape, const Matrix& d_logits,
                            Matrix* d_input = nullptr) {
  if (!tape.recorded) throw std::logic_error("backward: tape has no recorded forward pass");
  if (tape.consumed) throw std::logic_error("backward: tape already consumed");
  tape.consumed = true;

  model_grads g;
  g.weights.resize(m.weights.size());
  g.biases.resize(m.biases.size());

  if (m.spec.kind == model_spec::kind_t::mlp) {
    Matrix d = d_logits;
    for (std::size_t l = m.weights.size(); l-- > 0;) {
      g.weights[l] = tape.inputs[l].transpose() * d;
      g.biases[l] = d.colwise().sum().transpose();
      if (l > 0 || d_input) {
        Matrix dh = d * m.weights[l].transpose();
        if (l > 0) {
          d = dh.cwiseProduct(tape.relu_masks[l - 1]);
        } else if (d_input) {
          *d_input = std::move(dh);
        }
      }
    }
    return g;
  }

  const int side = m.spec.image_side();
  const int c1 = m.spec.layer_sizes[0];
  // fc
  g.weights[2] = tape.inputs[2].transpose() * d_logits;
  g.biases[2] = d_logits.colwise().sum().transpose();
  Matrix d_p2 = d_logits * m.weights[2].transpose();
  // pool2 + relu2 + conv2
  Matrix d_h2;
  detail::maxpool2_backward(d_p2, tape.pool_src[1], tape.relu_masks[1].cols(), d_h2);
  Matrix d_a2 = d_h2.cwiseProduct(tape.relu_masks[1]);
  Matrix d_p1;
  detail::conv3x3_backward(tape.inputs[1], c1, side / 2, m.weights[1], d_a2, g.weights[1],
                           g.biases[1], &d_p1);
  // pool1 + relu1 + conv1
  Matrix d_h1;
  detail::maxpool2_backward(d_p1, tape.pool_src[0], tape.relu_masks[0].cols(), d_h1);
  Matrix d_a1 = d_h1.cwiseProduct(tape.relu_masks[0]);
  detail::conv3x3_backward(tape.inputs[0], 1, side, m.weights[0], d_a1, g.weights[0],
                           g.biases[0], d_input);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoint persistence. Little-endian binary:
//   "SLDC" | u32 format_version | u32 meta_len | meta (UTF-8 JSON) |
//   per-layer f32 arrays, each u32 count + count floats (row-major),
//   ordered W0, b0, W1, b1, ...; velocity arrays follow in the same order
//   when the metadata says they are present.
// ---------------------------------------------------------------------------

constexpr std::uint32_t kCheckpointVersion = 1;

struct checkpoint {
  model m;
  std::uint64_t seed = 0;
  int epoch = 0;
  bool has_velocity = false;
  std::vector<Matrix> vel_weights;
  std::vector<Vector> vel_biases;
};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is, std::ptrdiff_t offset, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw format_error(std::string("checkpoint: truncated while reading ") + what, offset);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32_matrix(std::ostream& os, const Matrix& m) {
  write_u32(os, static_cast<std::uint32_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float f = static_cast<float>(m(r, c));
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
}

inline Matrix read_f32_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols,
                              const char* what) {
  const auto offset = static_cast<std::ptrdiff_t>(is.tellg());
  const std::uint32_t n = read_u32(is, offset, what);
  if (n != static_cast<std::uint32_t>(rows * cols))
    throw format_error(std::string("checkpoint: array size mismatch for ") + what, offset);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto pos = static_cast<std::ptrdiff_t>(is.tellg());
      float f;
      if (!is.read(reinterpret_cast<char*>(&f), 4))
        throw format_error(std::string("checkpoint: truncated array ") + what, pos);
      m(r, c) = static_cast<double>(f);
    }
  return m;
}

}  // namespace detail

inline void save_checkpoint(const checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("checkpoint: cannot open for writing: " + path.string());
  os.write("SLDC", 4);
  detail::write_u32(os, kCheckpointVersion);

  nlohmann::json meta;
  meta["kind"] = to_string(ckpt.m.spec.kind);
  meta["layer_sizes"] = ckpt.m.spec.layer_sizes;
  meta["input_dim"] = ckpt.m.spec.input_dim;
  meta["num_classes"] = ckpt.m.spec.num_classes;
  meta["activation"] = ckpt.m.spec.activation;
  meta["seed"] = ckpt.seed;
  meta["epoch"] = ckpt.epoch;
  meta["has_velocity"] = ckpt.has_velocity;
  const std::string meta_str = meta.dump();
  detail::write_u32(os, static_cast<std::uint32_t>(meta_str.size()));
  os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  for (std::size_t l = 0; l < ckpt.m.weights.size(); ++l) {
    detail::write_f32_matrix(os, ckpt.m.weights[l]);
    detail::write_f32_matrix(os, Matrix(ckpt.m.biases[l].transpose()));
  }
  if (ckpt.has_velocity) {
    for (std::size_t l = 0; l < ckpt.vel_weights.size(); ++l) {
      detail::write_f32_matrix(os, ckpt.vel_weights[l]);
      detail::write_f32_matrix(os, Matrix(ckpt.vel_biases[l].transpose()));
    }
  }
  if (!os) throw format_error("checkpoint: write failed: " + path.string());
}

inline checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("checkpoint: cannot open: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SLDC", 4) != 0)
    throw format_error("checkpoint: bad magic", 0);
  const std::uint32_t version = detail::read_u32(is, 4, "format_version");
  if (version != kCheckpointVersion)
    throw format_error("checkpoint: unsupported format_version " + std::to_string(version), 4);
  const std::uint32_t meta_len = detail::read_u32(is, 8, "meta length");
  std::string meta_str(meta_len, '\0');
  if (!is.read(meta_str.data(), meta_len))
    throw format_error("checkpoint: truncated metadata", 12);

  checkpoint ckpt;
  try {
    const auto meta = nlohmann::json::parse(meta_str);
    ckpt.m.spec.kind = model_kind_from_string(meta.at("kind").get<std::string>());
    ckpt.m.spec.layer_sizes = meta.at("layer_sizes").get<std::vector<int>>();
    ckpt.m.spec.input_dim = meta.at("input_dim").get<int>();
    ckpt.m.spec.num_classes = meta.at("num_classes").get<int>();
    ckpt.m.spec.activation = meta.at("activation").get<std::string>();
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.has_velocity = meta.at("has_velocity").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("checkpoint: invalid metadata: ") + e.what(), 12);
  }
  ckpt.m.spec.validate();

  const auto shapes = layer_shapes(ckpt.m.spec);
  for (const auto& s : shapes) {
    ckpt.m.weights.push_back(detail::read_f32_matrix(is, s.w_rows, s.w_cols, "weights"));
    ckpt.m.biases.push_back(
        Vector(detail::read_f32_matrix(is, 1, s.b_len, "biases").transpose()));
  }
  if (ckpt.has_velocity) {
    for (const auto& s : shapes) {
      ckpt.vel_weights.push_back(detail::read_f32_matrix(is, s.w_rows, s.w_cols, "velocity"));
      ckpt.vel_biases.push_back(
          Vector(detail::read_f32_matrix(is, 1, s.b_len, "velocity bias").transpose()));
    }
  }
  return ckpt;
}

}  // namespace sld
