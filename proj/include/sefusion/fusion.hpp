#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sefusion/autodiff.hpp"
#include "sefusion/errors.hpp"
#include "sefusion/matrix.hpp"

namespace sefusion {

// Squeeze-and-excitation fusion of a text and an image feature row.
//
//   z     = [xt W1 + b1, xi W2 + b2]                       (1x2)
//   s     = sigmoid(relu(z W3 + b3) W4 + b4)               (1x2)
//   X'    = reshape(concat(xt, xi), 2, (Dt + Di) / 2)      row-major
//   fused = s X'                                           (1x(Dt+Di)/2)
//
// The row-major reshape means X' row 0 holds the first half of the flat
// concatenation (text only, with the default 768/512 widths) and row 1 holds
// the remaining text features followed by all image features.

struct FusionConfig {
  std::size_t text_dim = 768;
  std::size_t image_dim = 512;
  bool biases = true;

  std::size_t total_dim() const { return text_dim + image_dim; }
  std::size_t fused_dim() const { return total_dim() / 2; }

  void validate() const {
    if (text_dim == 0 || image_dim == 0) throw ShapeError("fusion widths must be positive");
    if (total_dim() % 2 != 0) {
      throw ShapeError("fusion needs an even total width, got " + std::to_string(text_dim) +
                       " + " + std::to_string(image_dim));
    }
  }
};

template <typename T>
struct FusionParams {
  FusionConfig config;
  Parameter<T> w1;  // Dt x 1
  Parameter<T> w2;  // Di x 1
  Parameter<T> w3;  // 2 x 1
  Parameter<T> w4;  // 1 x 2
  Parameter<T> b1;  // 1 x 1
  Parameter<T> b2;  // 1 x 1
  Parameter<T> b3;  // 1 x 1
  Parameter<T> b4;  // 1 x 2

  static FusionParams zeros(const FusionConfig& cfg) {
    cfg.validate();
    FusionParams p;
    p.config = cfg;
    p.w1 = Parameter<T>("fusion.w1", Matrix<T>(cfg.text_dim, 1));
    p.w2 = Parameter<T>("fusion.w2", Matrix<T>(cfg.image_dim, 1));
    p.w3 = Parameter<T>("fusion.w3", Matrix<T>(2, 1));
    p.w4 = Parameter<T>("fusion.w4", Matrix<T>(1, 2));
    p.b1 = Parameter<T>("fusion.b1", Matrix<T>(1, 1));
    p.b2 = Parameter<T>("fusion.b2", Matrix<T>(1, 1));
    p.b3 = Parameter<T>("fusion.b3", Matrix<T>(1, 1));
    p.b4 = Parameter<T>("fusion.b4", Matrix<T>(1, 2));
    return p;
  }

  // Glorot-uniform weights, zero biases.
  template <typename Rng>
  static FusionParams init(const FusionConfig& cfg, Rng& rng) {
    auto p = zeros(cfg);
    p.w1.value = glorot_uniform<T>(cfg.text_dim, 1, rng);
    p.w2.value = glorot_uniform<T>(cfg.image_dim, 1, rng);
    p.w3.value = glorot_uniform<T>(2, 1, rng);
    p.w4.value = glorot_uniform<T>(1, 2, rng);
    return p;
  }

  // Trainable parameters; biases are left out when the config disables them.
  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out{&w1, &w2, &w3, &w4};
    if (config.biases) out.insert(out.end(), {&b1, &b2, &b3, &b4});
    return out;
  }
};

template <typename T>
struct FusionTrace {
  Matrix<T> z;      // Bx2
  Matrix<T> s;      // Bx2, every entry in (0, 1)
  Matrix<T> fused;  // Bx(Dt+Di)/2
};

namespace detail {

template <typename T>
Matrix<T> dense(const Matrix<T>& x, const Parameter<T>& w, const Parameter<T>& b, bool bias) {
  return affine(x, w, bias ? &b : nullptr);
}

template <typename T>
void require_widths(const Matrix<T>& xt, const Matrix<T>& xi, const FusionConfig& cfg) {
  if (xt.cols() != cfg.text_dim || xi.cols() != cfg.image_dim || xt.rows() != xi.rows()) {
    throw ShapeError("fusion inputs " + xt.shape_string() + " and " + xi.shape_string() +
                     " do not match widths " + std::to_string(cfg.text_dim) + "/" +
                     std::to_string(cfg.image_dim));
  }
}

}  // namespace detail

// z = [xt W1 (+b1), xi W2 (+b2)]; works row-wise on a batch.
template <typename T>
Matrix<T> squeeze(const Matrix<T>& xt, const Matrix<T>& xi, const FusionParams<T>& p) {
  detail::require_widths(xt, xi, p.config);
  const bool bias = p.config.biases;
  return concat_cols(detail::dense(xt, p.w1, p.b1, bias), detail::dense(xi, p.w2, p.b2, bias));
}

// s = sigmoid(relu(z W3 (+b3)) W4 (+b4)).
template <typename T>
Matrix<T> excite(const Matrix<T>& z, const FusionParams<T>& p) {
  if (z.cols() != 2) throw ShapeError("excite expects Bx2 input, got " + z.shape_string());
  const bool bias = p.config.biases;
  auto hidden = relu(detail::dense(z, p.w3, p.b3, bias));
  return sigmoid(detail::dense(hidden, p.w4, p.b4, bias));
}

// Single-sample fuse, written exactly as concat -> reshape(2, D/2) -> s X'.
template <typename T>
Matrix<T> fuse(const Matrix<T>& xt, const Matrix<T>& xi, const Matrix<T>& s) {
  if (xt.rows() != 1 || xi.rows() != 1 || s.rows() != 1 || s.cols() != 2) {
    throw ShapeError("fuse expects 1xDt, 1xDi and 1x2 inputs, got " + xt.shape_string() + ", " +
                     xi.shape_string() + ", " + s.shape_string());
  }
  const auto x = concat_cols(xt, xi);
  if (x.cols() % 2 != 0) {
    throw ShapeError("fuse: total width " + std::to_string(x.cols()) + " is odd");
  }
  return matmul(s, reshape(x, 2, x.cols() / 2));
}

// Batched fuse: one sample per row, same result per row as fuse().
template <typename T>
Matrix<T> fuse_rows(const Matrix<T>& xt, const Matrix<T>& xi, const Matrix<T>& s) {
  if (s.cols() != 2) throw ShapeError("fuse_rows expects Bx2 weights, got " + s.shape_string());
  const auto x = concat_cols(xt, xi);
  if (x.cols() % 2 != 0) {
    throw ShapeError("fuse: total width " + std::to_string(x.cols()) + " is odd");
  }
  return modal_mix(x, s);
}

template <typename T>
FusionTrace<T> sefusion_forward(const Matrix<T>& xt, const Matrix<T>& xi,
                                const FusionParams<T>& p) {
  FusionTrace<T> trace;
  trace.z = squeeze(xt, xi, p);
  trace.s = excite(trace.z, p);
  trace.fused = xt.rows() == 1 ? fuse(xt, xi, trace.s) : fuse_rows(xt, xi, trace.s);
  return trace;
}

// Differentiable counterpart of sefusion_forward on a Tape. xt/xi are BxDt
// and BxDi nodes; returns the nodes for z, s and the fused features.
struct FusionVars {
  Var z;
  Var s;
  Var fused;
};

template <typename T>
FusionVars record_fusion(Tape<T>& tape, Var xt, Var xi, FusionParams<T>& p) {
  detail::require_widths(tape.value(xt), tape.value(xi), p.config);
  const bool bias = p.config.biases;
  auto dense = [&](Var x, Parameter<T>& w, Parameter<T>& b) {
    Var out = tape.matmul(x, tape.param(w));
    return bias ? tape.add_bias(out, tape.param(b)) : out;
  };
  FusionVars v;
  v.z = tape.concat_cols(dense(xt, p.w1, p.b1), dense(xi, p.w2, p.b2));
  v.s = tape.sigmoid(dense(tape.relu(dense(v.z, p.w3, p.b3)), p.w4, p.b4));
  v.fused = tape.modal_mix(tape.concat_cols(xt, xi), v.s);
  return v;
}

// ---------------------------------------------------------------------------
// m-modality generalization: one squeeze map per modality, an excitation
// bottleneck m -> ceil(m/2) -> m, and an m-row reshape of the concatenation.
// With m == 2 the parameter shapes and the math coincide with FusionParams.

template <typename T>
struct MultiFusionParams {
  std::vector<std::size_t> dims;
  bool biases = true;
  std::vector<Parameter<T>> squeeze_weights;  // D_k x 1
  std::vector<Parameter<T>> squeeze_biases;   // 1 x 1
  Parameter<T> excite_in;                     // m x ceil(m/2)
  Parameter<T> excite_in_bias;                // 1 x ceil(m/2)
  Parameter<T> excite_out;                    // ceil(m/2) x m
  Parameter<T> excite_out_bias;               // 1 x m

  std::size_t modalities() const { return dims.size(); }
  std::size_t bottleneck() const { return (dims.size() + 1) / 2; }
  std::size_t total_dim() const { return std::accumulate(dims.begin(), dims.end(), std::size_t{0}); }

  static MultiFusionParams zeros(std::vector<std::size_t> dims, bool biases = true) {
    if (dims.empty()) throw ShapeError("multi-modal fusion needs at least one modality");
    MultiFusionParams p;
    p.dims = std::move(dims);
    p.biases = biases;
    const std::size_t m = p.modalities();
    if (p.total_dim() % m != 0) {
      throw ShapeError("total width " + std::to_string(p.total_dim()) +
                       " is not divisible by modality count " + std::to_string(m));
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (p.dims[k] == 0) throw ShapeError("modality widths must be positive");
      p.squeeze_weights.emplace_back("fusion.squeeze" + std::to_string(k),
                                     Matrix<T>(p.dims[k], 1));
      p.squeeze_biases.emplace_back("fusion.squeeze_bias" + std::to_string(k), Matrix<T>(1, 1));
    }
    const std::size_t h = p.bottleneck();
    p.excite_in = Parameter<T>("fusion.excite_in", Matrix<T>(m, h));
    p.excite_in_bias = Parameter<T>("fusion.excite_in_bias", Matrix<T>(1, h));
    p.excite_out = Parameter<T>("fusion.excite_out", Matrix<T>(h, m));
    p.excite_out_bias = Parameter<T>("fusion.excite_out_bias", Matrix<T>(1, m));
    return p;
  }

  template <typename Rng>
  static MultiFusionParams init(std::vector<std::size_t> dims, bool biases, Rng& rng) {
    auto p = zeros(std::move(dims), biases);
    for (std::size_t k = 0; k < p.modalities(); ++k)
      p.squeeze_weights[k].value = glorot_uniform<T>(p.dims[k], 1, rng);
    p.excite_in.value = glorot_uniform<T>(p.modalities(), p.bottleneck(), rng);
    p.excite_out.value = glorot_uniform<T>(p.bottleneck(), p.modalities(), rng);
    return p;
  }

  // Same parameters laid out for the general path.
  static MultiFusionParams from_pair(const FusionParams<T>& pair) {
    auto p = zeros({pair.config.text_dim, pair.config.image_dim}, pair.config.biases);
    p.squeeze_weights[0].value = pair.w1.value;
    p.squeeze_weights[1].value = pair.w2.value;
    p.squeeze_biases[0].value = pair.b1.value;
    p.squeeze_biases[1].value = pair.b2.value;
    p.excite_in.value = pair.w3.value;
    p.excite_in_bias.value = pair.b3.value;
    p.excite_out.value = pair.w4.value;
    p.excite_out_bias.value = pair.b4.value;
    return p;
  }
};

template <typename T>
FusionTrace<T> sefusion_forward_multi(std::span<const Matrix<T>> features,
                                      const MultiFusionParams<T>& p) {
  const std::size_t m = p.modalities();
  if (features.size() != m) {
    throw ShapeError("expected " + std::to_string(m) + " modalities, got " +
                     std::to_string(features.size()));
  }
  const std::size_t batch = features[0].rows();
  Matrix<T> z(batch, m);
  Matrix<T> x(batch, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& f = features[k];
    if (f.cols() != p.dims[k] || f.rows() != batch) {
      throw ShapeError("modality " + std::to_string(k) + " is " + f.shape_string() +
                       ", expected width " + std::to_string(p.dims[k]));
    }
    auto zk = detail::dense(f, p.squeeze_weights[k], p.squeeze_biases[k], p.biases);
    for (std::size_t b = 0; b < batch; ++b) z(b, k) = zk(b, 0);
    x = concat_cols(x, f);
  }
  FusionTrace<T> trace;
  trace.z = z;
  auto hidden = relu(detail::dense(z, p.excite_in, p.excite_in_bias, p.biases));
  trace.s = sigmoid(detail::dense(hidden, p.excite_out, p.excite_out_bias, p.biases));
  if (batch == 1) {
    trace.fused = matmul(trace.s, reshape(x, m, x.cols() / m));
  } else {
    trace.fused = modal_mix(x, trace.s);
  }
  return trace;
}

}  // namespace sefusion
