#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sefusion/errors.hpp"
#include "sefusion/matrix.hpp"

namespace sefusion {

// A trainable matrix with its gradient buffer.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix<T>(value.rows(), value.cols()); }
};

template <typename T>
void zero_grads(std::span<Parameter<T>* const> params) {
  for (auto* p : params) p->zero_grad();
}

// x W (+ b), with the optional 1xC bias broadcast over the rows of x.
template <typename T>
Matrix<T> affine(const Matrix<T>& x, const Parameter<T>& w, const Parameter<T>* b = nullptr) {
  if (x.cols() != w.value.rows()) {
    throw ShapeError("affine: input " + x.shape_string() + " does not fit weight " +
                     w.value.shape_string() + " (" + w.name + ")");
  }
  auto out = matmul(x, w.value);
  return b != nullptr ? add_row_broadcast(std::move(out), b->value) : out;
}

// Glorot/Xavier uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T, typename Rng>
Matrix<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix<T> m(fan_in, fan_out);
  for (auto& v : m.values()) v = static_cast<T>(dist(rng));
  return m;
}

// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

// Reverse-mode differentiation over the fixed set of matrix operations the
// fusion model needs. Every op evaluates eagerly and records how to push
// gradients back to its inputs. backward() writes d(loss)/d(param) into the
// `grad` of every Parameter registered on the tape and then clears the tape.
//
// Nodes hold closures over `this`, so a Tape is neither copyable nor movable.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix<T> value) { return push(std::move(value)); }

  Var param(Parameter<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
    Var v = push(p.value);
    nodes_[v.id].param = &p;
    param_nodes_.emplace(&p, v.id);
    return v;
  }

  const Matrix<T>& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b) {
    Var out = push(sefusion::matmul(value(a), value(b)));
    record(out, [this, a, b, out] {
      const auto& g = grad(out);
      grad(a) += matmul_nt(g, value(b));
      grad(b) += matmul_tn(value(a), g);
    });
    return out;
  }

  Var add(Var a, Var b) {
    Var out = push(value(a) + value(b));
    record(out, [this, a, b, out] {
      grad(a) += grad(out);
      grad(b) += grad(out);
    });
    return out;
  }

  // x + bias with bias (1xC) broadcast across the rows of x.
  Var add_bias(Var x, Var bias) {
    Var out = push(add_row_broadcast(value(x), value(bias)));
    record(out, [this, x, bias, out] {
      const auto& g = grad(out);
      grad(x) += g;
      auto& gb = grad(bias);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    });
    return out;
  }

  Var scale(Var x, T factor) {
    Var out = push(factor * value(x));
    record(out, [this, x, out, factor] {
      const auto& g = grad(out);
      auto& gx = grad(x);
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += factor * g[k];
    });
    return out;
  }

  Var concat_cols(Var a, Var b) {
    Var out = push(sefusion::concat_cols(value(a), value(b)));
    record(out, [this, a, b, out] {
      const auto& g = grad(out);
      auto& ga = grad(a);
      auto& gb = grad(b);
      const std::size_t ca = ga.cols();
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < ca; ++c) ga(r, c) += g(r, c);
        for (std::size_t c = 0; c < gb.cols(); ++c) gb(r, c) += g(r, ca + c);
      }
    });
    return out;
  }

  Var reshape(Var x, std::size_t rows, std::size_t cols) {
    Var out = push(sefusion::reshape(value(x), rows, cols));
    record(out, [this, x, out] {
      const auto& g = grad(out);
      auto& gx = grad(x);
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k];
    });
    return out;
  }

  Var relu(Var x) {
    Var out = push(sefusion::relu(value(x)));
    record(out, [this, x, out] {
      const auto& g = grad(out);
      const auto& in = value(x);
      auto& gx = grad(x);
      for (std::size_t k = 0; k < g.size(); ++k)
        if (in[k] > T{0}) gx[k] += g[k];
    });
    return out;
  }

  Var sigmoid(Var x) {
    Var out = push(sefusion::sigmoid(value(x)));
    record(out, [this, x, out] {
      const auto& g = grad(out);
      const auto& y = value(out);
      auto& gx = grad(x);
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * y[k] * (T{1} - y[k]);
    });
    return out;
  }

  // See sefusion::modal_mix. x is BxD, weights is Bxm.
  Var modal_mix(Var x, Var weights) {
    Var out = push(sefusion::modal_mix(value(x), value(weights)));
    record(out, [this, x, weights, out] {
      const auto& g = grad(out);
      const auto& xv = value(x);
      const auto& wv = value(weights);
      auto& gx = grad(x);
      auto& gw = grad(weights);
      const std::size_t width = g.cols();
      for (std::size_t b = 0; b < g.rows(); ++b) {
        for (std::size_t k = 0; k < wv.cols(); ++k) {
          const std::size_t offset = k * width;
          T acc{0};
          for (std::size_t j = 0; j < width; ++j) {
            acc += g(b, j) * xv(b, offset + j);
            gx(b, offset + j) += wv(b, k) * g(b, j);
          }
          gw(b, k) += acc;
        }
      }
    });
    return out;
  }

  // Widens a Bx1 single logit l into Bx2 logits [0, l], so that softmax over
  // the pair equals [1 - sigmoid(l), sigmoid(l)].
  Var binary_logits(Var x) {
    const auto& in = value(x);
    if (in.cols() != 1) throw ShapeError("binary_logits expects Bx1, got " + in.shape_string());
    Matrix<T> widened(in.rows(), 2);
    for (std::size_t r = 0; r < in.rows(); ++r) widened(r, 1) = in(r, 0);
    Var out = push(std::move(widened));
    record(out, [this, x, out] {
      const auto& g = grad(out);
      auto& gx = grad(x);
      for (std::size_t r = 0; r < g.rows(); ++r) gx(r, 0) += g(r, 1);
    });
    return out;
  }

  Var sum(Var x) {
    Var out = push(Matrix<T>(1, 1, sefusion::sum(value(x))));
    record(out, [this, x, out] {
      const T g = grad(out)[0];
      for (auto& v : grad(x).values()) v += g;
    });
    return out;
  }

  // Mean over rows of -log softmax(logits + adjustment)[label], where
  // `adjustment` is a 1xC row added to every row of logits.
  Var adjusted_cross_entropy(Var logits, std::vector<std::size_t> labels, Matrix<T> adjustment) {
    const auto& lv = value(logits);
    if (labels.size() != lv.rows()) {
      throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(lv.rows()) + " rows");
    }
    auto adjusted = add_row_broadcast(lv, adjustment);
    const auto lse = logsumexp_rows(adjusted);
    T total{0};
    for (std::size_t r = 0; r < adjusted.rows(); ++r) {
      if (labels[r] >= adjusted.cols()) throw UsageError("label out of range");
      total += lse[r] - adjusted(r, labels[r]);
    }
    const T count = static_cast<T>(adjusted.rows());
    Var out = push(Matrix<T>(1, 1, total / count));
    record(out, [this, logits, out, count, labels = std::move(labels),
                 probs = softmax(std::move(adjusted))] {
      const T g = grad(out)[0] / count;
      auto& gl = grad(logits);
      for (std::size_t r = 0; r < probs.rows(); ++r) {
        for (std::size_t c = 0; c < probs.cols(); ++c) {
          const T target = c == labels[r] ? T{1} : T{0};
          gl(r, c) += g * (probs(r, c) - target);
        }
      }
    });
    return out;
  }

  void backward(Var loss) {
    if (loss.id >= nodes_.size()) throw UsageError("backward: variable not on this tape");
    const auto& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw UsageError("backward needs a scalar (1x1) terminal, got " + lv.shape_string());
    }
    for (auto& n : nodes_) n.grad = Matrix<T>(n.value.rows(), n.value.cols());
    nodes_[loss.id].grad[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      if (nodes_[i].backprop) nodes_[i].backprop();
    }
    for (auto& n : nodes_) {
      if (n.param != nullptr) n.param->grad = std::move(n.grad);
    }
    clear();
  }

  void clear() {
    nodes_.clear();
    param_nodes_.clear();
  }

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    std::function<void()> backprop;
    Parameter<T>* param = nullptr;
  };

  Var push(Matrix<T> value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr});
    return Var{nodes_.size() - 1};
  }

  template <typename F>
  void record(Var out, F&& fn) {
    nodes_[out.id].backprop = std::forward<F>(fn);
  }

  Matrix<T>& grad(Var v) { return nodes_[v.id].grad; }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
};

}  // namespace sefusion
