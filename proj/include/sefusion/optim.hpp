#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sefusion/autodiff.hpp"
#include "sefusion/errors.hpp"

namespace sefusion {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix<T>> first_moment;
  std::vector<Matrix<T>> second_moment;

  AdamState() = default;
  AdamState(std::span<Parameter<T>* const> params, AdamConfig cfg) : config(cfg) {
    for (const auto* p : params) {
      first_moment.emplace_back(p->value.rows(), p->value.cols());
      second_moment.emplace_back(p->value.rows(), p->value.cols());
    }
  }
};

// One Adam update with bias correction:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
  if (params.size() != state.first_moment.size()) {
    throw InternalError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  state.step += 1;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols() ||
        p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw InternalError("adam_step: shape drift on parameter '" + p.name + "'");
    }
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const T g = p.grad[k];
      m[k] = b1 * m[k] + (T{1} - b1) * g;
      v[k] = b2 * v[k] + (T{1} - b2) * g * g;
      const T m_hat = m[k] / c1;
      const T v_hat = v[k] / c2;
      p.value[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace sefusion
