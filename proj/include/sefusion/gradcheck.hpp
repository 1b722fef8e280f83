#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "sefusion/autodiff.hpp"
#include "sefusion/errors.hpp"

namespace sefusion {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string parameter;  // where the worst error occurred
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Relative error with a small absolute floor in the denominator so entries
// whose true gradient is ~0 are judged on absolute error instead.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// Compares the gradients currently stored in `params` against central
// differences (f(p+eps) - f(p-eps)) / (2 eps) of `loss_fn`, element by
// element. Parameter values are restored exactly afterwards.
inline GradCheckReport finite_diff_check(const std::function<double()>& loss_fn,
                                         std::span<Parameter<double>* const> params,
                                         double eps = 1e-5) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw UsageError("finite_diff_check: step must be positive and finite");
  }
  GradCheckReport report;
  const double base = loss_fn();
  if (!std::isfinite(base)) throw NumericalError("finite_diff_check: loss is not finite");

  for (auto* p : params) {
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double original = p->value[k];
      p->value[k] = original + eps;
      const double up = loss_fn();
      p->value[k] = original - eps;
      const double down = loss_fn();
      p->value[k] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericalError("finite_diff_check: non-finite loss perturbing " + p->name + "[" +
                             std::to_string(k) + "]");
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[k];
      const double err = relative_error(analytic, numeric);
      ++report.checked;
      if (err > report.max_relative_error || report.checked == 1) {
        report.max_relative_error = err;
        report.parameter = p->name;
        report.index = k;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace sefusion
