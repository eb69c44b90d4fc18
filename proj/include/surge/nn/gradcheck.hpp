#pragma once

#include "surge/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace surge::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::string worst;  // "param[i]" of the largest relative error

  bool ok() const { return failures == 0; }
};

struct GradCheckOptions {
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_floor = 1e-7;
};

/// Compares analytic gradients against central finite differences of `loss`
/// for every entry of every parameter. An entry passes when
/// |analytic - numeric| <= max(rel_tol * max(|analytic|, |numeric|), abs_floor).
inline GradCheckResult check_gradients(const std::vector<Matrix*>& params, const std::vector<Matrix>& analytic,
                                       const std::function<double()>& loss, GradCheckOptions opt = {}) {
  if (params.size() != analytic.size()) throw DimensionError("gradcheck: parameter/gradient count mismatch");
  GradCheckResult res;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& w = *params[p];
    require_shape(analytic[p], w.rows(), w.cols(), "gradcheck");
    for (Index k = 0; k < w.size(); ++k) {
      const double saved = w.data()[k];
      w.data()[k] = saved + opt.step;
      const double up = loss();
      w.data()[k] = saved - opt.step;
      const double down = loss();
      w.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = analytic[p].data()[k];
      const double abs_err = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale > 0.0 ? abs_err / scale : 0.0;
      ++res.checked;
      res.max_abs_error = std::max(res.max_abs_error, abs_err);
      if (abs_err > std::max(opt.rel_tol * scale, opt.abs_floor)) ++res.failures;
      if (abs_err > opt.abs_floor && rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = "param" + std::to_string(p) + "[" + std::to_string(k) + "]";
      }
    }
  }
  return res;
}

}  // namespace surge::nn
