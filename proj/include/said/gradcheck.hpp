#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "said/model.hpp"
#include "said/rng.hpp"

namespace said {

struct GradCheckOptions {
  std::size_t points = 100;
  double step = 1e-5;
  ModelShape shape{5, 5, 4, {8, 6, 4}};
  std::size_t batch = 12;
  double param_range = 0.5;
  // Relative error denominator floor; components whose magnitude is below it
  // are compared on an absolute scale.
  double denominator_floor = 1e-6;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t points = 0;
  std::size_t components_checked = 0;
  std::size_t components_skipped = 0;  // perturbation crossed a ReLU kink
};

namespace detail {

inline std::vector<bool> relu_pattern(const ForwardCache<double>& cache) {
  std::vector<bool> out;
  for (const auto& z : cache.pre) {
    for (Eigen::Index k = 0; k < z.size(); ++k) out.push_back(z.data()[k] > 0.0);
  }
  return out;
}

}  // namespace detail

// Compares backward() with central finite differences of the total weighted
// loss at random parameter points of a tiny model.
inline GradCheckReport gradient_check(std::uint64_t seed, const GradCheckOptions& opt = {}) {
  GradCheckReport report;
  Rng rng(mix_seed(seed, 0x9c));
  for (std::size_t point = 0; point < opt.points; ++point) {
    CtrModel model(opt.shape);
    model.params().for_each([&](const std::string&, double* p, std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) p[k] = rng.uniform(-opt.param_range, opt.param_range);
    });
    std::vector<std::uint32_t> users, items;
    std::vector<int> labels;
    std::vector<double> weights;
    for (std::size_t b = 0; b < opt.batch; ++b) {
      users.push_back(static_cast<std::uint32_t>(rng.index(opt.shape.n_users)));
      items.push_back(static_cast<std::uint32_t>(rng.index(opt.shape.n_items)));
      labels.push_back(static_cast<int>(rng.index(2)));
      weights.push_back(rng.uniform(0.0, 1.0));
    }
    ForwardCache<double> cache;
    const auto loss_at = [&](std::vector<bool>* pattern) {
      forward_batch(model, std::span<const std::uint32_t>(users), std::span<const std::uint32_t>(items), cache);
      if (pattern) *pattern = detail::relu_pattern(cache);
      return weighted_bce(cache.clipped, labels, weights).total;
    };
    std::vector<bool> base_pattern, plus_pattern, minus_pattern;
    loss_at(&base_pattern);
    Parameters<double> grad(model.shape());
    backward(model, cache, labels, weights, grad);

    std::vector<const double*> analytic;
    grad.for_each([&](const std::string&, const double* g, std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) analytic.push_back(g + k);
    });
    std::size_t flat = 0;
    model.params().for_each([&](const std::string& name, double* p, std::size_t n) {
      for (std::size_t k = 0; k < n; ++k, ++flat) {
        const double saved = p[k];
        p[k] = saved + opt.step;
        const double up = loss_at(&plus_pattern);
        p[k] = saved - opt.step;
        const double down = loss_at(&minus_pattern);
        p[k] = saved;
        if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
          ++report.components_skipped;
          continue;
        }
        const double numeric = (up - down) / (2.0 * opt.step);
        const double a = *analytic[flat];
        const double denom = std::max({std::abs(a), std::abs(numeric), opt.denominator_floor});
        const double rel = std::abs(a - numeric) / denom;
        ++report.components_checked;
        if (rel > report.max_relative_error) {
          report.max_relative_error = rel;
          report.worst_parameter = name + "[" + std::to_string(k) + "] at point " + std::to_string(point);
        }
      }
    });
    ++report.points;
  }
  return report;
}

}  // namespace said
