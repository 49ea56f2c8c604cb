#pragma once

#include <functional>
#include <string>
#include <vector>

#include "daccn/tensor.hpp"

namespace daccn {

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t worst_input = 0;
  std::int64_t worst_element = 0;
  double analytic = 0;  // at the worst element
  double numeric = 0;
  std::size_t checked = 0;
};

/// Compares tape gradients of a scalar function against central differences.
///
/// `fn` must build a fresh graph from `inputs` on every call. Each input is
/// perturbed in place by +-eps. Error per element is |a-b| / max(|a|, |b|, 1e-8);
/// the worst one is returned. `max_elements_per_input` > 0 checks an evenly
/// strided subset of each input.
GradCheckResult finite_diff_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                                  std::vector<Tensor> inputs, double eps = 1e-6,
                                  std::int64_t max_elements_per_input = 0);

double relative_error(double a, double b);

}  // namespace daccn
