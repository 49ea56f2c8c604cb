#include "daccn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "daccn/autodiff.hpp"
#include "daccn/errors.hpp"

namespace daccn {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckResult finite_diff_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                                  std::vector<Tensor> inputs, double eps, std::int64_t max_elements_per_input) {
  if (eps <= 0) throw ContractError("finite_diff_check: eps must be positive");
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tape::current().clear();
  const Tensor loss = fn(inputs);
  backward(loss);

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& t = inputs[k];
    const auto n = t.numel();
    const std::vector<Real> analytic = t.has_grad() ? std::vector<Real>(t.grad().begin(), t.grad().end())
                                                    : std::vector<Real>(static_cast<std::size_t>(n), 0);
    const std::int64_t step =
        (max_elements_per_input > 0 && n > max_elements_per_input) ? n / max_elements_per_input : 1;
    auto values = t.mutable_values();
    for (std::int64_t i = 0; i < n; i += step) {
      const auto idx = static_cast<std::size_t>(i);
      const Real saved = values[idx];
      values[idx] = saved + static_cast<Real>(eps);
      const double up = fn(inputs).item();
      values[idx] = saved - static_cast<Real>(eps);
      const double down = fn(inputs).item();
      values[idx] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double err = relative_error(analytic[idx], numeric);
      ++result.checked;
      if (err > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = err;
        result.worst_input = k;
        result.worst_element = i;
        result.analytic = analytic[idx];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace daccn
