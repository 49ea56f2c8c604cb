#include "daccn/optimizer.hpp"

#include <cmath>

namespace daccn {

Adam::Adam(std::vector<Tensor> params, OptimizerConfig cfg) : params_(std::move(params)), cfg_(std::move(cfg)) {
  cfg_.validate();
  for (const auto& p : params_) {
    m_.emplace_back(static_cast<std::size_t>(p.numel()), Real(0));
    v_.emplace_back(static_cast<std::size_t>(p.numel()), Real(0));
  }
}

void Adam::step() {
  ++t_;
  const Real c1 = 1 - std::pow(cfg_.beta1, static_cast<Real>(t_));
  const Real c2 = 1 - std::pow(cfg_.beta2, static_cast<Real>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * g[i] * g[i];
      w[i] -= cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace daccn
