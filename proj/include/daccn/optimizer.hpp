#pragma once

#include <cstdint>
#include <vector>

#include "daccn/config.hpp"
#include "daccn/tensor.hpp"

namespace daccn {

/// Adam with bias correction. Parameters without a gradient buffer are skipped
/// for that step (their moments are left untouched).
class Adam {
 public:
  Adam(std::vector<Tensor> params, OptimizerConfig cfg);

  void step();
  void zero_grad();
  std::int64_t steps() const { return t_; }

 private:
  std::vector<Tensor> params_;
  OptimizerConfig cfg_;
  std::vector<std::vector<Real>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace daccn
