#pragma once

#include <functional>
#include <string>
#include <vector>

#include "daccn/gradcheck.hpp"
#include "daccn/tensor.hpp"

namespace daccn {

struct GradCheckCase {
  std::string name;
  double tolerance;
  std::function<Tensor(const std::vector<Tensor>&)> fn;
  std::vector<Tensor> inputs;
};

// Central-difference step of the suite.
inline constexpr double kGradCheckStep = 1e-5;

struct GradCheckRow {
  std::string name;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
  std::size_t checked = 0;
  double seconds = 0;
};

/// The registered differentiable ops with fixed seeded inputs.
/// `include_faulty` appends an op whose backward rule is deliberately off by 10%.
std::vector<GradCheckCase> gradcheck_cases(bool include_faulty = false);

std::vector<GradCheckRow> run_gradcheck(const std::vector<GradCheckCase>& cases);
std::string format_gradcheck_table(const std::vector<GradCheckRow>& rows);

// Square with a backward rule that returns 2.2 x instead of 2 x.
Tensor faulty_square(const Tensor& x);

}  // namespace daccn
