#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "daccn/tensor.hpp"

namespace daccn {

struct Node;
using BackwardFn = std::function<void(Node&)>;

/// One recorded operation: the output it produced, the inputs it read, and
/// the rule that pushes output.grad into the inputs' grad buffers.
struct Node {
  std::string op;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::shared_ptr<TensorImpl> output;
  BackwardFn backward;

  // Gradient of the output; always allocated when backward runs.
  std::span<const Real> grad_out() const { return output->grad; }
  // Accumulation buffer for input i, or an empty span when that input is a constant.
  std::span<Real> grad_in(std::size_t i);
};

/// Define-by-run tape. Nodes are appended in execution order, which is a
/// topological order of the data flow; backward replays them in reverse.
///
/// Each thread owns one active tape. A tape is consumed by backward: calling
/// backward again on a loss from the same recording is a ContractError.
class Tape {
 public:
  static Tape& current();

  bool recording() const { return enabled_; }
  void set_recording(bool enabled) { enabled_ = enabled; }

  void record(Node node);
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Replays the tape in reverse starting from a scalar loss; clears the tape afterwards.
  void backward(const Tensor& loss);

 private:
  std::vector<Node> nodes_;
  bool enabled_ = true;
};

void backward(const Tensor& loss);

/// Suspends recording for its lifetime (evaluation, finite differences).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(Tape::current().recording()) { Tape::current().set_recording(false); }
  ~NoGradGuard() { Tape::current().set_recording(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. If recording is on and any input requires grad, the
/// result requires grad and a node carrying `backward` is appended to the tape.
/// This is the extension point every differentiable op goes through.
Tensor make_result(std::string op, Shape shape, std::vector<Real> values,
                   std::vector<Tensor> inputs, BackwardFn backward);

}  // namespace daccn
