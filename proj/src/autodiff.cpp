#include "daccn/autodiff.hpp"

#include <algorithm>

#include "daccn/errors.hpp"

namespace daccn {

std::span<Real> Node::grad_in(std::size_t i) {
  auto& impl = *inputs.at(i);
  if (!impl.requires_grad) return {};
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), 0);
  return impl.grad;
}

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(Node node) { nodes_.push_back(std::move(node)); }

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_to_string(loss.shape()) : std::string("<undefined>")));
  const auto& target = loss.impl();
  const auto it = std::find_if(nodes_.rbegin(), nodes_.rend(),
                               [&](const Node& n) { return n.output == target; });
  if (it == nodes_.rend())
    throw ContractError("loss is not recorded on the active tape (backward already ran, or no input requires grad)");

  // Interior grads from an earlier pass are stale; leaves keep accumulating.
  for (auto& node : nodes_) node.output->grad.clear();
  target->grad.assign(1, 1);

  for (auto n = it; n != nodes_.rend(); ++n) {
    if (n->output->grad.empty()) continue;
    n->backward(*n);
  }
  nodes_.clear();
}

void backward(const Tensor& loss) { Tape::current().backward(loss); }

Tensor make_result(std::string op, Shape shape, std::vector<Real> values, std::vector<Tensor> inputs,
                   BackwardFn backward) {
  auto out = std::make_shared<TensorImpl>();
  out->shape = std::move(shape);
  out->data = std::move(values);
  if (static_cast<std::int64_t>(out->data.size()) != shape_numel(out->shape))
    throw DimensionError(op + ": produced value count does not match shape");

  auto& tape = Tape::current();
  const bool needs_grad =
      tape.recording() && std::any_of(inputs.begin(), inputs.end(),
                                      [](const Tensor& t) { return t.defined() && t.requires_grad(); });
  if (needs_grad) {
    out->requires_grad = true;
    Node node;
    node.op = std::move(op);
    node.output = out;
    node.backward = std::move(backward);
    node.inputs.reserve(inputs.size());
    for (auto& t : inputs) node.inputs.push_back(t.impl());
    tape.record(std::move(node));
  }
  return Tensor(std::move(out));
}

}  // namespace daccn
