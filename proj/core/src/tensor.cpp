// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/tensor.hpp"

#include <atomic>
#include <sstream>
#include <unordered_set>

#include "visualgpt/error.hpp"

namespace vgpt {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  if (numel(shape) != data.size()) {
    throw DimensionError("tensor: shape " + to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->node_id = next_node_id();
  set_requires_grad(requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::filled(Shape shape, double value) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> data;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& row : rows) {
    if (row.size() != cols) throw DimensionError("matrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows: expected a 2-D tensor, got " + to_string(shape()));
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols: expected a 2-D tensor, got " + to_string(shape()));
  return impl_->shape[1];
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item: tensor of shape " + to_string(shape()) + " is not a scalar");
  return impl_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return impl_->data.at(r * cols() + c); }

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  if (on && impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
  return *this;
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.assign(impl_->data.size(), 0.0);
}

Tensor Tensor::clone() const { return Tensor(impl_->shape, impl_->data); }

// ---------------------------------------------------------------------------

Tape::~Tape() { clear(); }

Tape* Tape::active() noexcept { return g_active_tape; }

void Tape::record(std::span<const Tensor> inputs, const Tensor& output, BackwardFn fn) {
  Entry entry;
  entry.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    const auto& impl = in.impl();
    if (impl->requires_grad && impl->tape == nullptr) {
      // Leaf tensors are remembered once so their gradients can be committed
      // after a replay.
      bool seen = false;
      for (const auto& leaf : leaves_) seen = seen || leaf == impl;
      if (!seen) leaves_.push_back(impl);
    }
    entry.inputs.push_back(impl);
  }
  output.impl()->tape = this;
  output.impl()->requires_grad = true;
  entry.output = output.impl();
  entry.fn = std::move(fn);
  entries_.push_back(std::move(entry));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  last_visits_ = 0;
  const auto& root = loss.impl();
  if (!root->requires_grad) return;  // constant loss: nothing depends on a parameter
  if (root->tape == nullptr) {
    root->grad.resize(1, 0.0);
    root->grad[0] += 1.0;
    return;
  }
  if (root->tape != this) throw ContractError("backward: loss was recorded on a different tape");

  for (auto& e : entries_) {
    e.output->pass_grad.clear();
    for (auto& in : e.inputs) in->pass_grad.clear();
  }
  root->pass_grad.assign(1, 1.0);

  std::vector<std::vector<double>*> in_grads;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    auto& e = *it;
    if (e.output->pass_grad.empty()) continue;
    in_grads.assign(e.inputs.size(), nullptr);
    for (std::size_t i = 0; i < e.inputs.size(); ++i) {
      auto& in = *e.inputs[i];
      if (!in.requires_grad) continue;
      if (in.pass_grad.size() != in.data.size()) in.pass_grad.assign(in.data.size(), 0.0);
      in_grads[i] = &in.pass_grad;
    }
    e.fn(e.output->pass_grad, in_grads);
    ++last_visits_;
  }

  for (auto& leaf : leaves_) {
    if (leaf->grad.size() != leaf->data.size()) leaf->grad.assign(leaf->data.size(), 0.0);
    if (leaf->pass_grad.empty()) continue;
    for (std::size_t i = 0; i < leaf->grad.size(); ++i) leaf->grad[i] += leaf->pass_grad[i];
  }
  for (auto& e : entries_) {
    e.output->pass_grad = {};
    for (auto& in : e.inputs) in->pass_grad = {};
  }
}

void Tape::clear() {
  for (auto& e : entries_) {
    // Outputs may outlive the tape through user handles; detach them.
    if (e.output->tape == this) e.output->tape = nullptr;
    e.output->requires_grad = false;
  }
  entries_.clear();
  leaves_.clear();
  last_visits_ = 0;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

}  // namespace vgpt
