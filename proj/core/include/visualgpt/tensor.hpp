// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vgpt {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tape;

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  // Scratch gradient for a single backward replay.
  std::vector<double> pass_grad;
  bool requires_grad = false;
  // Set when the tensor is the output of an operation recorded on `tape`.
  const Tape* tape = nullptr;
  std::uint64_t node_id = 0;
};

}  // namespace detail

/// Dense row-major tensor of doubles with an optional gradient buffer.
///
/// `Tensor` is a shared handle: copies alias the same storage, exactly like
/// parameters referenced from several places in a computation graph. Use
/// `clone()` for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  /// 2-D tensor from nested rows; rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t size() const { return impl_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return impl_->data; }
  /// Direct write access; bypasses the tape (parameter updates, probing).
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const noexcept { return impl_ && impl_->requires_grad; }
  /// Marks a leaf as trainable and allocates a zeroed gradient buffer.
  Tensor& set_requires_grad(bool on);
  bool has_grad() const noexcept { return impl_ && !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad();
  void zero_grad();

  std::uint64_t node_id() const noexcept { return impl_ ? impl_->node_id : 0; }
  bool is_leaf() const noexcept { return impl_ && impl_->tape == nullptr; }

  /// Deep copy of the values; the copy is a fresh leaf without gradient.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

  // Engine-internal access used by operations and the tape.
  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Define-by-run record of differentiable operations.
///
/// Operations record themselves on the tape that is active in the calling
/// thread (see `TapeScope`) whenever at least one input requires a gradient.
/// Recording order is a topological order of the graph, so `backward`
/// replays it in reverse and visits each entry exactly once.
class Tape {
 public:
  using BackwardFn =
      std::function<void(std::span<const double> out_grad, std::span<std::vector<double>* const> in_grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  void record(std::span<const Tensor> inputs, const Tensor& output, BackwardFn fn);

  /// Propagates d(loss)/d(node) through every recorded entry and adds the
  /// result to each leaf's `grad`. Leaf gradients accumulate across calls;
  /// each replay contributes its total with a single addition, so replaying
  /// twice without zeroing gives exactly twice the gradient.
  void backward(const Tensor& loss);

  void clear();
  std::size_t size() const noexcept { return entries_.size(); }
  /// Number of entries whose backward function ran during the last replay.
  std::size_t last_visit_count() const noexcept { return last_visits_; }

  static Tape* active() noexcept;

 private:
  friend class TapeScope;
  friend class NoGradScope;

  struct Entry {
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    BackwardFn fn;
  };

  std::vector<Entry> entries_;
  std::vector<std::shared_ptr<detail::TensorImpl>> leaves_;
  std::size_t last_visits_ = 0;
};

/// Makes `tape` the active tape of the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Disables recording for the scope's lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace vgpt
