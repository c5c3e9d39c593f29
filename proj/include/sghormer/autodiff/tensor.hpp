#pragma once

// Dense tensors with a define-by-run reverse-mode tape.
//
// A tensor is a shared handle: copies alias the same storage. Operations that
// touch at least one tensor with requires_grad record a backward closure on
// the calling thread's tape; backward() replays the tape in reverse and then
// clears it.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sghormer::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  BasicTensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }
  // Rank-2 helpers.
  std::size_t rows() const { return impl_->shape.at(0); }
  std::size_t cols() const { return impl_->shape.at(1); }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  // Gradient storage, allocated as zeros on first access.
  std::vector<T>& grad_buffer() const;
  void zero_grad() const { impl_->grad.clear(); }

  // Deep copy of the values; the copy does not require grad.
  BasicTensor detach() const;

  const void* id() const { return impl_.get(); }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

using Tensor = BasicTensor<float>;

// Ordered record of executed operations for one thread and scalar type.
template <typename T>
class BasicTape {
 public:
  static BasicTape& current();

  // Appends a backward closure producing gradients for `output`'s inputs.
  // The closure runs only if `output` received a gradient.
  void record(const BasicTensor<T>& output, std::function<void()> backward_fn);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  // Seeds d(loss)/d(loss) = 1, replays in reverse execution order and clears.
  void backward(const BasicTensor<T>& loss);

 private:
  struct Entry {
    BasicTensor<T> output;
    std::function<void()> backward_fn;
  };
  std::vector<Entry> entries_;
};

using Tape = BasicTape<float>;

bool grad_enabled();

// Disables tape recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
void backward(const BasicTensor<T>& loss) {
  BasicTape<T>::current().backward(loss);
}

// True when recording is on and any input needs a gradient.
template <typename T>
bool should_record(std::initializer_list<const BasicTensor<T>*> inputs) {
  if (!grad_enabled()) return false;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

}  // namespace sghormer::ad
