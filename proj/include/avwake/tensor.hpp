// avwake/tensor.hpp

// Copyright 2026  The avwake authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AVWAKE_TENSOR_HPP_
#define AVWAKE_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "avwake/rng.hpp"

namespace avwake {

// Row-major dense shape; every dim strictly positive.
using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeStr(const Shape& shape);
bool SameShape(const Shape& a, const Shape& b);

namespace detail {

struct TensorImpl {
  Shape shape;
  std::shared_ptr<double[]> data;  // shared between reshape views
  int64_t numel = 0;
  std::unique_ptr<double[]> grad;  // leaves only, lazily allocated zeroed
  bool requires_grad = false;
  bool leaf = true;
  // Memo for boundary checks: true once the buffer is known finite.  Any
  // mutable access to the data drops it.
  bool finite_checked = false;
  std::string name;  // registry-assigned, may be empty
};

}  // namespace detail

// Value-semantic handle onto a dense f64 buffer.  Copies share storage;
// ops never mutate their inputs.  Gradient state lives on leaf tensors
// (parameters); intermediate gradients are tape-local.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(const Shape& shape);
  static Tensor Full(const Shape& shape, double value);
  static Tensor Scalar(double value);
  static Tensor FromData(const Shape& shape, std::vector<double> values);
  // Uninitialized storage; caller must fill every element.
  static Tensor Uninitialized(const Shape& shape);
  static Tensor Random(const Shape& shape, Rng& rng, double lo, double hi);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int64_t numel() const;
  int64_t dim(size_t axis) const;
  size_t rank() const;

  double* data();  // invalidates the finite-checked memo
  const double* data() const;
  bool finite_checked() const;
  void MarkFiniteChecked() const;
  // Value of a single-element tensor.
  double item() const;
  double at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const;
  const std::string& name() const;
  void set_name(std::string name);

  bool has_grad() const;
  const double* grad_data() const;
  double* mutable_grad();  // allocates zeroed buffer on first use
  Tensor GradClone() const;
  void ZeroGrad();
  void AccumulateGrad(const double* g);

  // Deep copy of the value buffer; grad state not copied.
  Tensor Clone() const;
  // View with a different shape over the same storage.
  Tensor ViewAs(const Shape& shape) const;

  detail::TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<detail::TensorImpl>& impl_ptr() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  static Tensor Allocate(const Shape& shape, bool zero);

  std::shared_ptr<detail::TensorImpl> impl_;
};

// Accumulates gradients for the tensors touched by one backward sweep.
class GradStore {
 public:
  // Buffer for t, zero-initialized on first request.
  double* Accumulator(detail::TensorImpl* t, int64_t numel);
  const double* Find(detail::TensorImpl* t) const;

 private:
  std::unordered_map<detail::TensorImpl*, Tensor> buffers_;
};

// Gradients of named leaves after a backward pass.
using GradMap = std::map<std::string, Tensor>;

// Dynamic compute graph: ops append records in execution order (which is a
// topological order), one backward sweep consumes the tape in reverse.
class Tape {
 public:
  struct Node {
    const char* op;
    std::vector<Tensor> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    std::function<void(const double* grad_out, GradStore& store)> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void Record(Node node);
  size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Seeds d(loss)/d(loss)=1, sweeps the tape in reverse, accumulates into
  // every requires-grad leaf's grad buffer and returns the named slice of
  // those gradients.  The graph is freed afterwards; a second call throws
  // LifecycleError, a non-scalar loss throws ContractError.
  GradMap Backward(const Tensor& loss);

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// RAII activation of a tape on the current thread.  Ops record themselves
// onto the innermost active tape; with no active tape, forward runs in
// inference mode and tracks nothing.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  static Tape* Current();

 private:
  Tape* previous_;
};

}  // namespace avwake

#endif  // AVWAKE_TENSOR_HPP_
