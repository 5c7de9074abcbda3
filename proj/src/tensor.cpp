// avwake/tensor.cpp

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

#include "avwake/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

#include "avwake/errors.hpp"
#include "avwake/kernels.hpp"

namespace avwake {

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) {
      throw ShapeError("shape dims must be positive, got " + ShapeStr(shape));
    }
    n *= d;
  }
  return n;
}

std::string ShapeStr(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool SameShape(const Shape& a, const Shape& b) { return a == b; }

namespace {

// Exact-size free lists for tensor storage.  Training reallocates the same
// shapes every step; recycling buffers sidesteps allocator churn and the
// first-touch page faults that dominate large short-lived allocations.
// Leaked on purpose so release during static destruction stays valid.
class BufferPool {
 public:
  double* Acquire(size_t n) {
    auto it = free_.find(n);
    if (it != free_.end() && !it->second.empty()) {
      double* p = it->second.back();
      it->second.pop_back();
      cached_ -= n;
      return p;
    }
    return static_cast<double*>(::operator new(n * sizeof(double)));
  }

  void Release(double* p, size_t n) {
    if (cached_ + n > kMaxCachedDoubles) {
      ::operator delete(p);
      return;
    }
    free_[n].push_back(p);
    cached_ += n;
  }

 private:
  static constexpr size_t kMaxCachedDoubles = 260'000'000;  // ~2 GB
  std::unordered_map<size_t, std::vector<double*>> free_;
  size_t cached_ = 0;
};

BufferPool& ThePool() {
  static thread_local BufferPool* pool = new BufferPool();
  return *pool;
}

std::shared_ptr<double[]> AcquireShared(size_t n) {
  double* raw = ThePool().Acquire(n);
  return std::shared_ptr<double[]>(raw, [n](double* p) { ThePool().Release(p, n); });
}

}  // namespace

Tensor Tensor::Allocate(const Shape& shape, bool zero) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->numel = NumElements(shape);
  impl->data = AcquireShared(static_cast<size_t>(impl->numel));
  if (zero) std::memset(impl->data.get(), 0, sizeof(double) * impl->numel);
  return Tensor(std::move(impl));
}

Tensor Tensor::Zeros(const Shape& shape) {
  Tensor t = Allocate(shape, true);
  t.MarkFiniteChecked();
  return t;
}

Tensor Tensor::Uninitialized(const Shape& shape) { return Allocate(shape, false); }

Tensor Tensor::Full(const Shape& shape, double value) {
  if (!std::isfinite(value)) throw NumericError("Tensor::Full: non-finite fill value");
  Tensor t = Allocate(shape, false);
  double* p = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) p[i] = value;
  t.MarkFiniteChecked();
  return t;
}

Tensor Tensor::Scalar(double value) { return Full({1}, value); }

Tensor Tensor::FromData(const Shape& shape, std::vector<double> values) {
  Tensor t = Allocate(shape, false);
  if (static_cast<int64_t>(values.size()) != t.numel()) {
    throw ShapeError("Tensor::FromData: " + std::to_string(values.size()) +
                     " values for shape " + ShapeStr(shape));
  }
  std::memcpy(t.data(), values.data(), sizeof(double) * t.numel());
  if (!kernels::AllFinite(t.data(), static_cast<size_t>(t.numel()))) {
    throw NumericError("Tensor::FromData: non-finite input value");
  }
  t.MarkFiniteChecked();
  return t;
}

Tensor Tensor::Random(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor t = Allocate(shape, false);
  double* p = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) p[i] = rng.Uniform(lo, hi);
  t.MarkFiniteChecked();
  return t;
}

const Shape& Tensor::shape() const { return impl_->shape; }
int64_t Tensor::numel() const { return impl_->numel; }

int64_t Tensor::dim(size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw ShapeError("dim(" + std::to_string(axis) + ") on rank " +
                     std::to_string(impl_->shape.size()) + " tensor");
  }
  return impl_->shape[axis];
}

size_t Tensor::rank() const { return impl_->shape.size(); }

double* Tensor::data() {
  impl_->finite_checked = false;
  return impl_->data.get();
}
const double* Tensor::data() const { return impl_->data.get(); }

bool Tensor::finite_checked() const { return impl_->finite_checked; }
void Tensor::MarkFiniteChecked() const { impl_->finite_checked = true; }

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + ShapeStr(shape()));
  }
  return data()[0];
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  if (index.size() != rank()) {
    throw ShapeError("at(): index rank mismatch for shape " + ShapeStr(shape()));
  }
  int64_t flat = 0;
  size_t axis = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= impl_->shape[axis]) {
      throw ShapeError("at(): index out of bounds for shape " + ShapeStr(shape()));
    }
    flat = flat * impl_->shape[axis] + i;
    ++axis;
  }
  return data()[flat];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return impl_->leaf; }
const std::string& Tensor::name() const { return impl_->name; }
void Tensor::set_name(std::string name) { impl_->name = std::move(name); }

bool Tensor::has_grad() const { return impl_->grad != nullptr; }

const double* Tensor::grad_data() const { return impl_->grad.get(); }

double* Tensor::mutable_grad() {
  if (!impl_->grad) {
    impl_->grad = std::make_unique<double[]>(impl_->numel);  // zeroed
  }
  return impl_->grad.get();
}

Tensor Tensor::GradClone() const {
  Tensor g = Zeros(shape());
  if (impl_->grad) {
    std::memcpy(g.data(), impl_->grad.get(), sizeof(double) * impl_->numel);
  }
  return g;
}

void Tensor::ZeroGrad() {
  if (impl_->grad) {
    std::memset(impl_->grad.get(), 0, sizeof(double) * impl_->numel);
  }
}

void Tensor::AccumulateGrad(const double* g) {
  double* dst = mutable_grad();
  kernels::Add(dst, g, dst, static_cast<size_t>(impl_->numel));
}

Tensor Tensor::Clone() const {
  Tensor t = Uninitialized(shape());
  std::memcpy(t.data(), data(), sizeof(double) * numel());
  return t;
}

Tensor Tensor::ViewAs(const Shape& shape) const {
  if (NumElements(shape) != numel()) {
    throw ShapeError("view " + ShapeStr(this->shape()) + " as " + ShapeStr(shape) +
                     ": element count differs");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->numel = numel();
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

double* GradStore::Accumulator(detail::TensorImpl* t, int64_t numel) {
  auto it = buffers_.find(t);
  if (it == buffers_.end()) {
    it = buffers_.emplace(t, Tensor::Zeros({numel})).first;
  }
  return it->second.data();
}

const double* GradStore::Find(detail::TensorImpl* t) const {
  auto it = buffers_.find(t);
  return it == buffers_.end() ? nullptr : it->second.data();
}

void Tape::Record(Node node) {
  if (consumed_) {
    throw LifecycleError("recording onto a consumed tape; build a fresh graph");
  }
  nodes_.push_back(std::move(node));
}

GradMap Tape::Backward(const Tensor& loss) {
  if (consumed_) {
    throw LifecycleError("backward over an already consumed graph");
  }
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward expects a scalar loss, got shape " +
                        (loss.defined() ? ShapeStr(loss.shape()) : std::string("<undefined>")));
  }
  consumed_ = true;

  GradStore store;
  store.Accumulator(loss.impl(), 1)[0] = 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const double* g = store.Find(it->output.get());
    if (g == nullptr) continue;  // branch not on the path to the loss
    it->backward(g, store);
  }

  GradMap named;
  std::unordered_set<detail::TensorImpl*> seen;
  auto flush_leaf = [&](const Tensor& t) {
    detail::TensorImpl* impl = t.impl();
    if (!impl->leaf || !impl->requires_grad || !seen.insert(impl).second) return;
    const double* g = store.Find(impl);
    if (g == nullptr) return;
    const_cast<Tensor&>(t).AccumulateGrad(g);
    if (!impl->name.empty()) {
      Tensor copy = Tensor::FromData(impl->shape,
                                     std::vector<double>(g, g + impl->numel));
      named.emplace(impl->name, std::move(copy));
    }
  };
  for (const Node& node : nodes_) {
    for (const Tensor& input : node.inputs) flush_leaf(input);
  }
  flush_leaf(loss);

  nodes_.clear();
  nodes_.shrink_to_fit();
  return named;
}

namespace {
thread_local Tape* t_current_tape = nullptr;
}  // namespace

TapeScope::TapeScope(Tape& tape) : previous_(t_current_tape) { t_current_tape = &tape; }
TapeScope::~TapeScope() { t_current_tape = previous_; }
Tape* TapeScope::Current() { return t_current_tape; }

}  // namespace avwake
