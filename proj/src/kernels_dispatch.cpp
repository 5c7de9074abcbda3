// avwake/kernels_dispatch.cpp

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

#include "avwake/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "avwake/errors.hpp"
#include "kernels_lanes.hpp"

namespace avwake {
namespace kernels {

namespace {

bool CpuHasAvx2Fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend ResolveStartupBackend() {
  if (const char* env = std::getenv("AVWAKE_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::kScalar;
    if (std::strcmp(env, "avx2") == 0 && BackendSupported(Backend::kAvx2)) {
      return Backend::kAvx2;
    }
    return Backend::kScalar;
  }
  return BackendSupported(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<const KernelTable*>& ActiveTable() {
  static std::atomic<const KernelTable*> table{&Table(ResolveStartupBackend())};
  return table;
}

std::atomic<Backend>& ActiveEnum() {
  static std::atomic<Backend> b{ResolveStartupBackend()};
  return b;
}

}  // namespace

bool BackendSupported(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return Avx2TableOrNull() != nullptr && CpuHasAvx2Fma();
  }
  return false;
}

const KernelTable& Table(Backend b) {
  if (b == Backend::kAvx2) {
    const KernelTable* t = Avx2TableOrNull();
    if (t == nullptr) {
      throw ContractError("avx2 kernel backend not compiled in");
    }
    return *t;
  }
  return ScalarTable();
}

Backend ActiveBackend() { return ActiveEnum().load(std::memory_order_relaxed); }

void ForceBackend(Backend b) {
  if (!BackendSupported(b)) {
    throw ContractError(std::string("kernel backend unsupported on this host: ") +
                        BackendName(b));
  }
  ActiveTable().store(&Table(b), std::memory_order_relaxed);
  ActiveEnum().store(b, std::memory_order_relaxed);
}

const char* BackendName(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

#define AVWAKE_ACTIVE (*ActiveTable().load(std::memory_order_relaxed))

double Dot(const double* a, const double* b, size_t n) { return AVWAKE_ACTIVE.dot(a, b, n); }
double Sum(const double* x, size_t n) { return AVWAKE_ACTIVE.sum(x, n); }
void Add(const double* a, const double* b, double* y, size_t n) { AVWAKE_ACTIVE.add(a, b, y, n); }
void Sub(const double* a, const double* b, double* y, size_t n) { AVWAKE_ACTIVE.sub(a, b, y, n); }
void Mul(const double* a, const double* b, double* y, size_t n) { AVWAKE_ACTIVE.mul(a, b, y, n); }
void Axpy(double alpha, const double* x, double* y, size_t n) { AVWAKE_ACTIVE.axpy(alpha, x, y, n); }
void Axpy4(const double alpha[4], const double* x0, const double* x1, const double* x2,
           const double* x3, double* y, size_t n) {
  AVWAKE_ACTIVE.axpy4(alpha, x0, x1, x2, x3, y, n);
}
void Scale(const double* x, double alpha, double* y, size_t n) { AVWAKE_ACTIVE.scale(x, alpha, y, n); }
void Macc(const double* a, const double* b, double* y, size_t n) { AVWAKE_ACTIVE.macc(a, b, y, n); }
void Max(const double* a, const double* b, double* y, size_t n) { AVWAKE_ACTIVE.max(a, b, y, n); }
void MaxScalar(const double* x, double c, double* y, size_t n) { AVWAKE_ACTIVE.max_scalar(x, c, y, n); }
void AddScalar(const double* x, double c, double* y, size_t n) { AVWAKE_ACTIVE.add_scalar(x, c, y, n); }
bool AllFinite(const double* x, size_t n) { return AVWAKE_ACTIVE.all_finite(x, n); }
void MatMulAcc(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  AVWAKE_ACTIVE.matmul_acc(A, B, C, m, k, n);
}
void MatMulAccTransA(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  AVWAKE_ACTIVE.matmul_acc_ta(A, B, C, m, k, n);
}
void MatMulAccTransB(const double* A, const double* B, double* C, int64_t m, int64_t n, int64_t k) {
  AVWAKE_ACTIVE.matmul_acc_tb(A, B, C, m, n, k);
}
void DwConvForward(const double* x, const double* w, double* y, const DwDims& d) {
  AVWAKE_ACTIVE.dw_forward(x, w, y, d);
}
void DwConvBackData(const double* g, const double* w, double* dx, const DwDims& d) {
  AVWAKE_ACTIVE.dw_back_data(g, w, dx, d);
}
void DwConvBackWeights(const double* g, const double* x, double* dw, const DwDims& d) {
  AVWAKE_ACTIVE.dw_back_weights(g, x, dw, d);
}

#undef AVWAKE_ACTIVE

}  // namespace kernels
}  // namespace avwake
