// avwake/kernels.hpp

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

#ifndef AVWAKE_KERNELS_HPP_
#define AVWAKE_KERNELS_HPP_

#include <cstddef>
#include <cstdint>

namespace avwake {
namespace kernels {

// Dense f64 inner loops behind every tensor op.  Two backends: a scalar
// reference and an AVX2+FMA variant, selected once at startup (CPU probe,
// overridable via the AVWAKE_KERNELS env var or ForceBackend).
//
// Every routine is specified to produce bitwise-identical results on all
// backends.  Reductions (Dot, Sum) are defined over kLanes strided partial
// accumulators combined by a fixed tree; multiply-accumulate is fused
// (correctly rounded) on every path.  Inputs are assumed finite except for
// AllFinite itself.

inline constexpr size_t kLanes = 16;

enum class Backend { kScalar, kAvx2 };

Backend ActiveBackend();
bool BackendSupported(Backend b);
// Throws ContractError if the requested backend is unsupported on this CPU.
void ForceBackend(Backend b);
const char* BackendName(Backend b);

// sum_i a[i] * b[i], kLanes-strided accumulators, fused multiply-add.
double Dot(const double* a, const double* b, size_t n);
// sum_i x[i], same accumulator layout as Dot.
double Sum(const double* x, size_t n);

// y[i] = a[i] + b[i]
void Add(const double* a, const double* b, double* y, size_t n);
// y[i] = a[i] - b[i]
void Sub(const double* a, const double* b, double* y, size_t n);
// y[i] = a[i] * b[i]
void Mul(const double* a, const double* b, double* y, size_t n);
// y[i] = fma(alpha, x[i], y[i])
void Axpy(double alpha, const double* x, double* y, size_t n);
// y[i] = fma(a3,x3[i], fma(a2,x2[i], fma(a1,x1[i], fma(a0,x0[i], y[i]))))
void Axpy4(const double alpha[4], const double* x0, const double* x1,
           const double* x2, const double* x3, double* y, size_t n);
// y[i] = alpha * x[i]
void Scale(const double* x, double alpha, double* y, size_t n);
// y[i] = fma(a[i], b[i], y[i])
void Macc(const double* a, const double* b, double* y, size_t n);
// y[i] = max(a[i], b[i])
void Max(const double* a, const double* b, double* y, size_t n);
// y[i] = max(x[i], c)
void MaxScalar(const double* x, double c, double* y, size_t n);
// y[i] = x[i] + c
void AddScalar(const double* x, double c, double* y, size_t n);

// True iff every element is finite (no NaN / Inf).
bool AllFinite(const double* x, size_t n);

// Dense accumulating matmuls.  Per output element the reduction folds in
// ascending index order through fused multiply-adds, so every backend (and
// every internal blocking) produces identical bits.
//
// C[m,n] += A[m,k] * B[k,n]
void MatMulAcc(const double* A, const double* B, double* C, int64_t m,
               int64_t k, int64_t n);
// C[k,n] += A[m,k]^T * B[m,n]   (fold over rows of A ascending)
void MatMulAccTransA(const double* A, const double* B, double* C, int64_t m,
                     int64_t k, int64_t n);
// C[m,k] += A[m,n] * B[k,n]^T   (Dot reduction semantics per element)
void MatMulAccTransB(const double* A, const double* B, double* C, int64_t m,
                     int64_t n, int64_t k);

struct DwDims {
  int64_t batch, ch, h, w;
  int64_t kh, kw, sh, sw, ph, pw;
  int64_t ho, wo;
};

// Depthwise 2-D correlation.  Output contributions fold over taps (ky,kx)
// in ascending order through fused multiply-adds.
void DwConvForward(const double* x, const double* w, double* y, const DwDims& d);
// dx += w (*) g, the transposed correlation; same tap fold order.
void DwConvBackData(const double* g, const double* w, double* dx, const DwDims& d);
// dw accumulation; per tap the reduction runs 4 strided partial sums per
// output row (lane = relative column % 4), rows ascending, lanes folded as
// (l0+l2)+(l1+l3).
void DwConvBackWeights(const double* g, const double* x, double* dw, const DwDims& d);

// Per-backend dispatch table.  Exposed so the equivalence tests can drive
// a specific implementation directly.
struct KernelTable {
  double (*dot)(const double*, const double*, size_t);
  double (*sum)(const double*, size_t);
  void (*add)(const double*, const double*, double*, size_t);
  void (*sub)(const double*, const double*, double*, size_t);
  void (*mul)(const double*, const double*, double*, size_t);
  void (*axpy)(double, const double*, double*, size_t);
  void (*axpy4)(const double[4], const double*, const double*, const double*,
                const double*, double*, size_t);
  void (*scale)(const double*, double, double*, size_t);
  void (*macc)(const double*, const double*, double*, size_t);
  void (*max)(const double*, const double*, double*, size_t);
  void (*max_scalar)(const double*, double, double*, size_t);
  void (*add_scalar)(const double*, double, double*, size_t);
  bool (*all_finite)(const double*, size_t);
  void (*matmul_acc)(const double*, const double*, double*, int64_t, int64_t, int64_t);
  void (*matmul_acc_ta)(const double*, const double*, double*, int64_t, int64_t, int64_t);
  void (*matmul_acc_tb)(const double*, const double*, double*, int64_t, int64_t, int64_t);
  void (*dw_forward)(const double*, const double*, double*, const DwDims&);
  void (*dw_back_data)(const double*, const double*, double*, const DwDims&);
  void (*dw_back_weights)(const double*, const double*, double*, const DwDims&);
};

const KernelTable& Table(Backend b);

}  // namespace kernels
}  // namespace avwake

#endif  // AVWAKE_KERNELS_HPP_
