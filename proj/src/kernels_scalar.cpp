// avwake/kernels_scalar.cpp

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

// Reference backend.  The accumulation layout here (kLanes strided partial
// sums, fixed combine tree, fused multiply-add) is the contract every other
// backend must reproduce bit for bit.

#include "avwake/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "kernels_lanes.hpp"

namespace avwake {
namespace kernels {
namespace scalar {

double Dot(const double* a, const double* b, size_t n) {
  double acc[kLanes] = {0};
  for (size_t i = 0; i < n; ++i) {
    acc[i % kLanes] = std::fma(a[i], b[i], acc[i % kLanes]);
  }
  return CombineLaneTree(acc);
}

double Sum(const double* x, size_t n) {
  double acc[kLanes] = {0};
  for (size_t i = 0; i < n; ++i) acc[i % kLanes] += x[i];
  return CombineLaneTree(acc);
}

void Add(const double* a, const double* b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void Sub(const double* a, const double* b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void Mul(const double* a, const double* b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void Axpy(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void Axpy4(const double alpha[4], const double* x0, const double* x1,
           const double* x2, const double* x3, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    double v = std::fma(alpha[0], x0[i], y[i]);
    v = std::fma(alpha[1], x1[i], v);
    v = std::fma(alpha[2], x2[i], v);
    y[i] = std::fma(alpha[3], x3[i], v);
  }
}

void Scale(const double* x, double alpha, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}

void Macc(const double* a, const double* b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::fma(a[i], b[i], y[i]);
}

void Max(const double* a, const double* b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::max(a[i], b[i]);
}

void MaxScalar(const double* x, double c, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::max(x[i], c);
}

void AddScalar(const double* x, double c, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] + c;
}

bool AllFinite(const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

void MatMulAcc(const double* A, const double* B, double* C, int64_t m,
               int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    double* crow = C + i * n;
    for (int64_t j = 0; j < n; ++j) {
      double c = crow[j];
      for (int64_t l = 0; l < k; ++l) c = std::fma(arow[l], B[l * n + j], c);
      crow[j] = c;
    }
  }
}

void MatMulAccTransA(const double* A, const double* B, double* C, int64_t m,
                     int64_t k, int64_t n) {
  for (int64_t j = 0; j < k; ++j) {
    double* crow = C + j * n;
    for (int64_t col = 0; col < n; ++col) {
      double c = crow[col];
      for (int64_t i = 0; i < m; ++i) {
        c = std::fma(A[i * k + j], B[i * n + col], c);
      }
      crow[col] = c;
    }
  }
}

void MatMulAccTransB(const double* A, const double* B, double* C, int64_t m,
                     int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = A + i * n;
    for (int64_t j = 0; j < k; ++j) {
      C[i * k + j] += Dot(arow, B + j * n, static_cast<size_t>(n));
    }
  }
}

void DwConvForward(const double* x, const double* w, double* y, const DwDims& d) {
  const int64_t plane_in = d.h * d.w;
  const int64_t plane_out = d.ho * d.wo;
  for (int64_t b = 0; b < d.batch; ++b) {
    for (int64_t c = 0; c < d.ch; ++c) {
      const double* xp = x + (b * d.ch + c) * plane_in;
      double* yp = y + (b * d.ch + c) * plane_out;
      for (int64_t ky = 0; ky < d.kh; ++ky) {
        for (int64_t kx = 0; kx < d.kw; ++kx) {
          const double wv = w[(c * d.kh + ky) * d.kw + kx];
          int64_t ox0, ox1;
          DwValidRange(kx, d.pw, d.w, d.wo, d.sw, &ox0, &ox1);
          const int64_t base = kx - d.pw;
          for (int64_t oy = 0; oy < d.ho; ++oy) {
            const int64_t iy = oy * d.sh + ky - d.ph;
            if (iy < 0 || iy >= d.h) continue;
            const double* xrow = xp + iy * d.w;
            double* yrow = yp + oy * d.wo;
            for (int64_t ox = ox0; ox < ox1; ++ox) {
              yrow[ox] = std::fma(wv, xrow[ox * d.sw + base], yrow[ox]);
            }
          }
        }
      }
    }
  }
}

void DwConvBackData(const double* g, const double* w, double* dx, const DwDims& d) {
  const int64_t plane_in = d.h * d.w;
  const int64_t plane_out = d.ho * d.wo;
  for (int64_t b = 0; b < d.batch; ++b) {
    for (int64_t c = 0; c < d.ch; ++c) {
      const double* gp = g + (b * d.ch + c) * plane_out;
      double* dxp = dx + (b * d.ch + c) * plane_in;
      for (int64_t ky = 0; ky < d.kh; ++ky) {
        for (int64_t kx = 0; kx < d.kw; ++kx) {
          const double wv = w[(c * d.kh + ky) * d.kw + kx];
          int64_t ox0, ox1;
          DwValidRange(kx, d.pw, d.w, d.wo, d.sw, &ox0, &ox1);
          const int64_t base = kx - d.pw;
          for (int64_t oy = 0; oy < d.ho; ++oy) {
            const int64_t iy = oy * d.sh + ky - d.ph;
            if (iy < 0 || iy >= d.h) continue;
            const double* grow = gp + oy * d.wo;
            double* dxrow = dxp + iy * d.w;
            for (int64_t ox = ox0; ox < ox1; ++ox) {
              dxrow[ox * d.sw + base] = std::fma(wv, grow[ox], dxrow[ox * d.sw + base]);
            }
          }
        }
      }
    }
  }
}

void DwConvBackWeights(const double* g, const double* x, double* dw, const DwDims& d) {
  const int64_t plane_in = d.h * d.w;
  const int64_t plane_out = d.ho * d.wo;
  for (int64_t b = 0; b < d.batch; ++b) {
    for (int64_t c = 0; c < d.ch; ++c) {
      const double* xp = x + (b * d.ch + c) * plane_in;
      const double* gp = g + (b * d.ch + c) * plane_out;
      for (int64_t ky = 0; ky < d.kh; ++ky) {
        for (int64_t kx = 0; kx < d.kw; ++kx) {
          int64_t ox0, ox1;
          DwValidRange(kx, d.pw, d.w, d.wo, d.sw, &ox0, &ox1);
          const int64_t base = kx - d.pw;
          double lanes[4] = {0, 0, 0, 0};
          for (int64_t oy = 0; oy < d.ho; ++oy) {
            const int64_t iy = oy * d.sh + ky - d.ph;
            if (iy < 0 || iy >= d.h) continue;
            const double* grow = gp + oy * d.wo;
            const double* xrow = xp + iy * d.w;
            for (int64_t ox = ox0; ox < ox1; ++ox) {
              const int64_t lane = (ox - ox0) & 3;
              lanes[lane] = std::fma(grow[ox], xrow[ox * d.sw + base], lanes[lane]);
            }
          }
          dw[(c * d.kh + ky) * d.kw + kx] += (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
        }
      }
    }
  }
}

}  // namespace scalar

const KernelTable& ScalarTable() {
  static const KernelTable table = {
      scalar::Dot,          scalar::Sum,
      scalar::Add,          scalar::Sub,
      scalar::Mul,          scalar::Axpy,
      scalar::Axpy4,        scalar::Scale,
      scalar::Macc,         scalar::Max,
      scalar::MaxScalar,    scalar::AddScalar,
      scalar::AllFinite,    scalar::MatMulAcc,
      scalar::MatMulAccTransA, scalar::MatMulAccTransB,
      scalar::DwConvForward,   scalar::DwConvBackData,
      scalar::DwConvBackWeights};
  return table;
}

}  // namespace kernels
}  // namespace avwake
