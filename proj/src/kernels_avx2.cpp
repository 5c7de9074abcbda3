// avwake/kernels_avx2.cpp

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

// AVX2+FMA backend.  Mirrors the scalar reference bit for bit: reductions
// keep kLanes strided partials (vector k, lane j holds indices == 4k+j mod
// kLanes) and fold through CombineLaneTree; elementwise FMA chains apply in
// the same order per element.

#include "avwake/kernels.hpp"

#include "kernels_lanes.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace avwake {
namespace kernels {
namespace avx2 {

namespace {

inline double ReduceTail(__m256d v0, __m256d v1, __m256d v2, __m256d v3,
                         const double* a, const double* b, size_t n,
                         size_t done) {
  alignas(32) double acc[kLanes];
  _mm256_store_pd(acc + 0, v0);
  _mm256_store_pd(acc + 4, v1);
  _mm256_store_pd(acc + 8, v2);
  _mm256_store_pd(acc + 12, v3);
  for (size_t i = done; i < n; ++i) {
    if (b != nullptr) {
      acc[i % kLanes] = std::fma(a[i], b[i], acc[i % kLanes]);
    } else {
      acc[i % kLanes] += a[i];
    }
  }
  return CombineLaneTree(acc);
}

}  // namespace

double Dot(const double* a, const double* b, size_t n) {
  __m256d v0 = _mm256_setzero_pd();
  __m256d v1 = _mm256_setzero_pd();
  __m256d v2 = _mm256_setzero_pd();
  __m256d v3 = _mm256_setzero_pd();
  const size_t n16 = n - n % kLanes;
  for (size_t i = 0; i < n16; i += kLanes) {
    v0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 0), _mm256_loadu_pd(b + i + 0), v0);
    v1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), v1);
    v2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), v2);
    v3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), v3);
  }
  return ReduceTail(v0, v1, v2, v3, a, b, n, n16);
}

double Sum(const double* x, size_t n) {
  __m256d v0 = _mm256_setzero_pd();
  __m256d v1 = _mm256_setzero_pd();
  __m256d v2 = _mm256_setzero_pd();
  __m256d v3 = _mm256_setzero_pd();
  const size_t n16 = n - n % kLanes;
  for (size_t i = 0; i < n16; i += kLanes) {
    v0 = _mm256_add_pd(v0, _mm256_loadu_pd(x + i + 0));
    v1 = _mm256_add_pd(v1, _mm256_loadu_pd(x + i + 4));
    v2 = _mm256_add_pd(v2, _mm256_loadu_pd(x + i + 8));
    v3 = _mm256_add_pd(v3, _mm256_loadu_pd(x + i + 12));
  }
  return ReduceTail(v0, v1, v2, v3, x, nullptr, n, n16);
}

void Add(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void Sub(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) y[i] = a[i] - b[i];
}

void Mul(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void Axpy(double alpha, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void Axpy4(const double alpha[4], const double* x0, const double* x1,
           const double* x2, const double* x3, double* y, size_t n) {
  const __m256d a0 = _mm256_set1_pd(alpha[0]);
  const __m256d a1 = _mm256_set1_pd(alpha[1]);
  const __m256d a2 = _mm256_set1_pd(alpha[2]);
  const __m256d a3 = _mm256_set1_pd(alpha[3]);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_fmadd_pd(a0, _mm256_loadu_pd(x0 + i), _mm256_loadu_pd(y + i));
    v = _mm256_fmadd_pd(a1, _mm256_loadu_pd(x1 + i), v);
    v = _mm256_fmadd_pd(a2, _mm256_loadu_pd(x2 + i), v);
    v = _mm256_fmadd_pd(a3, _mm256_loadu_pd(x3 + i), v);
    _mm256_storeu_pd(y + i, v);
  }
  for (; i < n; ++i) {
    double v = std::fma(alpha[0], x0[i], y[i]);
    v = std::fma(alpha[1], x1[i], v);
    v = std::fma(alpha[2], x2[i], v);
    y[i] = std::fma(alpha[3], x3[i], v);
  }
}

void Scale(const double* x, double alpha, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] = alpha * x[i];
}

void Macc(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                               _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a[i], b[i], y[i]);
}

void Max(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(b + i), _mm256_loadu_pd(a + i)));
  }
  for (; i < n; ++i) y[i] = std::max(a[i], b[i]);
}

void MaxScalar(const double* x, double c, double* y, size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(vc, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] = std::max(x[i], c);
}

void AddScalar(const double* x, double c, double* y, size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(vc, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] = x[i] + c;
}

bool AllFinite(const double* x, size_t n) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d inf = _mm256_set1_pd(__builtin_inf());
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_and_pd(abs_mask, _mm256_loadu_pd(x + i));
    const __m256d ok = _mm256_cmp_pd(v, inf, _CMP_LT_OQ);
    if (_mm256_movemask_pd(ok) != 0xf) return false;
  }
  for (; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

// Row-of-Cblocked path; per element the fold over l is ascending, matching
// the scalar backend's inner loop.
void MatMulAcc(const double* A, const double* B, double* C, int64_t m,
               int64_t k, int64_t n) {
  if (n < 8) {
    for (int64_t i = 0; i < m; ++i) {
      const double* arow = A + i * k;
      double* crow = C + i * n;
      for (int64_t j = 0; j < n; ++j) {
        double c = crow[j];
        for (int64_t l = 0; l < k; ++l) c = std::fma(arow[l], B[l * n + j], c);
        crow[j] = c;
      }
    }
    return;
  }
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    double* crow = C + i * n;
    int64_t l = 0;
    for (; l + 4 <= k; l += 4) {
      const __m256d a0 = _mm256_set1_pd(arow[l]);
      const __m256d a1 = _mm256_set1_pd(arow[l + 1]);
      const __m256d a2 = _mm256_set1_pd(arow[l + 2]);
      const __m256d a3 = _mm256_set1_pd(arow[l + 3]);
      const double* b0 = B + l * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      int64_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d v = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), _mm256_loadu_pd(crow + j));
        v = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), v);
        v = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b2 + j), v);
        v = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b3 + j), v);
        _mm256_storeu_pd(crow + j, v);
      }
      for (; j < n; ++j) {
        double c = std::fma(arow[l], b0[j], crow[j]);
        c = std::fma(arow[l + 1], b1[j], c);
        c = std::fma(arow[l + 2], b2[j], c);
        crow[j] = std::fma(arow[l + 3], b3[j], c);
      }
    }
    for (; l < k; ++l) {
      const __m256d a = _mm256_set1_pd(arow[l]);
      const double* brow = B + l * n;
      int64_t j = 0;
      for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + j),
                                                   _mm256_loadu_pd(crow + j)));
      }
      for (; j < n; ++j) crow[j] = std::fma(arow[l], brow[j], crow[j]);
    }
  }
}

void MatMulAccTransA(const double* A, const double* B, double* C, int64_t m,
                     int64_t k, int64_t n) {
  if (n < 8) {
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
    return;
  }
  for (int64_t j = 0; j < k; ++j) {
    double* crow = C + j * n;
    int64_t i = 0;
    for (; i + 4 <= m; i += 4) {
      const __m256d a0 = _mm256_set1_pd(A[i * k + j]);
      const __m256d a1 = _mm256_set1_pd(A[(i + 1) * k + j]);
      const __m256d a2 = _mm256_set1_pd(A[(i + 2) * k + j]);
      const __m256d a3 = _mm256_set1_pd(A[(i + 3) * k + j]);
      const double* b0 = B + i * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      int64_t col = 0;
      for (; col + 4 <= n; col += 4) {
        __m256d v = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + col), _mm256_loadu_pd(crow + col));
        v = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + col), v);
        v = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b2 + col), v);
        v = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b3 + col), v);
        _mm256_storeu_pd(crow + col, v);
      }
      for (; col < n; ++col) {
        double c = std::fma(A[i * k + j], b0[col], crow[col]);
        c = std::fma(A[(i + 1) * k + j], b1[col], c);
        c = std::fma(A[(i + 2) * k + j], b2[col], c);
        crow[col] = std::fma(A[(i + 3) * k + j], b3[col], c);
      }
    }
    for (; i < m; ++i) {
      const __m256d a = _mm256_set1_pd(A[i * k + j]);
      const double* brow = B + i * n;
      int64_t col = 0;
      for (; col + 4 <= n; col += 4) {
        _mm256_storeu_pd(crow + col, _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + col),
                                                     _mm256_loadu_pd(crow + col)));
      }
      for (; col < n; ++col) crow[col] = std::fma(A[i * k + j], brow[col], crow[col]);
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
          const __m256d wv4 = _mm256_set1_pd(wv);
          int64_t ox0, ox1;
          DwValidRange(kx, d.pw, d.w, d.wo, d.sw, &ox0, &ox1);
          const int64_t base = kx - d.pw;
          for (int64_t oy = 0; oy < d.ho; ++oy) {
            const int64_t iy = oy * d.sh + ky - d.ph;
            if (iy < 0 || iy >= d.h) continue;
            const double* xrow = xp + iy * d.w;
            double* yrow = yp + oy * d.wo;
            if (d.sw == 1) {
              const double* xseg = xrow + ox0 + base;
              int64_t r = 0;
              const int64_t len = ox1 - ox0;
              double* yseg = yrow + ox0;
              for (; r + 4 <= len; r += 4) {
                _mm256_storeu_pd(yseg + r,
                                 _mm256_fmadd_pd(wv4, _mm256_loadu_pd(xseg + r),
                                                 _mm256_loadu_pd(yseg + r)));
              }
              for (; r < len; ++r) yseg[r] = std::fma(wv, xseg[r], yseg[r]);
            } else {
              for (int64_t ox = ox0; ox < ox1; ++ox) {
                yrow[ox] = std::fma(wv, xrow[ox * d.sw + base], yrow[ox]);
              }
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
          const __m256d wv4 = _mm256_set1_pd(wv);
          int64_t ox0, ox1;
          DwValidRange(kx, d.pw, d.w, d.wo, d.sw, &ox0, &ox1);
          const int64_t base = kx - d.pw;
          for (int64_t oy = 0; oy < d.ho; ++oy) {
            const int64_t iy = oy * d.sh + ky - d.ph;
            if (iy < 0 || iy >= d.h) continue;
            const double* grow = gp + oy * d.wo;
            double* dxrow = dxp + iy * d.w;
            if (d.sw == 1) {
              double* dseg = dxrow + ox0 + base;
              const double* gseg = grow + ox0;
              const int64_t len = ox1 - ox0;
              int64_t r = 0;
              for (; r + 4 <= len; r += 4) {
                _mm256_storeu_pd(dseg + r,
                                 _mm256_fmadd_pd(wv4, _mm256_loadu_pd(gseg + r),
                                                 _mm256_loadu_pd(dseg + r)));
              }
              for (; r < len; ++r) dseg[r] = std::fma(wv, gseg[r], dseg[r]);
            } else {
              for (int64_t ox = ox0; ox < ox1; ++ox) {
                dxrow[ox * d.sw + base] = std::fma(wv, grow[ox], dxrow[ox * d.sw + base]);
              }
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
          const int64_t len = ox1 - ox0;
          __m256d acc = _mm256_setzero_pd();
          if (d.sw == 1) {
            // Partial final vector handled with a masked load; masked-out
            // lanes contribute fma(0,0,lane) and stay untouched.
            const int64_t rem = len & 3;
            const int64_t len4 = len - rem;
            const __m256i tail_mask = _mm256_set_epi64x(
                rem > 3 ? -1 : 0, rem > 2 ? -1 : 0, rem > 1 ? -1 : 0, rem > 0 ? -1 : 0);
            for (int64_t oy = 0; oy < d.ho; ++oy) {
              const int64_t iy = oy * d.sh + ky - d.ph;
              if (iy < 0 || iy >= d.h) continue;
              const double* gseg = gp + oy * d.wo + ox0;
              const double* xseg = xp + iy * d.w + ox0 + base;
              int64_t r = 0;
              for (; r < len4; r += 4) {
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(gseg + r),
                                      _mm256_loadu_pd(xseg + r), acc);
              }
              if (rem) {
                acc = _mm256_fmadd_pd(_mm256_maskload_pd(gseg + r, tail_mask),
                                      _mm256_maskload_pd(xseg + r, tail_mask), acc);
              }
            }
          } else {
            alignas(32) double lanes[4] = {0, 0, 0, 0};
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
            acc = _mm256_load_pd(lanes);
          }
          const __m128d lo = _mm256_castpd256_pd128(acc);
          const __m128d hi = _mm256_extractf128_pd(acc, 1);
          const __m128d s = _mm_add_pd(lo, hi);  // (l0+l2, l1+l3)
          dw[(c * d.kh + ky) * d.kw + kx] +=
              _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
        }
      }
    }
  }
}

}  // namespace avx2

const KernelTable* Avx2TableOrNull() {
  static const KernelTable table = {
      avx2::Dot,          avx2::Sum,
      avx2::Add,          avx2::Sub,
      avx2::Mul,          avx2::Axpy,
      avx2::Axpy4,        avx2::Scale,
      avx2::Macc,         avx2::Max,
      avx2::MaxScalar,    avx2::AddScalar,
      avx2::AllFinite,    avx2::MatMulAcc,
      avx2::MatMulAccTransA, avx2::MatMulAccTransB,
      avx2::DwConvForward,   avx2::DwConvBackData,
      avx2::DwConvBackWeights};
  return &table;
}

}  // namespace kernels
}  // namespace avwake

#else  // !(__AVX2__ && __FMA__)

namespace avwake {
namespace kernels {

const KernelTable* Avx2TableOrNull() { return nullptr; }

}  // namespace kernels
}  // namespace avwake

#endif
