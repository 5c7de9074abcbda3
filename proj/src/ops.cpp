// avwake/ops.cpp

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

#include "avwake/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "avwake/errors.hpp"
#include "avwake/kernels.hpp"

namespace avwake {

namespace {

using BackwardFn = std::function<void(const double*, GradStore&)>;

void CheckFiniteInput(const char* op, const Tensor& t) {
  if (t.finite_checked()) return;
  const double* raw = static_cast<const Tensor&>(t).data();
  if (!kernels::AllFinite(raw, static_cast<size_t>(t.numel()))) {
    throw NumericError(std::string(op) + ": non-finite input value");
  }
  t.MarkFiniteChecked();
}

bool AnyRequiresGrad(const std::vector<Tensor>& inputs) {
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

// Attaches `out` to the active tape when gradients are being tracked.
void RecordNode(const char* op, std::vector<Tensor> inputs, Tensor& out,
                BackwardFn fn) {
  Tape* tape = TapeScope::Current();
  const bool track = tape != nullptr && AnyRequiresGrad(inputs);
  out.impl()->requires_grad = track;
  out.impl()->leaf = !track;
  if (track) {
    tape->Record(Tape::Node{op, std::move(inputs), out.impl_ptr(), std::move(fn)});
  }
}

double* Accum(GradStore& store, const Tensor& t) {
  return store.Accumulator(t.impl(), t.numel());
}

bool IsScalarLike(const Tensor& t) { return t.numel() == 1; }

// ---------------------------------------------------------------------------
// Elementwise binaries with single-element broadcast.
// ---------------------------------------------------------------------------

enum class BinOp { kAdd, kMul, kMax };

const char* BinOpName(BinOp op) {
  switch (op) {
    case BinOp::kAdd: return "add";
    case BinOp::kMul: return "mul";
    case BinOp::kMax: return "max";
  }
  return "?";
}

Tensor Binary(BinOp op, const Tensor& a, const Tensor& b) {
  const char* name = BinOpName(op);
  CheckFiniteInput(name, a);
  CheckFiniteInput(name, b);

  const bool a_scalar = IsScalarLike(a);
  const bool b_scalar = IsScalarLike(b);
  if (!a_scalar && !b_scalar && !SameShape(a.shape(), b.shape())) {
    throw ShapeError(std::string(name) + ": shape mismatch " + ShapeStr(a.shape()) +
                     " vs " + ShapeStr(b.shape()));
  }
  // All three binaries are commutative in value; orient so that a broadcast
  // operand is always on the right.
  if (a_scalar && !b_scalar) return Binary(op, b, a);

  const size_t n = static_cast<size_t>(a.numel());
  Tensor out = Tensor::Uninitialized(a.shape());
  if (b_scalar && !a_scalar) {
    const double c = b.data()[0];
    switch (op) {
      case BinOp::kAdd: kernels::AddScalar(a.data(), c, out.data(), n); break;
      case BinOp::kMul: kernels::Scale(a.data(), c, out.data(), n); break;
      case BinOp::kMax: kernels::MaxScalar(a.data(), c, out.data(), n); break;
    }
  } else {
    switch (op) {
      case BinOp::kAdd: kernels::Add(a.data(), b.data(), out.data(), n); break;
      case BinOp::kMul: kernels::Mul(a.data(), b.data(), out.data(), n); break;
      case BinOp::kMax: kernels::Max(a.data(), b.data(), out.data(), n); break;
    }
  }

  const bool broadcast = b_scalar && !a_scalar;
  // max of finite operands stays finite; so does scaling by a unit factor.
  if (op == BinOp::kMax ||
      (op == BinOp::kMul && broadcast && std::fabs(b.data()[0]) == 1.0)) {
    out.MarkFiniteChecked();
  }
  RecordNode(name, {a, b}, out,
             [op, a, b, out, broadcast, n](const double* g, GradStore& store) {
               switch (op) {
                 case BinOp::kAdd: {
                   if (a.requires_grad()) {
                     double* da = Accum(store, a);
                     kernels::Add(da, g, da, n);
                   }
                   if (b.requires_grad()) {
                     double* db = Accum(store, b);
                     if (broadcast) {
                       db[0] += kernels::Sum(g, n);
                     } else {
                       kernels::Add(db, g, db, n);
                     }
                   }
                   break;
                 }
                 case BinOp::kMul: {
                   if (a.requires_grad()) {
                     double* da = Accum(store, a);
                     if (broadcast) {
                       kernels::Axpy(b.data()[0], g, da, n);
                     } else {
                       kernels::Macc(g, b.data(), da, n);
                     }
                   }
                   if (b.requires_grad()) {
                     double* db = Accum(store, b);
                     if (broadcast) {
                       db[0] += kernels::Dot(g, a.data(), n);
                     } else {
                       kernels::Macc(g, a.data(), db, n);
                     }
                   }
                   break;
                 }
                 case BinOp::kMax: {
                   // Subgradient: ties route to the left operand.  Branchless
                   // selects so the loops vectorize.
                   const double* av = a.data();
                   const double* bv = b.data();
                   double* da = a.requires_grad() ? Accum(store, a) : nullptr;
                   double* db = b.requires_grad() ? Accum(store, b) : nullptr;
                   if (broadcast) {
                     const double c = bv[0];
                     if (da != nullptr) {
                       for (size_t i = 0; i < n; ++i) {
                         da[i] += av[i] >= c ? g[i] : 0.0;
                       }
                     }
                     if (db != nullptr) {
                       double db_sum = 0.0;
                       for (size_t i = 0; i < n; ++i) {
                         db_sum += av[i] >= c ? 0.0 : g[i];
                       }
                       db[0] += db_sum;
                     }
                   } else {
                     if (da != nullptr) {
                       for (size_t i = 0; i < n; ++i) {
                         da[i] += av[i] >= bv[i] ? g[i] : 0.0;
                       }
                     }
                     if (db != nullptr) {
                       for (size_t i = 0; i < n; ++i) {
                         db[i] += av[i] >= bv[i] ? 0.0 : g[i];
                       }
                     }
                   }
                   break;
                 }
               }
             });
  return out;
}

// ---------------------------------------------------------------------------
// Convolution plumbing.
// ---------------------------------------------------------------------------

struct ConvDims {
  int64_t batch, cin, h, w;
  int64_t cout, kh, kw;
  int64_t sh, sw, ph, pw;
  int64_t ho, wo;
  int64_t rows;  // cin*kh*kw
  int64_t cols;  // ho*wo
};

int64_t ConvOutDim(int64_t in, int64_t kernel, int64_t stride, int64_t pad,
                   const char* op) {
  const int64_t span = in + 2 * pad - kernel;
  if (span < 0) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(kernel) +
                     " larger than padded input " + std::to_string(in + 2 * pad));
  }
  return span / stride + 1;
}

// Valid output-x range for which the source column ox*sw + kx - pw lies in
// [0, w); only meaningful for sw == 1 fast paths.
void ValidXRange(int64_t kx, int64_t pw, int64_t w, int64_t wo, int64_t* ox0,
                 int64_t* ox1) {
  *ox0 = std::max<int64_t>(0, pw - kx);
  *ox1 = std::min<int64_t>(wo, w - kx + pw);
  if (*ox1 < *ox0) *ox1 = *ox0;
}

// Patch matrix P [rows, cols] for one image x [cin,h,w].
void Im2Col(const double* x, const ConvDims& d, double* P) {
  for (int64_t c = 0; c < d.cin; ++c) {
    for (int64_t ky = 0; ky < d.kh; ++ky) {
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        double* prow = P + ((c * d.kh + ky) * d.kw + kx) * d.cols;
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          const int64_t iy = oy * d.sh + ky - d.ph;
          double* seg = prow + oy * d.wo;
          if (iy < 0 || iy >= d.h) {
            std::memset(seg, 0, sizeof(double) * d.wo);
            continue;
          }
          const double* xrow = x + (c * d.h + iy) * d.w;
          if (d.sw == 1) {
            int64_t ox0, ox1;
            ValidXRange(kx, d.pw, d.w, d.wo, &ox0, &ox1);
            if (ox0 > 0) std::memset(seg, 0, sizeof(double) * ox0);
            if (ox1 > ox0) {
              std::memcpy(seg + ox0, xrow + ox0 + kx - d.pw,
                          sizeof(double) * (ox1 - ox0));
            }
            if (ox1 < d.wo) std::memset(seg + ox1, 0, sizeof(double) * (d.wo - ox1));
          } else {
            for (int64_t ox = 0; ox < d.wo; ++ox) {
              const int64_t ix = ox * d.sw + kx - d.pw;
              seg[ox] = (ix >= 0 && ix < d.w) ? xrow[ix] : 0.0;
            }
          }
        }
      }
    }
  }
}

// Scatter-add of a patch-matrix gradient back into dx [cin,h,w].
void Col2ImAdd(const double* P, const ConvDims& d, double* dx) {
  for (int64_t c = 0; c < d.cin; ++c) {
    for (int64_t ky = 0; ky < d.kh; ++ky) {
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        const double* prow = P + ((c * d.kh + ky) * d.kw + kx) * d.cols;
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          const int64_t iy = oy * d.sh + ky - d.ph;
          if (iy < 0 || iy >= d.h) continue;
          double* xrow = dx + (c * d.h + iy) * d.w;
          const double* seg = prow + oy * d.wo;
          if (d.sw == 1) {
            int64_t ox0, ox1;
            ValidXRange(kx, d.pw, d.w, d.wo, &ox0, &ox1);
            if (ox1 > ox0) {
              double* dst = xrow + ox0 + kx - d.pw;
              kernels::Add(dst, seg + ox0, dst, static_cast<size_t>(ox1 - ox0));
            }
          } else {
            for (int64_t ox = 0; ox < d.wo; ++ox) {
              const int64_t ix = ox * d.sw + kx - d.pw;
              if (ix >= 0 && ix < d.w) xrow[ix] += seg[ox];
            }
          }
        }
      }
    }
  }
}

std::vector<double>& PatchScratch() {
  thread_local std::vector<double> buf;
  return buf;
}

std::vector<double>& PatchGradScratch() {
  thread_local std::vector<double> buf;
  return buf;
}

std::vector<double>& PatchTransposeScratch() {
  thread_local std::vector<double> buf;
  return buf;
}

void TransposeInto(const double* src, int64_t rows, int64_t cols, double* dst) {
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

void CheckStride(const char* op, int stride_h, int stride_w) {
  if (stride_h < 1 || stride_w < 1) {
    throw ContractError(std::string(op) + ": strides must be >= 1");
  }
}

}  // namespace

const char* OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kDepthwiseConv2d: return "depthwise-conv2d";
    case OpKind::kConcat: return "concat";
    case OpKind::kAvgPool: return "avg-pool";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kLog: return "log";
    case OpKind::kSlice: return "slice";
    case OpKind::kReshape: return "reshape";
    case OpKind::kMax: return "elementwise-max";
    case OpKind::kSum: return "sum";
    case OpKind::kAddBias: return "add-bias";
  }
  return "?";
}

OpKind ParseOpKind(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(OpKind::kAddBias); ++k) {
    if (name == OpKindName(static_cast<OpKind>(k))) return static_cast<OpKind>(k);
  }
  throw ContractError("unknown op kind: " + std::string(name));
}

Tensor Add(const Tensor& a, const Tensor& b) { return Binary(BinOp::kAdd, a, b); }
Tensor Mul(const Tensor& a, const Tensor& b) { return Binary(BinOp::kMul, a, b); }
Tensor Max(const Tensor& a, const Tensor& b) { return Binary(BinOp::kMax, a, b); }

Tensor MatMul(const Tensor& a, const Tensor& b) {
  CheckFiniteInput("matmul", a);
  CheckFiniteInput("matmul", b);
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + ShapeStr(a.shape()) + " x " +
                     ShapeStr(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::Zeros({m, n});
  kernels::MatMulAcc(a.data(), b.data(), out.data(), m, k, n);

  RecordNode("matmul", {a, b}, out, [a, b, m, k, n](const double* g, GradStore& store) {
    if (a.requires_grad()) {
      kernels::MatMulAccTransB(g, b.data(), Accum(store, a), m, n, k);
    }
    if (b.requires_grad()) {
      kernels::MatMulAccTransA(a.data(), g, Accum(store, b), m, k, n);
    }
  });
  return out;
}

Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              int stride_h, int stride_w, int pad_h, int pad_w) {
  CheckStride("conv2d", stride_h, stride_w);
  CheckFiniteInput("conv2d", x);
  CheckFiniteInput("conv2d", w);
  if (x.rank() != 4 || w.rank() != 4) {
    throw ShapeError("conv2d: expected x [B,C,H,W] and w [O,C,kh,kw], got " +
                     ShapeStr(x.shape()) + " and " + ShapeStr(w.shape()));
  }
  if (x.dim(1) != w.dim(1)) {
    throw ShapeError("conv2d: input channels " + std::to_string(x.dim(1)) +
                     " != weight channels " + std::to_string(w.dim(1)));
  }
  const bool has_bias = bias.defined();
  if (has_bias) {
    CheckFiniteInput("conv2d", bias);
    if (bias.rank() != 1 || bias.dim(0) != w.dim(0)) {
      throw ShapeError("conv2d: bias shape " + ShapeStr(bias.shape()) +
                       " does not match " + std::to_string(w.dim(0)) + " filters");
    }
  }

  ConvDims d;
  d.batch = x.dim(0); d.cin = x.dim(1); d.h = x.dim(2); d.w = x.dim(3);
  d.cout = w.dim(0); d.kh = w.dim(2); d.kw = w.dim(3);
  d.sh = stride_h; d.sw = stride_w; d.ph = pad_h; d.pw = pad_w;
  d.ho = ConvOutDim(d.h, d.kh, d.sh, d.ph, "conv2d");
  d.wo = ConvOutDim(d.w, d.kw, d.sw, d.pw, "conv2d");
  d.rows = d.cin * d.kh * d.kw;
  d.cols = d.ho * d.wo;

  // 1x1 stride-1 unpadded filters read the input plane as the patch matrix
  // directly; everything else goes through im2col.
  const bool direct = d.kh == 1 && d.kw == 1 && d.sh == 1 && d.sw == 1 &&
                      d.ph == 0 && d.pw == 0;

  Tensor out = Tensor::Zeros({d.batch, d.cout, d.ho, d.wo});
  std::vector<double>& patches = PatchScratch();
  if (!direct) patches.resize(static_cast<size_t>(d.rows * d.cols));
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* p = x.data() + b * d.cin * d.h * d.w;
    if (!direct) {
      Im2Col(p, d, patches.data());
      p = patches.data();
    }
    double* y = out.data() + b * d.cout * d.cols;
    kernels::MatMulAcc(w.data(), p, y, d.cout, d.rows, d.cols);
    if (has_bias) {
      for (int64_t o = 0; o < d.cout; ++o) {
        kernels::AddScalar(y + o * d.cols, bias.data()[o], y + o * d.cols,
                           static_cast<size_t>(d.cols));
      }
    }
  }

  std::vector<Tensor> inputs = has_bias ? std::vector<Tensor>{x, w, bias}
                                        : std::vector<Tensor>{x, w};
  RecordNode("conv2d", std::move(inputs), out,
             [x, w, bias, has_bias, d, direct](const double* g, GradStore& store) {
               double* dx = x.requires_grad() ? Accum(store, x) : nullptr;
               double* dw = w.requires_grad() ? Accum(store, w) : nullptr;
               double* db = has_bias && bias.requires_grad() ? Accum(store, bias) : nullptr;
               std::vector<double>& patches = PatchScratch();
               std::vector<double>& dpatches = PatchGradScratch();
               if (!direct) {
                 patches.resize(static_cast<size_t>(d.rows * d.cols));
                 if (dx != nullptr) dpatches.resize(static_cast<size_t>(d.rows * d.cols));
               }
               std::vector<double>& ptrans = PatchTransposeScratch();
               if (dw != nullptr) ptrans.resize(static_cast<size_t>(d.rows * d.cols));
               for (int64_t b = 0; b < d.batch; ++b) {
                 const double* gb = g + b * d.cout * d.cols;
                 const double* xb = x.data() + b * d.cin * d.h * d.w;
                 const double* p = xb;
                 if (!direct && (dw != nullptr || dx != nullptr)) {
                   Im2Col(xb, d, patches.data());
                   p = patches.data();
                 }
                 if (dw != nullptr) {
                   // dW[o,r] folds over output positions; feeding the
                   // transposed patches to the blocked kernel beats per
                   // element dot products at the small plane sizes here.
                   TransposeInto(p, d.rows, d.cols, ptrans.data());
                   kernels::MatMulAcc(gb, ptrans.data(), dw, d.cout, d.cols, d.rows);
                 }
                 if (dx != nullptr) {
                   if (direct) {
                     kernels::MatMulAccTransA(w.data(), gb, dx + b * d.cin * d.h * d.w,
                                              d.cout, d.rows, d.cols);
                   } else {
                     std::memset(dpatches.data(), 0,
                                 sizeof(double) * static_cast<size_t>(d.rows * d.cols));
                     kernels::MatMulAccTransA(w.data(), gb, dpatches.data(), d.cout,
                                              d.rows, d.cols);
                     Col2ImAdd(dpatches.data(), d, dx + b * d.cin * d.h * d.w);
                   }
                 }
                 if (db != nullptr) {
                   for (int64_t o = 0; o < d.cout; ++o) {
                     db[o] += kernels::Sum(gb + o * d.cols, static_cast<size_t>(d.cols));
                   }
                 }
               }
             });
  return out;
}

Tensor DepthwiseConv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
                       int stride_h, int stride_w, int pad_h, int pad_w) {
  CheckStride("depthwise-conv2d", stride_h, stride_w);
  CheckFiniteInput("depthwise-conv2d", x);
  CheckFiniteInput("depthwise-conv2d", w);
  if (x.rank() != 4 || w.rank() != 3 || x.dim(1) != w.dim(0)) {
    throw ShapeError("depthwise-conv2d: expected x [B,C,H,W] and w [C,kh,kw], got " +
                     ShapeStr(x.shape()) + " and " + ShapeStr(w.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias) {
    CheckFiniteInput("depthwise-conv2d", bias);
    if (bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
      throw ShapeError("depthwise-conv2d: bias shape mismatch");
    }
  }

  ConvDims d;
  d.batch = x.dim(0); d.cin = x.dim(1); d.h = x.dim(2); d.w = x.dim(3);
  d.cout = d.cin; d.kh = w.dim(1); d.kw = w.dim(2);
  d.sh = stride_h; d.sw = stride_w; d.ph = pad_h; d.pw = pad_w;
  d.ho = ConvOutDim(d.h, d.kh, d.sh, d.ph, "depthwise-conv2d");
  d.wo = ConvOutDim(d.w, d.kw, d.sw, d.pw, "depthwise-conv2d");

  kernels::DwDims kd{d.batch, d.cin, d.h,  d.w,  d.kh, d.kw,
                     d.sh,    d.sw,  d.ph, d.pw, d.ho, d.wo};
  const int64_t plane_out = d.ho * d.wo;
  Tensor out = Tensor::Zeros({d.batch, d.cin, d.ho, d.wo});
  kernels::DwConvForward(x.data(), w.data(), out.data(), kd);
  if (has_bias) {
    double* y = out.data();
    for (int64_t b = 0; b < d.batch; ++b) {
      for (int64_t c = 0; c < d.cin; ++c) {
        double* yp = y + (b * d.cin + c) * plane_out;
        kernels::AddScalar(yp, bias.data()[c], yp, static_cast<size_t>(plane_out));
      }
    }
  }

  std::vector<Tensor> inputs = has_bias ? std::vector<Tensor>{x, w, bias}
                                        : std::vector<Tensor>{x, w};
  RecordNode("depthwise-conv2d", std::move(inputs), out,
             [x, w, bias, has_bias, d, kd, plane_out](const double* g,
                                                      GradStore& store) {
               if (w.requires_grad()) {
                 kernels::DwConvBackWeights(g, x.data(), Accum(store, w), kd);
               }
               if (x.requires_grad()) {
                 kernels::DwConvBackData(g, w.data(), Accum(store, x), kd);
               }
               if (has_bias && bias.requires_grad()) {
                 double* db = Accum(store, bias);
                 for (int64_t b = 0; b < d.batch; ++b) {
                   for (int64_t c = 0; c < d.cin; ++c) {
                     db[c] += kernels::Sum(g + (b * d.cin + c) * plane_out,
                                           static_cast<size_t>(plane_out));
                   }
                 }
               }
             });
  return out;
}

Tensor Concat(std::span<const Tensor> inputs, int axis) {
  if (inputs.empty()) throw ContractError("concat: no inputs");
  const Tensor& first = inputs[0];
  const size_t rank = first.rank();
  if (axis < 0 || static_cast<size_t>(axis) >= rank) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  int64_t axis_total = 0;
  for (const Tensor& t : inputs) {
    CheckFiniteInput("concat", t);
    if (t.rank() != rank) throw ShapeError("concat: rank mismatch");
    for (size_t i = 0; i < rank; ++i) {
      if (static_cast<int>(i) != axis && t.dim(i) != first.dim(i)) {
        throw ShapeError("concat: shape mismatch " + ShapeStr(t.shape()) + " vs " +
                         ShapeStr(first.shape()) + " outside axis " + std::to_string(axis));
      }
    }
    axis_total += t.dim(axis);
  }

  Shape out_shape = first.shape();
  out_shape[axis] = axis_total;
  Tensor out = Tensor::Uninitialized(out_shape);

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= first.dim(i);
  for (size_t i = axis + 1; i < rank; ++i) inner *= first.dim(i);
  const int64_t out_block = axis_total * inner;

  int64_t offset = 0;
  for (const Tensor& t : inputs) {
    const int64_t block = t.dim(axis) * inner;
    for (int64_t o = 0; o < outer; ++o) {
      std::memcpy(out.data() + o * out_block + offset, t.data() + o * block,
                  sizeof(double) * block);
    }
    offset += block;
  }

  out.MarkFiniteChecked();
  std::vector<Tensor> owned(inputs.begin(), inputs.end());
  RecordNode("concat", owned, out,
             [owned, outer, out_block](const double* g, GradStore& store) {
               int64_t offset = 0;
               for (const Tensor& t : owned) {
                 const int64_t tblock = t.numel() / outer;
                 if (t.requires_grad()) {
                   double* dt = Accum(store, t);
                   for (int64_t o = 0; o < outer; ++o) {
                     kernels::Add(dt + o * tblock, g + o * out_block + offset,
                                  dt + o * tblock, static_cast<size_t>(tblock));
                   }
                 }
                 offset += tblock;
               }
             });
  return out;
}

Tensor GlobalAvgPool(const Tensor& x) {
  CheckFiniteInput("avg-pool", x);
  if (x.rank() != 4) {
    throw ShapeError("avg-pool: expected [B,C,H,W], got " + ShapeStr(x.shape()));
  }
  const int64_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t plane = h * w;
  const double inv = 1.0 / static_cast<double>(plane);
  Tensor out = Tensor::Uninitialized({batch, ch});
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t c = 0; c < ch; ++c) {
      const double* p = x.data() + (b * ch + c) * plane;
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) acc += p[i];
      out.data()[b * ch + c] = acc / static_cast<double>(plane);
    }
  }
  out.MarkFiniteChecked();
  RecordNode("avg-pool", {x}, out,
             [x, batch, ch, plane, inv](const double* g, GradStore& store) {
               if (!x.requires_grad()) return;
               double* dx = Accum(store, x);
               for (int64_t b = 0; b < batch; ++b) {
                 for (int64_t c = 0; c < ch; ++c) {
                   const double gv = g[b * ch + c] * inv;
                   double* p = dx + (b * ch + c) * plane;
                   for (int64_t i = 0; i < plane; ++i) p[i] += gv;
                 }
               }
             });
  return out;
}

Tensor Sigmoid(const Tensor& x) {
  CheckFiniteInput("sigmoid", x);
  const size_t n = static_cast<size_t>(x.numel());
  Tensor out = Tensor::Uninitialized(x.shape());
  const double* xv = x.data();
  double* y = out.data();
  for (size_t i = 0; i < n; ++i) {
    if (xv[i] >= 0.0) {
      y[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    } else {
      const double e = std::exp(xv[i]);
      y[i] = e / (1.0 + e);
    }
  }
  out.MarkFiniteChecked();
  RecordNode("sigmoid", {x}, out, [x, out, n](const double* g, GradStore& store) {
    if (!x.requires_grad()) return;
    double* dx = Accum(store, x);
    const double* s = out.data();
    for (size_t i = 0; i < n; ++i) dx[i] += g[i] * s[i] * (1.0 - s[i]);
  });
  return out;
}

Tensor Tanh(const Tensor& x) {
  CheckFiniteInput("tanh", x);
  const size_t n = static_cast<size_t>(x.numel());
  Tensor out = Tensor::Uninitialized(x.shape());
  for (size_t i = 0; i < n; ++i) out.data()[i] = std::tanh(x.data()[i]);
  out.MarkFiniteChecked();
  RecordNode("tanh", {x}, out, [x, out, n](const double* g, GradStore& store) {
    if (!x.requires_grad()) return;
    double* dx = Accum(store, x);
    const double* t = out.data();
    for (size_t i = 0; i < n; ++i) dx[i] += g[i] * (1.0 - t[i] * t[i]);
  });
  return out;
}

Tensor Log(const Tensor& x) {
  CheckFiniteInput("log", x);
  const size_t n = static_cast<size_t>(x.numel());
  Tensor out = Tensor::Uninitialized(x.shape());
  for (size_t i = 0; i < n; ++i) {
    if (x.data()[i] <= 0.0) {
      throw NumericError("log: non-positive input " + std::to_string(x.data()[i]));
    }
    out.data()[i] = std::log(x.data()[i]);
  }
  out.MarkFiniteChecked();
  RecordNode("log", {x}, out, [x, n](const double* g, GradStore& store) {
    if (!x.requires_grad()) return;
    double* dx = Accum(store, x);
    for (size_t i = 0; i < n; ++i) dx[i] += g[i] / x.data()[i];
  });
  return out;
}

Tensor Slice(const Tensor& x, int axis, int64_t start, int64_t length) {
  CheckFiniteInput("slice", x);
  if (axis < 0 || static_cast<size_t>(axis) >= x.rank()) {
    throw ShapeError("slice: axis " + std::to_string(axis) + " out of range");
  }
  if (start < 0 || length <= 0 || start + length > x.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(start) + "," +
                     std::to_string(start + length) + ") outside dim " +
                     std::to_string(x.dim(axis)));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  Tensor out = Tensor::Uninitialized(out_shape);

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const int64_t in_block = x.dim(axis) * inner;
  const int64_t out_block = length * inner;
  for (int64_t o = 0; o < outer; ++o) {
    std::memcpy(out.data() + o * out_block, x.data() + o * in_block + start * inner,
                sizeof(double) * out_block);
  }

  out.MarkFiniteChecked();
  RecordNode("slice", {x}, out,
             [x, outer, inner, in_block, out_block, start](const double* g,
                                                           GradStore& store) {
               if (!x.requires_grad()) return;
               double* dx = Accum(store, x);
               for (int64_t o = 0; o < outer; ++o) {
                 double* dst = dx + o * in_block + start * inner;
                 kernels::Add(dst, g + o * out_block, dst,
                              static_cast<size_t>(out_block));
               }
             });
  return out;
}

Tensor Reshape(const Tensor& x, const Shape& shape) {
  CheckFiniteInput("reshape", x);
  Tensor out = x.ViewAs(shape);
  out.MarkFiniteChecked();
  const size_t n = static_cast<size_t>(x.numel());
  RecordNode("reshape", {x}, out, [x, n](const double* g, GradStore& store) {
    if (!x.requires_grad()) return;
    double* dx = Accum(store, x);
    kernels::Add(dx, g, dx, n);
  });
  return out;
}

Tensor Sum(const Tensor& x) {
  CheckFiniteInput("sum", x);
  const size_t n = static_cast<size_t>(x.numel());
  Tensor out = Tensor::Scalar(kernels::Sum(x.data(), n));
  RecordNode("sum", {x}, out, [x, n](const double* g, GradStore& store) {
    if (!x.requires_grad()) return;
    double* dx = Accum(store, x);
    const double gv = g[0];
    for (size_t i = 0; i < n; ++i) dx[i] += gv;
  });
  return out;
}

Tensor AddBias(const Tensor& x, const Tensor& b) {
  CheckFiniteInput("add-bias", x);
  CheckFiniteInput("add-bias", b);
  if (x.rank() < 1 || b.rank() != 1 || x.dim(x.rank() - 1) != b.dim(0)) {
    throw ShapeError("add-bias: cannot broadcast " + ShapeStr(b.shape()) + " over " +
                     ShapeStr(x.shape()));
  }
  const int64_t d = b.dim(0);
  const int64_t rows = x.numel() / d;
  Tensor out = Tensor::Uninitialized(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    kernels::Add(x.data() + r * d, b.data(), out.data() + r * d,
                 static_cast<size_t>(d));
  }
  RecordNode("add-bias", {x, b}, out, [x, b, rows, d](const double* g, GradStore& store) {
    if (x.requires_grad()) {
      double* dx = Accum(store, x);
      kernels::Add(dx, g, dx, static_cast<size_t>(rows * d));
    }
    if (b.requires_grad()) {
      double* db = Accum(store, b);
      for (int64_t r = 0; r < rows; ++r) {
        kernels::Add(db, g + r * d, db, static_cast<size_t>(d));
      }
    }
  });
  return out;
}

Tensor Relu6(const Tensor& x) {
  Tensor neg = Mul(x, Tensor::Scalar(-1.0));
  Tensor hi = Max(neg, Tensor::Scalar(-6.0));
  Tensor capped = Mul(hi, Tensor::Scalar(-1.0));
  return Max(capped, Tensor::Scalar(0.0));
}

Tensor ApplyPrimitive(OpKind kind, std::span<const Tensor> inputs,
                      const OpAttrs& attrs) {
  auto need = [&](size_t lo, size_t hi) {
    if (inputs.size() < lo || inputs.size() > hi) {
      throw ContractError(std::string(OpKindName(kind)) + ": expected " +
                          std::to_string(lo) + ".." + std::to_string(hi) +
                          " inputs, got " + std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::kAdd: need(2, 2); return Add(inputs[0], inputs[1]);
    case OpKind::kMul: need(2, 2); return Mul(inputs[0], inputs[1]);
    case OpKind::kMax: need(2, 2); return Max(inputs[0], inputs[1]);
    case OpKind::kMatMul: need(2, 2); return MatMul(inputs[0], inputs[1]);
    case OpKind::kConv2d:
      need(2, 3);
      return Conv2d(inputs[0], inputs[1], inputs.size() == 3 ? inputs[2] : Tensor(),
                    attrs.stride_h, attrs.stride_w, attrs.pad_h, attrs.pad_w);
    case OpKind::kDepthwiseConv2d:
      need(2, 3);
      return DepthwiseConv2d(inputs[0], inputs[1],
                             inputs.size() == 3 ? inputs[2] : Tensor(),
                             attrs.stride_h, attrs.stride_w, attrs.pad_h, attrs.pad_w);
    case OpKind::kConcat: return Concat(inputs, attrs.axis);
    case OpKind::kAvgPool: need(1, 1); return GlobalAvgPool(inputs[0]);
    case OpKind::kSigmoid: need(1, 1); return Sigmoid(inputs[0]);
    case OpKind::kTanh: need(1, 1); return Tanh(inputs[0]);
    case OpKind::kLog: need(1, 1); return Log(inputs[0]);
    case OpKind::kSlice: need(1, 1); return Slice(inputs[0], attrs.axis, attrs.start, attrs.length);
    case OpKind::kReshape: need(1, 1); return Reshape(inputs[0], attrs.new_shape);
    case OpKind::kSum: need(1, 1); return Sum(inputs[0]);
    case OpKind::kAddBias: need(2, 2); return AddBias(inputs[0], inputs[1]);
  }
  throw ContractError("unhandled op kind");
}

}  // namespace avwake
