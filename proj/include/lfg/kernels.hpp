// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Raw compute kernels behind the differentiable ops. Two implementations of
// every kernel share one signature:
//
//   lfg::kernels::*             im2col + GEMM, OpenMP-parallel over the batch
//                               (conv) or output rows (matmul).
//   lfg::kernels::reference::*  direct serial loops, kept as the test oracle.
//
// The parallel kernels never reduce across threads: each output element is
// produced by a single thread with a fixed summation order, so results are
// bit-identical for any thread count.

#pragma once

#include <cstdint>

namespace lfg::kernels {

struct Conv2dGeom {
  std::int64_t batch = 1;
  std::int64_t in_ch = 1;
  std::int64_t in_h = 1;
  std::int64_t in_w = 1;
  std::int64_t out_ch = 1;
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  std::int64_t pad = 0;

  std::int64_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  std::int64_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  std::int64_t patch() const { return in_ch * kernel * kernel; }
};

int max_threads();
void set_threads(int n);

// c[m,n] = sum_k a[m,k] * b[k,n]; all row-major, c overwritten.
template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n);
// c[k,n] = sum_m a[m,k] * b[m,n]   (a transposed)
template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n);
// c[m,k] = sum_n a[m,n] * b[k,n]   (b transposed)
template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t n, std::int64_t k);

// x: [N,C,H,W], w: [O,C,K,K], y: [N,O,Ho,Wo] (overwritten).
template <typename Real>
void conv2d_forward(const Conv2dGeom& g, const Real* x, const Real* w, Real* y);
// dx overwritten.
template <typename Real>
void conv2d_backward_input(const Conv2dGeom& g, const Real* dy, const Real* w, Real* dx);
// dw overwritten.
template <typename Real>
void conv2d_backward_weight(const Conv2dGeom& g, const Real* x, const Real* dy, Real* dw);

namespace reference {

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n);
template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n);
template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t n, std::int64_t k);
template <typename Real>
void conv2d_forward(const Conv2dGeom& g, const Real* x, const Real* w, Real* y);
template <typename Real>
void conv2d_backward_input(const Conv2dGeom& g, const Real* dy, const Real* w, Real* dx);
template <typename Real>
void conv2d_backward_weight(const Conv2dGeom& g, const Real* x, const Real* dy, Real* dw);

}  // namespace reference

}  // namespace lfg::kernels
