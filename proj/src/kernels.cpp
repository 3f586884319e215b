// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/kernels.hpp"

#include <algorithm>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace lfg::kernels {

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#if defined(_OPENMP)
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

namespace {

constexpr std::int64_t kTileRows = 4;
constexpr std::int64_t kTileCols = 16;

// c[i,j] = sum_p A(i,p) * b[p,j] with A(i,p) = a[i*ars + p*acs]; b and c
// row-major with n columns. Every element is one accumulator summed in p
// order, so the result does not depend on tiling or threading.
template <typename Real, int MR>
void gemm_tile(const Real* a, std::int64_t ars, std::int64_t acs, const Real* b, Real* c, std::int64_t kdim,
               std::int64_t n, std::int64_t j0) {
  Real acc[MR][kTileCols] = {};
  for (std::int64_t p = 0; p < kdim; ++p) {
    const Real* brow = b + p * n + j0;
    Real av[MR];
#pragma GCC unroll 8
    for (int r = 0; r < MR; ++r) av[r] = a[r * ars + p * acs];
#pragma GCC unroll 8
    for (int r = 0; r < MR; ++r) {
#pragma GCC unroll 32
      for (int l = 0; l < kTileCols; ++l) acc[r][l] += av[r] * brow[l];
    }
  }
  for (int r = 0; r < MR; ++r) std::copy(acc[r], acc[r] + kTileCols, c + r * n + j0);
}

template <typename Real>
void gemm_edge(const Real* a, std::int64_t ars, std::int64_t acs, const Real* b, Real* c, std::int64_t rows,
               std::int64_t kdim, std::int64_t n, std::int64_t j0) {
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t j = j0; j < n; ++j) {
      Real acc = 0;
      for (std::int64_t p = 0; p < kdim; ++p) acc += a[r * ars + p * acs] * b[p * n + j];
      c[r * n + j] = acc;
    }
  }
}

template <typename Real>
void gemm_rows(const Real* a, std::int64_t ars, std::int64_t acs, const Real* b, Real* c, std::int64_t rows,
               std::int64_t kdim, std::int64_t n) {
  const std::int64_t full = n - n % kTileCols;
  for (std::int64_t j0 = 0; j0 < full; j0 += kTileCols) {
    switch (rows) {
      case 4: gemm_tile<Real, 4>(a, ars, acs, b, c, kdim, n, j0); break;
      case 3: gemm_tile<Real, 3>(a, ars, acs, b, c, kdim, n, j0); break;
      case 2: gemm_tile<Real, 2>(a, ars, acs, b, c, kdim, n, j0); break;
      default: gemm_tile<Real, 1>(a, ars, acs, b, c, kdim, n, j0); break;
    }
  }
  if (full < n) gemm_edge(a, ars, acs, b, c, rows, kdim, n, full);
}

template <typename Real>
void gemm_serial(const Real* a, std::int64_t ars, std::int64_t acs, const Real* b, Real* c, std::int64_t m,
                 std::int64_t kdim, std::int64_t n) {
  for (std::int64_t i0 = 0; i0 < m; i0 += kTileRows) {
    gemm_rows(a + i0 * ars, ars, acs, b, c + i0 * n, std::min(kTileRows, m - i0), kdim, n);
  }
}

template <typename Real>
void transpose(const Real* src, Real* dst, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

// One sample [C,H,W] -> columns [C*K*K, Ho*Wo].
template <typename Real>
void im2col(const Conv2dGeom& g, const Real* x, Real* cols) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), positions = ho * wo;
  for (std::int64_t c = 0; c < g.in_ch; ++c) {
    for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
        Real* dst = cols + ((c * g.kernel + ky) * g.kernel + kx) * positions;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ky;
          Real* drow = dst + oy * wo;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(drow, drow + wo, Real(0));
            continue;
          }
          const Real* xrow = x + (c * g.in_h + iy) * g.in_w;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad + kx;
            drow[ox] = (ix >= 0 && ix < g.in_w) ? xrow[ix] : Real(0);
          }
        }
      }
    }
  }
}

template <typename Real>
void col2im(const Conv2dGeom& g, const Real* cols, Real* dx) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), positions = ho * wo;
  std::fill(dx, dx + g.in_ch * g.in_h * g.in_w, Real(0));
  for (std::int64_t c = 0; c < g.in_ch; ++c) {
    for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
        const Real* src = cols + ((c * g.kernel + ky) * g.kernel + kx) * positions;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          Real* xrow = dx + (c * g.in_h + iy) * g.in_w;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) xrow[ix] += src[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  const std::int64_t blocks = (m + kTileRows - 1) / kTileRows;
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::int64_t i0 = blk * kTileRows;
    gemm_rows(a + i0 * k, k, std::int64_t{1}, b, c + i0 * n, std::min(kTileRows, m - i0), k, n);
  }
}

template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  const std::int64_t blocks = (k + kTileRows - 1) / kTileRows;
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::int64_t i0 = blk * kTileRows;
    gemm_rows(a + i0, std::int64_t{1}, k, b, c + i0 * n, std::min(kTileRows, k - i0), m, n);
  }
}

template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t n, std::int64_t k) {
  std::vector<Real> bt(static_cast<std::size_t>(n * k));
  transpose(b, bt.data(), k, n);
  matmul(a, bt.data(), c, m, n, k);
}

template <typename Real>
void conv2d_forward(const Conv2dGeom& g, const Real* x, const Real* w, Real* y) {
  const std::int64_t positions = g.out_h() * g.out_w();
  const std::int64_t in_stride = g.in_ch * g.in_h * g.in_w;
  const std::int64_t out_stride = g.out_ch * positions;
#pragma omp parallel
  {
    std::vector<Real> cols(static_cast<std::size_t>(g.patch() * positions));
#pragma omp for schedule(static)
    for (std::int64_t n = 0; n < g.batch; ++n) {
      im2col(g, x + n * in_stride, cols.data());
      gemm_serial(w, g.patch(), std::int64_t{1}, cols.data(), y + n * out_stride, g.out_ch, g.patch(), positions);
    }
  }
}

template <typename Real>
void conv2d_backward_input(const Conv2dGeom& g, const Real* dy, const Real* w, Real* dx) {
  const std::int64_t positions = g.out_h() * g.out_w();
  const std::int64_t in_stride = g.in_ch * g.in_h * g.in_w;
  const std::int64_t out_stride = g.out_ch * positions;
#pragma omp parallel
  {
    std::vector<Real> cols(static_cast<std::size_t>(g.patch() * positions));
#pragma omp for schedule(static)
    for (std::int64_t n = 0; n < g.batch; ++n) {
      gemm_serial(w, std::int64_t{1}, g.patch(), dy + n * out_stride, cols.data(), g.patch(), g.out_ch, positions);
      col2im(g, cols.data(), dx + n * in_stride);
    }
  }
}

template <typename Real>
void conv2d_backward_weight(const Conv2dGeom& g, const Real* x, const Real* dy, Real* dw) {
  const std::int64_t positions = g.out_h() * g.out_w();
  const std::int64_t in_stride = g.in_ch * g.in_h * g.in_w;
  const std::int64_t out_stride = g.out_ch * positions;
  const std::int64_t wsize = g.out_ch * g.patch();
  std::vector<Real> partial(static_cast<std::size_t>(g.batch * wsize));
#pragma omp parallel
  {
    std::vector<Real> cols(static_cast<std::size_t>(g.patch() * positions));
    std::vector<Real> cols_t(cols.size());
#pragma omp for schedule(static)
    for (std::int64_t n = 0; n < g.batch; ++n) {
      im2col(g, x + n * in_stride, cols.data());
      transpose(cols.data(), cols_t.data(), g.patch(), positions);
      gemm_serial(dy + n * out_stride, positions, std::int64_t{1}, cols_t.data(), partial.data() + n * wsize,
                  g.out_ch, positions, g.patch());
    }
  }
  // Batch reduction in sample order, split over weight elements.
#pragma omp parallel for schedule(static) if (wsize * g.batch > 32768)
  for (std::int64_t e = 0; e < wsize; ++e) {
    Real acc = 0;
    for (std::int64_t n = 0; n < g.batch; ++n) acc += partial[n * wsize + e];
    dw[e] = acc;
  }
}

namespace reference {

template <typename Real>
void matmul(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      Real acc = 0;
      for (std::int64_t kk = 0; kk < k; ++kk) acc += a[i * k + kk] * b[kk * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename Real>
void matmul_tn(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t kk = 0; kk < k; ++kk) {
    for (std::int64_t j = 0; j < n; ++j) {
      Real acc = 0;
      for (std::int64_t mm = 0; mm < m; ++mm) acc += a[mm * k + kk] * b[mm * n + j];
      c[kk * n + j] = acc;
    }
  }
}

template <typename Real>
void matmul_nt(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t n, std::int64_t k) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      Real acc = 0;
      for (std::int64_t j = 0; j < n; ++j) acc += a[i * n + j] * b[kk * n + j];
      c[i * k + kk] = acc;
    }
  }
}

template <typename Real>
void conv2d_forward(const Conv2dGeom& g, const Real* x, const Real* w, Real* y) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), K = g.kernel;
  for (std::int64_t n = 0; n < g.batch; ++n) {
    for (std::int64_t o = 0; o < g.out_ch; ++o) {
      for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          Real acc = 0;
          for (std::int64_t c = 0; c < g.in_ch; ++c) {
            for (std::int64_t ky = 0; ky < K; ++ky) {
              for (std::int64_t kx = 0; kx < K; ++kx) {
                const std::int64_t iy = oy * g.stride - g.pad + ky;
                const std::int64_t ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += x[((n * g.in_ch + c) * g.in_h + iy) * g.in_w + ix] *
                       w[((o * g.in_ch + c) * K + ky) * K + kx];
              }
            }
          }
          y[((n * g.out_ch + o) * ho + oy) * wo + ox] = acc;
        }
      }
    }
  }
}

template <typename Real>
void conv2d_backward_input(const Conv2dGeom& g, const Real* dy, const Real* w, Real* dx) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), K = g.kernel;
  std::fill(dx, dx + g.batch * g.in_ch * g.in_h * g.in_w, Real(0));
  for (std::int64_t n = 0; n < g.batch; ++n) {
    for (std::int64_t o = 0; o < g.out_ch; ++o) {
      for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          const Real go = dy[((n * g.out_ch + o) * ho + oy) * wo + ox];
          for (std::int64_t c = 0; c < g.in_ch; ++c) {
            for (std::int64_t ky = 0; ky < K; ++ky) {
              for (std::int64_t kx = 0; kx < K; ++kx) {
                const std::int64_t iy = oy * g.stride - g.pad + ky;
                const std::int64_t ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                dx[((n * g.in_ch + c) * g.in_h + iy) * g.in_w + ix] +=
                    go * w[((o * g.in_ch + c) * K + ky) * K + kx];
              }
            }
          }
        }
      }
    }
  }
}

template <typename Real>
void conv2d_backward_weight(const Conv2dGeom& g, const Real* x, const Real* dy, Real* dw) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), K = g.kernel;
  std::fill(dw, dw + g.out_ch * g.patch(), Real(0));
  for (std::int64_t n = 0; n < g.batch; ++n) {
    for (std::int64_t o = 0; o < g.out_ch; ++o) {
      for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          const Real go = dy[((n * g.out_ch + o) * ho + oy) * wo + ox];
          for (std::int64_t c = 0; c < g.in_ch; ++c) {
            for (std::int64_t ky = 0; ky < K; ++ky) {
              for (std::int64_t kx = 0; kx < K; ++kx) {
                const std::int64_t iy = oy * g.stride - g.pad + ky;
                const std::int64_t ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                dw[((o * g.in_ch + c) * K + ky) * K + kx] +=
                    go * x[((n * g.in_ch + c) * g.in_h + iy) * g.in_w + ix];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace reference

#define LFG_INSTANTIATE_KERNELS(NS, T)                                                           \
  template void NS::matmul<T>(const T*, const T*, T*, std::int64_t, std::int64_t, std::int64_t);    \
  template void NS::matmul_tn<T>(const T*, const T*, T*, std::int64_t, std::int64_t, std::int64_t); \
  template void NS::matmul_nt<T>(const T*, const T*, T*, std::int64_t, std::int64_t, std::int64_t); \
  template void NS::conv2d_forward<T>(const Conv2dGeom&, const T*, const T*, T*);                  \
  template void NS::conv2d_backward_input<T>(const Conv2dGeom&, const T*, const T*, T*);           \
  template void NS::conv2d_backward_weight<T>(const Conv2dGeom&, const T*, const T*, T*);

LFG_INSTANTIATE_KERNELS(kernels, float)
LFG_INSTANTIATE_KERNELS(kernels, double)
LFG_INSTANTIATE_KERNELS(kernels::reference, float)
LFG_INSTANTIATE_KERNELS(kernels::reference, double)

#undef LFG_INSTANTIATE_KERNELS

}  // namespace lfg::kernels
