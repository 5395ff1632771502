// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "normsim_kernels.hpp"

#include <algorithm>
#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#define NOMAD_X86 1
#include <immintrin.h>
#endif

namespace nomad::normsim::detail {
namespace {

template <typename T>
void pack_impl(const double* rows, std::size_t n, std::size_t dim,
               std::size_t panel, T* out) {
  const std::size_t panels = (n + panel - 1) / panel;
  for (std::size_t p = 0; p < panels; ++p) {
    T* dst = out + p * dim * panel;
    const std::size_t live = std::min(panel, n - p * panel);
    for (std::size_t i = 0; i < live; ++i) {
      const double* src = rows + (p * panel + i) * dim;
      for (std::size_t k = 0; k < dim; ++k) {
        dst[k * panel + i] = static_cast<T>(src[k]);
      }
    }
    for (std::size_t i = live; i < panel; ++i) {
      for (std::size_t k = 0; k < dim; ++k) dst[k * panel + i] = T{0};
    }
  }
}

void kernel_f32_portable(const float* a, const float* b, std::size_t dim,
                         float* out) {
  float acc[kQueryPanel][kRefPanelF32] = {};
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t i = 0; i < kQueryPanel; ++i) {
      const float x = a[k * kQueryPanel + i];
      for (std::size_t j = 0; j < kRefPanelF32; ++j) {
        acc[i][j] = std::fma(x, b[k * kRefPanelF32 + j], acc[i][j]);
      }
    }
  }
  for (std::size_t i = 0; i < kQueryPanel; ++i) {
    for (std::size_t j = 0; j < kRefPanelF32; ++j) {
      out[i * kRefPanelF32 + j] = acc[i][j];
    }
  }
}

void kernel_f64_portable(const double* a, const double* b, std::size_t dim,
                         double* out) {
  double acc[kQueryPanel][kRefPanelF64] = {};
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t i = 0; i < kQueryPanel; ++i) {
      const double x = a[k * kQueryPanel + i];
      for (std::size_t j = 0; j < kRefPanelF64; ++j) {
        acc[i][j] = std::fma(x, b[k * kRefPanelF64 + j], acc[i][j]);
      }
    }
  }
  for (std::size_t i = 0; i < kQueryPanel; ++i) {
    for (std::size_t j = 0; j < kRefPanelF64; ++j) {
      out[i * kRefPanelF64 + j] = acc[i][j];
    }
  }
}

double dot_portable(const double* a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t k = 0; k < dim; ++k) acc = std::fma(a[k], b[k], acc);
  return acc;
}

#ifdef NOMAD_X86

#define NOMAD_AVX2 __attribute__((target("avx2,fma")))

NOMAD_AVX2 void kernel_f32_avx2(const float* a, const float* b,
                                std::size_t dim, float* out) {
  __m256 c00 = _mm256_setzero_ps(), c01 = c00, c10 = c00, c11 = c00;
  __m256 c20 = c00, c21 = c00, c30 = c00, c31 = c00;
  __m256 c40 = c00, c41 = c00, c50 = c00, c51 = c00;
  for (std::size_t k = 0; k < dim; ++k) {
    const __m256 b0 = _mm256_loadu_ps(b);
    const __m256 b1 = _mm256_loadu_ps(b + 8);
    __m256 x = _mm256_broadcast_ss(a + 0);
    c00 = _mm256_fmadd_ps(x, b0, c00);
    c01 = _mm256_fmadd_ps(x, b1, c01);
    x = _mm256_broadcast_ss(a + 1);
    c10 = _mm256_fmadd_ps(x, b0, c10);
    c11 = _mm256_fmadd_ps(x, b1, c11);
    x = _mm256_broadcast_ss(a + 2);
    c20 = _mm256_fmadd_ps(x, b0, c20);
    c21 = _mm256_fmadd_ps(x, b1, c21);
    x = _mm256_broadcast_ss(a + 3);
    c30 = _mm256_fmadd_ps(x, b0, c30);
    c31 = _mm256_fmadd_ps(x, b1, c31);
    x = _mm256_broadcast_ss(a + 4);
    c40 = _mm256_fmadd_ps(x, b0, c40);
    c41 = _mm256_fmadd_ps(x, b1, c41);
    x = _mm256_broadcast_ss(a + 5);
    c50 = _mm256_fmadd_ps(x, b0, c50);
    c51 = _mm256_fmadd_ps(x, b1, c51);
    a += kQueryPanel;
    b += kRefPanelF32;
  }
  _mm256_storeu_ps(out + 0, c00);
  _mm256_storeu_ps(out + 8, c01);
  _mm256_storeu_ps(out + 16, c10);
  _mm256_storeu_ps(out + 24, c11);
  _mm256_storeu_ps(out + 32, c20);
  _mm256_storeu_ps(out + 40, c21);
  _mm256_storeu_ps(out + 48, c30);
  _mm256_storeu_ps(out + 56, c31);
  _mm256_storeu_ps(out + 64, c40);
  _mm256_storeu_ps(out + 72, c41);
  _mm256_storeu_ps(out + 80, c50);
  _mm256_storeu_ps(out + 88, c51);
}

NOMAD_AVX2 void kernel_f64_avx2(const double* a, const double* b,
                                std::size_t dim, double* out) {
  __m256d c00 = _mm256_setzero_pd(), c01 = c00, c10 = c00, c11 = c00;
  __m256d c20 = c00, c21 = c00, c30 = c00, c31 = c00;
  __m256d c40 = c00, c41 = c00, c50 = c00, c51 = c00;
  for (std::size_t k = 0; k < dim; ++k) {
    const __m256d b0 = _mm256_loadu_pd(b);
    const __m256d b1 = _mm256_loadu_pd(b + 4);
    __m256d x = _mm256_broadcast_sd(a + 0);
    c00 = _mm256_fmadd_pd(x, b0, c00);
    c01 = _mm256_fmadd_pd(x, b1, c01);
    x = _mm256_broadcast_sd(a + 1);
    c10 = _mm256_fmadd_pd(x, b0, c10);
    c11 = _mm256_fmadd_pd(x, b1, c11);
    x = _mm256_broadcast_sd(a + 2);
    c20 = _mm256_fmadd_pd(x, b0, c20);
    c21 = _mm256_fmadd_pd(x, b1, c21);
    x = _mm256_broadcast_sd(a + 3);
    c30 = _mm256_fmadd_pd(x, b0, c30);
    c31 = _mm256_fmadd_pd(x, b1, c31);
    x = _mm256_broadcast_sd(a + 4);
    c40 = _mm256_fmadd_pd(x, b0, c40);
    c41 = _mm256_fmadd_pd(x, b1, c41);
    x = _mm256_broadcast_sd(a + 5);
    c50 = _mm256_fmadd_pd(x, b0, c50);
    c51 = _mm256_fmadd_pd(x, b1, c51);
    a += kQueryPanel;
    b += kRefPanelF64;
  }
  _mm256_storeu_pd(out + 0, c00);
  _mm256_storeu_pd(out + 4, c01);
  _mm256_storeu_pd(out + 8, c10);
  _mm256_storeu_pd(out + 12, c11);
  _mm256_storeu_pd(out + 16, c20);
  _mm256_storeu_pd(out + 20, c21);
  _mm256_storeu_pd(out + 24, c30);
  _mm256_storeu_pd(out + 28, c31);
  _mm256_storeu_pd(out + 32, c40);
  _mm256_storeu_pd(out + 36, c41);
  _mm256_storeu_pd(out + 40, c50);
  _mm256_storeu_pd(out + 44, c51);
}

NOMAD_AVX2 double dot_fma_hw(const double* a, const double* b,
                             std::size_t dim) {
  __m128d acc = _mm_setzero_pd();
  for (std::size_t k = 0; k < dim; ++k) {
    acc = _mm_fmadd_sd(_mm_load_sd(a + k), _mm_load_sd(b + k), acc);
  }
  return _mm_cvtsd_f64(acc);
}

#undef NOMAD_AVX2

bool has_avx2_fma() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#endif  // NOMAD_X86

}  // namespace

void pack_panels(const double* rows, std::size_t n, std::size_t dim,
                 std::size_t panel, float* out) {
  pack_impl(rows, n, dim, panel, out);
}

void pack_panels(const double* rows, std::size_t n, std::size_t dim,
                 std::size_t panel, double* out) {
  pack_impl(rows, n, dim, panel, out);
}

const Kernels& portable_kernels() {
  static const Kernels k{&kernel_f32_portable, &kernel_f64_portable,
                         &dot_portable, "portable"};
  return k;
}

const Kernels& kernels() {
#ifdef NOMAD_X86
  static const Kernels k = has_avx2_fma()
                               ? Kernels{&kernel_f32_avx2, &kernel_f64_avx2,
                                         &dot_fma_hw, "avx2-fma"}
                               : portable_kernels();
  return k;
#else
  return portable_kernels();
#endif
}

}  // namespace nomad::normsim::detail
