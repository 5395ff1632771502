// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

// Packed micro-kernels behind normsim_scores. Every output lane accumulates
// one (query, reference) pair sequentially over the dimension with fused
// multiply-add, so a lane of the f64 kernel is bit-identical to dot_fma().

#pragma once

#include <cstddef>

namespace nomad::normsim::detail {

inline constexpr std::size_t kQueryPanel = 6;
inline constexpr std::size_t kRefPanelF32 = 16;
inline constexpr std::size_t kRefPanelF64 = 8;

// Copies `n` rows of a row-major matrix into k-major panels of `panel` rows:
// out[p * dim * panel + k * panel + i] = rows[(p * panel + i) * dim + k].
// The last panel is zero padded.
void pack_panels(const double* rows, std::size_t n, std::size_t dim,
                 std::size_t panel, float* out);
void pack_panels(const double* rows, std::size_t n, std::size_t dim,
                 std::size_t panel, double* out);

// out[i * 16 + j] = sum_k a[k * 6 + i] * b[k * 16 + j]
using KernelF32 = void (*)(const float* a, const float* b, std::size_t dim,
                           float* out);
// out[i * 8 + j] = sum_k a[k * 6 + i] * b[k * 8 + j]
using KernelF64 = void (*)(const double* a, const double* b, std::size_t dim,
                           double* out);
using DotF64 = double (*)(const double* a, const double* b, std::size_t dim);

struct Kernels {
  KernelF32 f32;
  KernelF64 f64;
  DotF64 dot;
  const char* name;
};

// AVX2+FMA when the CPU has them, portable fallbacks otherwise.
const Kernels& kernels();
const Kernels& portable_kernels();

}  // namespace nomad::normsim::detail
