#pragma once

#include <cstdint>
#include <span>

namespace biasedselect::kernels {

// Arithmetic inner loops used by the samplers, bias application, and
// utility accumulation. Every kernel has a scalar reference variant and,
// on x86-64, an AVX2 variant selected at runtime. Reductions stripe over
// four accumulators (one per AVX2 double lane) combined in a fixed order,
// so all variants are bit-identical, not merely close.

namespace scalar {

double sum(std::span<const double> x);
double gather_sum(std::span<const double> values, std::span<const std::int32_t> idx);
void multiply(std::span<double> dst, std::span<const double> a, std::span<const double> b);
void affine(std::span<double> dst, std::span<const double> u, double scale, double offset);

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {

double sum(std::span<const double> x);
double gather_sum(std::span<const double> values, std::span<const std::int32_t> idx);
void multiply(std::span<double> dst, std::span<const double> a, std::span<const double> b);
void affine(std::span<double> dst, std::span<const double> u, double scale, double offset);

}  // namespace avx2
#endif

bool avx2_available();

// Name of the variant behind the dispatched entry points ("scalar" or
// "avx2"). Set BIASEDSELECT_SIMD=scalar|avx2 to force one.
const char* active_variant();

double sum(std::span<const double> x);
double gather_sum(std::span<const double> values, std::span<const std::int32_t> idx);
void multiply(std::span<double> dst, std::span<const double> a, std::span<const double> b);
void affine(std::span<double> dst, std::span<const double> u, double scale, double offset);

}  // namespace biasedselect::kernels
