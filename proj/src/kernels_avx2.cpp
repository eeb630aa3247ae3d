#include <immintrin.h>

#include <cassert>

#include "biasedselect/kernels.hpp"

// AVX2 variants. Lane l of the vector accumulator sees exactly the elements
// the scalar reference feeds stripe l, and the horizontal combine repeats the
// reference order (a0+a2)+(a1+a3), so results match the scalar kernels bit
// for bit (the build disables FP contraction).

namespace biasedselect::kernels::avx2 {

namespace {

inline double horizontal(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

}  // namespace

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t b = 0; b < blocks; ++b) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + 4 * b));
  }
  double s = horizontal(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i) s += x[i];
  return s;
}

double gather_sum(std::span<const double> values, std::span<const std::int32_t> idx) {
  const std::size_t n = idx.size();
  const std::size_t blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t b = 0; b < blocks; ++b) {
    const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx.data() + 4 * b));
    acc = _mm256_add_pd(acc, _mm256_i32gather_pd(values.data(), vi, 8));
  }
  double s = horizontal(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i) s += values[static_cast<std::size_t>(idx[i])];
  return s;
}

void multiply(std::span<double> dst, std::span<const double> a, std::span<const double> b) {
  assert(dst.size() == a.size() && a.size() == b.size());
  const std::size_t n = dst.size();
  const std::size_t blocks = n / 4;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const __m256d va = _mm256_loadu_pd(a.data() + 4 * blk);
    const __m256d vb = _mm256_loadu_pd(b.data() + 4 * blk);
    _mm256_storeu_pd(dst.data() + 4 * blk, _mm256_mul_pd(va, vb));
  }
  for (std::size_t i = 4 * blocks; i < n; ++i) dst[i] = a[i] * b[i];
}

void affine(std::span<double> dst, std::span<const double> u, double scale, double offset) {
  assert(dst.size() == u.size());
  const std::size_t n = dst.size();
  const std::size_t blocks = n / 4;
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vo = _mm256_set1_pd(offset);
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const __m256d vu = _mm256_loadu_pd(u.data() + 4 * blk);
    _mm256_storeu_pd(dst.data() + 4 * blk, _mm256_add_pd(vo, _mm256_mul_pd(vs, vu)));
  }
  for (std::size_t i = 4 * blocks; i < n; ++i) dst[i] = offset + scale * u[i];
}

}  // namespace biasedselect::kernels::avx2
