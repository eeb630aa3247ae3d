#include "biasedselect/kernels.hpp"

#include <cassert>
#include <cstdlib>
#include <cstring>

namespace biasedselect::kernels {

namespace scalar {

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t blocks = n / 4;
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    a0 += x[4 * b + 0];
    a1 += x[4 * b + 1];
    a2 += x[4 * b + 2];
    a3 += x[4 * b + 3];
  }
  double s = (a0 + a2) + (a1 + a3);
  for (std::size_t i = 4 * blocks; i < n; ++i) s += x[i];
  return s;
}

double gather_sum(std::span<const double> values, std::span<const std::int32_t> idx) {
  const std::size_t n = idx.size();
  const std::size_t blocks = n / 4;
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    a0 += values[static_cast<std::size_t>(idx[4 * b + 0])];
    a1 += values[static_cast<std::size_t>(idx[4 * b + 1])];
    a2 += values[static_cast<std::size_t>(idx[4 * b + 2])];
    a3 += values[static_cast<std::size_t>(idx[4 * b + 3])];
  }
  double s = (a0 + a2) + (a1 + a3);
  for (std::size_t i = 4 * blocks; i < n; ++i) s += values[static_cast<std::size_t>(idx[i])];
  return s;
}

void multiply(std::span<double> dst, std::span<const double> a, std::span<const double> b) {
  assert(dst.size() == a.size() && a.size() == b.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] * b[i];
}

void affine(std::span<double> dst, std::span<const double> u, double scale, double offset) {
  assert(dst.size() == u.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = offset + scale * u[i];
}

}  // namespace scalar

bool avx2_available() {
#if defined(BIASEDSELECT_HAVE_AVX2_TU) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

namespace {

struct Dispatch {
  double (*sum)(std::span<const double>);
  double (*gather_sum)(std::span<const double>, std::span<const std::int32_t>);
  void (*multiply)(std::span<double>, std::span<const double>, std::span<const double>);
  void (*affine)(std::span<double>, std::span<const double>, double, double);
  const char* name;
};

Dispatch select_dispatch() {
  Dispatch d{scalar::sum, scalar::gather_sum, scalar::multiply, scalar::affine, "scalar"};
  bool want_avx2 = avx2_available();
  if (const char* env = std::getenv("BIASEDSELECT_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) want_avx2 = false;
    if (std::strcmp(env, "avx2") == 0 && !avx2_available()) want_avx2 = false;
  }
#if defined(BIASEDSELECT_HAVE_AVX2_TU)
  if (want_avx2) {
    d = Dispatch{avx2::sum, avx2::gather_sum, avx2::multiply, avx2::affine, "avx2"};
  }
#endif
  return d;
}

const Dispatch& dispatch() {
  static const Dispatch d = select_dispatch();
  return d;
}

}  // namespace

const char* active_variant() { return dispatch().name; }

double sum(std::span<const double> x) { return dispatch().sum(x); }

double gather_sum(std::span<const double> values, std::span<const std::int32_t> idx) {
  return dispatch().gather_sum(values, idx);
}

void multiply(std::span<double> dst, std::span<const double> a, std::span<const double> b) {
  dispatch().multiply(dst, a, b);
}

void affine(std::span<double> dst, std::span<const double> u, double scale, double offset) {
  dispatch().affine(dst, u, scale, offset);
}

}  // namespace biasedselect::kernels
