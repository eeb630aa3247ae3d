#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "biasedselect/kernels.hpp"
#include "biasedselect/rng.hpp"

namespace bk = biasedselect::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  biasedselect::rng::Stream stream(seed);
  std::vector<double> out(n);
  for (double& v : out) v = stream.uniform01() * 100.0 - 50.0;
  return out;
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 31, 33, 100, 1001};

}  // namespace

TEST_CASE("sum matches a high-precision reference") {
  for (std::size_t n : kSizes) {
    const auto x = random_values(n, 11 + n);
    long double ref = 0.0L;
    for (double v : x) ref += v;
    CHECK(bk::sum(x) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
  }
}

TEST_CASE("dispatched kernels are bit-identical to the scalar reference") {
  for (std::size_t n : kSizes) {
    const auto a = random_values(n, 101 + n);
    const auto b = random_values(n, 202 + n);
    CHECK(bk::sum(a) == bk::scalar::sum(a));

    std::vector<std::int32_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx.push_back(static_cast<std::int32_t>((i * 7) % n));
    CHECK(bk::gather_sum(a, idx) == bk::scalar::gather_sum(a, idx));

    std::vector<double> d1(n), d2(n);
    bk::multiply(d1, a, b);
    bk::scalar::multiply(d2, a, b);
    CHECK(std::memcmp(d1.data(), d2.data(), n * sizeof(double)) == 0);

    bk::affine(d1, a, 1.75, -0.25);
    bk::scalar::affine(d2, a, 1.75, -0.25);
    CHECK(std::memcmp(d1.data(), d2.data(), n * sizeof(double)) == 0);
  }
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 variants are bit-identical to the scalar reference") {
  if (!bk::avx2_available()) return;
  for (std::size_t n : kSizes) {
    const auto a = random_values(n, 303 + n);
    const auto b = random_values(n, 404 + n);
    CHECK(bk::avx2::sum(a) == bk::scalar::sum(a));

    std::vector<std::int32_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx.push_back(static_cast<std::int32_t>((i * 13 + 5) % n));
    CHECK(bk::avx2::gather_sum(a, idx) == bk::scalar::gather_sum(a, idx));

    std::vector<double> d1(n), d2(n);
    bk::avx2::multiply(d1, a, b);
    bk::scalar::multiply(d2, a, b);
    CHECK(std::memcmp(d1.data(), d2.data(), n * sizeof(double)) == 0);

    bk::avx2::affine(d1, a, -2.5, 0.125);
    bk::scalar::affine(d2, a, -2.5, 0.125);
    CHECK(std::memcmp(d1.data(), d2.data(), n * sizeof(double)) == 0);
  }
}
#endif

TEST_CASE("active variant reports a known name") {
  const char* name = bk::active_variant();
  const bool known = std::strcmp(name, "scalar") == 0 || std::strcmp(name, "avx2") == 0;
  CHECK(known);
}
