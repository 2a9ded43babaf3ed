#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "egomem/vecops.hpp"

using namespace egomem;

TEST_CASE("scalar dot on small vectors") {
    std::vector<double> a = {1.0, 2.0, 3.0};
    std::vector<double> b = {4.0, 5.0, 6.0};
    CHECK(vec::dot_scalar(a, b) == doctest::Approx(32.0));
    CHECK(vec::norm(a) == doctest::Approx(std::sqrt(14.0)));
    CHECK(vec::dot_scalar(std::vector<double>{}, std::vector<double>{}) == 0.0);
}

TEST_CASE("dispatched kernel is equivalent to the scalar reference") {
    INFO("active kernel: ", vec::active_kernel());
    std::mt19937_64 rng(99);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = static_cast<std::size_t>(rng() % 300);  // covers tails and empty
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = dist(rng);
            b[i] = dist(rng);
        }
        double reference = vec::dot_scalar(a, b);
        double dispatched = vec::dot(a, b);
        double scale = std::max(1.0, std::abs(reference));
        CHECK(std::abs(dispatched - reference) / scale < 1e-9);
    }
}

#if defined(__x86_64__)
TEST_CASE("avx2 variant agrees with scalar when the cpu has it") {
    if (!__builtin_cpu_supports("avx2")) return;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + static_cast<std::size_t>(rng() % 257);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = dist(rng);
            b[i] = dist(rng);
        }
        double reference = vec::dot_scalar(a, b);
        double simd = vec::dot_avx2(a, b);
        double scale = std::max(1.0, std::abs(reference));
        CHECK(std::abs(simd - reference) / scale < 1e-9);
    }
}
#endif
