#include "egomem/vecops.hpp"

#include <cassert>
#include <cmath>

namespace egomem::vec {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

namespace {

using DotFn = double (*)(std::span<const double>, std::span<const double>);

struct Dispatch {
    DotFn dot = &dot_scalar;
    std::string_view name = "scalar";

    Dispatch() {
#if defined(__x86_64__)
        if (__builtin_cpu_supports("avx2")) {
            dot = &dot_avx2;
            name = "avx2";
        }
#endif
    }
};

const Dispatch& dispatch() {
    static const Dispatch d;
    return d;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) { return dispatch().dot(a, b); }

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::string_view active_kernel() { return dispatch().name; }

}  // namespace egomem::vec
