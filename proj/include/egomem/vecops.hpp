#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace egomem::vec {

// Dense double kernels behind cosine similarity. A scalar reference
// implementation always exists; on x86-64 an AVX2 variant is selected
// at runtime when the CPU supports it. The two are equivalence-tested
// against each other.

double dot_scalar(std::span<const double> a, std::span<const double> b);

#if defined(__x86_64__)
double dot_avx2(std::span<const double> a, std::span<const double> b);
#endif

/// Dispatched dot product. Sizes must match.
double dot(std::span<const double> a, std::span<const double> b);

double norm(std::span<const double> v);

/// Name of the kernel the dispatcher selected ("avx2" or "scalar").
std::string_view active_kernel();

}  // namespace egomem::vec
