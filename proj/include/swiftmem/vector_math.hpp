#pragma once

#include <cmath>
#include <span>

#include "swiftmem/error.hpp"
#include "swiftmem/types.hpp"

namespace swiftmem {

// Double accumulation in four interleaved lanes (element i goes to lane
// i % 4), combined as (l0 + l1) + (l2 + l3). Every score in the library goes
// through these loops so identical inputs always give bit-identical scores.
inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
    const std::size_t n = a.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        l0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        l1 += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
        l2 += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
        l3 += static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]);
    }
    if (i < n) l0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    if (i + 1 < n) l1 += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
    if (i + 2 < n) l2 += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
    return (l0 + l1) + (l2 + l3);
}

inline double l2_norm(std::span<const float> a) noexcept { return std::sqrt(dot(a, a)); }

inline double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine of vectors of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroNorm, "cosine of a zero vector");
    return dot(a, b) / (na * nb);
}

/// Scales `v` to unit length in place; returns false (leaving v untouched) for a zero vector.
inline bool l2_normalize(Embedding& v) noexcept {
    const double n = l2_norm(v);
    if (n == 0.0 || !std::isfinite(n)) return false;
    for (float& x : v) x = static_cast<float>(static_cast<double>(x) / n);
    return true;
}

} // namespace swiftmem
