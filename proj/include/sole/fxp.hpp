#pragma once

#include <cstdint>

namespace sole::fxp {

// Signed fixed-point value: real value = raw * 2^-frac_bits, raw fits `width`
// bits of two's complement.
struct FixedVal {
    std::int64_t raw = 0;
    int frac_bits = 0;
    int width = 64;

    double to_double() const noexcept;
    bool fits() const noexcept;
};

inline constexpr int kMaxWidth = 64;

// Arithmetic shift right by n with round-to-nearest, ties toward +inf
// (add half an output ULP, then truncate). n == 0 is the identity.
std::int64_t round_shift_right(std::int64_t raw, int n);
FixedVal round_shift_right(const FixedVal& x, int n);

std::int64_t clip(std::int64_t x, std::int64_t lo, std::int64_t hi);

// Index p with 2^p <= x < 2^(p+1). Throws Error("lod-zero") for x == 0.
int leading_one(std::uint64_t x);

// Smallest signed width that holds v.
int signed_width(std::int64_t v) noexcept;

}  // namespace sole::fxp
