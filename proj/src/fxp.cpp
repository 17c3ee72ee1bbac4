#include "sole/fxp.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "sole/error.hpp"

namespace sole::fxp {

double FixedVal::to_double() const noexcept {
    return std::ldexp(static_cast<double>(raw), -frac_bits);
}

bool FixedVal::fits() const noexcept {
    return width >= kMaxWidth || signed_width(raw) <= width;
}

std::int64_t round_shift_right(std::int64_t raw, int n) {
    if (n < 0 || n >= kMaxWidth) {
        throw Error("bad-shift", "shift count " + std::to_string(n));
    }
    if (n == 0) {
        return raw;
    }
    // floor(raw / 2^n) plus the bit just below the cut; no overflow near INT64_MAX.
    return (raw >> n) + ((raw >> (n - 1)) & 1);
}

FixedVal round_shift_right(const FixedVal& x, int n) {
    if (n >= x.width) {
        throw Error("bad-shift", "shift count " + std::to_string(n) + " >= width");
    }
    return FixedVal{round_shift_right(x.raw, n), x.frac_bits - n, x.width};
}

std::int64_t clip(std::int64_t x, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) {
        throw Error("bad-range", "clip bounds inverted");
    }
    return x < lo ? lo : (x > hi ? hi : x);
}

int leading_one(std::uint64_t x) {
    if (x == 0) {
        throw Error("lod-zero");
    }
    return std::bit_width(x) - 1;
}

int signed_width(std::int64_t v) noexcept {
    const std::uint64_t mag = v < 0 ? ~static_cast<std::uint64_t>(v) : static_cast<std::uint64_t>(v);
    return std::bit_width(mag) + 1;
}

}  // namespace sole::fxp
