#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Bit-exact integer softmax: log2-quantized exponent codes, online max
// normalization over slices, and a leading-one based approximate divider.

namespace sole::softmax {

struct SoftmaxConfig {
    int code_bits = 4;          // width b of the Log2Exp code
    int input_scale_exp = 4;    // f: input real value = q * 2^-f
    std::size_t slice_len = 32; // elements per Stage-1 beat
    int out_frac_bits = 8;      // output is unsigned Q0.out_frac_bits
    int sum_int_bits = 13;
    int sum_frac_bits = 15;
    int k_total_bits = 6;       // saturation width of code + correction

    // Throws Error("bad-config") when an invariant is violated.
    void validate() const;

    std::uint32_t max_code() const noexcept { return (1u << code_bits) - 1; }
    std::size_t max_len() const noexcept { return std::size_t{1} << sum_int_bits; }
};

// Encodes 2^-k; k == 0 iff the element equals the running max.
struct Log2ExpCode {
    std::uint8_t k = 0;
    friend bool operator==(Log2ExpCode, Log2ExpCode) = default;
};

// Unsigned fixed point with sum_frac_bits fractional bits. Holds values up to
// and including 2^sum_int_bits (one carry bit above the integer field).
struct SumAccumulator {
    std::uint64_t raw = 0;
    int frac_bits = 15;

    double to_double() const noexcept;
    static SumAccumulator from_value(double v, int frac_bits);
};

struct SoftmaxState {
    std::vector<Log2ExpCode> codes;
    std::vector<std::int32_t> slice_max;  // running max after each slice
    std::int32_t global_max = 0;
    SumAccumulator sum;
};

// -round(d * 2^-f * 1.4375) through the shift-add network, clipped to
// [0, 2^b - 1]. Throws Error("positive-exponent-input") when d > 0.
Log2ExpCode log2exp(std::int64_t d, int f, int code_bits);

SoftmaxState stage1(std::span<const std::int32_t> x, const SoftmaxConfig& cfg);

// Output raw value in Q0.out_frac_bits. k_total must already be saturated.
std::uint32_t aldivision(std::uint32_t k_total, const SumAccumulator& sum, const SoftmaxConfig& cfg);

// The two multiplexer constants (1.636 - 0.5 q) / 2 rounded to out_frac_bits.
std::uint32_t divider_constant(bool q, int out_frac_bits);

std::vector<std::uint32_t> stage2(const SoftmaxState& state, const SoftmaxConfig& cfg);

std::vector<std::uint32_t> e2softmax(std::span<const std::int32_t> x, const SoftmaxConfig& cfg);

std::vector<double> to_real(std::span<const std::uint32_t> raw, int frac_bits);

}  // namespace sole::softmax
