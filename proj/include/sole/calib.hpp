#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

// Offline post-training calibration: asymmetric min-max, power-of-two input
// scales for the softmax kernel, and per-channel power-of-two factors.

namespace sole::calib {

struct MinMaxParams {
    double scale = 1.0;
    int zp = 0;
};

// Channel-shared scale/zero point plus per-channel shift alpha:
// q = clip(round(x / (2^alpha * scale)) + zp, 0, 2^bits - 1).
struct PTFParams {
    std::vector<std::uint8_t> alphas;
    double scale = 1.0;
    int zp = 0;
    int bits = 8;

    void validate() const;
    std::string to_json() const;
    static PTFParams from_json(const std::string& text);
};

// Half-up rounding, the same convention as the kernels.
double round_half_up(double v);

MinMaxParams calibrate_minmax(std::span<const double> samples, int bits = 8);

// Largest f in [0, 8] whose quantized row-relative differences stay within
// the int8 range. `row_len` splits `samples` into rows.
int calibrate_pow2(std::span<const double> samples, std::size_t row_len);

// samples is row-major (B * L) x C.
PTFParams calibrate_ptf(std::span<const double> samples, std::size_t channels, int bits = 8, int alpha_max = 3);

// Mean squared dequantization error of one channel at a given alpha.
double ptf_channel_mse(std::span<const double> samples, std::size_t channels, std::size_t channel, int alpha,
                       double scale, int zp, int bits);

// Elementwise; x.size() must be a multiple of p.alphas.size().
std::vector<std::uint8_t> quantize(std::span<const double> x, const PTFParams& p);
std::vector<double> dequantize(std::span<const std::uint8_t> q, const PTFParams& p);

// Signed power-of-two quantizer for softmax logits: clip(round(x * 2^f), -128, 127).
std::vector<std::int32_t> quantize_pow2(std::span<const double> x, int f);

}  // namespace sole::calib
