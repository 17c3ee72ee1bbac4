#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sole/fxp.hpp"

// Integer layer normalization with compressed second-moment statistics.
//
// Stage 1 accumulates E[x] from PTF-shifted inputs and E[x^2] from 4-bit
// compressed magnitudes squared through a 16-entry table. The preprocess step
// turns the sums into a mean and a table-driven inverse square root, and
// Stage 2 applies the fused affine transform Y = A * (X << alpha - mu) + B.

namespace sole::layernorm {

struct LayerNormConfig {
    std::size_t channels = 1;
    int alpha_max = 3;
    int ex_acc_bits = 24;          // signed
    int ex2_acc_bits = 40;         // unsigned
    int invsqrt_entries = 64;      // per half, power of two
    int invsqrt_frac_bits = 16;
    std::int64_t eps_raw = 1;      // variance floor, accumulator units
    // Apply the extra "<< 4" on E[x^2] before the 1/C multiply. Off by
    // default: square_decompress already restores full magnitude.
    bool literal_ex2_shift = false;

    void validate() const;
};

inline constexpr int kRecipFracBits = 16;  // mean/variance; also 1/C significant bits
inline constexpr int kAFracBits = 24;      // fused scale A
inline constexpr int kXcFracBits = 8;      // centered input
inline constexpr int kGammaFracBits = 16;
inline constexpr int kOutAccFracBits = kAFracBits + kXcFracBits;

struct CompressedVal {
    std::uint8_t y = 0;  // [0, 15]
    bool s = false;      // input had x[7:6] != 0
    friend bool operator==(CompressedVal, CompressedVal) = default;
};

struct Stats {
    std::int64_t ex_raw = 0;
    std::uint64_t ex2_raw = 0;
    fxp::FixedVal mu{0, kRecipFracBits};
    fxp::FixedVal var{0, kRecipFracBits};
    fxp::FixedVal std_inv{0, 16};
};

// Quantized affine weights plus the output quantizer.
struct AffineParams {
    std::vector<std::int8_t> gamma_q;
    double gamma_scale = 1.0;
    std::vector<std::int8_t> beta_q;
    double beta_scale = 1.0;
    double out_scale = 1.0;
    int out_zp = 0;

    // Symmetric per-tensor int8 quantization of real gamma/beta.
    static AffineParams quantize(std::span<const double> gamma, std::span<const double> beta,
                                 double out_scale, int out_zp);
};

CompressedVal dynamic_compress(std::uint8_t x);
std::uint64_t square_decompress(CompressedVal c, int alpha);

// m^-1/2 table with range reduction v = m * 2^(2e + r).
class InvSqrtTable {
public:
    InvSqrtTable(int entries, int frac_bits);

    // v has kRecipFracBits fractional bits and must be positive.
    fxp::FixedVal eval(std::uint64_t v_raw) const;

    int entries() const noexcept { return entries_; }
    int frac_bits() const noexcept { return frac_bits_; }
    std::uint32_t entry(int r, int j) const { return table_[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)]; }

private:
    int entries_;
    int index_bits_;
    int frac_bits_;
    std::array<std::vector<std::uint32_t>, 2> table_;
};

class AILayerNorm {
public:
    AILayerNorm(LayerNormConfig cfg, AffineParams affine);

    Stats stage1(std::span<const std::uint8_t> xq, int zp, std::span<const std::uint8_t> alphas) const;
    Stats preprocess(Stats stats) const;
    fxp::FixedVal inv_sqrt(const fxp::FixedVal& v) const;
    std::vector<std::uint8_t> stage2(std::span<const std::uint8_t> xq, int zp, std::span<const std::uint8_t> alphas,
                                     const Stats& stats) const;
    std::vector<std::uint8_t> run(std::span<const std::uint8_t> xq, int zp, std::span<const std::uint8_t> alphas) const;

    const LayerNormConfig& config() const noexcept { return cfg_; }
    std::int64_t recip() const noexcept { return recip_; }
    int recip_shift() const noexcept { return recip_shift_; }
    std::int64_t gamma_fx(std::size_t c) const { return gamma_fx_[c]; }
    std::int64_t beta_fx(std::size_t c) const { return beta_fx_[c]; }

private:
    void check_shapes(std::span<const std::uint8_t> xq, std::span<const std::uint8_t> alphas) const;

    LayerNormConfig cfg_;
    AffineParams affine_;
    InvSqrtTable table_;
    std::int64_t recip_;
    int recip_shift_;
    std::vector<std::int64_t> gamma_fx_;  // gamma * gamma_scale / out_scale, kGammaFracBits
    std::vector<std::int64_t> beta_fx_;   // beta / out_scale + out_zp, kOutAccFracBits
};

}  // namespace sole::layernorm
