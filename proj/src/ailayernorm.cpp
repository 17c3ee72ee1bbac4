#include "sole/ailayernorm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <string>

#include "sole/error.hpp"

namespace sole::layernorm {

namespace {

std::int64_t shift_signed(std::int64_t v, int n) {
    // Positive n rounds right, negative n shifts left.
    return n >= 0 ? fxp::round_shift_right(v, n) : v * (std::int64_t{1} << -n);
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw Error("accumulator-overflow", "affine product");
    }
    return r;
}

LayerNormConfig validated(LayerNormConfig cfg) {
    cfg.validate();
    return cfg;
}

}  // namespace

void LayerNormConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error("bad-config", what); };
    if (channels < 1) fail("channels must be >= 1");
    if (alpha_max < 0 || alpha_max > 3) fail("alpha_max must be in [0, 3]");
    if (ex_acc_bits < 12 || ex_acc_bits > 48) fail("ex_acc_bits out of range");
    if (ex2_acc_bits < 16 || ex2_acc_bits > 48) fail("ex2_acc_bits out of range");
    if (invsqrt_entries < 2 || !std::has_single_bit(static_cast<unsigned>(invsqrt_entries))) {
        fail("invsqrt_entries must be a power of two");
    }
    if (invsqrt_frac_bits < 8 || invsqrt_frac_bits > 30) fail("invsqrt_frac_bits out of range");
    if (eps_raw < 1) fail("eps_raw must be >= 1");
}

AffineParams AffineParams::quantize(std::span<const double> gamma, std::span<const double> beta, double out_scale,
                                    int out_zp) {
    if (gamma.size() != beta.size()) {
        throw Error("shape-error", "gamma/beta length mismatch");
    }
    if (!(out_scale > 0.0) || !std::isfinite(out_scale)) {
        throw Error("bad-config", "out_scale must be positive");
    }
    auto symmetric = [](std::span<const double> v, std::vector<std::int8_t>& q) {
        double amax = 0.0;
        for (double x : v) amax = std::max(amax, std::abs(x));
        const double scale = amax > 0.0 ? amax / 127.0 : 1.0;
        q.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            q[i] = static_cast<std::int8_t>(std::clamp<long>(std::lround(v[i] / scale), -127, 127));
        }
        return scale;
    };
    AffineParams p;
    p.gamma_scale = symmetric(gamma, p.gamma_q);
    p.beta_scale = symmetric(beta, p.beta_q);
    p.out_scale = out_scale;
    p.out_zp = out_zp;
    return p;
}

CompressedVal dynamic_compress(std::uint8_t x) {
    if ((x >> 6) != 0) {
        return {static_cast<std::uint8_t>(fxp::clip(fxp::round_shift_right(x, 4), 0, 15)), true};
    }
    return {static_cast<std::uint8_t>(fxp::clip(fxp::round_shift_right(x, 2), 0, 15)), false};
}

std::uint64_t square_decompress(CompressedVal c, int alpha) {
    static constexpr auto kSquares = [] {
        std::array<std::uint16_t, 16> t{};
        for (std::uint16_t y = 0; y < 16; ++y) t[y] = static_cast<std::uint16_t>(y * y);
        return t;
    }();
    if (c.y > 15 || alpha < 0 || alpha > 3) {
        throw Error("bad-argument", "square_decompress operand out of range");
    }
    const int shift = (c.s ? 8 : 4) + 2 * alpha;
    return std::uint64_t{kSquares[c.y]} << shift;
}

InvSqrtTable::InvSqrtTable(int entries, int frac_bits)
    : entries_(entries), index_bits_(std::countr_zero(static_cast<unsigned>(entries))), frac_bits_(frac_bits) {
    for (int r = 0; r < 2; ++r) {
        auto& half = table_[static_cast<std::size_t>(r)];
        half.resize(static_cast<std::size_t>(entries));
        for (int j = 0; j < entries; ++j) {
            const double m = std::ldexp(1.0 + static_cast<double>(j) / entries, r);
            half[static_cast<std::size_t>(j)] =
                static_cast<std::uint32_t>(std::llround(std::ldexp(1.0 / std::sqrt(m), frac_bits)));
        }
    }
}

fxp::FixedVal InvSqrtTable::eval(std::uint64_t v_raw) const {
    const int lead = fxp::leading_one(v_raw);
    int exponent = lead - kRecipFracBits;

    // index_bits + 1 bits below the leading one, rounded to index_bits.
    const int field_bits = index_bits_ + 1;
    const std::uint64_t below = v_raw - (std::uint64_t{1} << lead);
    const std::uint64_t field =
        lead >= field_bits ? below >> (lead - field_bits) : below << (field_bits - lead);
    std::uint64_t j = (field + 1) >> 1;
    if (j == static_cast<std::uint64_t>(entries_)) {
        j = 0;
        ++exponent;
    }
    const int e = exponent >= 0 ? exponent / 2 : -((-exponent + 1) / 2);
    const int r = exponent - 2 * e;

    fxp::FixedVal out{static_cast<std::int64_t>(table_[static_cast<std::size_t>(r)][j]), frac_bits_ + e};
    if (out.frac_bits < 0) {
        out.raw <<= -out.frac_bits;
        out.frac_bits = 0;
    }
    return out;
}

AILayerNorm::AILayerNorm(LayerNormConfig cfg, AffineParams affine)
    : cfg_(validated(cfg)), affine_(std::move(affine)), table_(cfg_.invsqrt_entries, cfg_.invsqrt_frac_bits) {
    if (affine_.gamma_q.size() != cfg_.channels || affine_.beta_q.size() != cfg_.channels) {
        throw Error("shape-error", "affine parameters do not match channel count");
    }
    if (!(affine_.out_scale > 0.0) || !std::isfinite(affine_.out_scale)) {
        throw Error("bad-config", "out_scale must be positive");
    }
    // 1/C with 16 significant bits: recip = round(2^recip_shift / C).
    recip_shift_ = kRecipFracBits + static_cast<int>(std::bit_width(cfg_.channels)) - 1;
    recip_ = std::llround(std::ldexp(1.0 / static_cast<double>(cfg_.channels), recip_shift_));

    // Output requantization folds into the per-channel constants offline.
    gamma_fx_.resize(cfg_.channels);
    beta_fx_.resize(cfg_.channels);
    for (std::size_t c = 0; c < cfg_.channels; ++c) {
        gamma_fx_[c] = std::llround(
            std::ldexp(affine_.gamma_q[c] * affine_.gamma_scale / affine_.out_scale, kGammaFracBits));
        beta_fx_[c] = std::llround(std::ldexp(affine_.beta_q[c] * affine_.beta_scale / affine_.out_scale +
                                                  static_cast<double>(affine_.out_zp),
                                              kOutAccFracBits));
    }
}

void AILayerNorm::check_shapes(std::span<const std::uint8_t> xq, std::span<const std::uint8_t> alphas) const {
    if (xq.size() != cfg_.channels || alphas.size() != cfg_.channels) {
        throw Error("shape-error", "expected " + std::to_string(cfg_.channels) + " channels");
    }
    for (auto a : alphas) {
        if (a > cfg_.alpha_max) throw Error("bad-argument", "alpha exceeds alpha_max");
    }
}

Stats AILayerNorm::stage1(std::span<const std::uint8_t> xq, int zp, std::span<const std::uint8_t> alphas) const {
    check_shapes(xq, alphas);
    if (zp < 0 || zp > 255) {
        throw Error("bad-argument", "zero point outside [0, 255]");
    }
    Stats st;
    for (std::size_t i = 0; i < xq.size(); ++i) {
        const std::int64_t d = std::int64_t{xq[i]} - zp;
        st.ex_raw += d * (std::int64_t{1} << alphas[i]);
        const auto mag = static_cast<std::uint8_t>(std::min<std::int64_t>(std::abs(d), 255));
        st.ex2_raw += square_decompress(dynamic_compress(mag), alphas[i]);
    }
    if (fxp::signed_width(st.ex_raw) > cfg_.ex_acc_bits || static_cast<int>(std::bit_width(st.ex2_raw)) > cfg_.ex2_acc_bits) {
        throw Error("accumulator-overflow", "statistics exceed declared widths");
    }
    return st;
}

fxp::FixedVal AILayerNorm::inv_sqrt(const fxp::FixedVal& v) const {
    if (v.frac_bits != kRecipFracBits) {
        throw Error("bad-argument", "variance must carry 16 fractional bits");
    }
    if (v.raw < (cfg_.eps_raw << kRecipFracBits)) {
        throw Error("subnormal-variance");
    }
    return table_.eval(static_cast<std::uint64_t>(v.raw));
}

Stats AILayerNorm::preprocess(Stats st) const {
    const int cut = recip_shift_ - kRecipFracBits;
    const std::int64_t mu = fxp::round_shift_right(st.ex_raw * recip_, cut);
    std::int64_t ex2 = fxp::round_shift_right(static_cast<std::int64_t>(st.ex2_raw) * recip_, cut);
    if (cfg_.literal_ex2_shift) {
        ex2 <<= 4;
    }
    const std::int64_t mu2 = fxp::round_shift_right(mu * mu, kRecipFracBits);
    const std::int64_t var = std::max(ex2 - mu2, cfg_.eps_raw << kRecipFracBits);
    st.mu = {mu, kRecipFracBits};
    st.var = {var, kRecipFracBits};
    st.std_inv = inv_sqrt(st.var);
    return st;
}

std::vector<std::uint8_t> AILayerNorm::stage2(std::span<const std::uint8_t> xq, int zp,
                                              std::span<const std::uint8_t> alphas, const Stats& st) const {
    check_shapes(xq, alphas);
    const std::int64_t mu = fxp::round_shift_right(st.mu.raw, kRecipFracBits - kXcFracBits);
    const int a_shift = kGammaFracBits + st.std_inv.frac_bits - kAFracBits;
    std::vector<std::uint8_t> out(xq.size());
    for (std::size_t i = 0; i < xq.size(); ++i) {
        const std::int64_t a = shift_signed(checked_mul(gamma_fx_[i], st.std_inv.raw), a_shift);
        const std::int64_t d = std::int64_t{xq[i]} - zp;
        const std::int64_t xc = d * (std::int64_t{1} << (alphas[i] + kXcFracBits)) - mu;
        const std::int64_t y = checked_mul(a, xc) + beta_fx_[i];
        out[i] = static_cast<std::uint8_t>(fxp::clip(fxp::round_shift_right(y, kOutAccFracBits), 0, 255));
    }
    return out;
}

std::vector<std::uint8_t> AILayerNorm::run(std::span<const std::uint8_t> xq, int zp,
                                           std::span<const std::uint8_t> alphas) const {
    return stage2(xq, zp, alphas, preprocess(stage1(xq, zp, alphas)));
}

}  // namespace sole::layernorm
