#include "sole/e2softmax.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sole/error.hpp"
#include "sole/fxp.hpp"

namespace sole::softmax {

void SoftmaxConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error("bad-config", what); };
    if (code_bits < 2 || code_bits > 6) fail("code_bits must be in [2, 6]");
    if (slice_len < 1) fail("slice_len must be >= 1");
    if (input_scale_exp < 0 || input_scale_exp > 16) fail("input_scale_exp must be in [0, 16]");
    if (out_frac_bits < 1 || out_frac_bits > 16) fail("out_frac_bits must be in [1, 16]");
    if (sum_int_bits < 1 || sum_frac_bits < 1 || sum_int_bits + sum_frac_bits > 62) {
        fail("sum register widths out of range");
    }
    if (sum_frac_bits < static_cast<int>(max_code())) {
        fail("sum_frac_bits cannot represent 2^-(2^b - 1)");
    }
    if (k_total_bits < code_bits || k_total_bits > 8) fail("k_total_bits out of range");
}

double SumAccumulator::to_double() const noexcept {
    return std::ldexp(static_cast<double>(raw), -frac_bits);
}

SumAccumulator SumAccumulator::from_value(double v, int frac_bits) {
    return SumAccumulator{static_cast<std::uint64_t>(std::llround(std::ldexp(v, frac_bits))), frac_bits};
}

Log2ExpCode log2exp(std::int64_t d, int f, int code_bits) {
    if (d > 0) {
        throw Error("positive-exponent-input", "difference " + std::to_string(d));
    }
    // Four guard bits make x>>1 and x>>4 exact: t = x + x>>1 - x>>4 with
    // f + 4 fractional bits.
    const std::int64_t x = d * 16;
    const std::int64_t t = x + (x >> 1) - (x >> 4);
    const std::int64_t k = fxp::round_shift_right(-t, f + 4);
    return Log2ExpCode{static_cast<std::uint8_t>(fxp::clip(k, 0, (std::int64_t{1} << code_bits) - 1))};
}

SoftmaxState stage1(std::span<const std::int32_t> x, const SoftmaxConfig& cfg) {
    cfg.validate();
    if (x.empty()) {
        throw Error("empty-vector");
    }
    if (x.size() > cfg.max_len()) {
        throw Error("too-long", "length " + std::to_string(x.size()) + " exceeds sum register");
    }

    const int f = cfg.input_scale_exp;
    const std::uint64_t one = std::uint64_t{1} << cfg.sum_frac_bits;
    const std::uint64_t capacity = std::uint64_t{1} << (cfg.sum_int_bits + cfg.sum_frac_bits);

    SoftmaxState st;
    st.codes.resize(x.size());
    st.slice_max.reserve((x.size() + cfg.slice_len - 1) / cfg.slice_len);
    st.sum.frac_bits = cfg.sum_frac_bits;

    std::uint64_t sum = 0;
    std::int32_t running = 0;
    for (std::size_t begin = 0; begin < x.size(); begin += cfg.slice_len) {
        const std::size_t end = std::min(x.size(), begin + cfg.slice_len);
        const std::int32_t local = *std::max_element(x.begin() + begin, x.begin() + end);
        if (begin == 0) {
            running = local;
        } else if (local > running) {
            const auto sub = log2exp(std::int64_t{running} - local, f, cfg.code_bits);
            sum >>= sub.k;  // truncating shifter
            running = local;
        }
        for (std::size_t i = begin; i < end; ++i) {
            const auto code = log2exp(std::int64_t{x[i]} - running, f, cfg.code_bits);
            st.codes[i] = code;
            sum += one >> code.k;
        }
        st.slice_max.push_back(running);
    }
    if (sum > capacity) {
        throw Error("sum-overflow");
    }
    st.global_max = running;
    st.sum.raw = sum;
    return st;
}

std::uint32_t divider_constant(bool q, int out_frac_bits) {
    // round(0.818 * 2^F) and round(0.568 * 2^F) in integer arithmetic.
    const std::uint64_t milli = q ? 568 : 818;
    return static_cast<std::uint32_t>(((milli << out_frac_bits) + 500) / 1000);
}

std::uint32_t aldivision(std::uint32_t k_total, const SumAccumulator& sum, const SoftmaxConfig& cfg) {
    const int lead = fxp::leading_one(sum.raw);
    const int k_s = lead - sum.frac_bits;
    if (k_s < 0) {
        throw Error("sum-below-one");
    }
    const bool q = lead > 0 && ((sum.raw >> (lead - 1)) & 1u) != 0;
    const std::uint32_t shift = k_total + static_cast<std::uint32_t>(k_s);
    const std::uint32_t c = divider_constant(q, cfg.out_frac_bits);
    return shift >= 32 ? 0 : c >> shift;
}

std::vector<std::uint32_t> stage2(const SoftmaxState& state, const SoftmaxConfig& cfg) {
    cfg.validate();
    const std::uint32_t k_sat = (1u << cfg.k_total_bits) - 1;
    std::vector<std::uint32_t> out(state.codes.size());
    for (std::size_t s = 0; s < state.slice_max.size(); ++s) {
        const auto sub = log2exp(std::int64_t{state.slice_max[s]} - state.global_max, cfg.input_scale_exp,
                                 cfg.code_bits);
        const std::size_t begin = s * cfg.slice_len;
        const std::size_t end = std::min(out.size(), begin + cfg.slice_len);
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t k_total = std::min<std::uint32_t>(sub.k + state.codes[i].k, k_sat);
            out[i] = aldivision(k_total, state.sum, cfg);
        }
    }
    return out;
}

std::vector<std::uint32_t> e2softmax(std::span<const std::int32_t> x, const SoftmaxConfig& cfg) {
    return stage2(stage1(x, cfg), cfg);
}

std::vector<double> to_real(std::span<const std::uint32_t> raw, int frac_bits) {
    std::vector<double> out(raw.size());
    std::transform(raw.begin(), raw.end(), out.begin(),
                   [frac_bits](std::uint32_t r) { return std::ldexp(static_cast<double>(r), -frac_bits); });
    return out;
}

}  // namespace sole::softmax
