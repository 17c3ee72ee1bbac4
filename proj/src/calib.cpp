#include "sole/calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "sole/error.hpp"

namespace sole::calib {

namespace {

void require_samples(std::span<const double> x) {
    if (x.empty()) throw Error("empty-tensor");
    for (double v : x) {
        if (!std::isfinite(v)) throw Error("non-finite", "calibration sample is NaN or infinite");
    }
}

int quantize_one(double x, int alpha, double scale, int zp, int qmax) {
    const double q = round_half_up(x / (std::ldexp(1.0, alpha) * scale)) + zp;
    return static_cast<int>(std::clamp(q, 0.0, static_cast<double>(qmax)));
}

}  // namespace

double round_half_up(double v) { return std::floor(v + 0.5); }

void PTFParams::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("bad-config", "scale must be positive");
    if (bits < 2 || bits > 16) throw Error("bad-config", "bits out of range");
    if (zp < 0 || zp > (1 << bits) - 1) throw Error("bad-config", "zero point out of range");
    if (alphas.empty()) throw Error("bad-config", "no channels");
}

std::string PTFParams::to_json() const {
    nlohmann::ordered_json j;
    j["scale"] = scale;
    j["zp"] = zp;
    j["bits"] = bits;
    j["alphas"] = alphas;
    return j.dump(2);
}

PTFParams PTFParams::from_json(const std::string& text) {
    PTFParams p;
    try {
        const auto j = nlohmann::json::parse(text);
        p.scale = j.at("scale").get<double>();
        p.zp = j.at("zp").get<int>();
        p.bits = j.at("bits").get<int>();
        p.alphas = j.at("alphas").get<std::vector<std::uint8_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad-json", e.what());
    }
    p.validate();
    return p;
}

MinMaxParams calibrate_minmax(std::span<const double> samples, int bits) {
    require_samples(samples);
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    const int qmax = (1 << bits) - 1;
    if (*hi == *lo) {
        return {1.0, 1 << (bits - 1)};
    }
    MinMaxParams p;
    p.scale = (*hi - *lo) / qmax;
    p.zp = static_cast<int>(std::clamp(round_half_up(-*lo * qmax / (*hi - *lo)), 0.0, static_cast<double>(qmax)));
    return p;
}

int calibrate_pow2(std::span<const double> samples, std::size_t row_len) {
    require_samples(samples);
    if (row_len == 0 || samples.size() % row_len != 0) throw Error("shape-error", "rows do not tile the tensor");
    double worst = 0.0;
    for (std::size_t r = 0; r < samples.size(); r += row_len) {
        const auto row = samples.subspan(r, row_len);
        const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
        worst = std::min(worst, *lo - *hi);
    }
    for (int f = 8; f > 0; --f) {
        if (round_half_up(std::ldexp(worst, f)) >= -128.0) return f;
    }
    return 0;
}

double ptf_channel_mse(std::span<const double> samples, std::size_t channels, std::size_t channel, int alpha,
                       double scale, int zp, int bits) {
    const int qmax = (1 << bits) - 1;
    const double step = std::ldexp(1.0, alpha) * scale;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = channel; i < samples.size(); i += channels, ++n) {
        const double back = (quantize_one(samples[i], alpha, scale, zp, qmax) - zp) * step;
        sum += (back - samples[i]) * (back - samples[i]);
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

PTFParams calibrate_ptf(std::span<const double> samples, std::size_t channels, int bits, int alpha_max) {
    require_samples(samples);
    if (channels == 0 || samples.size() % channels != 0) throw Error("shape-error", "channels do not tile the tensor");
    if (alpha_max < 0 || alpha_max > 3) throw Error("bad-config", "alpha_max must be in [0, 3]");
    const int qmax = (1 << bits) - 1;

    // Reference channel: the one with the smallest range.
    double best_range = std::numeric_limits<double>::infinity();
    double ref_lo = 0.0, ref_hi = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
        double lo = samples[c], hi = samples[c];
        for (std::size_t i = c; i < samples.size(); i += channels) {
            lo = std::min(lo, samples[i]);
            hi = std::max(hi, samples[i]);
        }
        if (hi - lo < best_range) {
            best_range = hi - lo;
            ref_lo = lo;
            ref_hi = hi;
        }
    }

    PTFParams p;
    p.bits = bits;
    if (best_range > 0.0) {
        p.scale = best_range / qmax;
        p.zp = static_cast<int>(std::clamp(round_half_up(-ref_lo * qmax / best_range), 0.0, static_cast<double>(qmax)));
    } else {
        p.scale = 1.0;
        p.zp = static_cast<int>(std::clamp(round_half_up(-ref_hi), 0.0, static_cast<double>(qmax)));
    }

    p.alphas.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        int best_alpha = 0;
        double best_mse = std::numeric_limits<double>::infinity();
        for (int a = 0; a <= alpha_max; ++a) {
            const double mse = ptf_channel_mse(samples, channels, c, a, p.scale, p.zp, bits);
            if (mse < best_mse) {  // strict: ties keep the smaller alpha
                best_mse = mse;
                best_alpha = a;
            }
        }
        p.alphas[c] = static_cast<std::uint8_t>(best_alpha);
    }
    return p;
}

std::vector<std::uint8_t> quantize(std::span<const double> x, const PTFParams& p) {
    p.validate();
    const std::size_t channels = p.alphas.size();
    if (x.size() % channels != 0) throw Error("shape-error", "tensor does not tile channels");
    const int qmax = (1 << p.bits) - 1;
    if (qmax > 255) throw Error("bad-config", "8-bit storage only");
    std::vector<std::uint8_t> q(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        q[i] = static_cast<std::uint8_t>(quantize_one(x[i], p.alphas[i % channels], p.scale, p.zp, qmax));
    }
    return q;
}

std::vector<double> dequantize(std::span<const std::uint8_t> q, const PTFParams& p) {
    p.validate();
    const std::size_t channels = p.alphas.size();
    if (q.size() % channels != 0) throw Error("shape-error", "tensor does not tile channels");
    std::vector<double> x(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        x[i] = (static_cast<int>(q[i]) - p.zp) * std::ldexp(p.scale, p.alphas[i % channels]);
    }
    return x;
}

std::vector<std::int32_t> quantize_pow2(std::span<const double> x, int f) {
    std::vector<std::int32_t> q(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        q[i] = static_cast<std::int32_t>(std::clamp(round_half_up(std::ldexp(x[i], f)), -128.0, 127.0));
    }
    return q;
}

}  // namespace sole::calib
