#include "sole/commands.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sole/ailayernorm.hpp"
#include "sole/calib.hpp"
#include "sole/error.hpp"
#include "sole/oracle.hpp"
#include "sole/random.hpp"

namespace sole::harness {

namespace {

// Streaming combination of per-row ErrorReports in row order.
struct ErrorAccumulator {
    double max_abs = 0.0, sum_err = 0.0, sum_abs = 0.0, sum_ref = 0.0, kl_sum = 0.0;
    std::size_t n = 0, kl_rows = 0;

    void add(std::span<const double> approx, std::span<const double> ref) {
        const auto r = oracle::compare(approx, ref);
        max_abs = std::max(max_abs, r.max_abs_err);
        sum_err += r.mean_err * static_cast<double>(r.n);
        sum_abs += r.mean_abs_err * static_cast<double>(r.n);
        for (double v : ref) sum_ref += std::abs(v);
        n += r.n;
        if (r.kl_div) {
            kl_sum += *r.kl_div;
            ++kl_rows;
        }
    }

    nlohmann::ordered_json to_json() const {
        const double dn = n ? static_cast<double>(n) : 1.0;
        nlohmann::ordered_json j;
        j["n"] = n;
        j["max_abs_err"] = max_abs;
        j["mean_err"] = sum_err / dn;
        j["mean_abs_err"] = sum_abs / dn;
        j["rel_err"] = sum_ref > 0.0 ? sum_abs / sum_ref : 0.0;
        if (kl_rows) j["kl_div_mean"] = kl_sum / static_cast<double>(kl_rows);
        return j;
    }

    double mean_abs_err() const { return n ? sum_abs / static_cast<double>(n) : 0.0; }
};

std::vector<double> normal_vector(CounterRng& rng, std::size_t n, double sigma = 1.0, double mean = 0.0) {
    std::vector<double> v(n);
    for (double& x : v) x = mean + sigma * rng.normal();
    return v;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return aa == bb ? 1.0 : 0.0;
    return ab / std::sqrt(aa * bb);
}

}  // namespace

RunReport cmd_bias_check(std::size_t n, std::uint64_t seed) {
    RunReport rep;
    rep.command = "bias-check";
    rep.seed = seed;
    rep.config["n"] = n;
    const auto bias = oracle::aldivision_bias_mc(n, seed);
    rep.metrics["pre_bias"] = bias.pre;
    rep.metrics["pre_stderr"] = bias.pre_stderr;
    rep.metrics["post_bias"] = bias.post;
    rep.metrics["post_stderr"] = bias.post_stderr;
    rep.metrics["analytic_pre_bias"] = oracle::analytic_pre_bias();

    if (n < kBiasMinSamples) {
        const std::string why = "n < " + std::to_string(kBiasMinSamples) + ", confidence interval too wide";
        rep.add({"pre_bias_in_range", Status::inconclusive, why});
        rep.add({"post_bias_small", Status::inconclusive, why});
        return rep;
    }
    rep.check("pre_bias_in_range", bias.pre >= kBiasPreLo && bias.pre <= kBiasPreHi, "[-0.65, -0.62]");
    rep.check("post_bias_small", std::abs(bias.post) <= kBiasPostAbs, "|post| <= 0.01");
    return rep;
}

RunReport cmd_compress_err(std::size_t n, std::uint64_t seed, const std::string& dist) {
    if (dist != "uniform" && dist != "normal" && dist != "lossless") {
        throw Error("bad-argument", "unknown distribution '" + dist + "'");
    }
    if (n == 0) throw Error("bad-argument", "sample count must be positive");
    RunReport rep;
    rep.command = "compress-err";
    rep.seed = seed;
    rep.config["n"] = n;
    rep.config["dist"] = dist;

    CounterRng rng(seed);
    std::uint64_t sum_x = 0, sum_x2 = 0, sum_c = 0, sum_c2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t x = 0;
        if (dist == "uniform") {
            x = static_cast<std::uint8_t>(rng.below(256));
        } else if (dist == "lossless") {
            x = static_cast<std::uint8_t>(16 * rng.below(16));
        } else {
            x = static_cast<std::uint8_t>(std::min(255.0, calib::round_half_up(std::abs(64.0 * rng.normal()))));
        }
        const auto c = layernorm::dynamic_compress(x);
        sum_x += x;
        sum_x2 += std::uint64_t{x} * x;
        sum_c += std::uint64_t{c.y} << (c.s ? 4 : 2);
        sum_c2 += layernorm::square_decompress(c, 0);
    }
    const double dn = static_cast<double>(n);
    const double ex = static_cast<double>(sum_x) / dn;
    const double ex2 = static_cast<double>(sum_x2) / dn;
    const double ec = static_cast<double>(sum_c) / dn;
    const double ec2 = static_cast<double>(sum_c2) / dn;
    const double sigma = std::sqrt(std::max(ex2 - ex * ex, 0.0));
    const double sigma_c = std::sqrt(std::max(ec2 - ec * ec, 0.0));
    const double sigma_pipe = std::sqrt(std::max(ec2 - ex * ex, 0.0));
    auto rel = [](double a, double b) { return b != 0.0 ? a / b - 1.0 : (a == 0.0 ? 0.0 : 1.0); };

    rep.metrics["ex2_true"] = ex2;
    rep.metrics["ex2_compressed"] = ec2;
    rep.metrics["ex2_rel_err"] = rel(ec2, ex2);
    rep.metrics["sigma_true"] = sigma;
    rep.metrics["sigma_compressed"] = sigma_c;
    rep.metrics["sigma_rel_err"] = rel(sigma_c, sigma);
    rep.metrics["sigma_pipeline"] = sigma_pipe;
    rep.metrics["sigma_pipeline_rel_err"] = rel(sigma_pipe, sigma);
    rep.notes.push_back("sigma_compressed is the standard deviation of the decompressed samples; "
                        "sigma_pipeline pairs compressed E[x^2] with the exact mean (report only)");

    if (dist == "uniform") {
        rep.check("ex2_rel_err", std::abs(rel(ec2, ex2)) <= kCompressEx2Tol, "<= 0.5%");
        rep.check("sigma_rel_err", std::abs(rel(sigma_c, sigma)) <= kCompressSigmaTol, "<= 0.8%");
    } else {
        rep.notes.push_back("no pass bar for distribution '" + dist + "'");
    }
    return rep;
}

RunReport cmd_softmax_fidelity(std::size_t len, std::size_t rows, std::uint64_t seed, int scale_exp,
                               std::size_t slice_len) {
    if (len == 0 || rows == 0) throw Error("bad-argument", "len and rows must be >= 1");
    RunReport rep;
    rep.command = "softmax-fidelity";
    rep.seed = seed;

    CounterRng rng(seed);
    const auto logits = normal_vector(rng, len * rows);
    const int f = scale_exp >= 0 ? scale_exp : calib::calibrate_pow2(logits, len);

    softmax::SoftmaxConfig cfg;
    cfg.input_scale_exp = f;
    cfg.slice_len = slice_len;
    rep.config["len"] = len;
    rep.config["rows"] = rows;
    rep.config["scale_exp"] = f;
    rep.config["scale_exp_calibrated"] = scale_exp < 0;
    rep.config["slice_len"] = slice_len;
    rep.config["code_bits"] = cfg.code_bits;
    rep.config["out_frac_bits"] = cfg.out_frac_bits;

    ErrorAccumulator acc;
    std::size_t argmax_ok = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::span<const double> row(logits.data() + r * len, len);
        const auto q = calib::quantize_pow2(row, f);
        const auto raw = softmax::e2softmax(q, cfg);
        const auto approx = softmax::to_real(raw, cfg.out_frac_bits);
        const auto ref = oracle::softmax_ref(row);
        acc.add(approx, ref);
        const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        if (raw[top] == *std::max_element(raw.begin(), raw.end())) ++argmax_ok;
    }
    rep.metrics = acc.to_json();
    const double argmax_rate = static_cast<double>(argmax_ok) / static_cast<double>(rows);
    rep.metrics["argmax_rate"] = argmax_rate;

    rep.check("argmax_preserved", argmax_ok == rows, "100% of rows");
    if (len >= 8 && len <= 1024 && f == 4) {
        rep.check("mae_within_frozen_bound", acc.mean_abs_err() <= kSoftmaxMaeBound,
                  "regression bound " + nlohmann::json(kSoftmaxMaeBound).dump());
    } else {
        rep.notes.push_back("mean-abs-error bound applies only to len in [8, 1024] at scale_exp 4; report only");
    }
    return rep;
}

RunReport cmd_layernorm_fidelity(std::size_t channels, std::size_t rows, std::uint64_t seed) {
    if (channels == 0 || rows == 0) throw Error("bad-argument", "channels and rows must be >= 1");
    RunReport rep;
    rep.command = "layernorm-fidelity";
    rep.seed = seed;
    rep.config["channels"] = channels;
    rep.config["rows"] = rows;

    // Channels get spreads from 1x to 8x so the PTF search has work to do.
    CounterRng rng(seed);
    std::vector<double> spread(channels), offset(channels), gamma(channels), beta(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        spread[c] = std::exp2(3.0 * rng.uniform());
        offset[c] = 0.1 * rng.normal();
        gamma[c] = 1.0 + 0.2 * rng.normal();
        beta[c] = 0.2 * rng.normal();
    }
    std::vector<double> x(rows * channels);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t c = i % channels;
        x[i] = offset[c] + spread[c] * rng.normal();
    }

    const auto ptf = calib::calibrate_ptf(x, channels);
    std::vector<double> ref(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const auto out = oracle::layernorm_ref({x.data() + r * channels, channels}, gamma, beta);
        std::copy(out.begin(), out.end(), ref.begin() + static_cast<std::ptrdiff_t>(r * channels));
    }
    const auto out_q = calib::calibrate_minmax(ref);

    layernorm::LayerNormConfig cfg;
    cfg.channels = channels;
    const layernorm::AILayerNorm kernel(cfg, layernorm::AffineParams::quantize(gamma, beta, out_q.scale, out_q.zp));

    ErrorAccumulator end_to_end, kernel_only;
    const auto xq = calib::quantize(x, ptf);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::span<const std::uint8_t> row(xq.data() + r * channels, channels);
        const auto yq = kernel.run(row, ptf.zp, ptf.alphas);
        std::vector<double> y(channels);
        for (std::size_t c = 0; c < channels; ++c) y[c] = (static_cast<int>(yq[c]) - out_q.zp) * out_q.scale;
        end_to_end.add(y, {ref.data() + r * channels, channels});

        const auto xd = calib::dequantize(row, ptf);
        kernel_only.add(y, oracle::layernorm_ref(xd, gamma, beta));
    }

    std::vector<int> alpha_hist(4, 0);
    for (auto a : ptf.alphas) ++alpha_hist[a];
    rep.config["ptf_scale"] = ptf.scale;
    rep.config["ptf_zp"] = ptf.zp;
    rep.config["alpha_histogram"] = alpha_hist;
    rep.config["out_scale"] = out_q.scale;
    rep.config["out_zp"] = out_q.zp;
    rep.metrics = end_to_end.to_json();
    rep.metrics["kernel_only"] = kernel_only.to_json();
    rep.metrics["output_step"] = out_q.scale;

    rep.check("mae_within_frozen_bound", end_to_end.mean_abs_err() <= kLayerNormMaeBound,
              "regression bound " + nlohmann::json(kLayerNormMaeBound).dump());
    rep.check("kernel_mae_within_frozen_bound", kernel_only.mean_abs_err() <= kLayerNormKernelMaeBound,
              "regression bound " + nlohmann::json(kLayerNormKernelMaeBound).dump());
    return rep;
}

RunReport cmd_attn_proxy(std::size_t seq, std::size_t dim, std::uint64_t seed) {
    if (seq == 0 || dim == 0) throw Error("bad-argument", "seq and dim must be >= 1");
    RunReport rep;
    rep.command = "attn-proxy";
    rep.seed = seed;
    rep.config["seq"] = seq;
    rep.config["dim"] = dim;

    CounterRng rng(seed);
    const auto q = normal_vector(rng, seq * dim);
    const auto k = normal_vector(rng, seq * dim);
    const auto v = normal_vector(rng, seq * dim);

    const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<double> scores(seq * seq);
    for (std::size_t i = 0; i < seq; ++i) {
        for (std::size_t j = 0; j < seq; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += q[i * dim + d] * k[j * dim + d];
            scores[i * seq + j] = s * inv_sqrt_dim;
        }
    }
    const int f = calib::calibrate_pow2(scores, seq);
    softmax::SoftmaxConfig cfg;
    cfg.input_scale_exp = f;
    rep.config["scale_exp"] = f;

    auto mix = [&](std::span<const double> p) {
        std::vector<double> o(dim, 0.0);
        for (std::size_t j = 0; j < seq; ++j) {
            for (std::size_t d = 0; d < dim; ++d) o[d] += p[j] * v[j * dim + d];
        }
        return o;
    };

    double cos_sum = 0.0, cos_min = 1.0;
    for (std::size_t i = 0; i < seq; ++i) {
        const std::span<const double> row(scores.data() + i * seq, seq);
        const auto exact = mix(oracle::softmax_ref(row));
        const auto approx = mix(softmax::to_real(softmax::e2softmax(calib::quantize_pow2(row, f), cfg),
                                                 cfg.out_frac_bits));
        const double c = cosine(approx, exact);
        cos_sum += c;
        cos_min = std::min(cos_min, c);
    }
    const double cos_mean = cos_sum / static_cast<double>(seq);
    rep.metrics["cosine_mean"] = cos_mean;
    rep.metrics["cosine_min"] = cos_min;
    rep.check("cosine_mean", cos_mean >= kAttnCosineThreshold,
              ">= " + nlohmann::json(kAttnCosineThreshold).dump());
    return rep;
}

RunReport cmd_cycles(const std::string& kind, std::size_t len, std::size_t rows, const pipe::PipeConfig& cfg) {
    if (kind != "softmax" && kind != "layernorm") throw Error("bad-argument", "kind must be softmax or layernorm");
    auto model = [&](const pipe::PipeConfig& c) {
        return kind == "softmax" ? pipe::cycles_softmax(len, rows, c) : pipe::cycles_layernorm(len, rows, c);
    };
    RunReport rep;
    rep.command = "cycles";
    rep.config["kind"] = kind;
    rep.config["len"] = len;
    rep.config["rows"] = rows;
    rep.config["vector_lanes"] = cfg.vector_lanes;
    rep.config["stage1_lat"] = cfg.stage1_lat;
    rep.config["stage2_lat"] = cfg.stage2_lat;
    rep.config["preprocess_lat"] = cfg.preprocess_lat;
    rep.config["pingpong"] = cfg.pingpong;

    const auto b = model(cfg);
    auto overlap = cfg, serial = cfg;
    overlap.pingpong = true;
    serial.pingpong = false;
    const auto with = model(overlap).total;
    const auto without = model(serial).total;
    rep.metrics["beats_per_row"] = b.beats;
    rep.metrics["stage1_cycles"] = b.stage1;
    rep.metrics["stage2_cycles"] = b.stage2;
    rep.metrics["total_cycles"] = b.total;
    rep.metrics["pingpong_cycles"] = with;
    rep.metrics["serial_cycles"] = without;
    rep.metrics["overlap_speedup"] = static_cast<double>(without) / static_cast<double>(with);
    rep.check("pingpong_not_slower", with <= without);
    rep.notes.push_back("analytic model with placeholder stage latencies; relative comparisons only");
    return rep;
}

}  // namespace sole::harness
