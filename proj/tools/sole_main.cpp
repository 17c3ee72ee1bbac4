// sole: experiment and tensor CLI for the integer softmax/layernorm kernels.

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sole/calib.hpp"
#include "sole/commands.hpp"
#include "sole/e2softmax.hpp"
#include "sole/error.hpp"
#include "sole/random.hpp"
#include "sole/tensor_io.hpp"

namespace {

using sole::harness::RunReport;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SOLE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw sole::Error("bad-argument", "SOLE_SEED is not an unsigned integer");
        }
    }
    return sole::harness::kDefaultSeed;
}

struct Output {
    std::string format = "json";
    std::string path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv", "text"}));
        cmd->add_option("--out", path, "Write the report to this file instead of stdout");
    }

    int emit(const RunReport& rep) const {
        const std::string body = format == "json"  ? rep.render_json()
                                 : format == "csv" ? rep.render_csv()
                                                   : rep.render_text();
        if (path.empty()) {
            std::cout << body;
        } else {
            std::ofstream out(path, std::ios::trunc);
            if (!out) throw sole::Error("io-error", "cannot write " + path);
            out << body;
        }
        return rep.exit_code();
    }
};

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bit-exact integer softmax and layernorm kernels: experiments and tensor tools"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::optional<std::uint64_t> seed_opt;
    Output output;
    std::function<int()> action;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed_opt, "Random seed (default: $SOLE_SEED or 1)");
        output.attach(cmd);
    };

    std::size_t n = 1000000;
    auto* bias = app.add_subcommand("bias-check", "Monte-Carlo bias of the approximate log-based divider");
    bias->add_option("--n", n, "Sample count")->check(CLI::PositiveNumber);
    common(bias);
    bias->callback([&] { action = [&] { return output.emit(sole::harness::cmd_bias_check(n, seed)); }; });

    std::size_t n_comp = std::size_t{1} << 20;
    std::string dist = "uniform";
    auto* comp = app.add_subcommand("compress-err", "Error of dynamic compression on E[x^2] and sigma");
    comp->add_option("--n", n_comp, "Sample count")->check(CLI::PositiveNumber);
    comp->add_option("--dist", dist, "Input distribution")->check(CLI::IsMember({"uniform", "normal", "lossless"}));
    common(comp);
    comp->callback([&] {
        action = [&] { return output.emit(sole::harness::cmd_compress_err(n_comp, seed, dist)); };
    });

    std::size_t len = 785, rows = 16, slice = 32;
    int scale_exp = 4;
    auto* sfid = app.add_subcommand("softmax-fidelity", "Integer softmax versus the double reference");
    sfid->add_option("--len", len, "Row length")->check(CLI::PositiveNumber);
    sfid->add_option("--rows", rows, "Row count")->check(CLI::PositiveNumber);
    sfid->add_option("--scale-exp", scale_exp, "Input scale exponent f (negative: calibrate)");
    sfid->add_option("--slice", slice, "Stage-1 slice length")->check(CLI::PositiveNumber);
    common(sfid);
    sfid->callback([&] {
        action = [&] {
            return output.emit(sole::harness::cmd_softmax_fidelity(len, rows, seed, scale_exp, slice));
        };
    });

    std::size_t channels = 768, ln_rows = 64;
    auto* lfid = app.add_subcommand("layernorm-fidelity", "Integer layernorm versus the double reference");
    lfid->add_option("--channels", channels, "Channel count")->check(CLI::PositiveNumber);
    lfid->add_option("--rows", ln_rows, "Row count")->check(CLI::PositiveNumber);
    common(lfid);
    lfid->callback([&] {
        action = [&] { return output.emit(sole::harness::cmd_layernorm_fidelity(channels, ln_rows, seed)); };
    });

    std::size_t seq = 64, dim = 32;
    auto* attn = app.add_subcommand("attn-proxy", "Single-head attention with exact and integer softmax");
    attn->add_option("--seq", seq, "Sequence length")->check(CLI::PositiveNumber);
    attn->add_option("--dim", dim, "Head dimension")->check(CLI::PositiveNumber);
    common(attn);
    attn->callback([&] { action = [&] { return output.emit(sole::harness::cmd_attn_proxy(seq, dim, seed)); }; });

    std::string kind = "softmax";
    std::size_t cyc_len = 785, cyc_rows = 16;
    sole::pipe::PipeConfig pipe_cfg;
    bool serial = false;
    auto* cyc = app.add_subcommand("cycles", "Analytic cycle model of the two-stage units");
    cyc->add_option("--kind", kind, "Unit")->check(CLI::IsMember({"softmax", "layernorm"}));
    cyc->add_option("--len,--channels", cyc_len, "Row length or channel count")->check(CLI::PositiveNumber);
    cyc->add_option("--rows", cyc_rows, "Row count")->check(CLI::PositiveNumber);
    cyc->add_option("--lanes", pipe_cfg.vector_lanes, "Elements per cycle")->check(CLI::PositiveNumber);
    cyc->add_option("--stage1-lat", pipe_cfg.stage1_lat, "Stage 1 latency")->check(CLI::PositiveNumber);
    cyc->add_option("--stage2-lat", pipe_cfg.stage2_lat, "Stage 2 latency")->check(CLI::PositiveNumber);
    cyc->add_option("--preprocess-lat", pipe_cfg.preprocess_lat, "Preprocess latency")->check(CLI::PositiveNumber);
    cyc->add_flag("--serial", serial, "Disable ping-pong overlap");
    common(cyc);
    cyc->callback([&] {
        action = [&] {
            pipe_cfg.pingpong = !serial;
            return output.emit(sole::harness::cmd_cycles(kind, cyc_len, cyc_rows, pipe_cfg));
        };
    });

    std::vector<std::uint32_t> gen_dims{16, 785};
    std::string tensor_out, tensor_in;
    double gen_sigma = 1.0;
    auto* gen = app.add_subcommand("gen", "Write a standard-normal tensor file");
    gen->add_option("--dims", gen_dims, "Dimensions")->delimiter(',');
    gen->add_option("--sigma", gen_sigma, "Standard deviation");
    gen->add_option("--tensor-out", tensor_out, "Tensor path (.csv for CSV)")->required();
    gen->add_option("--seed", seed_opt, "Random seed");
    gen->callback([&] {
        action = [&] {
            sole::harness::TensorFile t;
            t.dims = gen_dims;
            t.data.resize(t.element_count());
            sole::CounterRng rng(seed);
            for (float& v : t.data) v = static_cast<float>(gen_sigma * rng.normal());
            sole::harness::save_tensor(tensor_out, t);
            return 0;
        };
    });

    int run_scale_exp = 4;
    std::size_t run_slice = 32;
    auto* run_sm = app.add_subcommand("softmax", "Apply the integer softmax to each row of a tensor file");
    run_sm->add_option("--in", tensor_in, "Input tensor (last dimension is the row)")->required();
    run_sm->add_option("--tensor-out", tensor_out, "Output tensor path")->required();
    run_sm->add_option("--scale-exp", run_scale_exp, "Input scale exponent f (negative: calibrate)");
    run_sm->add_option("--slice", run_slice, "Stage-1 slice length")->check(CLI::PositiveNumber);
    run_sm->callback([&] {
        action = [&] {
            auto t = sole::harness::load_tensor(tensor_in);
            if (t.dims.empty() || t.dims.back() == 0) throw sole::Error("shape-error", "empty rows");
            const std::size_t row_len = t.dims.back();
            const auto x = widen(t.data);
            const int f = run_scale_exp >= 0 ? run_scale_exp : sole::calib::calibrate_pow2(x, row_len);
            sole::softmax::SoftmaxConfig cfg;
            cfg.input_scale_exp = f;
            cfg.slice_len = run_slice;
            for (std::size_t r = 0; r < x.size(); r += row_len) {
                const auto q = sole::calib::quantize_pow2({x.data() + r, row_len}, f);
                const auto y = sole::softmax::to_real(sole::softmax::e2softmax(q, cfg), cfg.out_frac_bits);
                for (std::size_t i = 0; i < row_len; ++i) t.data[r + i] = static_cast<float>(y[i]);
            }
            sole::harness::save_tensor(tensor_out, t);
            return 0;
        };
    });

    int alpha_max = 3;
    std::string ptf_out;
    auto* cal = app.add_subcommand("calibrate-ptf", "Per-channel power-of-two factors for a tensor file");
    cal->add_option("--in", tensor_in, "Input tensor (last dimension is channels)")->required();
    cal->add_option("--alpha-max", alpha_max, "Largest factor exponent")->check(CLI::Range(0, 3));
    cal->add_option("--out", ptf_out, "Write the JSON document here instead of stdout");
    cal->callback([&] {
        action = [&] {
            const auto t = sole::harness::load_tensor(tensor_in);
            if (t.dims.empty()) throw sole::Error("shape-error", "scalar tensor");
            const auto p = sole::calib::calibrate_ptf(widen(t.data), t.dims.back(), 8, alpha_max);
            if (ptf_out.empty()) {
                std::cout << p.to_json() << '\n';
            } else {
                std::ofstream(ptf_out, std::ios::trunc) << p.to_json() << '\n';
            }
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
        seed = seed_opt ? *seed_opt : default_seed();
        return action ? action() : 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : sole::harness::kExitError;
    } catch (const sole::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return sole::harness::kExitError;
    }
}
