#include "sole/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "sole/error.hpp"
#include "sole/random.hpp"

namespace sole::oracle {

namespace {

void require_finite(std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) throw Error("non-finite", "input contains NaN or infinity");
    }
}

// 2^k (1 + frac) decomposition of a positive integer.
std::pair<int, double> characteristic(std::uint64_t x) {
    const int k = std::bit_width(x) - 1;
    return {k, std::ldexp(static_cast<double>(x), -k) - 1.0};
}

}  // namespace

std::vector<double> softmax_ref(std::span<const double> x) {
    if (x.empty()) throw Error("empty-vector");
    require_finite(x);
    const double m = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> layernorm_ref(std::span<const double> x, std::span<const double> gamma,
                                  std::span<const double> beta, double eps) {
    if (x.empty()) throw Error("empty-vector");
    if (gamma.size() != x.size() || beta.size() != x.size()) throw Error("shape-error");
    require_finite(x);
    const double n = static_cast<double>(x.size());
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= n;
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= n;
    const double sigma = std::sqrt(std::max(var, eps));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double centered = x[i] - mu;
        out[i] = (sigma > 0.0 ? centered / sigma : 0.0) * gamma[i] + beta[i];
    }
    return out;
}

double mitchell_log2(std::uint64_t x) {
    if (x == 0) throw Error("zero-operand");
    const auto [k, frac] = characteristic(x);
    return k + frac;
}

double mitchell_div(std::uint64_t x1, std::uint64_t x2) {
    if (x1 == 0 || x2 == 0) throw Error("zero-operand");
    const auto [k1, f1] = characteristic(x1);
    const auto [k2, f2] = characteristic(x2);
    const double df = f1 - f2;
    if (df < 0.0) {
        return std::ldexp(2.0 + df, k1 - k2 - 1);
    }
    return std::ldexp(1.0 + df, k1 - k2);
}

double analytic_pre_bias() { return 0.75 - 2.0 * std::numbers::ln2; }

BiasCoefficients aldivision_bias_mc(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error("bad-argument", "sample count must be positive");
    CounterRng rng(seed);
    // Welford in draw order keeps reruns bit-identical.
    double pre_mean = 0.0, pre_m2 = 0.0, post_mean = 0.0, post_m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = rng.uniform();
        const double q = std::floor(2.0 * s) / 2.0;
        const double exact = 2.0 / (1.0 + s);  // 2^(k_y+k_s+1) * Q/S
        const double pre = (1.0 - q) - exact;
        const double post = (1.636 - q) - exact;
        const double k = static_cast<double>(i + 1);
        double d = pre - pre_mean;
        pre_mean += d / k;
        pre_m2 += d * (pre - pre_mean);
        d = post - post_mean;
        post_mean += d / k;
        post_m2 += d * (post - post_mean);
    }
    BiasCoefficients out;
    out.n = n;
    out.pre = pre_mean;
    out.post = post_mean;
    if (n > 1) {
        const double dn = static_cast<double>(n);
        out.pre_stderr = std::sqrt(pre_m2 / (dn - 1.0) / dn);
        out.post_stderr = std::sqrt(post_m2 / (dn - 1.0) / dn);
    }
    return out;
}

ErrorReport compare(std::span<const double> approx, std::span<const double> ref) {
    if (approx.size() != ref.size()) throw Error("shape-error", "length mismatch");
    ErrorReport r;
    r.n = ref.size();
    if (r.n == 0) return r;
    double sum_err = 0.0, sum_abs = 0.0, sum_ref = 0.0;
    bool non_negative = true;
    for (std::size_t i = 0; i < r.n; ++i) {
        const double e = approx[i] - ref[i];
        sum_err += e;
        sum_abs += std::abs(e);
        sum_ref += std::abs(ref[i]);
        r.max_abs_err = std::max(r.max_abs_err, std::abs(e));
        non_negative = non_negative && approx[i] >= 0.0 && ref[i] >= 0.0;
    }
    const double n = static_cast<double>(r.n);
    r.mean_err = sum_err / n;
    r.mean_abs_err = sum_abs / n;
    r.rel_err = sum_ref > 0.0 ? sum_abs / sum_ref : (sum_abs > 0.0 ? 1.0 : 0.0);
    if (non_negative) {
        double za = 0.0, zr = 0.0;
        for (std::size_t i = 0; i < r.n; ++i) {
            za += std::max(approx[i], kKlFloor);
            zr += std::max(ref[i], kKlFloor);
        }
        double kl = 0.0;
        for (std::size_t i = 0; i < r.n; ++i) {
            const double p = std::max(ref[i], kKlFloor) / zr;
            const double q = std::max(approx[i], kKlFloor) / za;
            kl += p * std::log(p / q);
        }
        r.kl_div = std::max(kl, 0.0);
    }
    return r;
}

}  // namespace sole::oracle
