#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

// Double-precision references for the integer kernels and the metrics used to
// compare against them.

namespace sole::oracle {

struct ErrorReport {
    double max_abs_err = 0.0;
    double mean_err = 0.0;      // mean of (approx - ref)
    double mean_abs_err = 0.0;
    double rel_err = 0.0;       // sum |approx - ref| / sum |ref|
    std::optional<double> kl_div;  // KL(ref || approx); only for non-negative inputs
    std::size_t n = 0;
};

inline constexpr double kKlFloor = 1e-12;

std::vector<double> softmax_ref(std::span<const double> x);

// Population variance. Zero variance (or variance below eps) with a zero
// numerator yields beta.
std::vector<double> layernorm_ref(std::span<const double> x, std::span<const double> gamma,
                                  std::span<const double> beta, double eps = 0.0);

double mitchell_log2(std::uint64_t x);
double mitchell_div(std::uint64_t x1, std::uint64_t x2);

struct BiasCoefficients {
    double pre = 0.0;      // mean of delta * 2^(k_y + k_s + 1), uncorrected divider
    double post = 0.0;     // same with the 1.636 constant
    double pre_stderr = 0.0;
    double post_stderr = 0.0;
    std::size_t n = 0;
};

// Draws s ~ U[0, 1) from the counter stream and averages the normalized
// divider error against 1 / (1 + s).
BiasCoefficients aldivision_bias_mc(std::size_t n, std::uint64_t seed);

// Closed form of the uncorrected mean: 0.75 - 2 ln 2.
double analytic_pre_bias();

ErrorReport compare(std::span<const double> approx, std::span<const double> ref);

}  // namespace sole::oracle
