#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "sole/e2softmax.hpp"
#include "sole/pipemodel.hpp"
#include "sole/report.hpp"

// Experiment commands behind the `sole` CLI. Each is a pure function of its
// options and seed.

namespace sole::harness {

// Regression bounds frozen from the first audited oracle runs. Kernel-level
// accuracy has no published reference, so these are measured, not cited.
// softmax: worst measured 0.0215 (len 8, 16 rows, seeds 1-50), f = 4.
inline constexpr double kSoftmaxMaeBound = 0.025;
// layernorm, 768 channels x 64 rows: end to end (input quantization included)
// worst 0.052, kernel against the dequantized input worst 0.023 (seeds 1-30).
inline constexpr double kLayerNormMaeBound = 0.06;
inline constexpr double kLayerNormKernelMaeBound = 0.025;
// attention proxy, seq 64 dim 32: seed-1 mean cosine 0.9808, mean over
// seeds 1-100 is 0.9813.
inline constexpr double kAttnCosineThreshold = 0.98;

inline constexpr double kBiasPreLo = -0.65;
inline constexpr double kBiasPreHi = -0.62;
inline constexpr double kBiasPostAbs = 0.01;
inline constexpr std::size_t kBiasMinSamples = 100000;

inline constexpr double kCompressEx2Tol = 0.005;
inline constexpr double kCompressSigmaTol = 0.008;

inline constexpr std::uint64_t kDefaultSeed = 1;

RunReport cmd_bias_check(std::size_t n, std::uint64_t seed);

// dist: "uniform" (gated), "normal" or "lossless" (report only).
RunReport cmd_compress_err(std::size_t n, std::uint64_t seed, const std::string& dist);

// scale_exp < 0 calibrates f from the generated logits.
RunReport cmd_softmax_fidelity(std::size_t len, std::size_t rows, std::uint64_t seed, int scale_exp = 4,
                               std::size_t slice_len = 32);

RunReport cmd_layernorm_fidelity(std::size_t channels, std::size_t rows, std::uint64_t seed);

RunReport cmd_attn_proxy(std::size_t seq, std::size_t dim, std::uint64_t seed);

// kind: "softmax" or "layernorm".
RunReport cmd_cycles(const std::string& kind, std::size_t len, std::size_t rows, const pipe::PipeConfig& cfg);

}  // namespace sole::harness
