#pragma once

#include <cstdint>

// Closed-form cycle model of the two-stage units. Latency constants are
// placeholders; use the model for relative and scaling comparisons only.

namespace sole::pipe {

struct PipeConfig {
    std::uint64_t vector_lanes = 32;
    std::uint64_t stage1_lat = 4;
    std::uint64_t stage2_lat = 4;
    std::uint64_t preprocess_lat = 8;
    bool pingpong = true;

    void validate() const;
};

struct CycleBreakdown {
    std::uint64_t beats = 0;        // ceil(len / lanes)
    std::uint64_t stage1 = 0;       // cycles one row occupies Stage 1
    std::uint64_t stage2 = 0;
    std::uint64_t total = 0;
};

// With ping-pong buffers Stage 2 of row r overlaps Stage 1 of row r + 1:
// total = T1 + (rows - 1) * max(T1, T2) + T2. Otherwise rows * (T1 + T2).
CycleBreakdown cycles_softmax(std::uint64_t len, std::uint64_t rows, const PipeConfig& cfg);

// Same structure; the preprocess latency sits at the end of Stage 1.
CycleBreakdown cycles_layernorm(std::uint64_t channels, std::uint64_t rows, const PipeConfig& cfg);

}  // namespace sole::pipe
