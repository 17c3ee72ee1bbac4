#include "sole/pipemodel.hpp"

#include <algorithm>

#include "sole/error.hpp"

namespace sole::pipe {

namespace {

CycleBreakdown two_stage(std::uint64_t len, std::uint64_t rows, std::uint64_t t1_extra, std::uint64_t t2_extra,
                         const PipeConfig& cfg) {
    cfg.validate();
    if (len < 1 || rows < 1) throw Error("bad-argument", "length and rows must be >= 1");
    CycleBreakdown b;
    b.beats = (len + cfg.vector_lanes - 1) / cfg.vector_lanes;
    b.stage1 = b.beats + t1_extra;
    b.stage2 = b.beats + t2_extra;
    if (cfg.pingpong) {
        b.total = b.stage1 + (rows - 1) * std::max(b.stage1, b.stage2) + b.stage2;
    } else {
        b.total = rows * (b.stage1 + b.stage2);
    }
    return b;
}

}  // namespace

void PipeConfig::validate() const {
    if (vector_lanes < 1) throw Error("bad-config", "vector_lanes must be >= 1");
    if (stage1_lat < 1 || stage2_lat < 1 || preprocess_lat < 1) throw Error("bad-config", "latencies must be >= 1");
}

CycleBreakdown cycles_softmax(std::uint64_t len, std::uint64_t rows, const PipeConfig& cfg) {
    return two_stage(len, rows, cfg.stage1_lat, cfg.stage2_lat, cfg);
}

CycleBreakdown cycles_layernorm(std::uint64_t channels, std::uint64_t rows, const PipeConfig& cfg) {
    return two_stage(channels, rows, cfg.stage1_lat + cfg.preprocess_lat, cfg.stage2_lat, cfg);
}

}  // namespace sole::pipe
