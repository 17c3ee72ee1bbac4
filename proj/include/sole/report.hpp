#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace sole::harness {

enum class Status { pass, fail, inconclusive };

const char* to_string(Status s) noexcept;

struct Criterion {
    std::string name;
    Status status = Status::pass;
    std::string detail;
};

// Everything a command produced. Contains no timestamps or timings, so the
// JSON rendering is byte-identical for identical (config, seed).
struct RunReport {
    std::string command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    std::vector<Criterion> criteria;
    std::vector<std::string> notes;

    void check(std::string name, bool ok, std::string detail = {});
    void add(Criterion c) { criteria.push_back(std::move(c)); }

    Status status() const noexcept;
    // 0 pass, 1 fail, 2 inconclusive.
    int exit_code() const noexcept;

    nlohmann::ordered_json to_json() const;
    std::string render_json() const;
    std::string render_text() const;
    std::string render_csv() const;
};

inline constexpr int kExitError = 3;

}  // namespace sole::harness
