#include "sole/report.hpp"

#include <algorithm>
#include <sstream>

namespace sole::harness {

namespace {

void flatten(const nlohmann::ordered_json& j, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
    }
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

}  // namespace

const char* to_string(Status s) noexcept {
    switch (s) {
        case Status::pass: return "pass";
        case Status::fail: return "fail";
        case Status::inconclusive: return "inconclusive";
    }
    return "fail";
}

void RunReport::check(std::string name, bool ok, std::string detail) {
    criteria.push_back({std::move(name), ok ? Status::pass : Status::fail, std::move(detail)});
}

Status RunReport::status() const noexcept {
    Status s = Status::pass;
    for (const auto& c : criteria) {
        if (c.status == Status::fail) return Status::fail;
        if (c.status == Status::inconclusive) s = Status::inconclusive;
    }
    return s;
}

int RunReport::exit_code() const noexcept {
    switch (status()) {
        case Status::pass: return 0;
        case Status::fail: return 1;
        case Status::inconclusive: return 2;
    }
    return 1;
}

nlohmann::ordered_json RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["metrics"] = metrics;
    auto& crit = j["criteria"] = nlohmann::ordered_json::array();
    for (const auto& c : criteria) {
        crit.push_back({{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}});
    }
    j["notes"] = notes;
    j["status"] = to_string(status());
    return j;
}

std::string RunReport::render_json() const { return to_json().dump(2) + "\n"; }

std::string RunReport::render_text() const {
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("command", command);
    rows.emplace_back("seed", std::to_string(seed));
    flatten(config, "config", rows);
    flatten(metrics, "metrics", rows);
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.first.size());
    std::ostringstream os;
    for (const auto& [k, v] : rows) os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
    for (const auto& c : criteria) {
        os << '[' << to_string(c.status) << "] " << c.name;
        if (!c.detail.empty()) os << "  (" << c.detail << ')';
        os << '\n';
    }
    for (const auto& n : notes) os << "note: " << n << '\n';
    os << "status: " << to_string(status()) << '\n';
    return os.str();
}

std::string RunReport::render_csv() const {
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(config, "config", rows);
    flatten(metrics, "metrics", rows);
    for (const auto& c : criteria) rows.emplace_back("criteria." + c.name, to_string(c.status));
    std::ostringstream os;
    os << "command,seed,key,value\n";
    for (const auto& [k, v] : rows) os << command << ',' << seed << ',' << csv_cell(k) << ',' << csv_cell(v) << '\n';
    return os.str();
}

}  // namespace sole::harness
