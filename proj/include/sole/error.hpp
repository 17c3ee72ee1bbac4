#pragma once

#include <stdexcept>
#include <string>

namespace sole {

// Every failure carries a stable short code ("lod-zero", "shape-error", ...)
// that the CLI prints and tests match on.
class Error : public std::runtime_error {
public:
    explicit Error(std::string code, const std::string& detail = {})
        : std::runtime_error(detail.empty() ? code : code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace sole
