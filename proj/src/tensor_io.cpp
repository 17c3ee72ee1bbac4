#include "sole/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sole/error.hpp"

namespace sole::harness {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'S', 'O', 'L', 'E'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[at + static_cast<std::size_t>(i)]} << (8 * i);
    return v;
}

std::size_t checked_count(std::span<const std::uint32_t> dims) {
    std::size_t n = 1;
    for (auto d : dims) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / 4 / d) throw Error("dim-overflow");
        n *= d;
    }
    return n;
}

}  // namespace

std::size_t TensorFile::element_count() const { return checked_count(dims); }

std::vector<std::uint8_t> encode_tensor(const TensorFile& t) {
    if (t.dims.size() > kMaxDims) throw Error("dim-overflow", "too many dimensions");
    if (t.element_count() != t.data.size()) throw Error("shape-error", "dims do not match payload");
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    out.push_back(kTensorVersion);
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    out.reserve(out.size() + 4 * t.data.size());
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

TensorFile decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw Error("bad-magic");
    }
    if (bytes.size() < 9) throw Error("truncated-header");
    if (bytes[4] != kTensorVersion) throw Error("bad-version", "version " + std::to_string(bytes[4]));
    const std::uint32_t ndim = get_u32(bytes, 5);
    if (ndim > kMaxDims) throw Error("dim-overflow", "ndim " + std::to_string(ndim));
    std::size_t at = 9;
    if (bytes.size() < at + 4 * std::size_t{ndim}) throw Error("truncated-header");
    TensorFile t;
    for (std::uint32_t i = 0; i < ndim; ++i, at += 4) t.dims.push_back(get_u32(bytes, at));
    const std::size_t n = t.element_count();
    if (bytes.size() - at < 4 * n) throw Error("truncated-payload");
    if (bytes.size() - at > 4 * n) throw Error("trailing-bytes");
    t.data.resize(n);
    for (std::size_t i = 0; i < n; ++i, at += 4) t.data[i] = std::bit_cast<float>(get_u32(bytes, at));
    return t;
}

std::string format_csv(const TensorFile& t) {
    if (t.element_count() != t.data.size()) throw Error("shape-error", "dims do not match payload");
    const std::size_t cols = t.dims.empty() ? 1 : t.dims.back();
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        const auto res = std::to_chars(buf, buf + sizeof buf, t.data[i], std::chars_format::general, 9);
        out.append(buf, res.ptr);
        out.push_back((i + 1) % cols == 0 ? '\n' : ',');
    }
    return out;
}

TensorFile parse_csv(std::string_view text) {
    TensorFile t;
    std::uint32_t rows = 0;
    std::size_t cols = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::size_t count = 0;
        while (true) {
            const auto comma = line.find(',');
            std::string_view cell = line.substr(0, comma);
            while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
            while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
            float v = 0.0f;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw Error("bad-csv", "cannot parse '" + std::string(cell) + "'");
            }
            t.data.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            line = line.substr(comma + 1);
        }
        if (rows > 0 && count != cols) throw Error("ragged-csv", "row " + std::to_string(rows + 1));
        cols = count;
        ++rows;
    }
    if (rows == 0) throw Error("bad-csv", "empty file");
    t.dims = {rows, static_cast<std::uint32_t>(cols)};
    return t;
}

TensorFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? TensorFormat::csv : TensorFormat::binary;
}

TensorFile load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot open " + path.string());
    const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (format_for(path) == TensorFormat::csv) return parse_csv(raw);
    return decode_tensor({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()});
}

void save_tensor(const std::filesystem::path& path, const TensorFile& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io-error", "cannot write " + path.string());
    if (format_for(path) == TensorFormat::csv) {
        out << format_csv(t);
    } else {
        const auto bytes = encode_tensor(t);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw Error("io-error", "write failed for " + path.string());
}

}  // namespace sole::harness
