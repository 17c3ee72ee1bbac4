#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Tensor files. Binary layout (little endian):
//   "SOLE" | u8 version = 1 | u32 ndim | ndim x u32 dims | f32 payload
// CSV: one row per line, comma separated, '.' decimal point; dims [rows, cols].

namespace sole::harness {

struct TensorFile {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
};

enum class TensorFormat { binary, csv };

inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint32_t kMaxDims = 8;

std::vector<std::uint8_t> encode_tensor(const TensorFile& t);
TensorFile decode_tensor(std::span<const std::uint8_t> bytes);

std::string format_csv(const TensorFile& t);
TensorFile parse_csv(std::string_view text);

// Format is chosen from the extension: ".csv" is CSV, anything else binary.
TensorFormat format_for(const std::filesystem::path& path);
TensorFile load_tensor(const std::filesystem::path& path);
void save_tensor(const std::filesystem::path& path, const TensorFile& t);

}  // namespace sole::harness
