#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lsld {

/// Dense row-major float32 array as stored on disk.
///
/// Layout: the 8-byte magic "LSLDARR1", the rank as little-endian uint32,
/// each dimension as little-endian uint32, then the payload as little-endian
/// IEEE-754 binary32 in row-major order. Rank is at most 4; rank 0 holds one scalar.
struct Array {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
};

inline constexpr std::size_t kMaxArrayRank = 4;

/// Throws ValidationError when shape and data disagree or the rank is out of
/// range, FormatError for non-finite values or I/O failure.
void write_array(const std::filesystem::path& path,
                 std::span<const std::uint32_t> shape,
                 std::span<const float> data);
void write_array(const std::filesystem::path& path, const Array& array);

/// Throws FormatError (with a byte offset) on bad magic, truncation, rank above
/// four, or a payload size that disagrees with the declared shape.
Array read_array(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_array(std::span<const std::uint32_t> shape,
                                       std::span<const float> data);
Array decode_array(std::span<const std::uint8_t> bytes);

}  // namespace lsld
