#include "lsld/array_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "lsld/error.hpp"

namespace lsld {
namespace {

constexpr std::array<char, 8> kMagic = {'L', 'S', 'L', 'D',
                                        'A', 'R', 'R', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

std::uint64_t product(std::span<const std::uint32_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::uint64_t{1},
                         [](std::uint64_t a, std::uint32_t b) { return a * b; });
}

[[noreturn]] void format_error(std::size_t offset, const std::string& msg) {
  throw FormatError("array format error at byte " + std::to_string(offset) +
                    ": " + msg);
}

}  // namespace

std::size_t Array::element_count() const {
  return static_cast<std::size_t>(product(shape));
}

std::vector<std::uint8_t> encode_array(std::span<const std::uint32_t> shape,
                                       std::span<const float> data) {
  if (shape.size() > kMaxArrayRank)
    throw ValidationError("array rank " + std::to_string(shape.size()) + " above 4");
  if (product(shape) != data.size())
    throw ValidationError("array shape holds " +
                          std::to_string(product(shape)) +
                          " elements but data has " +
                          std::to_string(data.size()));
  std::vector<std::uint8_t> out;
  out.reserve(kMagic.size() + 4 * (1 + shape.size()) + 4 * data.size());
  for (char ch : kMagic) out.push_back(static_cast<std::uint8_t>(ch));
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_u32(out, d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i]))
      throw FormatError("cannot serialize non-finite value at element " +
                        std::to_string(i));
    put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
  }
  return out;
}

Array decode_array(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size()) format_error(bytes.size(), "truncated magic");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    format_error(0, "bad magic (expected LSLDARR1)");
  std::size_t offset = kMagic.size();
  if (bytes.size() < offset + 4) format_error(offset, "truncated rank");
  const std::uint32_t rank = get_u32(bytes, offset);
  if (rank > kMaxArrayRank)
    format_error(offset, "rank " + std::to_string(rank) + " above 4");
  offset += 4;
  Array array;
  for (std::uint32_t i = 0; i < rank; ++i) {
    if (bytes.size() < offset + 4) format_error(offset, "truncated dimensions");
    array.shape.push_back(get_u32(bytes, offset));
    offset += 4;
  }
  const std::uint64_t count = product(array.shape);
  const std::uint64_t payload = bytes.size() - offset;
  if (payload != count * 4)
    format_error(offset, "payload holds " + std::to_string(payload) +
                             " bytes but shape requires " +
                             std::to_string(count * 4));
  array.data.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < array.data.size(); ++i, offset += 4) {
    array.data[i] = std::bit_cast<float>(get_u32(bytes, offset));
    if (!std::isfinite(array.data[i]))
      format_error(offset, "non-finite value");
  }
  return array;
}

void write_array(const std::filesystem::path& path,
                 std::span<const std::uint32_t> shape,
                 std::span<const float> data) {
  const auto bytes = encode_array(shape, data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

void write_array(const std::filesystem::path& path, const Array& array) {
  write_array(path, array.shape, array.data);
}

Array read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open array file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_array(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace lsld
