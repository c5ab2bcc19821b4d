#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

// Little-endian byte encoding shared by the EMBV1 and PRJV1 formats.
namespace xmodal::binary_io {

class ByteWriter {
 public:
  void put_bytes(std::string_view bytes);
  void put_u32(std::uint32_t value);
  void put_u64(std::uint64_t value);
  void put_f32(float value) { put_u32(std::bit_cast<std::uint32_t>(value)); }
  void put_f64(double value) { put_u64(std::bit_cast<std::uint64_t>(value)); }

  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }
  void reserve(std::size_t n) { bytes_.reserve(n); }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Cursor over a byte buffer. Every read past the end throws FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string_view take_bytes(std::size_t n);
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  float get_f32() { return std::bit_cast<float>(get_u32()); }
  double get_f64() { return std::bit_cast<double>(get_u64()); }

  std::size_t remaining() const noexcept { return bytes_.size() - offset_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace xmodal::binary_io
