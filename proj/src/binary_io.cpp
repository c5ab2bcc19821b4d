#include "xmodal/binary_io.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "xmodal/errors.hpp"

namespace xmodal::binary_io {

void ByteWriter::put_bytes(std::string_view bytes) {
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::put_u32(std::uint32_t value) {
  for (int shift = 0; shift < 32; shift += 8) {
    bytes_.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

void ByteWriter::put_u64(std::uint64_t value) {
  for (int shift = 0; shift < 64; shift += 8) {
    bytes_.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

std::string_view ByteReader::take_bytes(std::size_t n) {
  if (n > remaining()) {
    throw FormatError("unexpected end of data: wanted " + std::to_string(n) + " bytes, " +
                      std::to_string(remaining()) + " left");
  }
  const auto* start = reinterpret_cast<const char*>(bytes_.data() + offset_);
  offset_ += n;
  return {start, n};
}

std::uint32_t ByteReader::get_u32() {
  const auto raw = take_bytes(4);
  std::uint32_t value = 0;
  for (int i = 3; i >= 0; --i) {
    value = (value << 8) | static_cast<std::uint8_t>(raw[i]);
  }
  return value;
}

std::uint64_t ByteReader::get_u64() {
  const auto raw = take_bytes(8);
  std::uint64_t value = 0;
  for (int i = 7; i >= 0; --i) {
    value = (value << 8) | static_cast<std::uint8_t>(raw[i]);
  }
  return value;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string() + " for reading");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw IoError("read failed on " + path.string());
  }
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw IoError("write failed on " + path.string());
  }
}

}  // namespace xmodal::binary_io
