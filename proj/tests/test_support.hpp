#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace test_support {

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("soilmark_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

private:
  std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p,
                        const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// Minimal little-endian chunky uint16 TIFF writer, independent of the
// production codec; used as the reference for reader cross-checks.
inline std::vector<std::uint8_t> reference_uint16_tiff(
    int width, int height, const std::vector<std::uint16_t>& samples,
    const std::string& nodata_text) {
  std::vector<std::uint8_t> b;
  auto u16 = [&](std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back(v >> 8);
  };
  auto u32 = [&](std::uint32_t v) {
    for (int s = 0; s <= 24; s += 8) b.push_back((v >> s) & 0xff);
  };
  auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count,
                   std::uint32_t value) {
    u16(tag);
    u16(type);
    u32(count);
    u32(value);
  };

  // nodata text must fit the 4-byte inline value field (incl. NUL)
  const std::uint32_t nodata_len =
      static_cast<std::uint32_t>(nodata_text.size() + 1);
  std::uint32_t nodata_inline = 0;
  for (std::size_t i = 0; i < nodata_text.size() && i < 4; ++i) {
    nodata_inline |= std::uint32_t(std::uint8_t(nodata_text[i])) << (8 * i);
  }

  const std::uint16_t n_entries = 10;
  const std::uint32_t ifd_off = 8;
  const std::uint32_t ifd_size = 2 + n_entries * 12 + 4;
  std::uint32_t data_off = ifd_off + ifd_size;
  if (data_off % 2) ++data_off;

  b.push_back('I');
  b.push_back('I');
  u16(42);
  u32(ifd_off);

  u16(n_entries);
  entry(256, 3, 1, static_cast<std::uint32_t>(width));
  entry(257, 3, 1, static_cast<std::uint32_t>(height));
  entry(258, 3, 1, 16);
  entry(259, 3, 1, 1);  // no compression
  entry(262, 3, 1, 1);
  entry(273, 4, 1, data_off);
  entry(277, 3, 1, 1);
  entry(278, 3, 1, static_cast<std::uint32_t>(height));
  entry(279, 4, 1, static_cast<std::uint32_t>(samples.size() * 2));
  entry(42113, 2, nodata_len, nodata_inline);
  u32(0);

  while (b.size() < data_off) b.push_back(0);
  for (std::uint16_t s : samples) u16(s);
  return b;
}

}  // namespace test_support
