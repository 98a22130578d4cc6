#include "soilmark/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace soilmark {

namespace {

const std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32be(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back((x >> 24) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back(x & 0xff);
}

std::uint32_t get_u32be(const std::uint8_t* p) {
  return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 |
         std::uint32_t(p[2]) << 8 | std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
  put_u32be(out, static_cast<std::uint32_t>(data.size()));
  std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
  put_u32be(out, crc);
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a);
  int pb = std::abs(p - b);
  int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

ByteImage make_byte_image(int width, int height, int channels) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
    throw InvalidArgument("image must be gray or RGB with positive dimensions");
  }
  ByteImage img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.assign(static_cast<std::size_t>(width) * height * channels, 0);
  return img;
}

void write_png(const ByteImage& image, const std::filesystem::path& path) {
  if (image.width < 1 || image.height < 1 ||
      (image.channels != 1 && image.channels != 3)) {
    throw InvalidArgument("write_png expects a Gray8 or RGB8 image");
  }
  const std::size_t row_bytes =
      static_cast<std::size_t>(image.width) * image.channels;
  if (image.pixels.size() != row_bytes * image.height) {
    throw InvalidArgument("pixel buffer size does not match dimensions");
  }

  std::vector<std::uint8_t> ihdr;
  put_u32be(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32be(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);                                  // bit depth
  ihdr.push_back(image.channels == 3 ? 2 : 0);        // color type
  ihdr.push_back(0);                                  // compression
  ihdr.push_back(0);                                  // filter method
  ihdr.push_back(0);                                  // no interlace

  // Filter type 0 on every scanline.
  std::vector<std::uint8_t> raw;
  raw.reserve((row_bytes + 1) * image.height);
  for (int r = 0; r < image.height; ++r) {
    raw.push_back(0);
    const std::uint8_t* row = image.pixels.data() + row_bytes * r;
    raw.insert(raw.end(), row, row + row_bytes);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(bound);
  if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                6) != Z_OK) {
    throw IoError("PNG deflate failed");
  }
  idat.resize(bound);

  std::vector<std::uint8_t> out(kSignature, kSignature + 8);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", idat);
  append_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failure on " + path.string());
}

ByteImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 8 || std::memcmp(buf.data(), kSignature, 8) != 0) {
    throw MalformedFile("not a PNG file");
  }

  std::size_t pos = 8;
  std::uint32_t width = 0, height = 0;
  int channels = 0;
  bool saw_ihdr = false, saw_iend = false;
  std::vector<std::uint8_t> idat;

  while (pos + 8 <= buf.size()) {
    std::uint32_t len = get_u32be(buf.data() + pos);
    if (pos + 12 + std::size_t(len) > buf.size()) {
      throw MalformedFile("PNG chunk overruns file");
    }
    std::string type(reinterpret_cast<const char*>(buf.data() + pos + 4), 4);
    const std::uint8_t* data = buf.data() + pos + 8;

    std::uint32_t stored_crc = get_u32be(data + len);
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, buf.data() + pos + 4, len + 4);
    if (crc != stored_crc) throw MalformedFile("PNG chunk CRC mismatch");

    if (type == "IHDR") {
      if (len != 13) throw MalformedFile("bad IHDR length");
      width = get_u32be(data);
      height = get_u32be(data + 4);
      int depth = data[8];
      int color = data[9];
      int interlace = data[12];
      if (depth != 8) throw UnsupportedFeature("PNG bit depth != 8");
      if (color == 0) {
        channels = 1;
      } else if (color == 2) {
        channels = 3;
      } else {
        throw UnsupportedFeature("PNG color type " + std::to_string(color));
      }
      if (interlace != 0) throw UnsupportedFeature("interlaced PNG");
      if (width == 0 || height == 0 ||
          std::uint64_t(width) * height > (std::uint64_t(1) << 26)) {
        throw MalformedFile("implausible PNG dimensions");
      }
      saw_ihdr = true;
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      saw_iend = true;
      break;
    }
    pos += 12 + std::size_t(len);
  }
  if (!saw_ihdr || !saw_iend) throw MalformedFile("PNG missing IHDR or IEND");

  const std::size_t row_bytes = std::size_t(width) * channels;
  const std::size_t expected = (row_bytes + 1) * height;
  std::vector<std::uint8_t> raw(expected);
  uLongf dest_len = static_cast<uLongf>(expected);
  if (uncompress(raw.data(), &dest_len, idat.data(),
                 static_cast<uLong>(idat.size())) != Z_OK ||
      dest_len != expected) {
    throw MalformedFile("PNG image data failed to decompress");
  }

  ByteImage img = make_byte_image(static_cast<int>(width),
                                  static_cast<int>(height), channels);
  const int bpp = channels;
  std::vector<std::uint8_t> prev(row_bytes, 0);
  for (std::uint32_t r = 0; r < height; ++r) {
    const std::uint8_t* src = raw.data() + (row_bytes + 1) * r;
    std::uint8_t filter = src[0];
    std::uint8_t* dst = img.pixels.data() + row_bytes * r;
    for (std::size_t i = 0; i < row_bytes; ++i) {
      int x = src[1 + i];
      int a = i >= std::size_t(bpp) ? dst[i - bpp] : 0;
      int b = prev[i];
      int c = i >= std::size_t(bpp) ? prev[i - bpp] : 0;
      int v;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + paeth(a, b, c); break;
        default: throw MalformedFile("unknown PNG filter type");
      }
      dst[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    std::memcpy(prev.data(), dst, row_bytes);
  }
  return img;
}

}  // namespace soilmark
