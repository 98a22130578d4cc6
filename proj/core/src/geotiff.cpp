#include "soilmark/geotiff.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace soilmark {

namespace {

constexpr std::uint16_t kTagImageWidth = 256;
constexpr std::uint16_t kTagImageLength = 257;
constexpr std::uint16_t kTagBitsPerSample = 258;
constexpr std::uint16_t kTagCompression = 259;
constexpr std::uint16_t kTagPhotometric = 262;
constexpr std::uint16_t kTagImageDescription = 270;
constexpr std::uint16_t kTagStripOffsets = 273;
constexpr std::uint16_t kTagSamplesPerPixel = 277;
constexpr std::uint16_t kTagRowsPerStrip = 278;
constexpr std::uint16_t kTagStripByteCounts = 279;
constexpr std::uint16_t kTagPlanarConfig = 284;
constexpr std::uint16_t kTagTileWidth = 322;
constexpr std::uint16_t kTagTileLength = 323;
constexpr std::uint16_t kTagTileOffsets = 324;
constexpr std::uint16_t kTagTileByteCounts = 325;
constexpr std::uint16_t kTagSampleFormat = 339;
constexpr std::uint16_t kTagModelPixelScale = 33550;
constexpr std::uint16_t kTagModelTiepoint = 33922;
constexpr std::uint16_t kTagGeoKeyDirectory = 34735;
constexpr std::uint16_t kTagGdalNodata = 42113;

constexpr std::uint16_t kTypeAscii = 2;
constexpr std::uint16_t kTypeShort = 3;
constexpr std::uint16_t kTypeLong = 4;
constexpr std::uint16_t kTypeDouble = 12;

// Hard ceilings so a mutated header cannot request an absurd allocation.
constexpr std::uint64_t kMaxPixels = std::uint64_t(1) << 26;
constexpr std::uint32_t kMaxSamplesPerPixel = 16;

std::size_t type_size(std::uint16_t type) {
  switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
  }
}

class ByteReader {
public:
  ByteReader(const std::vector<std::uint8_t>& buf, bool big)
      : buf_(buf), big_(big) {}

  void require(std::uint64_t off, std::uint64_t n) const {
    if (off > buf_.size() || n > buf_.size() - off) {
      throw MalformedFile("offset/size points past end of file");
    }
  }
  std::uint8_t u8(std::uint64_t off) const {
    require(off, 1);
    return buf_[off];
  }
  std::uint16_t u16(std::uint64_t off) const {
    require(off, 2);
    return big_ ? std::uint16_t(buf_[off] << 8 | buf_[off + 1])
                : std::uint16_t(buf_[off + 1] << 8 | buf_[off]);
  }
  std::uint32_t u32(std::uint64_t off) const {
    require(off, 4);
    const std::uint8_t* p = buf_.data() + off;
    if (big_)
      return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 |
             std::uint32_t(p[2]) << 8 | std::uint32_t(p[3]);
    return std::uint32_t(p[3]) << 24 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[1]) << 8 | std::uint32_t(p[0]);
  }
  std::uint64_t u64(std::uint64_t off) const {
    std::uint64_t lo, hi;
    if (big_) {
      hi = u32(off);
      lo = u32(off + 4);
    } else {
      lo = u32(off);
      hi = u32(off + 4);
    }
    return hi << 32 | lo;
  }
  float f32(std::uint64_t off) const { return std::bit_cast<float>(u32(off)); }
  double f64(std::uint64_t off) const { return std::bit_cast<double>(u64(off)); }
  bool big() const { return big_; }
  std::size_t size() const { return buf_.size(); }
  const std::uint8_t* data(std::uint64_t off, std::uint64_t n) const {
    require(off, n);
    return buf_.data() + off;
  }

private:
  const std::vector<std::uint8_t>& buf_;
  bool big_;
};

struct IfdEntry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::uint64_t value_off = 0;  // position of the value field or external data
};

std::vector<double> entry_values(const ByteReader& r, const IfdEntry& e,
                                 std::uint16_t tag) {
  std::vector<double> out;
  out.reserve(e.count);
  std::size_t sz = type_size(e.type);
  for (std::uint32_t i = 0; i < e.count; ++i) {
    std::uint64_t off = e.value_off + i * sz;
    switch (e.type) {
      case 1: out.push_back(r.u8(off)); break;
      case kTypeShort: out.push_back(r.u16(off)); break;
      case kTypeLong: out.push_back(r.u32(off)); break;
      case kTypeDouble: out.push_back(r.f64(off)); break;
      case 11: out.push_back(r.f32(off)); break;
      default:
        throw MalformedFile("tag " + std::to_string(tag) +
                            " has unsupported value type " + std::to_string(e.type));
    }
  }
  return out;
}

std::string entry_ascii(const ByteReader& r, const IfdEntry& e) {
  const std::uint8_t* p = r.data(e.value_off, e.count);
  std::string s(reinterpret_cast<const char*>(p), e.count);
  if (auto nul = s.find('\0'); nul != std::string::npos) s.resize(nul);
  return s;
}

std::vector<std::uint8_t> inflate_block(const std::uint8_t* src, std::size_t n,
                                        std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  uLongf dest_len = static_cast<uLongf>(expected);
  int rc = uncompress(out.data(), &dest_len, src, static_cast<uLong>(n));
  if (rc != Z_OK) throw MalformedFile("deflate stream failed to decompress");
  out.resize(dest_len);
  return out;
}

std::vector<std::uint8_t> deflate_block(const std::uint8_t* src, std::size_t n) {
  uLongf bound = compressBound(static_cast<uLong>(n));
  std::vector<std::uint8_t> out(bound);
  int rc = compress2(out.data(), &bound, src, static_cast<uLong>(n), 6);
  if (rc != Z_OK) throw IoError("deflate compression failed");
  out.resize(bound);
  return out;
}

struct ParsedTags {
  std::map<std::uint16_t, IfdEntry> entries;

  bool has(std::uint16_t tag) const { return entries.count(tag) != 0; }
  const IfdEntry& get(std::uint16_t tag) const { return entries.at(tag); }
};

ParsedTags parse_ifd(const ByteReader& r, std::uint64_t ifd_off) {
  ParsedTags tags;
  std::uint16_t count = r.u16(ifd_off);
  for (std::uint16_t i = 0; i < count; ++i) {
    std::uint64_t base = ifd_off + 2 + std::uint64_t(i) * 12;
    std::uint16_t tag = r.u16(base);
    IfdEntry e;
    e.type = r.u16(base + 2);
    e.count = r.u32(base + 4);
    std::size_t sz = type_size(e.type);
    if (sz == 0) continue;  // unknown type, skip tag
    std::uint64_t total = std::uint64_t(sz) * e.count;
    e.value_off = total <= 4 ? base + 8 : r.u32(base + 8);
    r.require(e.value_off, total);
    tags.entries[tag] = e;
  }
  return tags;
}

std::uint32_t single_u32(const ByteReader& r, const ParsedTags& tags,
                         std::uint16_t tag, const char* name) {
  if (!tags.has(tag)) throw MalformedFile(std::string("missing required tag ") + name);
  auto v = entry_values(r, tags.get(tag), tag);
  if (v.empty()) throw MalformedFile(std::string("empty tag ") + name);
  return static_cast<std::uint32_t>(v[0]);
}

std::vector<std::string> parse_band_names(const std::string& desc) {
  // "bands=B2,B3,B4"
  std::vector<std::string> names;
  const std::string key = "bands=";
  auto pos = desc.find(key);
  if (pos == std::string::npos) return names;
  std::string rest = desc.substr(pos + key.size());
  if (auto stop = rest.find_first_of(" ;\n"); stop != std::string::npos) {
    rest.resize(stop);
  }
  std::size_t start = 0;
  while (start <= rest.size()) {
    auto comma = rest.find(',', start);
    std::string token = rest.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
    if (!token.empty()) names.push_back(token);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return names;
}

BandDescriptor descriptor_for(const std::string& name) {
  for (const auto& b : sentinel2_bands()) {
    if (b.name == name) return b;
  }
  return derived_band(name);
}

}  // namespace

GeoTiffReadResult read_geotiff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());

  if (buf.size() < 8) throw MalformedFile("file shorter than TIFF header");
  bool big;
  if (buf[0] == 'I' && buf[1] == 'I') {
    big = false;
  } else if (buf[0] == 'M' && buf[1] == 'M') {
    big = true;
  } else {
    throw MalformedFile("not a TIFF: bad byte-order mark");
  }
  ByteReader r(buf, big);
  std::uint16_t magic = r.u16(2);
  if (magic == 43) throw UnsupportedFeature("BigTIFF is not supported");
  if (magic != 42) throw MalformedFile("not a TIFF: bad magic number");

  ParsedTags tags = parse_ifd(r, r.u32(4));

  GeoTiffHeader hdr;
  hdr.byte_order = big ? TiffByteOrder::big : TiffByteOrder::little;
  hdr.width = single_u32(r, tags, kTagImageWidth, "ImageWidth");
  hdr.height = single_u32(r, tags, kTagImageLength, "ImageLength");
  if (hdr.width == 0 || hdr.height == 0) {
    throw MalformedFile("zero image dimensions");
  }
  if (std::uint64_t(hdr.width) * hdr.height > kMaxPixels) {
    throw UnsupportedFeature("image dimensions exceed reader limit");
  }

  std::uint32_t spp = tags.has(kTagSamplesPerPixel)
                          ? single_u32(r, tags, kTagSamplesPerPixel, "SamplesPerPixel")
                          : 1;
  if (spp == 0 || spp > kMaxSamplesPerPixel) {
    throw UnsupportedFeature("SamplesPerPixel=" + std::to_string(spp) +
                             " outside supported range");
  }
  hdr.samples_per_pixel = static_cast<std::uint16_t>(spp);

  if (!tags.has(kTagBitsPerSample)) throw MalformedFile("missing BitsPerSample");
  auto bits = entry_values(r, tags.get(kTagBitsPerSample), kTagBitsPerSample);
  if (bits.empty()) throw MalformedFile("empty BitsPerSample");
  for (double b : bits) {
    if (b != bits[0]) throw UnsupportedFeature("mixed BitsPerSample values");
  }
  std::uint32_t bps = static_cast<std::uint32_t>(bits[0]);

  std::uint32_t sample_fmt = 1;
  if (tags.has(kTagSampleFormat)) {
    auto fmts = entry_values(r, tags.get(kTagSampleFormat), kTagSampleFormat);
    for (double f : fmts) {
      if (f != fmts[0]) throw UnsupportedFeature("mixed SampleFormat values");
    }
    if (!fmts.empty()) sample_fmt = static_cast<std::uint32_t>(fmts[0]);
  }
  if (bps == 16 && sample_fmt == 1) {
    hdr.sample_format = TiffSampleFormat::uint16;
    hdr.bits_per_sample = 16;
  } else if (bps == 32 && sample_fmt == 3) {
    hdr.sample_format = TiffSampleFormat::float32;
    hdr.bits_per_sample = 32;
  } else {
    throw UnsupportedFeature("bits_per_sample=" + std::to_string(bps) +
                             " with sample_format=" + std::to_string(sample_fmt) +
                             " is outside the supported subset");
  }

  std::uint32_t compression =
      tags.has(kTagCompression) ? single_u32(r, tags, kTagCompression, "Compression") : 1;
  if (compression == 1) {
    hdr.compression = TiffCompression::none;
  } else if (compression == 8 || compression == 32946) {
    hdr.compression = TiffCompression::deflate;
  } else {
    throw UnsupportedFeature("compression=" + std::to_string(compression) +
                             " is not supported (only none/deflate)");
  }

  std::uint32_t planar =
      tags.has(kTagPlanarConfig) ? single_u32(r, tags, kTagPlanarConfig, "PlanarConfiguration") : 1;
  if (planar != 1 && planar != 2) {
    throw UnsupportedFeature("PlanarConfiguration=" + std::to_string(planar));
  }
  hdr.planar = planar == 2 ? TiffPlanarConfig::planar : TiffPlanarConfig::chunky;

  bool has_strips = tags.has(kTagStripOffsets);
  bool has_tiles = tags.has(kTagTileOffsets);
  if (has_strips == has_tiles) {
    throw MalformedFile("expected exactly one of strip or tile offsets");
  }
  hdr.layout = has_tiles ? TiffLayout::tiles : TiffLayout::strips;

  if (tags.has(kTagGdalNodata)) {
    std::string nd = entry_ascii(r, tags.get(kTagGdalNodata));
    try {
      hdr.nodata = std::stod(nd);
    } catch (const std::exception&) {
      throw MalformedFile("GDAL nodata tag is not numeric: '" + nd + "'");
    }
  }

  GeoTransform geo;
  if (tags.has(kTagModelPixelScale) && tags.has(kTagModelTiepoint)) {
    auto scale = entry_values(r, tags.get(kTagModelPixelScale), kTagModelPixelScale);
    auto tie = entry_values(r, tags.get(kTagModelTiepoint), kTagModelTiepoint);
    if (scale.size() < 2 || tie.size() < 6) {
      throw MalformedFile("truncated geo tags");
    }
    if (scale[0] <= 0.0 || scale[1] <= 0.0) {
      throw MalformedFile("non-positive pixel scale");
    }
    geo.pixel_width = scale[0];
    geo.pixel_height = scale[1];
    geo.origin_x = tie[3] - tie[0] * scale[0];
    geo.origin_y = tie[4] + tie[1] * scale[1];
    hdr.has_geo = true;
  }
  if (tags.has(kTagGeoKeyDirectory)) {
    auto keys = entry_values(r, tags.get(kTagGeoKeyDirectory), kTagGeoKeyDirectory);
    if (keys.size() >= 4) {
      std::size_t nkeys = static_cast<std::size_t>(keys[3]);
      for (std::size_t k = 0; k < nkeys && 4 + 4 * k + 3 < keys.size(); ++k) {
        std::uint16_t key_id = static_cast<std::uint16_t>(keys[4 + 4 * k]);
        std::uint16_t location = static_cast<std::uint16_t>(keys[4 + 4 * k + 1]);
        std::uint16_t value = static_cast<std::uint16_t>(keys[4 + 4 * k + 3]);
        if ((key_id == 3072 || key_id == 2048) && location == 0 && value != 0) {
          geo.epsg = value;
        }
      }
    }
  }

  if (tags.has(kTagImageDescription)) {
    hdr.band_names = parse_band_names(entry_ascii(r, tags.get(kTagImageDescription)));
  }

  std::vector<BandDescriptor> descriptors;
  for (std::uint32_t b = 0; b < spp; ++b) {
    if (b < hdr.band_names.size()) {
      descriptors.push_back(descriptor_for(hdr.band_names[b]));
    } else {
      descriptors.push_back(derived_band("band_" + std::to_string(b + 1)));
    }
  }

  RasterGrid grid(static_cast<int>(hdr.width), static_cast<int>(hdr.height),
                  descriptors, geo);

  const std::size_t bytes_per_sample = bps / 8;
  const std::uint32_t w = hdr.width;
  const std::uint32_t h = hdr.height;

  // Decodes one block of raw (decompressed) samples into the grid planes.
  auto store_samples = [&](const std::vector<std::uint8_t>& raw,
                           std::uint32_t col0, std::uint32_t row0,
                           std::uint32_t block_w, std::uint32_t block_h,
                           std::uint32_t plane0, std::uint32_t nplanes,
                           bool interleaved) {
    ByteReader br(raw, big);
    std::size_t si = 0;
    for (std::uint32_t rr = 0; rr < block_h; ++rr) {
      for (std::uint32_t cc = 0; cc < block_w; ++cc) {
        for (std::uint32_t p = 0; p < nplanes; ++p) {
          double v;
          if (hdr.sample_format == TiffSampleFormat::uint16) {
            v = br.u16(si);
            si += 2;
          } else {
            v = br.f32(si);
            si += 4;
          }
          std::uint32_t row = row0 + rr;
          std::uint32_t col = col0 + cc;
          if (row >= h || col >= w) continue;  // tile padding
          std::size_t idx = std::size_t(row) * w + col;
          std::uint32_t plane = interleaved ? p : plane0;
          grid.plane(plane)[idx] = v;
        }
      }
    }
  };

  auto fetch_block = [&](std::uint64_t off, std::uint64_t nbytes,
                         std::size_t expected) {
    r.require(off, nbytes);
    if (hdr.compression == TiffCompression::deflate) {
      auto raw = inflate_block(buf.data() + off, nbytes, expected);
      if (raw.size() < expected) {
        throw MalformedFile("decompressed block shorter than expected");
      }
      return raw;
    }
    if (nbytes < expected) throw MalformedFile("block shorter than expected");
    return std::vector<std::uint8_t>(buf.data() + off, buf.data() + off + expected);
  };

  if (hdr.layout == TiffLayout::strips) {
    auto offsets = entry_values(r, tags.get(kTagStripOffsets), kTagStripOffsets);
    if (!tags.has(kTagStripByteCounts)) throw MalformedFile("missing StripByteCounts");
    auto counts = entry_values(r, tags.get(kTagStripByteCounts), kTagStripByteCounts);
    if (counts.size() != offsets.size()) {
      throw MalformedFile("strip offset/count arrays disagree");
    }
    std::uint32_t rps = tags.has(kTagRowsPerStrip)
                            ? single_u32(r, tags, kTagRowsPerStrip, "RowsPerStrip")
                            : h;
    if (rps == 0) throw MalformedFile("RowsPerStrip is zero");
    rps = std::min(rps, h);
    std::uint32_t strips_per_plane = (h + rps - 1) / rps;
    bool planar_layout = hdr.planar == TiffPlanarConfig::planar && spp > 1;
    std::uint64_t expected_strips =
        planar_layout ? std::uint64_t(strips_per_plane) * spp : strips_per_plane;
    if (offsets.size() != expected_strips) {
      throw MalformedFile("strip count does not match image dimensions");
    }
    for (std::uint64_t s = 0; s < expected_strips; ++s) {
      std::uint32_t plane = planar_layout ? static_cast<std::uint32_t>(s / strips_per_plane) : 0;
      std::uint32_t strip_in_plane = planar_layout ? s % strips_per_plane
                                                   : static_cast<std::uint32_t>(s);
      std::uint32_t row0 = strip_in_plane * rps;
      std::uint32_t rows = std::min(rps, h - row0);
      std::uint32_t nplanes = planar_layout ? 1 : spp;
      std::size_t expected = std::size_t(rows) * w * nplanes * bytes_per_sample;
      auto raw = fetch_block(static_cast<std::uint64_t>(offsets[s]),
                             static_cast<std::uint64_t>(counts[s]), expected);
      store_samples(raw, 0, row0, w, rows, plane, nplanes, !planar_layout);
    }
  } else {
    std::uint32_t tw = single_u32(r, tags, kTagTileWidth, "TileWidth");
    std::uint32_t th = single_u32(r, tags, kTagTileLength, "TileLength");
    if (tw == 0 || th == 0 || tw % 16 != 0 || th % 16 != 0) {
      throw MalformedFile("tile dimensions must be positive multiples of 16");
    }
    auto offsets = entry_values(r, tags.get(kTagTileOffsets), kTagTileOffsets);
    if (!tags.has(kTagTileByteCounts)) throw MalformedFile("missing TileByteCounts");
    auto counts = entry_values(r, tags.get(kTagTileByteCounts), kTagTileByteCounts);
    if (counts.size() != offsets.size()) {
      throw MalformedFile("tile offset/count arrays disagree");
    }
    std::uint32_t across = (w + tw - 1) / tw;
    std::uint32_t down = (h + th - 1) / th;
    bool planar_layout = hdr.planar == TiffPlanarConfig::planar && spp > 1;
    std::uint64_t tiles_per_plane = std::uint64_t(across) * down;
    std::uint64_t expected_tiles = planar_layout ? tiles_per_plane * spp : tiles_per_plane;
    if (offsets.size() != expected_tiles) {
      throw MalformedFile("tile count does not match image dimensions");
    }
    for (std::uint64_t t = 0; t < expected_tiles; ++t) {
      std::uint32_t plane = planar_layout ? static_cast<std::uint32_t>(t / tiles_per_plane) : 0;
      std::uint64_t tile_in_plane = planar_layout ? t % tiles_per_plane : t;
      std::uint32_t tile_row = static_cast<std::uint32_t>(tile_in_plane / across);
      std::uint32_t tile_col = static_cast<std::uint32_t>(tile_in_plane % across);
      std::uint32_t nplanes = planar_layout ? 1 : spp;
      std::size_t expected = std::size_t(tw) * th * nplanes * bytes_per_sample;
      auto raw = fetch_block(static_cast<std::uint64_t>(offsets[t]),
                             static_cast<std::uint64_t>(counts[t]), expected);
      store_samples(raw, tile_col * tw, tile_row * th, tw, th, plane, nplanes,
                    !planar_layout);
    }
  }

  if (hdr.nodata) {
    double nd = *hdr.nodata;
    bool nd_is_nan = std::isnan(nd);
    auto mask = grid.mask();
    for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
      bool invalid = false;
      for (int b = 0; b < grid.band_count(); ++b) {
        double v = grid.plane(b)[i];
        if (nd_is_nan ? std::isnan(v)
                      : static_cast<float>(v) == static_cast<float>(nd)) {
          invalid = true;
          break;
        }
      }
      if (invalid) mask[i] = 0;
    }
  }

  return {std::move(grid), std::move(hdr)};
}

namespace {

class ByteWriter {
public:
  explicit ByteWriter(bool big) : big_(big) {}

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    if (big_) {
      buf_.push_back(v >> 8);
      buf_.push_back(v & 0xff);
    } else {
      buf_.push_back(v & 0xff);
      buf_.push_back(v >> 8);
    }
  }
  void u32(std::uint32_t v) {
    if (big_) {
      for (int s = 24; s >= 0; s -= 8) buf_.push_back((v >> s) & 0xff);
    } else {
      for (int s = 0; s <= 24; s += 8) buf_.push_back((v >> s) & 0xff);
    }
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) {
    std::uint64_t raw = std::bit_cast<std::uint64_t>(v);
    if (big_) {
      u32(static_cast<std::uint32_t>(raw >> 32));
      u32(static_cast<std::uint32_t>(raw & 0xffffffffu));
    } else {
      u32(static_cast<std::uint32_t>(raw & 0xffffffffu));
      u32(static_cast<std::uint32_t>(raw >> 32));
    }
  }
  void bytes(const std::uint8_t* p, std::size_t n) {
    buf_.insert(buf_.end(), p, p + n);
  }
  void pad_to_even() {
    if (buf_.size() % 2) buf_.push_back(0);
  }
  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& data() { return buf_; }

private:
  std::vector<std::uint8_t> buf_;
  bool big_;
};

struct TagValue {
  std::uint16_t tag = 0;
  std::uint16_t type = 0;
  std::vector<double> numbers;  // SHORT/LONG/DOUBLE payloads
  std::string text;             // ASCII payload (NUL appended on write)

  std::uint32_t count() const {
    return type == kTypeAscii ? static_cast<std::uint32_t>(text.size() + 1)
                              : static_cast<std::uint32_t>(numbers.size());
  }
  std::size_t payload_bytes() const { return type_size(type) * count(); }
};

void write_tag_payload(ByteWriter& w, const TagValue& t) {
  if (t.type == kTypeAscii) {
    w.bytes(reinterpret_cast<const std::uint8_t*>(t.text.data()), t.text.size());
    w.u8(0);
    return;
  }
  for (double v : t.numbers) {
    switch (t.type) {
      case kTypeShort: w.u16(static_cast<std::uint16_t>(v)); break;
      case kTypeLong: w.u32(static_cast<std::uint32_t>(v)); break;
      case kTypeDouble: w.f64(v); break;
      default: throw IoError("unsupported tag type in writer");
    }
  }
}

std::string format_nodata(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void write_geotiff(const RasterGrid& grid, const std::filesystem::path& path,
                   const GeoTiffWriteOptions& options) {
  if (grid.empty()) throw InvalidArgument("cannot write an empty grid");
  if (options.tile_size == 0 || options.tile_size % 16 != 0) {
    throw InvalidArgument("tile_size must be a positive multiple of 16");
  }

  const bool big = options.byte_order == TiffByteOrder::big;
  const bool planar = options.planar == TiffPlanarConfig::planar && grid.band_count() > 1;
  const bool f32 = options.sample_format == TiffSampleFormat::float32;
  const std::uint32_t w = grid.width();
  const std::uint32_t h = grid.height();
  const std::uint32_t spp = grid.band_count();
  const auto mask = grid.mask();

  auto encode_sample = [&](ByteWriter& bw, int band, std::size_t idx) {
    if (f32) {
      double v = mask[idx] ? grid.plane(band)[idx] : options.nodata_float;
      bw.f32(static_cast<float>(v));
    } else {
      std::uint16_t dn;
      if (mask[idx]) {
        double scaled = std::llround(grid.plane(band)[idx] * options.uint16_scale);
        dn = static_cast<std::uint16_t>(std::clamp<double>(scaled, 0.0, 65535.0));
      } else {
        dn = options.nodata_uint16;
      }
      bw.u16(dn);
    }
  };

  // Encode data blocks (strip- or tile-ordered, plane-major when planar).
  std::vector<std::vector<std::uint8_t>> blocks;
  std::uint32_t rps = std::min(options.rows_per_strip, h);
  if (rps == 0) rps = h;
  std::uint32_t tile = options.tile_size;

  auto emit_block = [&](std::vector<std::uint8_t>&& raw) {
    if (options.compression == TiffCompression::deflate) {
      blocks.push_back(deflate_block(raw.data(), raw.size()));
    } else {
      blocks.push_back(std::move(raw));
    }
  };

  if (options.layout == TiffLayout::strips) {
    std::uint32_t strips_per_plane = (h + rps - 1) / rps;
    std::uint32_t nplane_blocks = planar ? spp : 1;
    for (std::uint32_t pb = 0; pb < nplane_blocks; ++pb) {
      for (std::uint32_t s = 0; s < strips_per_plane; ++s) {
        std::uint32_t row0 = s * rps;
        std::uint32_t rows = std::min(rps, h - row0);
        ByteWriter bw(big);
        for (std::uint32_t rr = 0; rr < rows; ++rr) {
          for (std::uint32_t cc = 0; cc < w; ++cc) {
            std::size_t idx = std::size_t(row0 + rr) * w + cc;
            if (planar) {
              encode_sample(bw, pb, idx);
            } else {
              for (std::uint32_t p = 0; p < spp; ++p) encode_sample(bw, p, idx);
            }
          }
        }
        emit_block(std::move(bw.data()));
      }
    }
  } else {
    std::uint32_t across = (w + tile - 1) / tile;
    std::uint32_t down = (h + tile - 1) / tile;
    std::uint32_t nplane_blocks = planar ? spp : 1;
    for (std::uint32_t pb = 0; pb < nplane_blocks; ++pb) {
      for (std::uint32_t ty = 0; ty < down; ++ty) {
        for (std::uint32_t tx = 0; tx < across; ++tx) {
          ByteWriter bw(big);
          for (std::uint32_t rr = 0; rr < tile; ++rr) {
            for (std::uint32_t cc = 0; cc < tile; ++cc) {
              std::uint32_t row = ty * tile + rr;
              std::uint32_t col = tx * tile + cc;
              bool inside = row < h && col < w;
              std::size_t idx = inside ? std::size_t(row) * w + col : 0;
              if (planar) {
                if (inside) {
                  encode_sample(bw, pb, idx);
                } else if (f32) {
                  bw.f32(static_cast<float>(options.nodata_float));
                } else {
                  bw.u16(options.nodata_uint16);
                }
              } else {
                for (std::uint32_t p = 0; p < spp; ++p) {
                  if (inside) {
                    encode_sample(bw, p, idx);
                  } else if (f32) {
                    bw.f32(static_cast<float>(options.nodata_float));
                  } else {
                    bw.u16(options.nodata_uint16);
                  }
                }
              }
            }
          }
          emit_block(std::move(bw.data()));
        }
      }
    }
  }

  // Assemble tags.
  std::vector<TagValue> tag_list;
  auto add_shorts = [&](std::uint16_t tag, std::vector<double> v) {
    tag_list.push_back({tag, kTypeShort, std::move(v), {}});
  };
  auto add_longs = [&](std::uint16_t tag, std::vector<double> v) {
    tag_list.push_back({tag, kTypeLong, std::move(v), {}});
  };
  auto add_doubles = [&](std::uint16_t tag, std::vector<double> v) {
    tag_list.push_back({tag, kTypeDouble, std::move(v), {}});
  };
  auto add_ascii = [&](std::uint16_t tag, std::string s) {
    tag_list.push_back({tag, kTypeAscii, {}, std::move(s)});
  };

  add_longs(kTagImageWidth, {double(w)});
  add_longs(kTagImageLength, {double(h)});
  add_shorts(kTagBitsPerSample, std::vector<double>(spp, f32 ? 32.0 : 16.0));
  add_shorts(kTagCompression,
             {options.compression == TiffCompression::deflate ? 8.0 : 1.0});
  add_shorts(kTagPhotometric, {1.0});

  std::string band_csv;
  for (int b = 0; b < grid.band_count(); ++b) {
    if (b) band_csv += ',';
    band_csv += grid.band(b).name;
  }
  add_ascii(kTagImageDescription, "bands=" + band_csv);

  add_shorts(kTagSamplesPerPixel, {double(spp)});
  add_shorts(kTagPlanarConfig, {planar ? 2.0 : 1.0});
  add_shorts(kTagSampleFormat, std::vector<double>(spp, f32 ? 3.0 : 1.0));

  std::vector<double> block_sizes;
  for (const auto& b : blocks) block_sizes.push_back(double(b.size()));
  std::vector<double> block_offsets(blocks.size(), 0.0);  // patched below

  if (options.layout == TiffLayout::strips) {
    add_longs(kTagRowsPerStrip, {double(rps)});
    add_longs(kTagStripOffsets, block_offsets);
    add_longs(kTagStripByteCounts, block_sizes);
  } else {
    add_longs(kTagTileWidth, {double(tile)});
    add_longs(kTagTileLength, {double(tile)});
    add_longs(kTagTileOffsets, block_offsets);
    add_longs(kTagTileByteCounts, block_sizes);
  }

  const GeoTransform& geo = grid.geo();
  add_doubles(kTagModelPixelScale, {geo.pixel_width, geo.pixel_height, 0.0});
  add_doubles(kTagModelTiepoint, {0.0, 0.0, 0.0, geo.origin_x, geo.origin_y, 0.0});
  add_shorts(kTagGeoKeyDirectory,
             {1, 1, 0, 3,
              1024, 0, 1, 1,     // model type: projected
              1025, 0, 1, 1,     // raster type: pixel-is-area
              3072, 0, 1, double(geo.epsg)});
  add_ascii(kTagGdalNodata, f32 ? format_nodata(options.nodata_float)
                                : std::to_string(options.nodata_uint16));

  std::sort(tag_list.begin(), tag_list.end(),
            [](const TagValue& a, const TagValue& b) { return a.tag < b.tag; });

  // Layout: header | IFD | external tag payloads | data blocks.
  const std::size_t ifd_off = 8;
  const std::size_t ifd_size = 2 + tag_list.size() * 12 + 4;
  std::size_t cursor = ifd_off + ifd_size;
  std::vector<std::size_t> payload_offsets(tag_list.size(), 0);
  for (std::size_t i = 0; i < tag_list.size(); ++i) {
    if (tag_list[i].payload_bytes() > 4) {
      cursor += cursor % 2;  // word-align external payloads
      payload_offsets[i] = cursor;
      cursor += tag_list[i].payload_bytes();
    }
  }
  cursor += cursor % 2;
  std::size_t data_start = cursor;

  // Patch block offsets now that data_start is known.
  {
    std::size_t off = data_start;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      block_offsets[i] = double(off);
      off += blocks[i].size();
    }
    std::uint16_t offsets_tag = options.layout == TiffLayout::strips
                                    ? kTagStripOffsets
                                    : kTagTileOffsets;
    for (auto& t : tag_list) {
      if (t.tag == offsets_tag) t.numbers = block_offsets;
    }
  }

  ByteWriter out(big);
  out.u8(big ? 'M' : 'I');
  out.u8(big ? 'M' : 'I');
  out.u16(42);
  out.u32(static_cast<std::uint32_t>(ifd_off));

  out.u16(static_cast<std::uint16_t>(tag_list.size()));
  for (std::size_t i = 0; i < tag_list.size(); ++i) {
    const TagValue& t = tag_list[i];
    out.u16(t.tag);
    out.u16(t.type);
    out.u32(t.count());
    if (t.payload_bytes() > 4) {
      out.u32(static_cast<std::uint32_t>(payload_offsets[i]));
    } else {
      std::size_t before = out.size();
      write_tag_payload(out, t);
      while (out.size() - before < 4) out.u8(0);
    }
  }
  out.u32(0);  // no further IFDs

  for (std::size_t i = 0; i < tag_list.size(); ++i) {
    if (tag_list[i].payload_bytes() > 4) {
      out.pad_to_even();
      write_tag_payload(out, tag_list[i]);
    }
  }
  out.pad_to_even();

  for (const auto& b : blocks) out.bytes(b.data(), b.size());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data().data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failure on " + path.string());
}

void write_geotiff(const RasterGrid& grid, const std::filesystem::path& path,
                   TiffSampleFormat sample_format) {
  GeoTiffWriteOptions o;
  o.sample_format = sample_format;
  write_geotiff(grid, path, o);
}

}  // namespace soilmark
