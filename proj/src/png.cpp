#include "stsccl/png.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "stsccl/errors.hpp"

namespace stsccl {

void Image::set(int64_t x, int64_t y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || x >= width || y < 0 || y >= height) return;
  size_t off = static_cast<size_t>((y * width + x) * 3);
  rgb[off] = r;
  rgb[off + 1] = g;
  rgb[off + 2] = b;
}

void Image::line(int64_t x0, int64_t y0, int64_t x1, int64_t y1, uint8_t r, uint8_t g, uint8_t b) {
  int64_t dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int64_t sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int64_t err = dx + dy;
  while (true) {
    set(x0, y0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    int64_t e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void write_chunk(std::ofstream& f, const char type[4], const std::vector<uint8_t>& data) {
  std::vector<uint8_t> hdr;
  put_u32_be(hdr, static_cast<uint32_t>(data.size()));
  f.write(reinterpret_cast<const char*>(hdr.data()), 4);
  f.write(type, 4);
  if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  uint32_t crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  std::vector<uint8_t> crcb;
  put_u32_be(crcb, crc);
  f.write(reinterpret_cast<const char*>(crcb.data()), 4);
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open for writing: " + path);
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  f.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(img.width));
  put_u32_be(ihdr, static_cast<uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk(f, "IHDR", ihdr);

  // filter byte 0 per scanline
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(img.height * (img.width * 3 + 1)));
  for (int64_t y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = img.rgb.data() + y * img.width * 3;
    raw.insert(raw.end(), row, row + img.width * 3);
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw NumericError("png deflate failed");
  }
  comp.resize(comp_size);
  write_chunk(f, "IDAT", comp);
  write_chunk(f, "IEND", {});
}

void plot_curves(const std::string& path, const std::vector<Curve>& curves, int64_t width, int64_t height) {
  Image img(width, height);
  const int64_t margin = 40;
  int64_t x0 = margin, y0 = height - margin, x1 = width - margin, y1 = margin;
  img.line(x0, y0, x1, y0, 0, 0, 0);
  img.line(x0, y0, x0, y1, 0, 0, 0);

  double lo = 1e300, hi = -1e300;
  size_t max_len = 0;
  for (const auto& c : curves) {
    for (double v : c.values) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    max_len = std::max(max_len, c.values.size());
  }
  if (max_len < 2 || hi <= lo) {
    write_png(path, img);
    return;
  }
  double span = hi - lo;
  lo -= 0.05 * span;
  hi += 0.05 * span;

  int64_t legend_y = y1 + 6;
  for (const auto& c : curves) {
    if (c.values.size() < 2) continue;
    int64_t px = -1, py = -1;
    for (size_t i = 0; i < c.values.size(); ++i) {
      double fx = static_cast<double>(i) / static_cast<double>(c.values.size() - 1);
      double fy = (c.values[i] - lo) / (hi - lo);
      int64_t x = x0 + static_cast<int64_t>(fx * static_cast<double>(x1 - x0));
      int64_t y = y0 - static_cast<int64_t>(fy * static_cast<double>(y0 - y1));
      if (px >= 0) img.line(px, py, x, y, c.r, c.g, c.b);
      px = x;
      py = y;
    }
    img.line(x0 + 8, legend_y, x0 + 40, legend_y, c.r, c.g, c.b);
    legend_y += 10;
  }
  write_png(path, img);
}

}  // namespace stsccl
