#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stsccl {

struct Image {
  int64_t width = 0, height = 0;
  std::vector<uint8_t> rgb;  // row-major, 3 bytes per pixel
  Image(int64_t w, int64_t h, uint8_t fill = 255)
      : width(w), height(h), rgb(static_cast<size_t>(w * h * 3), fill) {}
  void set(int64_t x, int64_t y, uint8_t r, uint8_t g, uint8_t b);
  void line(int64_t x0, int64_t y0, int64_t x1, int64_t y1, uint8_t r, uint8_t g, uint8_t b);
};

void write_png(const std::string& path, const Image& img);

// Minimal multi-series line chart; one curve per series, auto-scaled.
struct Curve {
  std::string label;
  std::vector<double> values;
  uint8_t r = 0, g = 0, b = 0;
};
void plot_curves(const std::string& path, const std::vector<Curve>& curves, int64_t width = 900,
                 int64_t height = 540);

}  // namespace stsccl
