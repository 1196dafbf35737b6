#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace remix {

// Dense H x W x C image, row-major with channels innermost.
// Pixel values live in [0, 1]; every transform clamps on write.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h),
        width(w),
        channels(c),
        data(static_cast<size_t>(h) * static_cast<size_t>(w) * static_cast<size_t>(c), fill) {
    if (h <= 0 || w <= 0 || c <= 0) throw std::invalid_argument("Image: dimensions must be positive");
  }

  size_t index(int y, int x, int c) const {
    return (static_cast<size_t>(y) * width + x) * channels + c;
  }
  float& at(int y, int x, int c) { return data[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data[index(y, x, c)]; }

  size_t pixel_count() const { return static_cast<size_t>(height) * width; }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

inline void clamp_pixels(Image& im) {
  for (float& v : im.data) v = clamp01(v);
}

// Mirror index with edge repeat: ..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...
// Valid for any integer i; folds through the period 2n.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline float max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  float m = 0.0f;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

// Rec. 601 luma. Single-channel pixels are their own luminance.
inline float luminance(const Image& im, int y, int x) {
  if (im.channels >= 3) {
    return 0.299f * im.at(y, x, 0) + 0.587f * im.at(y, x, 1) + 0.114f * im.at(y, x, 2);
  }
  return im.at(y, x, 0);
}

}  // namespace remix
