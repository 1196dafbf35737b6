#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "remix/image.hpp"
#include "remix/rng.hpp"

namespace remix {

// ============================================================================
// Transform catalogue
// ============================================================================

enum class TransformKind : int {
  kAutocontrast = 0,
  kBlur,
  kBrightness,
  kColor,
  kContrast,
  kCutout,
  kEqualize,
  kInvert,
  kIdentity,
  kPosterize,
  kRescale,
  kRotate,
  kSharpness,
  kShearX,
  kShearY,
  kSmooth,
  kSolarize,
  kTranslateX,
  kTranslateY,
};

inline constexpr int kTransformKindCount = 19;
inline constexpr int kMagnitudeBins = 17;

enum class RescaleMethod : int {
  kBox = 0,
  kBilinear,
  kBilinearAntialias,
  kBicubic,
  kNearest,
  kTent,  // 1-2-1 three-tap filter
};

inline constexpr int kRescaleMethodCount = 6;

struct ParamInfo {
  const char* name;
  float lo = 0.0f;
  float hi = 0.0f;
  int bins = kMagnitudeBins;
  bool categorical = false;  // bin index is the value (Rescale method)
};

inline const char* kind_name(TransformKind kind) {
  static const std::array<const char*, kTransformKindCount> names = {
      "autocontrast", "blur",    "brightness", "color",   "contrast",    "cutout",      "equalize",
      "invert",       "identity", "posterize", "rescale", "rotate",      "sharpness",   "shear_x",
      "shear_y",      "smooth",  "solarize",   "translate_x", "translate_y"};
  return names[static_cast<int>(kind)];
}

// Continuous parameter ranges, one row per (transform, parameter).
inline std::span<const ParamInfo> transform_params(TransformKind kind) {
  static const std::array<std::vector<ParamInfo>, kTransformKindCount> table = {{
      {{"blend", 0.0f, 1.0f}},                                              // autocontrast
      {{"blend", 0.0f, 1.0f}},                                              // blur
      {{"factor", 0.0f, 1.0f}},                                             // brightness
      {{"factor", 0.0f, 1.0f}},                                             // color
      {{"factor", 0.0f, 1.0f}},                                             // contrast
      {{"side_fraction", 0.0f, 0.5f}},                                      // cutout
      {{"blend", 0.0f, 1.0f}},                                              // equalize
      {{"blend", 0.0f, 1.0f}},                                              // invert
      {},                                                                   // identity
      {{"bits", 1.0f, 8.0f}},                                               // posterize
      {{"crop_fraction", 0.5f, 1.0f},
       {"method", 0.0f, 5.0f, kRescaleMethodCount, true}},                  // rescale
      {{"degrees", -45.0f, 45.0f}},                                         // rotate
      {{"factor", 0.0f, 1.0f}},                                             // sharpness
      {{"rate", -0.3f, 0.3f}},                                              // shear_x
      {{"rate", -0.3f, 0.3f}},                                              // shear_y
      {{"factor", 0.0f, 1.0f}},                                             // smooth
      {{"threshold", 0.0f, 1.0f}},                                          // solarize
      {{"shift_fraction", -0.3f, 0.3f}},                                    // translate_x
      {{"shift_fraction", -0.3f, 0.3f}},                                    // translate_y
  }};
  return table[static_cast<int>(kind)];
}

// Grid point for a magnitude bin: lo + (bin / (bins-1)) * (hi - lo).
// Categorical parameters map the bin index to itself.
inline float bin_to_magnitude(TransformKind kind, int param_index, int bin) {
  const auto params = transform_params(kind);
  if (param_index < 0 || param_index >= static_cast<int>(params.size())) {
    throw std::invalid_argument(std::string("bin_to_magnitude: bad parameter index for ") + kind_name(kind));
  }
  const ParamInfo& info = params[param_index];
  if (bin < 0 || bin >= info.bins) {
    throw std::out_of_range(std::string("bin_to_magnitude: bin out of range for ") + kind_name(kind));
  }
  if (info.categorical) return static_cast<float>(bin);
  return info.lo + (static_cast<float>(bin) / static_cast<float>(info.bins - 1)) * (info.hi - info.lo);
}

// One transform instance: which kind, and for each parameter the bin it was
// drawn from plus the resolved continuous magnitude.
struct ParamSetting {
  int param_index = 0;
  int bin = 0;
  float magnitude = 0.0f;
};

struct TransformSpec {
  TransformKind kind = TransformKind::kIdentity;
  std::vector<ParamSetting> params;
};

// Spec from bin indices alone; magnitudes resolve to the bin grid points.
inline TransformSpec make_spec(TransformKind kind, std::span<const int> bins) {
  const auto params = transform_params(kind);
  if (bins.size() != params.size()) throw std::invalid_argument("make_spec: wrong parameter count");
  TransformSpec spec;
  spec.kind = kind;
  spec.params.reserve(bins.size());
  for (size_t p = 0; p < bins.size(); ++p) {
    spec.params.push_back({static_cast<int>(p), bins[p], bin_to_magnitude(kind, static_cast<int>(p), bins[p])});
  }
  return spec;
}

inline TransformSpec make_spec(TransformKind kind, std::initializer_list<int> bins) {
  return make_spec(kind, std::span<const int>(bins.begin(), bins.size()));
}

// ============================================================================
// Pixel kernels
// ============================================================================

namespace detail {

// out = (1 - t) * base + t * overlay, clamped.
inline Image blend(const Image& base, const Image& overlay, float t) {
  Image out = base;
  for (size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = clamp01((1.0f - t) * base.data[i] + t * overlay.data[i]);
  }
  return out;
}

inline Image convolve3x3(const Image& im, const std::array<float, 9>& kernel) {
  Image out = im;
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      for (int c = 0; c < im.channels; ++c) {
        float acc = 0.0f;
        for (int ky = -1; ky <= 1; ++ky) {
          for (int kx = -1; kx <= 1; ++kx) {
            const int sy = reflect_index(y + ky, im.height);
            const int sx = reflect_index(x + kx, im.width);
            acc += kernel[(ky + 1) * 3 + (kx + 1)] * im.at(sy, sx, c);
          }
        }
        out.at(y, x, c) = clamp01(acc);
      }
    }
  }
  return out;
}

inline Image box_blur3(const Image& im) {
  constexpr float w = 1.0f / 9.0f;
  return convolve3x3(im, {w, w, w, w, w, w, w, w, w});
}

// Center-weighted smoothing kernel (center 5, edges 1, normalized).
inline Image smooth_filter(const Image& im) {
  constexpr float s = 1.0f / 13.0f;
  return convolve3x3(im, {s, s, s, s, 5.0f * s, s, s, s, s});
}

// 3x3 binomial kernel; the fully-blurred endpoint of the sharpness factor.
inline Image binomial_blur3(const Image& im) {
  constexpr float g = 1.0f / 16.0f;
  return convolve3x3(im, {g, 2 * g, g, 2 * g, 4 * g, 2 * g, g, 2 * g, g});
}

inline Image grayscale(const Image& im) {
  Image out = im;
  if (im.channels < 3) return out;
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      const float l = luminance(im, y, x);
      for (int c = 0; c < im.channels; ++c) out.at(y, x, c) = l;
    }
  }
  return out;
}

inline Image autocontrast_full(const Image& im) {
  Image out = im;
  for (int c = 0; c < im.channels; ++c) {
    float lo = 1.0f, hi = 0.0f;
    for (int y = 0; y < im.height; ++y) {
      for (int x = 0; x < im.width; ++x) {
        const float v = im.at(y, x, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (hi - lo < 1e-6f) continue;  // flat channel stays as-is
    const float scale = 1.0f / (hi - lo);
    for (int y = 0; y < im.height; ++y) {
      for (int x = 0; x < im.width; ++x) {
        out.at(y, x, c) = clamp01((im.at(y, x, c) - lo) * scale);
      }
    }
  }
  return out;
}

// Classic histogram equalization on 256 buckets of the quantized channel.
inline Image equalize_full(const Image& im) {
  Image out = im;
  const int n = static_cast<int>(im.pixel_count());
  for (int c = 0; c < im.channels; ++c) {
    std::array<int, 256> hist{};
    for (int y = 0; y < im.height; ++y) {
      for (int x = 0; x < im.width; ++x) {
        const int q = std::clamp(static_cast<int>(std::lround(im.at(y, x, c) * 255.0f)), 0, 255);
        ++hist[q];
      }
    }
    std::array<int, 256> cdf{};
    int running = 0;
    int cdf_min = 0;
    bool seen = false;
    for (int i = 0; i < 256; ++i) {
      running += hist[i];
      cdf[i] = running;
      if (!seen && hist[i] > 0) {
        cdf_min = running;
        seen = true;
      }
    }
    if (n == cdf_min) continue;  // single-valued channel
    std::array<float, 256> lut{};
    const float scale = 1.0f / static_cast<float>(n - cdf_min);
    for (int i = 0; i < 256; ++i) {
      lut[i] = clamp01(static_cast<float>(cdf[i] - cdf_min) * scale);
    }
    for (int y = 0; y < im.height; ++y) {
      for (int x = 0; x < im.width; ++x) {
        const int q = std::clamp(static_cast<int>(std::lround(im.at(y, x, c) * 255.0f)), 0, 255);
        out.at(y, x, c) = lut[q];
      }
    }
  }
  return out;
}

inline Image invert_full(const Image& im) {
  Image out = im;
  for (float& v : out.data) v = 1.0f - v;
  return out;
}

inline Image posterize(const Image& im, float magnitude) {
  const int bits = std::clamp(static_cast<int>(std::lround(magnitude)), 1, 8);
  if (bits == 8) return im;  // full depth keeps float pixels untouched
  const int mask = 0xff << (8 - bits);
  Image out = im;
  for (float& v : out.data) {
    const int q = std::clamp(static_cast<int>(std::lround(v * 255.0f)), 0, 255);
    v = static_cast<float>(q & mask) / 255.0f;
  }
  return out;
}

inline Image solarize(const Image& im, float threshold) {
  Image out = im;
  for (float& v : out.data) {
    if (v > threshold) v = 1.0f - v;
  }
  return out;
}

inline Image cutout(const Image& im, float side_fraction, std::mt19937& rng) {
  const int side = static_cast<int>(side_fraction * im.width);
  if (side <= 0) return im;
  const int sh = std::min(side, im.height);
  const int sw = std::min(side, im.width);
  const int y0 = uniform_int(rng, 0, im.height - sh);
  const int x0 = uniform_int(rng, 0, im.width - sw);
  Image out = im;
  for (int y = y0; y < y0 + sh; ++y) {
    for (int x = x0; x < x0 + sw; ++x) {
      for (int c = 0; c < im.channels; ++c) out.at(y, x, c) = 0.5f;
    }
  }
  return out;
}

// Bilinear sample at fractional coordinates with mirrored borders.
inline float sample_bilinear(const Image& im, float fy, float fx, int c) {
  const int y0 = static_cast<int>(std::floor(fy));
  const int x0 = static_cast<int>(std::floor(fx));
  const float wy = fy - static_cast<float>(y0);
  const float wx = fx - static_cast<float>(x0);
  const int ya = reflect_index(y0, im.height);
  const int yb = reflect_index(y0 + 1, im.height);
  const int xa = reflect_index(x0, im.width);
  const int xb = reflect_index(x0 + 1, im.width);
  const float top = (1.0f - wx) * im.at(ya, xa, c) + wx * im.at(ya, xb, c);
  const float bot = (1.0f - wx) * im.at(yb, xa, c) + wx * im.at(yb, xb, c);
  return (1.0f - wy) * top + wy * bot;
}

// Applies the inverse affine map (x, y) -> source coordinates, sampling
// bilinearly. All geometric transforms are anchored at the image center.
template <typename MapFn>
inline Image warp(const Image& im, MapFn&& source_of) {
  Image out(im.height, im.width, im.channels);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      const auto [sy, sx] = source_of(static_cast<float>(y), static_cast<float>(x));
      for (int c = 0; c < im.channels; ++c) {
        out.at(y, x, c) = clamp01(sample_bilinear(im, sy, sx, c));
      }
    }
  }
  return out;
}

inline Image rotate(const Image& im, float degrees) {
  if (degrees == 0.0f) return im;
  const float rad = degrees * std::numbers::pi_v<float> / 180.0f;
  const float cs = std::cos(rad);
  const float sn = std::sin(rad);
  const float cy = 0.5f * static_cast<float>(im.height - 1);
  const float cx = 0.5f * static_cast<float>(im.width - 1);
  return warp(im, [&](float y, float x) {
    const float dy = y - cy;
    const float dx = x - cx;
    return std::pair<float, float>{cy + cs * dy - sn * dx, cx + sn * dy + cs * dx};
  });
}

inline Image shear_x(const Image& im, float rate) {
  if (rate == 0.0f) return im;
  const float cy = 0.5f * static_cast<float>(im.height - 1);
  return warp(im, [&](float y, float x) {
    return std::pair<float, float>{y, x + rate * (y - cy)};
  });
}

inline Image shear_y(const Image& im, float rate) {
  if (rate == 0.0f) return im;
  const float cx = 0.5f * static_cast<float>(im.width - 1);
  return warp(im, [&](float y, float x) {
    return std::pair<float, float>{y + rate * (x - cx), x};
  });
}

// Shift distance for both axes is a fraction of the image width.
inline Image translate_x(const Image& im, float fraction) {
  if (fraction == 0.0f) return im;
  const float t = fraction * static_cast<float>(im.width);
  return warp(im, [&](float y, float x) { return std::pair<float, float>{y, x - t}; });
}

inline Image translate_y(const Image& im, float fraction) {
  if (fraction == 0.0f) return im;
  const float t = fraction * static_cast<float>(im.width);
  return warp(im, [&](float y, float x) { return std::pair<float, float>{y - t, x}; });
}

struct Tap {
  int src;
  float weight;
};

using TapList = std::vector<std::vector<Tap>>;

inline float bicubic_kernel(float t) {
  // Catmull-Rom (a = -0.5)
  t = std::fabs(t);
  if (t <= 1.0f) return 1.5f * t * t * t - 2.5f * t * t + 1.0f;
  if (t < 2.0f) return -0.5f * t * t * t + 2.5f * t * t - 4.0f * t + 2.0f;
  return 0.0f;
}

// Per-output-coordinate source taps for one axis of a resampling pass.
inline TapList make_taps(int src_n, int dst_n, RescaleMethod method) {
  TapList taps(dst_n);
  const float scale = static_cast<float>(src_n) / static_cast<float>(dst_n);
  for (int o = 0; o < dst_n; ++o) {
    const float center = (static_cast<float>(o) + 0.5f) * scale - 0.5f;
    std::vector<Tap>& row = taps[o];
    switch (method) {
      case RescaleMethod::kNearest: {
        const int i = std::clamp(static_cast<int>(std::floor((static_cast<float>(o) + 0.5f) * scale)), 0, src_n - 1);
        row.push_back({i, 1.0f});
        break;
      }
      case RescaleMethod::kBox: {
        const float lo = static_cast<float>(o) * scale;
        const float hi = lo + scale;
        for (int i = static_cast<int>(std::floor(lo)); i < static_cast<int>(std::ceil(hi)); ++i) {
          const float cover = std::min(hi, static_cast<float>(i + 1)) - std::max(lo, static_cast<float>(i));
          if (cover > 0.0f) row.push_back({reflect_index(i, src_n), cover / scale});
        }
        break;
      }
      case RescaleMethod::kBilinear:
      case RescaleMethod::kBilinearAntialias: {
        // Triangle filter; antialiasing widens the support by the scale
        // factor, which only differs from plain bilinear when downscaling.
        const float support = method == RescaleMethod::kBilinearAntialias ? std::max(1.0f, scale) : 1.0f;
        const int lo = static_cast<int>(std::floor(center - support)) + 1;
        const int hi = static_cast<int>(std::ceil(center + support));
        float total = 0.0f;
        for (int i = lo; i < hi; ++i) {
          const float w = 1.0f - std::fabs((static_cast<float>(i) - center) / support);
          if (w > 0.0f) {
            row.push_back({reflect_index(i, src_n), w});
            total += w;
          }
        }
        for (Tap& t : row) t.weight /= total;
        break;
      }
      case RescaleMethod::kBicubic: {
        const int base = static_cast<int>(std::floor(center));
        float total = 0.0f;
        for (int i = base - 1; i <= base + 2; ++i) {
          const float w = bicubic_kernel(static_cast<float>(i) - center);
          row.push_back({reflect_index(i, src_n), w});
          total += w;
        }
        for (Tap& t : row) t.weight /= total;
        break;
      }
      case RescaleMethod::kTent: {
        const int base = static_cast<int>(std::lround(center));
        row.push_back({reflect_index(base - 1, src_n), 0.25f});
        row.push_back({reflect_index(base, src_n), 0.50f});
        row.push_back({reflect_index(base + 1, src_n), 0.25f});
        break;
      }
    }
  }
  return taps;
}

inline Image resample(const Image& src, int out_h, int out_w, RescaleMethod method) {
  const TapList tx = make_taps(src.width, out_w, method);
  const TapList ty = make_taps(src.height, out_h, method);
  // Horizontal pass, unclamped intermediate.
  Image mid(src.height, out_w, src.channels);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        float acc = 0.0f;
        for (const Tap& t : tx[x]) acc += t.weight * src.at(y, t.src, c);
        mid.at(y, x, c) = acc;
      }
    }
  }
  Image out(out_h, out_w, src.channels);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        float acc = 0.0f;
        for (const Tap& t : ty[y]) acc += t.weight * mid.at(t.src, x, c);
        out.at(y, x, c) = clamp01(acc);
      }
    }
  }
  return out;
}

// Center crop at the given fraction of each side, resampled back to the
// original size. A full-size crop is returned as-is for every method.
inline Image rescale(const Image& im, float crop_fraction, RescaleMethod method) {
  const int ch = std::clamp(static_cast<int>(std::lround(crop_fraction * im.height)), 1, im.height);
  const int cw = std::clamp(static_cast<int>(std::lround(crop_fraction * im.width)), 1, im.width);
  if (ch == im.height && cw == im.width) return im;
  const int y0 = (im.height - ch) / 2;
  const int x0 = (im.width - cw) / 2;
  Image crop(ch, cw, im.channels);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      for (int c = 0; c < im.channels; ++c) crop.at(y, x, c) = im.at(y0 + y, x0 + x, c);
    }
  }
  return resample(crop, im.height, im.width, method);
}

inline float mean_luminance(const Image& im) {
  double acc = 0.0;
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) acc += luminance(im, y, x);
  }
  return static_cast<float>(acc / static_cast<double>(im.pixel_count()));
}

}  // namespace detail

// ============================================================================
// Dispatch
// ============================================================================

// Applies one transform. The random source is consumed only by transforms
// with stochastic placement (Cutout); everything else is deterministic in
// the spec's magnitudes. Output always has the input's shape with all pixels
// in [0, 1].
inline Image apply_transform(const Image& im, const TransformSpec& spec, std::mt19937& rng) {
  const auto params = transform_params(spec.kind);
  if (spec.params.size() != params.size()) {
    throw std::invalid_argument(std::string("apply_transform: wrong parameter count for ") + kind_name(spec.kind));
  }
  const auto mag = [&](int p) { return spec.params[p].magnitude; };
  using detail::blend;
  switch (spec.kind) {
    case TransformKind::kAutocontrast:
      return blend(im, detail::autocontrast_full(im), mag(0));
    case TransformKind::kBlur:
      return blend(im, detail::box_blur3(im), mag(0));
    case TransformKind::kBrightness: {
      Image black(im.height, im.width, im.channels, 0.0f);
      return blend(black, im, mag(0));
    }
    case TransformKind::kColor:
      return blend(detail::grayscale(im), im, mag(0));
    case TransformKind::kContrast: {
      Image gray(im.height, im.width, im.channels, detail::mean_luminance(im));
      return blend(gray, im, mag(0));
    }
    case TransformKind::kCutout:
      return detail::cutout(im, mag(0), rng);
    case TransformKind::kEqualize:
      return blend(im, detail::equalize_full(im), mag(0));
    case TransformKind::kInvert:
      return blend(im, detail::invert_full(im), mag(0));
    case TransformKind::kIdentity:
      return im;
    case TransformKind::kPosterize:
      return detail::posterize(im, mag(0));
    case TransformKind::kRescale:
      return detail::rescale(im, mag(0), static_cast<RescaleMethod>(std::lround(mag(1))));
    case TransformKind::kRotate:
      return detail::rotate(im, mag(0));
    case TransformKind::kSharpness:
      return blend(detail::binomial_blur3(im), im, mag(0));
    case TransformKind::kShearX:
      return detail::shear_x(im, mag(0));
    case TransformKind::kShearY:
      return detail::shear_y(im, mag(0));
    case TransformKind::kSmooth:
      return blend(detail::smooth_filter(im), im, mag(0));
    case TransformKind::kSolarize:
      return detail::solarize(im, mag(0));
    case TransformKind::kTranslateX:
      return detail::translate_x(im, mag(0));
    case TransformKind::kTranslateY:
      return detail::translate_y(im, mag(0));
  }
  throw std::invalid_argument("apply_transform: unknown transform kind");
}

inline Image apply_chain(Image im, std::span<const TransformSpec> chain, std::mt19937& rng) {
  for (const TransformSpec& spec : chain) im = apply_transform(im, spec, rng);
  return im;
}

// ============================================================================
// Weak augmentation and quarter turns
// ============================================================================

inline Image mirror_horizontal(const Image& im) {
  Image out = im;
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      for (int c = 0; c < im.channels; ++c) out.at(y, x, c) = im.at(y, im.width - 1 - x, c);
    }
  }
  return out;
}

// Integer pixel shift with mirrored borders; (dy, dx) moves content down/right.
inline Image shift_pixels(const Image& im, int dy, int dx) {
  if (dy == 0 && dx == 0) return im;
  Image out = im;
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      const int sy = reflect_index(y - dy, im.height);
      const int sx = reflect_index(x - dx, im.width);
      for (int c = 0; c < im.channels; ++c) out.at(y, x, c) = im.at(sy, sx, c);
    }
  }
  return out;
}

// Optional horizontal mirror (probability 1/2) followed by a uniform integer
// shift of up to floor(max_shift_fraction * width) pixels per axis.
inline Image weak_augment(const Image& im, bool flip_enabled, float max_shift_fraction, std::mt19937& rng) {
  if (max_shift_fraction < 0.0f || max_shift_fraction > 0.5f) {
    throw std::invalid_argument("weak_augment: max_shift_fraction must be in [0, 0.5]");
  }
  Image out = im;
  if (flip_enabled && uniform_below(rng, 2) == 1) out = mirror_horizontal(out);
  const int span = static_cast<int>(max_shift_fraction * static_cast<float>(im.width));
  if (span > 0) {
    const int dx = uniform_int(rng, -span, span);
    const int dy = uniform_int(rng, -span, span);
    out = shift_pixels(out, dy, dx);
  }
  return out;
}

// Lossless counterclockwise quarter turns; square images only.
// One turn maps the pixel at (r, c) to (N-1-c, r), i.e. out(r, c) = in(c, N-1-r).
inline Image rotate90(const Image& im, int quarter_turns) {
  if (im.height != im.width) throw std::invalid_argument("rotate90: image must be square");
  int turns = ((quarter_turns % 4) + 4) % 4;
  Image out = im;
  for (int t = 0; t < turns; ++t) {
    Image next = out;
    const int n = out.height;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        for (int ch = 0; ch < out.channels; ++ch) next.at(r, c, ch) = out.at(c, n - 1 - r, ch);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace remix
