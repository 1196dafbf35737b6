#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "remix/image.hpp"
#include "remix/rng.hpp"

namespace remix {

struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_classes = 0;

  size_t size() const { return images.size(); }
};

namespace detail {

inline std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline uint32_t read_be32(const std::vector<uint8_t>& bytes, size_t offset) {
  if (offset + 4 > bytes.size()) throw LoadError("truncated header");
  return (static_cast<uint32_t>(bytes[offset]) << 24) | (static_cast<uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<uint32_t>(bytes[offset + 2]) << 8) | static_cast<uint32_t>(bytes[offset + 3]);
}

}  // namespace detail

// ============================================================================
// IDX (big-endian magic + dims, then raw bytes)
// ============================================================================

inline std::vector<Image> load_idx_images(const std::string& path) {
  const std::vector<uint8_t> bytes = detail::read_file(path);
  if (detail::read_be32(bytes, 0) != 0x00000803u) {
    throw LoadError(path + ": bad magic for an image file");
  }
  const uint32_t count = detail::read_be32(bytes, 4);
  const uint32_t rows = detail::read_be32(bytes, 8);
  const uint32_t cols = detail::read_be32(bytes, 12);
  const size_t expect = 16 + static_cast<size_t>(count) * rows * cols;
  if (bytes.size() < expect) throw LoadError(path + ": truncated image payload");

  std::vector<Image> images;
  images.reserve(count);
  size_t at = 16;
  for (uint32_t i = 0; i < count; ++i) {
    Image im(static_cast<int>(rows), static_cast<int>(cols), 1);
    for (float& v : im.data) v = static_cast<float>(bytes[at++]) / 255.0f;
    images.push_back(std::move(im));
  }
  return images;
}

inline std::vector<int> load_idx_labels(const std::string& path) {
  const std::vector<uint8_t> bytes = detail::read_file(path);
  if (detail::read_be32(bytes, 0) != 0x00000801u) {
    throw LoadError(path + ": bad magic for a label file");
  }
  const uint32_t count = detail::read_be32(bytes, 4);
  if (bytes.size() < 8 + static_cast<size_t>(count)) throw LoadError(path + ": truncated label payload");
  std::vector<int> labels(count);
  for (uint32_t i = 0; i < count; ++i) labels[i] = static_cast<int>(bytes[8 + i]);
  return labels;
}

inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  Dataset out;
  out.images = load_idx_images(images_path);
  out.labels = load_idx_labels(labels_path);
  if (out.images.size() != out.labels.size()) {
    throw LoadError("image and label counts differ (" + std::to_string(out.images.size()) + " vs " +
                    std::to_string(out.labels.size()) + ")");
  }
  const int peak = out.labels.empty() ? -1 : *std::max_element(out.labels.begin(), out.labels.end());
  out.num_classes = peak + 1;
  return out;
}

// ============================================================================
// CIFAR binary (3073-byte records: label byte then R, G, B planes)
// ============================================================================

inline Dataset load_cifar_binary(const std::string& path) {
  constexpr size_t kRecord = 1 + 3 * 1024;
  const std::vector<uint8_t> bytes = detail::read_file(path);
  if (bytes.size() % kRecord != 0) {
    throw LoadError(path + ": size is not a multiple of the 3073-byte record");
  }
  Dataset out;
  out.num_classes = 10;
  const size_t count = bytes.size() / kRecord;
  out.images.reserve(count);
  out.labels.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const size_t base = i * kRecord;
    out.labels.push_back(static_cast<int>(bytes[base]));
    Image im(32, 32, 3);
    for (int c = 0; c < 3; ++c) {
      const size_t plane = base + 1 + static_cast<size_t>(c) * 1024;
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          im.at(y, x, c) = static_cast<float>(bytes[plane + y * 32 + x]) / 255.0f;
        }
      }
    }
    out.images.push_back(std::move(im));
  }
  return out;
}

// ============================================================================
// Synthetic blob dataset
// ============================================================================

struct SynthConfig {
  int count = 1000;
  int num_classes = 10;
  int height = 20;
  int width = 20;
  int channels = 1;
  uint64_t seed = 0;
  float noise = 0.08f;     // additive gaussian sigma
  int max_shift = 2;       // per-sample blob jitter in pixels
};

namespace detail {

struct Blob {
  double cy, cx, sigma;
  double amp[3];
};

// Class k renders k + 1 blobs. The count is the part of the label that
// survives photometric and geometric perturbation; the canonical layout
// (keyed by class index alone, so datasets drawn with different seeds share
// class identity) additionally separates classes for simple baselines.
inline std::vector<Blob> class_pattern(int cls, int height, int width, int channels) {
  std::mt19937 rng = make_rng(0x5e7b10b5ull, static_cast<uint64_t>(cls));
  const int count = cls + 1;
  const double margin = 2.5;
  const double min_sep = 2.8;
  std::vector<Blob> blobs;
  blobs.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    double cy = 0.0, cx = 0.0;
    for (int attempt = 0; attempt < 64; ++attempt) {
      cy = uniform_real(rng, margin, height - margin);
      cx = uniform_real(rng, margin, width - margin);
      bool clear = true;
      for (const Blob& prev : blobs) {
        const double dy = cy - prev.cy, dx = cx - prev.cx;
        if (dy * dy + dx * dx < min_sep * min_sep) {
          clear = false;
          break;
        }
      }
      if (clear) break;  // crowded classes keep the last attempt
    }
    Blob b;
    b.cy = cy;
    b.cx = cx;
    b.sigma = uniform_real(rng, 1.05, 1.45);
    for (int c = 0; c < 3; ++c) b.amp[c] = uniform_real(rng, 0.55, 0.9);
    if (channels == 1) b.amp[1] = b.amp[2] = b.amp[0];
    blobs.push_back(b);
  }
  return blobs;
}

}  // namespace detail

inline Dataset synth_dataset(const SynthConfig& cfg) {
  if (cfg.count < 0 || cfg.num_classes < 2) throw std::invalid_argument("synth_dataset: bad config");
  if (cfg.height < 4 || cfg.width < 4 || (cfg.channels != 1 && cfg.channels != 3)) {
    throw std::invalid_argument("synth_dataset: bad image shape");
  }
  std::vector<std::vector<detail::Blob>> bank(cfg.num_classes);
  for (int cls = 0; cls < cfg.num_classes; ++cls) {
    bank[cls] = detail::class_pattern(cls, cfg.height, cfg.width, cfg.channels);
  }

  Dataset out;
  out.num_classes = cfg.num_classes;
  out.images.reserve(cfg.count);
  out.labels.reserve(cfg.count);
  std::vector<std::pair<double, double>> offsets;
  for (int i = 0; i < cfg.count; ++i) {
    const int cls = i % cfg.num_classes;
    std::mt19937 rng = make_rng(cfg.seed, 0x5a3d, static_cast<uint64_t>(i));
    const double dy = uniform_int(rng, -cfg.max_shift, cfg.max_shift);
    const double dx = uniform_int(rng, -cfg.max_shift, cfg.max_shift);
    const double gain = uniform_real(rng, 0.85, 1.15);
    const double background = uniform_real(rng, 0.05, 0.15);
    offsets.assign(bank[cls].size(), {0.0, 0.0});
    for (auto& [oy, ox] : offsets) {
      oy = dy + uniform_real(rng, -1.5, 1.5);
      ox = dx + uniform_real(rng, -1.5, 1.5);
    }

    Image im(cfg.height, cfg.width, cfg.channels);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        for (int c = 0; c < cfg.channels; ++c) {
          double v = background;
          for (size_t bi = 0; bi < bank[cls].size(); ++bi) {
            const detail::Blob& b = bank[cls][bi];
            const double ry = y - (b.cy + offsets[bi].first);
            const double rx = x - (b.cx + offsets[bi].second);
            v += gain * b.amp[c] * std::exp(-(ry * ry + rx * rx) / (2.0 * b.sigma * b.sigma));
          }
          im.at(y, x, c) = static_cast<float>(v);
        }
      }
    }
    for (float& v : im.data) {
      v += static_cast<float>(cfg.noise * normal_unit(rng));
    }
    clamp_pixels(im);
    out.images.push_back(std::move(im));
    out.labels.push_back(cls);
  }
  return out;
}

// ============================================================================
// Stratified label split
// ============================================================================

struct SslSplit {
  Dataset labeled;
  Dataset unlabeled;  // labels retained for diagnostics; training never reads them
};

inline SslSplit make_ssl_split(const Dataset& data, int labeled_count, uint64_t seed) {
  const int classes = data.num_classes;
  if (classes < 2) throw std::invalid_argument("make_ssl_split: dataset has no class structure");
  if (labeled_count < classes) {
    throw std::invalid_argument("make_ssl_split: need at least one label per class");
  }
  if (static_cast<size_t>(labeled_count) > data.size()) {
    throw std::invalid_argument("make_ssl_split: more labels requested than examples");
  }

  std::vector<std::vector<size_t>> per_class(classes);
  for (size_t i = 0; i < data.size(); ++i) {
    const int cls = data.labels[i];
    if (cls < 0 || cls >= classes) throw std::invalid_argument("make_ssl_split: label out of range");
    per_class[cls].push_back(i);
  }

  // base quota per class, remainder spread over a seed-shuffled class order
  std::vector<int> quota(classes, labeled_count / classes);
  std::vector<int> order(classes);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 class_rng = make_rng(seed, 0x517a7, 0);
  fisher_yates(order, class_rng);
  for (int r = 0; r < labeled_count % classes; ++r) quota[order[r]] += 1;

  std::vector<bool> take(data.size(), false);
  for (int cls = 0; cls < classes; ++cls) {
    if (static_cast<size_t>(quota[cls]) > per_class[cls].size()) {
      throw std::invalid_argument("make_ssl_split: class " + std::to_string(cls) +
                                  " has too few examples");
    }
    std::vector<size_t> pool = per_class[cls];
    std::mt19937 rng = make_rng(seed, 0x5e1ec7, static_cast<uint64_t>(cls));
    fisher_yates(pool, rng);
    for (int k = 0; k < quota[cls]; ++k) take[pool[k]] = true;
  }

  SslSplit split;
  split.labeled.num_classes = classes;
  split.unlabeled.num_classes = classes;
  for (size_t i = 0; i < data.size(); ++i) {
    Dataset& dst = take[i] ? split.labeled : split.unlabeled;
    dst.images.push_back(data.images[i]);
    dst.labels.push_back(data.labels[i]);
  }
  return split;
}

// ============================================================================
// Shuffled cycling batches
// ============================================================================

// Walks a shuffled permutation of [0, pool); whenever the cursor wraps, the
// permutation is reshuffled. Batches may span the wrap, so every window of
// one epoch touches each index exactly once.
class BatchIterator {
 public:
  BatchIterator(size_t pool, int batch_size, uint64_t seed, uint64_t stream)
      : batch_size_(batch_size), rng_(make_rng(seed, stream, 0)), perm_(pool) {
    if (pool == 0) throw std::invalid_argument("BatchIterator: empty pool");
    if (batch_size < 1) throw std::invalid_argument("BatchIterator: batch size must be positive");
    std::iota(perm_.begin(), perm_.end(), size_t{0});
    fisher_yates(perm_, rng_);
  }

  std::vector<size_t> next() {
    std::vector<size_t> out;
    out.reserve(batch_size_);
    for (int i = 0; i < batch_size_; ++i) {
      if (cursor_ == perm_.size()) {
        fisher_yates(perm_, rng_);
        cursor_ = 0;
        ++epoch_;
      }
      out.push_back(perm_[cursor_++]);
    }
    return out;
  }

  size_t pool() const { return perm_.size(); }
  int64_t epoch() const { return epoch_; }

 private:
  int batch_size_;
  std::mt19937 rng_;
  std::vector<size_t> perm_;
  size_t cursor_ = 0;
  int64_t epoch_ = 0;
};

}  // namespace remix
