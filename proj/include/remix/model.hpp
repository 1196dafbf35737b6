#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "remix/image.hpp"
#include "remix/prob.hpp"
#include "remix/rng.hpp"

namespace remix {

struct ModelConfig {
  int input_height = 32;
  int input_width = 32;
  int input_channels = 3;
  int num_classes = 10;
  std::vector<int> conv_channels = {32, 64};  // 3x3 stride-2 stages
  int dense_units = 128;
  uint64_t init_seed = 1;
};

struct TensorInfo {
  std::string name;
  std::vector<int> dims;
  size_t offset = 0;
  size_t size = 0;
};

// Small convolutional classifier with an auxiliary orientation head.
// All parameters live in one flat double vector; forward caches every
// activation so the hand-written backward pass can run without recompute.
class Cnn {
 public:
  struct StageDims {
    int h_in, w_in, c_in;
    int h_out, w_out, c_out;
  };

  struct Cache {
    int batch = 0;
    std::vector<double> input;
    std::vector<std::vector<double>> conv_z;  // pre-activation per stage
    std::vector<std::vector<double>> conv_a;  // relu output per stage
    std::vector<double> dense_z;
    std::vector<double> dense_a;
    std::vector<double> class_probs;  // batch x num_classes
    std::vector<double> rot_probs;    // batch x 4
  };

  struct Output {
    std::vector<ProbVector> class_probs;
    std::vector<ProbVector> rotation_probs;
  };

  explicit Cnn(const ModelConfig& config) : cfg_(config) {
    if (cfg_.input_height < 4 || cfg_.input_width < 4 || cfg_.input_channels < 1) {
      throw std::invalid_argument("Cnn: input dimensions too small");
    }
    if (cfg_.num_classes < 2) throw std::invalid_argument("Cnn: need at least two classes");
    if (cfg_.conv_channels.empty()) throw std::invalid_argument("Cnn: need at least one conv stage");
    if (cfg_.dense_units < 1) throw std::invalid_argument("Cnn: dense width must be positive");

    int h = cfg_.input_height, w = cfg_.input_width, c = cfg_.input_channels;
    for (int oc : cfg_.conv_channels) {
      if (oc < 1) throw std::invalid_argument("Cnn: conv channels must be positive");
      StageDims d{h, w, c, (h - 1) / 2 + 1, (w - 1) / 2 + 1, oc};
      stages_.push_back(d);
      h = d.h_out;
      w = d.w_out;
      c = d.c_out;
    }
    flat_size_ = static_cast<size_t>(h) * w * c;

    size_t offset = 0;
    const auto add_tensor = [&](const std::string& name, std::vector<int> dims) {
      size_t size = 1;
      for (int d : dims) size *= static_cast<size_t>(d);
      layout_.push_back({name, std::move(dims), offset, size});
      offset += size;
    };
    for (size_t s = 0; s < stages_.size(); ++s) {
      const StageDims& d = stages_[s];
      add_tensor("conv" + std::to_string(s + 1) + ".weight", {d.c_out, d.c_in, 3, 3});
      add_tensor("conv" + std::to_string(s + 1) + ".bias", {d.c_out});
    }
    add_tensor("trunk.weight", {cfg_.dense_units, static_cast<int>(flat_size_)});
    add_tensor("trunk.bias", {cfg_.dense_units});
    add_tensor("head_class.weight", {cfg_.num_classes, cfg_.dense_units});
    add_tensor("head_class.bias", {cfg_.num_classes});
    add_tensor("head_rot.weight", {4, cfg_.dense_units});
    add_tensor("head_rot.bias", {4});
    params_.assign(offset, 0.0);
    init_params(cfg_.init_seed);
  }

  const ModelConfig& config() const { return cfg_; }
  const std::vector<TensorInfo>& tensors() const { return layout_; }
  size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Uniform init scaled by fan-in; biases start at zero.
  void init_params(uint64_t seed) {
    for (size_t ti = 0; ti < layout_.size(); ++ti) {
      const TensorInfo& t = layout_[ti];
      if (t.name.ends_with(".bias")) {
        std::fill_n(params_.begin() + t.offset, t.size, 0.0);
        continue;
      }
      size_t fan_in = 1;
      for (size_t d = 1; d < t.dims.size(); ++d) fan_in *= static_cast<size_t>(t.dims[d]);
      const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
      std::mt19937 rng = make_rng(seed, ti);
      for (size_t i = 0; i < t.size; ++i) {
        params_[t.offset + i] = uniform_real(rng, -limit, limit);
      }
    }
  }

  Output forward(std::span<const Image> batch, Cache* cache = nullptr) const {
    Cache local;
    Cache& c = cache != nullptr ? *cache : local;
    run_forward(batch, c);
    Output out;
    out.class_probs.resize(c.batch);
    out.rotation_probs.resize(c.batch);
    for (int n = 0; n < c.batch; ++n) {
      out.class_probs[n].resize(cfg_.num_classes);
      for (int k = 0; k < cfg_.num_classes; ++k) {
        out.class_probs[n][k] = static_cast<float>(c.class_probs[n * cfg_.num_classes + k]);
      }
      out.rotation_probs[n].assign(c.rot_probs.begin() + n * 4, c.rot_probs.begin() + (n + 1) * 4);
    }
    return out;
  }

  // Accumulates parameter gradients for the cached forward pass. dclass and
  // drot are loss gradients at the head logits (batch x classes flat); either
  // may be empty to mean zero.
  void backward(const Cache& cache, std::span<const double> dclass, std::span<const double> drot,
                std::vector<double>& grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("backward: grad buffer size mismatch");
    const int n = cache.batch;
    const int classes = cfg_.num_classes;
    const int dense = cfg_.dense_units;
    if (!dclass.empty() && dclass.size() != static_cast<size_t>(n) * classes) {
      throw std::invalid_argument("backward: class logit gradient size mismatch");
    }
    if (!drot.empty() && drot.size() != static_cast<size_t>(n) * 4) {
      throw std::invalid_argument("backward: rotation logit gradient size mismatch");
    }

    const size_t trunk_w = tensor_offset("trunk.weight");
    const size_t trunk_b = tensor_offset("trunk.bias");
    const size_t cls_w = tensor_offset("head_class.weight");
    const size_t cls_b = tensor_offset("head_class.bias");
    const size_t rot_w = tensor_offset("head_rot.weight");
    const size_t rot_b = tensor_offset("head_rot.bias");

    // heads -> dense activation
    std::vector<double> d_dense_a(static_cast<size_t>(n) * dense, 0.0);
    if (!dclass.empty()) {
      linear_backward(dclass, cache.dense_a, n, classes, dense, cls_w, cls_b, grad, d_dense_a);
    }
    if (!drot.empty()) {
      linear_backward(drot, cache.dense_a, n, 4, dense, rot_w, rot_b, grad, d_dense_a);
    }

    // dense relu
    std::vector<double> d_dense_z(static_cast<size_t>(n) * dense);
    for (size_t i = 0; i < d_dense_z.size(); ++i) {
      d_dense_z[i] = cache.dense_z[i] > 0.0 ? d_dense_a[i] : 0.0;
    }

    // trunk -> flattened conv output
    const std::vector<double>& flat_in = cache.conv_a.back();
    std::vector<double> d_flat(static_cast<size_t>(n) * flat_size_, 0.0);
    linear_backward(d_dense_z, flat_in, n, dense, static_cast<int>(flat_size_), trunk_w, trunk_b, grad,
                    d_flat);

    // conv stages, last to first
    std::vector<double> d_out = std::move(d_flat);
    for (int s = static_cast<int>(stages_.size()) - 1; s >= 0; --s) {
      const StageDims& d = stages_[s];
      const std::vector<double>& a_in = s == 0 ? cache.input : cache.conv_a[s - 1];
      const std::vector<double>& z = cache.conv_z[s];
      const size_t w_off = tensor_offset("conv" + std::to_string(s + 1) + ".weight");
      const size_t b_off = tensor_offset("conv" + std::to_string(s + 1) + ".bias");

      for (size_t i = 0; i < d_out.size(); ++i) {
        if (z[i] <= 0.0) d_out[i] = 0.0;  // relu gate
      }

      std::vector<double> d_in(static_cast<size_t>(n) * d.h_in * d.w_in * d.c_in, 0.0);
      for (int ex = 0; ex < n; ++ex) {
        const size_t in_base = static_cast<size_t>(ex) * d.h_in * d.w_in * d.c_in;
        const size_t out_base = static_cast<size_t>(ex) * d.h_out * d.w_out * d.c_out;
        for (int oy = 0; oy < d.h_out; ++oy) {
          for (int ox = 0; ox < d.w_out; ++ox) {
            const size_t dz_base = out_base + (static_cast<size_t>(oy) * d.w_out + ox) * d.c_out;
            for (int ky = 0; ky < 3; ++ky) {
              const int iy = 2 * oy - 1 + ky;
              if (iy < 0 || iy >= d.h_in) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = 2 * ox - 1 + kx;
                if (ix < 0 || ix >= d.w_in) continue;
                const size_t in_px = in_base + (static_cast<size_t>(iy) * d.w_in + ix) * d.c_in;
                for (int oc = 0; oc < d.c_out; ++oc) {
                  const double dz = d_out[dz_base + oc];
                  if (dz == 0.0) continue;
                  const size_t w_base = w_off + ((static_cast<size_t>(oc) * d.c_in) * 3 + ky) * 3 + kx;
                  for (int ic = 0; ic < d.c_in; ++ic) {
                    grad[w_base + static_cast<size_t>(ic) * 9] += dz * a_in[in_px + ic];
                    d_in[in_px + ic] += dz * params_[w_base + static_cast<size_t>(ic) * 9];
                  }
                }
              }
            }
            for (int oc = 0; oc < d.c_out; ++oc) grad[b_off + oc] += d_out[dz_base + oc];
          }
        }
      }
      d_out = std::move(d_in);
    }
  }

  size_t tensor_offset(const std::string& name) const {
    for (const TensorInfo& t : layout_) {
      if (t.name == name) return t.offset;
    }
    throw std::invalid_argument("Cnn: unknown tensor " + name);
  }

 private:
  void run_forward(std::span<const Image> batch, Cache& c) const {
    const int n = static_cast<int>(batch.size());
    if (n == 0) throw std::invalid_argument("forward: empty batch");
    for (const Image& im : batch) {
      if (im.height != cfg_.input_height || im.width != cfg_.input_width ||
          im.channels != cfg_.input_channels) {
        throw std::invalid_argument("forward: image shape does not match the model input");
      }
    }
    c.batch = n;
    const size_t in_size = static_cast<size_t>(cfg_.input_height) * cfg_.input_width * cfg_.input_channels;
    c.input.resize(static_cast<size_t>(n) * in_size);
    for (int ex = 0; ex < n; ++ex) {
      for (size_t i = 0; i < in_size; ++i) {
        c.input[ex * in_size + i] = static_cast<double>(batch[ex].data[i]);
      }
    }

    c.conv_z.assign(stages_.size(), {});
    c.conv_a.assign(stages_.size(), {});
    const std::vector<double>* a_in = &c.input;
    for (size_t s = 0; s < stages_.size(); ++s) {
      const StageDims& d = stages_[s];
      const size_t w_off = tensor_offset("conv" + std::to_string(s + 1) + ".weight");
      const size_t b_off = tensor_offset("conv" + std::to_string(s + 1) + ".bias");
      std::vector<double>& z = c.conv_z[s];
      z.assign(static_cast<size_t>(n) * d.h_out * d.w_out * d.c_out, 0.0);
      for (int ex = 0; ex < n; ++ex) {
        const size_t in_base = static_cast<size_t>(ex) * d.h_in * d.w_in * d.c_in;
        const size_t out_base = static_cast<size_t>(ex) * d.h_out * d.w_out * d.c_out;
        for (int oy = 0; oy < d.h_out; ++oy) {
          for (int ox = 0; ox < d.w_out; ++ox) {
            const size_t z_base = out_base + (static_cast<size_t>(oy) * d.w_out + ox) * d.c_out;
            for (int oc = 0; oc < d.c_out; ++oc) z[z_base + oc] = params_[b_off + oc];
            for (int ky = 0; ky < 3; ++ky) {
              const int iy = 2 * oy - 1 + ky;
              if (iy < 0 || iy >= d.h_in) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = 2 * ox - 1 + kx;
                if (ix < 0 || ix >= d.w_in) continue;
                const size_t in_px = in_base + (static_cast<size_t>(iy) * d.w_in + ix) * d.c_in;
                for (int oc = 0; oc < d.c_out; ++oc) {
                  const size_t w_base = w_off + ((static_cast<size_t>(oc) * d.c_in) * 3 + ky) * 3 + kx;
                  double acc = 0.0;
                  for (int ic = 0; ic < d.c_in; ++ic) {
                    acc += params_[w_base + static_cast<size_t>(ic) * 9] * (*a_in)[in_px + ic];
                  }
                  z[z_base + oc] += acc;
                }
              }
            }
          }
        }
      }
      std::vector<double>& a = c.conv_a[s];
      a.resize(z.size());
      for (size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
      a_in = &a;
    }

    // dense trunk
    const int dense = cfg_.dense_units;
    const size_t trunk_w = tensor_offset("trunk.weight");
    const size_t trunk_b = tensor_offset("trunk.bias");
    const std::vector<double>& flat = c.conv_a.back();
    c.dense_z.assign(static_cast<size_t>(n) * dense, 0.0);
    for (int ex = 0; ex < n; ++ex) {
      for (int o = 0; o < dense; ++o) {
        double acc = params_[trunk_b + o];
        const size_t w_row = trunk_w + static_cast<size_t>(o) * flat_size_;
        const size_t in_row = static_cast<size_t>(ex) * flat_size_;
        for (size_t i = 0; i < flat_size_; ++i) acc += params_[w_row + i] * flat[in_row + i];
        c.dense_z[static_cast<size_t>(ex) * dense + o] = acc;
      }
    }
    c.dense_a.resize(c.dense_z.size());
    for (size_t i = 0; i < c.dense_z.size(); ++i) {
      c.dense_a[i] = c.dense_z[i] > 0.0 ? c.dense_z[i] : 0.0;
    }

    head_softmax(c.dense_a, n, cfg_.num_classes, tensor_offset("head_class.weight"),
                 tensor_offset("head_class.bias"), c.class_probs);
    head_softmax(c.dense_a, n, 4, tensor_offset("head_rot.weight"), tensor_offset("head_rot.bias"),
                 c.rot_probs);
  }

  void head_softmax(const std::vector<double>& dense_a, int n, int out_n, size_t w_off, size_t b_off,
                    std::vector<double>& probs) const {
    const int dense = cfg_.dense_units;
    probs.assign(static_cast<size_t>(n) * out_n, 0.0);
    std::vector<double> logits(out_n);
    for (int ex = 0; ex < n; ++ex) {
      double peak = -1e300;
      for (int o = 0; o < out_n; ++o) {
        double acc = params_[b_off + o];
        const size_t w_row = w_off + static_cast<size_t>(o) * dense;
        const size_t in_row = static_cast<size_t>(ex) * dense;
        for (int i = 0; i < dense; ++i) acc += params_[w_row + i] * dense_a[in_row + i];
        logits[o] = acc;
        peak = std::max(peak, acc);
      }
      double sum = 0.0;
      for (int o = 0; o < out_n; ++o) {
        logits[o] = std::exp(logits[o] - peak);
        sum += logits[o];
      }
      for (int o = 0; o < out_n; ++o) probs[static_cast<size_t>(ex) * out_n + o] = logits[o] / sum;
    }
  }

  // Shared linear-layer backward: accumulates weight/bias grads and the
  // gradient w.r.t. the layer input.
  void linear_backward(std::span<const double> d_out, const std::vector<double>& a_in, int n, int out_n,
                       int in_n, size_t w_off, size_t b_off, std::vector<double>& grad,
                       std::vector<double>& d_in) const {
    for (int ex = 0; ex < n; ++ex) {
      const size_t out_row = static_cast<size_t>(ex) * out_n;
      const size_t in_row = static_cast<size_t>(ex) * in_n;
      for (int o = 0; o < out_n; ++o) {
        const double g = d_out[out_row + o];
        if (g == 0.0) continue;
        grad[b_off + o] += g;
        const size_t w_row = w_off + static_cast<size_t>(o) * in_n;
        for (int i = 0; i < in_n; ++i) {
          grad[w_row + i] += g * a_in[in_row + i];
          d_in[in_row + i] += g * params_[w_row + i];
        }
      }
    }
  }

  ModelConfig cfg_;
  std::vector<StageDims> stages_;
  size_t flat_size_ = 0;
  std::vector<TensorInfo> layout_;
  std::vector<double> params_;
};

// ============================================================================
// Loss gradients at the head logits
// ============================================================================

// Cross-entropy through softmax: (p - t) * scale per example.
inline std::vector<double> softmax_ce_logit_grad(std::span<const double> probs,
                                                 std::span<const ProbVector> targets, double scale) {
  const size_t n = targets.size();
  if (n == 0) return {};
  const size_t classes = targets[0].size();
  if (probs.size() != n * classes) throw std::invalid_argument("logit_grad: size mismatch");
  std::vector<double> d(n * classes);
  for (size_t ex = 0; ex < n; ++ex) {
    for (size_t c = 0; c < classes; ++c) {
      d[ex * classes + c] = (probs[ex * classes + c] - static_cast<double>(targets[ex][c])) * scale;
    }
  }
  return d;
}

inline std::vector<double> softmax_ce_logit_grad(std::span<const double> probs,
                                                 std::span<const int> labels, int classes, double scale) {
  const size_t n = labels.size();
  if (probs.size() != n * static_cast<size_t>(classes)) {
    throw std::invalid_argument("logit_grad: size mismatch");
  }
  std::vector<double> d(probs.begin(), probs.end());
  for (size_t ex = 0; ex < n; ++ex) {
    d[ex * classes + labels[ex]] -= 1.0;
    for (int c = 0; c < classes; ++c) d[ex * classes + c] *= scale;
  }
  return d;
}

// Per-class mean squared error through the softmax Jacobian.
inline std::vector<double> softmax_l2_logit_grad(std::span<const double> probs,
                                                 std::span<const ProbVector> targets, double scale) {
  const size_t n = targets.size();
  if (n == 0) return {};
  const size_t classes = targets[0].size();
  if (probs.size() != n * classes) throw std::invalid_argument("logit_grad: size mismatch");
  std::vector<double> d(n * classes);
  for (size_t ex = 0; ex < n; ++ex) {
    double inner = 0.0;
    std::vector<double> dp(classes);
    for (size_t c = 0; c < classes; ++c) {
      const double p = probs[ex * classes + c];
      dp[c] = 2.0 * (p - static_cast<double>(targets[ex][c])) / static_cast<double>(classes);
      inner += dp[c] * p;
    }
    for (size_t c = 0; c < classes; ++c) {
      const double p = probs[ex * classes + c];
      d[ex * classes + c] = p * (dp[c] - inner) * scale;
    }
  }
  return d;
}

}  // namespace remix
