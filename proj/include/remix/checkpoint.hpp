#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "remix/config.hpp"
#include "remix/ctaugment.hpp"
#include "remix/data.hpp"
#include "remix/guess.hpp"
#include "remix/model.hpp"
#include "remix/optimizer.hpp"

namespace remix {

// Everything a run needs to resume or evaluate: weights and moments, the
// augmentation policy, the guessing state, and the exact configuration text.
struct TrainState {
  Cnn net;
  OptimizerState opt;
  AugmentPolicy policy;
  GuessState guesses;
  uint64_t step = 0;
  std::string config_text;
};

namespace detail {

constexpr char kCheckpointMagic[8] = {'R', 'M', 'X', 'C', 'K', 'P', 'T', '1'};

class ByteWriter {
 public:
  void raw(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void text(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  const std::vector<uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {}

  void raw(void* out, size_t n) {
    if (at_ + n > bytes_.size()) throw LoadError("checkpoint: truncated");
    std::copy(bytes_.begin() + at_, bytes_.begin() + at_ + n, static_cast<uint8_t*>(out));
    at_ += n;
  }
  uint32_t u32() {
    if (at_ + 4 > bytes_.size()) throw LoadError("checkpoint: truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[at_ + i]) << (8 * i);
    at_ += 4;
    return v;
  }
  uint64_t u64() {
    if (at_ + 8 > bytes_.size()) throw LoadError("checkpoint: truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes_[at_ + i]) << (8 * i);
    at_ += 8;
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string text() {
    const uint32_t n = u32();
    if (at_ + n > bytes_.size()) throw LoadError("checkpoint: truncated");
    std::string s(bytes_.begin() + at_, bytes_.begin() + at_ + n);
    at_ += n;
    return s;
  }
  bool done() const { return at_ == bytes_.size(); }

 private:
  std::vector<uint8_t> bytes_;
  size_t at_ = 0;
};

inline void write_f32_array(ByteWriter& w, std::span<const double> values) {
  for (double v : values) w.f32(static_cast<float>(v));
}

inline void read_f32_array(ByteReader& r, std::span<double> out) {
  for (double& v : out) v = static_cast<double>(r.f32());
}

}  // namespace detail

inline std::vector<uint8_t> encode_checkpoint(const Cnn& net, const OptimizerState& opt,
                                              const AugmentPolicy& policy, const GuessState& guesses,
                                              uint64_t step, const std::string& config_text) {
  detail::ByteWriter w;
  w.raw(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  w.text(config_text);
  w.u64(step);

  // model geometry, then named tensors
  const ModelConfig& mc = net.config();
  w.u32(static_cast<uint32_t>(mc.input_height));
  w.u32(static_cast<uint32_t>(mc.input_width));
  w.u32(static_cast<uint32_t>(mc.input_channels));
  w.u32(static_cast<uint32_t>(mc.num_classes));
  w.u32(static_cast<uint32_t>(mc.dense_units));
  w.u32(static_cast<uint32_t>(mc.conv_channels.size()));
  for (int c : mc.conv_channels) w.u32(static_cast<uint32_t>(c));

  const auto& tensors = net.tensors();
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const TensorInfo& t : tensors) {
    w.text(t.name);
    w.u32(static_cast<uint32_t>(t.dims.size()));
    for (int d : t.dims) w.u32(static_cast<uint32_t>(d));
    detail::write_f32_array(w, std::span<const double>(net.params()).subspan(t.offset, t.size));
  }
  w.u64(static_cast<uint64_t>(opt.step));
  detail::write_f32_array(w, opt.m);
  detail::write_f32_array(w, opt.v);
  detail::write_f32_array(w, opt.ema);

  // augmentation policy
  w.f64(policy.rho());
  w.f64(policy.threshold());
  w.u32(static_cast<uint32_t>(policy.depth()));
  w.u32(static_cast<uint32_t>(kTransformKindCount));
  for (int k = 0; k < kTransformKindCount; ++k) {
    const auto kind = static_cast<TransformKind>(k);
    const auto params = transform_params(kind);
    w.u32(static_cast<uint32_t>(params.size()));
    for (size_t p = 0; p < params.size(); ++p) {
      w.u32(static_cast<uint32_t>(params[p].bins));
      for (int b = 0; b < params[p].bins; ++b) {
        w.f32(static_cast<float>(policy.weight(kind, static_cast<int>(p), b)));
      }
    }
  }

  // guessing state
  w.u32(static_cast<uint32_t>(guesses.num_classes()));
  w.u32(static_cast<uint32_t>(guesses.window()));
  w.u32(static_cast<uint32_t>(guesses.buffered()));
  w.u32(static_cast<uint32_t>(guesses.head()));
  for (int i = 0; i < guesses.window(); ++i) {
    for (float v : guesses.buffer_entry(i)) w.f32(v);
  }
  for (int64_t c : guesses.label_counts()) w.i64(c);
  w.i64(guesses.total_labels());
  return w.bytes();
}

inline void save_checkpoint(const std::string& path, const Cnn& net, const OptimizerState& opt,
                            const AugmentPolicy& policy, const GuessState& guesses, uint64_t step,
                            const std::string& config_text) {
  const std::vector<uint8_t> bytes = encode_checkpoint(net, opt, policy, guesses, step, config_text);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError("failed to write checkpoint: " + path);
}

inline TrainState load_checkpoint(const std::string& path) {
  detail::ByteReader r(detail::read_file(path));
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (!std::equal(magic, magic + 8, detail::kCheckpointMagic)) {
    throw LoadError(path + ": not a checkpoint (bad magic)");
  }
  const std::string config_text = r.text();
  const uint64_t step = r.u64();

  ModelConfig mc;
  mc.input_height = static_cast<int>(r.u32());
  mc.input_width = static_cast<int>(r.u32());
  mc.input_channels = static_cast<int>(r.u32());
  mc.num_classes = static_cast<int>(r.u32());
  mc.dense_units = static_cast<int>(r.u32());
  mc.conv_channels.resize(r.u32());
  for (int& c : mc.conv_channels) c = static_cast<int>(r.u32());
  mc.init_seed = 0;

  const TrainConfig cfg = parse_config_text(config_text);
  OptimizerConfig ocfg;
  ocfg.lr = cfg.lr;
  ocfg.weight_decay = cfg.weight_decay;
  ocfg.coupled_decay = cfg.coupled_weight_decay;
  ocfg.ema_decay = cfg.ema_decay;

  TrainState state{Cnn(mc), OptimizerState(ocfg),
                   AugmentPolicy(cfg.ct_rho, cfg.ct_threshold, cfg.ct_depth),
                   GuessState(mc.num_classes, cfg.buffer_window), step, config_text};

  const uint32_t tensor_count = r.u32();
  if (tensor_count != state.net.tensors().size()) {
    throw LoadError(path + ": tensor count does not match the model geometry");
  }
  for (const TensorInfo& t : state.net.tensors()) {
    if (r.text() != t.name) throw LoadError(path + ": unexpected tensor order");
    const uint32_t ndims = r.u32();
    if (ndims != t.dims.size()) throw LoadError(path + ": tensor rank mismatch for " + t.name);
    for (int d : t.dims) {
      if (r.u32() != static_cast<uint32_t>(d)) {
        throw LoadError(path + ": tensor shape mismatch for " + t.name);
      }
    }
    detail::read_f32_array(r, std::span<double>(state.net.params()).subspan(t.offset, t.size));
  }
  state.opt.attach(state.net.params());
  state.opt.step = static_cast<int64_t>(r.u64());
  detail::read_f32_array(r, state.opt.m);
  detail::read_f32_array(r, state.opt.v);
  detail::read_f32_array(r, state.opt.ema);

  const double rho = r.f64();
  const double threshold = r.f64();
  const uint32_t depth = r.u32();
  if (rho != state.policy.rho() || threshold != state.policy.threshold() ||
      depth != static_cast<uint32_t>(state.policy.depth())) {
    throw LoadError(path + ": augmentation policy does not match the stored configuration");
  }
  if (r.u32() != static_cast<uint32_t>(kTransformKindCount)) {
    throw LoadError(path + ": transform table size changed");
  }
  for (int k = 0; k < kTransformKindCount; ++k) {
    const auto kind = static_cast<TransformKind>(k);
    const auto params = transform_params(kind);
    if (r.u32() != params.size()) throw LoadError(path + ": transform parameter table changed");
    for (size_t p = 0; p < params.size(); ++p) {
      const uint32_t bins = r.u32();
      if (bins != static_cast<uint32_t>(params[p].bins)) {
        throw LoadError(path + ": magnitude bin count changed");
      }
      for (uint32_t b = 0; b < bins; ++b) {
        state.policy.set_weight(kind, static_cast<int>(p), static_cast<int>(b),
                                static_cast<double>(r.f32()));
      }
    }
  }

  const uint32_t classes = r.u32();
  const uint32_t window = r.u32();
  if (classes != static_cast<uint32_t>(state.guesses.num_classes()) ||
      window != static_cast<uint32_t>(state.guesses.window())) {
    throw LoadError(path + ": guessing state does not match the stored configuration");
  }
  const uint32_t count = r.u32();
  const uint32_t head = r.u32();
  std::vector<float> buffer(static_cast<size_t>(window) * classes);
  for (float& v : buffer) v = r.f32();
  std::vector<int64_t> counts(classes);
  for (int64_t& c : counts) c = r.i64();
  const int64_t total = r.i64();
  state.guesses.restore(buffer, static_cast<int>(count), static_cast<int>(head), counts, total);

  if (!r.done()) throw LoadError(path + ": trailing bytes after checkpoint payload");
  return state;
}

}  // namespace remix
