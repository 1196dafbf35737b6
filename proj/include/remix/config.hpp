#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace remix {

// Flat key = value experiment configuration. Every knob has a default, so an
// empty file is a valid run; unknown keys fail loudly before any work starts.
struct TrainConfig {
  uint64_t seed = 1;
  int steps = 2000;
  int batch_size = 64;
  int eval_every = 500;
  int eval_count = 500;  // 0 means the whole test split
  std::string dataset = "synth";
  std::string data_dir = ".";
  int labeled_count = 40;

  // batch pipeline
  int num_strong = 2;
  double temperature = 0.5;
  double mixup_alpha = 0.75;
  bool mixup_dominant = true;
  bool align = true;
  bool strong_aug = true;
  bool weak_aug = true;
  bool flip = true;
  double max_shift = 0.125;
  int buffer_window = 128;

  // loss
  double lambda_unlabeled = 1.5;
  double lambda_premixup = 0.5;
  double lambda_rotation = 0.5;
  bool premixup = true;
  bool rotation = true;
  bool l2_unlabeled = false;
  bool supervised_only = false;
  std::string kl_direction = "model_to_label";

  // augmentation policy
  double ct_rho = 0.99;
  double ct_threshold = 0.8;
  int ct_depth = 2;

  // model
  std::string conv_channels = "32,64";
  int dense_units = 128;

  // optimizer
  double lr = 0.002;
  double weight_decay = 0.02;
  bool coupled_weight_decay = false;
  double ema_decay = 0.999;

  // synthetic data
  int synth_count = 1000;
  int synth_classes = 10;
  int synth_size = 20;
  int synth_channels = 1;
  double synth_noise = 0.08;
  int synth_shift = 2;

  // file names resolved against data_dir
  std::string idx_train_images = "train-images-idx3-ubyte";
  std::string idx_train_labels = "train-labels-idx1-ubyte";
  std::string idx_test_images = "t10k-images-idx3-ubyte";
  std::string idx_test_labels = "t10k-labels-idx1-ubyte";
  std::string cifar_train_files = "data_batch_1.bin";
  std::string cifar_test_file = "test_batch.bin";
};

namespace detail {

struct ConfigField {
  std::string name;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline int64_t parse_int(const std::string& key, const std::string& value) {
  size_t used = 0;
  int64_t out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not an integer: " + value);
  }
  if (used != value.size()) throw std::invalid_argument("config key " + key + ": not an integer: " + value);
  return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not a number: " + value);
  }
  if (used != value.size()) throw std::invalid_argument("config key " + key + ": not a number: " + value);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config key " + key + ": expected true/false: " + value);
}

inline std::vector<ConfigField> build_config_fields() {
  std::vector<ConfigField> fields;
  const auto add_u64 = [&](const char* name, uint64_t TrainConfig::* mem) {
    fields.push_back({name,
                      [name, mem](TrainConfig& c, const std::string& v) {
                        const int64_t raw = parse_int(name, v);
                        if (raw < 0) throw std::invalid_argument(std::string("config key ") + name +
                                                                 ": must be nonnegative");
                        c.*mem = static_cast<uint64_t>(raw);
                      },
                      [mem](const TrainConfig& c) { return std::to_string(c.*mem); }});
  };
  const auto add_int = [&](const char* name, int TrainConfig::* mem) {
    fields.push_back({name,
                      [name, mem](TrainConfig& c, const std::string& v) {
                        c.*mem = static_cast<int>(parse_int(name, v));
                      },
                      [mem](const TrainConfig& c) { return std::to_string(c.*mem); }});
  };
  const auto add_double = [&](const char* name, double TrainConfig::* mem) {
    fields.push_back({name,
                      [name, mem](TrainConfig& c, const std::string& v) { c.*mem = parse_double(name, v); },
                      [mem](const TrainConfig& c) { return format_double(c.*mem); }});
  };
  const auto add_bool = [&](const char* name, bool TrainConfig::* mem) {
    fields.push_back({name,
                      [name, mem](TrainConfig& c, const std::string& v) { c.*mem = parse_bool(name, v); },
                      [mem](const TrainConfig& c) { return c.*mem ? "true" : "false"; }});
  };
  const auto add_string = [&](const char* name, std::string TrainConfig::* mem) {
    fields.push_back({name, [mem](TrainConfig& c, const std::string& v) { c.*mem = v; },
                      [mem](const TrainConfig& c) { return c.*mem; }});
  };

  add_u64("seed", &TrainConfig::seed);
  add_int("steps", &TrainConfig::steps);
  add_int("batch_size", &TrainConfig::batch_size);
  add_int("eval_every", &TrainConfig::eval_every);
  add_int("eval_count", &TrainConfig::eval_count);
  add_string("dataset", &TrainConfig::dataset);
  add_string("data_dir", &TrainConfig::data_dir);
  add_int("labeled_count", &TrainConfig::labeled_count);
  add_int("num_strong", &TrainConfig::num_strong);
  add_double("temperature", &TrainConfig::temperature);
  add_double("mixup_alpha", &TrainConfig::mixup_alpha);
  add_bool("mixup_dominant", &TrainConfig::mixup_dominant);
  add_bool("align", &TrainConfig::align);
  add_bool("strong_aug", &TrainConfig::strong_aug);
  add_bool("weak_aug", &TrainConfig::weak_aug);
  add_bool("flip", &TrainConfig::flip);
  add_double("max_shift", &TrainConfig::max_shift);
  add_int("buffer_window", &TrainConfig::buffer_window);
  add_double("lambda_unlabeled", &TrainConfig::lambda_unlabeled);
  add_double("lambda_premixup", &TrainConfig::lambda_premixup);
  add_double("lambda_rotation", &TrainConfig::lambda_rotation);
  add_bool("premixup", &TrainConfig::premixup);
  add_bool("rotation", &TrainConfig::rotation);
  add_bool("l2_unlabeled", &TrainConfig::l2_unlabeled);
  add_bool("supervised_only", &TrainConfig::supervised_only);
  add_string("kl_direction", &TrainConfig::kl_direction);
  add_double("ct_rho", &TrainConfig::ct_rho);
  add_double("ct_threshold", &TrainConfig::ct_threshold);
  add_int("ct_depth", &TrainConfig::ct_depth);
  add_string("conv_channels", &TrainConfig::conv_channels);
  add_int("dense_units", &TrainConfig::dense_units);
  add_double("lr", &TrainConfig::lr);
  add_double("weight_decay", &TrainConfig::weight_decay);
  add_bool("coupled_weight_decay", &TrainConfig::coupled_weight_decay);
  add_double("ema_decay", &TrainConfig::ema_decay);
  add_int("synth_count", &TrainConfig::synth_count);
  add_int("synth_classes", &TrainConfig::synth_classes);
  add_int("synth_size", &TrainConfig::synth_size);
  add_int("synth_channels", &TrainConfig::synth_channels);
  add_double("synth_noise", &TrainConfig::synth_noise);
  add_int("synth_shift", &TrainConfig::synth_shift);
  add_string("idx_train_images", &TrainConfig::idx_train_images);
  add_string("idx_train_labels", &TrainConfig::idx_train_labels);
  add_string("idx_test_images", &TrainConfig::idx_test_images);
  add_string("idx_test_labels", &TrainConfig::idx_test_labels);
  add_string("cifar_train_files", &TrainConfig::cifar_train_files);
  add_string("cifar_test_file", &TrainConfig::cifar_test_file);
  return fields;
}

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_config_fields();
  return fields;
}

inline std::string trim(const std::string& s) {
  size_t lo = s.find_first_not_of(" \t\r\n");
  if (lo == std::string::npos) return "";
  size_t hi = s.find_last_not_of(" \t\r\n");
  return s.substr(lo, hi - lo + 1);
}

}  // namespace detail

inline void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const detail::ConfigField& f : detail::config_fields()) {
    if (f.name == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key: " + key);
}

inline std::string get_config_value(const TrainConfig& cfg, const std::string& key) {
  for (const detail::ConfigField& f : detail::config_fields()) {
    if (f.name == key) return f.get(cfg);
  }
  throw std::invalid_argument("unknown config key: " + key);
}

// Accepts "key = value" lines, blank lines and # comments.
inline void apply_config_text(TrainConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    }
    set_config_value(cfg, key, value);
  }
}

inline TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  apply_config_text(cfg, text);
  return cfg;
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// "key=value" as passed to --set on the command line.
inline void apply_override(TrainConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must look like key=value: " + assignment);
  }
  set_config_value(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

// Canonical echo: every key in registry order, one per line.
inline std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream out;
  for (const detail::ConfigField& f : detail::config_fields()) {
    out << f.name << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

inline std::vector<int> parse_channel_list(const std::string& spec) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(spec);
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(detail::parse_int("conv_channels", item)));
  }
  if (out.empty()) throw std::invalid_argument("conv_channels: empty list");
  return out;
}

inline void validate_config(const TrainConfig& cfg) {
  const auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (cfg.steps < 1) fail("steps must be positive");
  if (cfg.batch_size < 1) fail("batch_size must be positive");
  if (cfg.eval_every < 1) fail("eval_every must be positive");
  if (cfg.num_strong < 1) fail("num_strong must be at least 1");
  if (cfg.temperature <= 0.0) fail("temperature must be positive");
  if (cfg.mixup_alpha <= 0.0) fail("mixup_alpha must be positive");
  if (cfg.max_shift < 0.0 || cfg.max_shift > 0.5) fail("max_shift must lie in [0, 0.5]");
  if (cfg.buffer_window < 1) fail("buffer_window must be positive");
  if (cfg.lambda_unlabeled < 0.0 || cfg.lambda_premixup < 0.0 || cfg.lambda_rotation < 0.0) {
    fail("loss weights must be nonnegative");
  }
  if (cfg.kl_direction != "model_to_label" && cfg.kl_direction != "label_to_model") {
    fail("kl_direction must be model_to_label or label_to_model");
  }
  if (cfg.ct_rho <= 0.0 || cfg.ct_rho >= 1.0) fail("ct_rho must lie in (0, 1)");
  if (cfg.ct_threshold < 0.0 || cfg.ct_threshold >= 1.0) fail("ct_threshold must lie in [0, 1)");
  if (cfg.ct_depth < 1) fail("ct_depth must be positive");
  if (cfg.dataset != "synth" && cfg.dataset != "idx" && cfg.dataset != "cifar") {
    fail("dataset must be synth, idx or cifar");
  }
  if (cfg.lr <= 0.0) fail("lr must be positive");
  if (cfg.ema_decay < 0.0 || cfg.ema_decay >= 1.0) fail("ema_decay must lie in [0, 1)");
  if (cfg.labeled_count < 1) fail("labeled_count must be positive");
  parse_channel_list(cfg.conv_channels);
}

}  // namespace remix
