#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "remix/checkpoint.hpp"
#include "remix/config.hpp"
#include "remix/ctaugment.hpp"
#include "remix/data.hpp"
#include "remix/guess.hpp"
#include "remix/model.hpp"
#include "remix/optimizer.hpp"
#include "remix/pipeline.hpp"
#include "remix/prob.hpp"
#include "remix/rng.hpp"

namespace remix {

// One line of metrics.csv. Timing is deliberately excluded: the file must be
// byte-identical across runs with the same seed, so wall-clock readings only
// go to the status stream.
struct MetricsRow {
  int64_t step = 0;
  double total_loss = 0.0;
  double loss_supervised = 0.0;
  double loss_unlabeled = 0.0;
  double loss_premix = 0.0;
  double loss_rotation = 0.0;
  bool evaluated = false;
  double ema_test_error = 0.0;
  double kl = 0.0;
  double fairness = 0.0;
  double confidence = 0.0;
  double mutual_info = 0.0;
};

inline std::string metrics_header() {
  return "step,total_loss,loss_supervised,loss_unlabeled,loss_premix,loss_rotation,"
         "ema_test_error,kl,fairness,confidence,mutual_info";
}

inline std::string format_metrics_row(const MetricsRow& r) {
  using detail::format_double;
  std::string line = std::to_string(r.step);
  for (double v : {r.total_loss, r.loss_supervised, r.loss_unlabeled, r.loss_premix, r.loss_rotation}) {
    line += "," + format_double(v);
  }
  if (r.evaluated) {
    for (double v : {r.ema_test_error, r.kl, r.fairness, r.confidence, r.mutual_info}) {
      line += "," + format_double(v);
    }
  } else {
    line += ",,,,,";
  }
  return line;
}

struct TrainResult {
  std::vector<MetricsRow> metrics;
  double final_error = 1.0;  // from the last evaluation pass
  int64_t steps_run = 0;
};

struct EvalOutcome {
  double error = 1.0;
  InfoDecomposition info;
};

namespace detail {

// rng stream ids used by the training loop (pipeline slots use their own)
inline constexpr uint64_t kStreamModelInit = 100;
inline constexpr uint64_t kStreamLabeledIter = 101;
inline constexpr uint64_t kStreamUnlabeledIter = 102;
inline constexpr uint64_t kStreamPolicyPick = 103;
inline constexpr uint64_t kStreamPolicyChain = 104;
inline constexpr uint64_t kStreamRotationTask = 105;
inline constexpr uint64_t kStreamStepSeed = 106;
inline constexpr uint64_t kStreamSynthTrain = 200;
inline constexpr uint64_t kStreamSynthEval = 201;

}  // namespace detail

inline ModelConfig model_config_for(const TrainConfig& cfg, const Image& sample, int num_classes) {
  ModelConfig mc;
  mc.input_height = sample.height;
  mc.input_width = sample.width;
  mc.input_channels = sample.channels;
  mc.num_classes = num_classes;
  mc.conv_channels = parse_channel_list(cfg.conv_channels);
  mc.dense_units = cfg.dense_units;
  mc.init_seed = derive_seed(cfg.seed, detail::kStreamModelInit);
  return mc;
}

inline OptimizerConfig optimizer_config_for(const TrainConfig& cfg) {
  OptimizerConfig oc;
  oc.lr = cfg.lr;
  oc.weight_decay = cfg.weight_decay;
  oc.coupled_decay = cfg.coupled_weight_decay;
  oc.ema_decay = cfg.ema_decay;
  return oc;
}

inline BatchOptions batch_options_for(const TrainConfig& cfg) {
  BatchOptions opt;
  opt.num_strong = cfg.num_strong;
  opt.temperature = cfg.temperature;
  opt.mixup_alpha = cfg.mixup_alpha;
  opt.mixup_dominant_first = cfg.mixup_dominant;
  opt.align_enabled = cfg.align;
  opt.strong_enabled = cfg.strong_aug;
  opt.weak_enabled = cfg.weak_aug;
  opt.flip_enabled = cfg.flip;
  opt.max_shift_fraction = static_cast<float>(cfg.max_shift);
  return opt;
}

inline LossOptions loss_options_for(const TrainConfig& cfg) {
  LossOptions opt;
  opt.lambda_unlabeled = cfg.lambda_unlabeled;
  opt.lambda_premixup = cfg.lambda_premixup;
  opt.lambda_rotation = cfg.lambda_rotation;
  opt.premixup_enabled = cfg.premixup;
  opt.rotation_enabled = cfg.rotation;
  opt.l2_unlabeled = cfg.l2_unlabeled;
  return opt;
}

// Classification error and prediction statistics with the given weights
// (normally the EMA copy).
inline EvalOutcome evaluate_weights(const Cnn& net, std::span<const double> weights,
                                    const Dataset& eval_set, int cap = 0) {
  if (eval_set.size() == 0) throw std::invalid_argument("evaluate_weights: empty evaluation set");
  Cnn scratch = net;
  scratch.params().assign(weights.begin(), weights.end());

  const size_t n = cap > 0 ? std::min(eval_set.size(), static_cast<size_t>(cap)) : eval_set.size();
  std::vector<ProbVector> preds;
  preds.reserve(n);
  size_t wrong = 0;
  constexpr size_t kChunk = 128;
  for (size_t at = 0; at < n; at += kChunk) {
    const size_t len = std::min(kChunk, n - at);
    std::vector<Image> chunk(eval_set.images.begin() + at, eval_set.images.begin() + at + len);
    Cnn::Output out = scratch.forward(chunk);
    for (size_t i = 0; i < len; ++i) {
      const ProbVector& p = out.class_probs[i];
      const int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      if (arg != eval_set.labels[at + i]) ++wrong;
      preds.push_back(p);
    }
  }
  EvalOutcome outcome;
  outcome.error = static_cast<double>(wrong) / static_cast<double>(n);
  outcome.info = mutual_info_decomposition(preds);
  return outcome;
}

// KL between the running prediction marginal and the smoothed label marginal.
inline double marginal_kl(const GuessState& guesses, const std::string& direction) {
  const ProbVector model = guesses.prediction_marginal();
  const ProbVector label = guesses.label_marginal();
  return direction == "label_to_model" ? kl_divergence(label, model) : kl_divergence(model, label);
}

inline TrainResult train(const TrainConfig& cfg, const Dataset& labeled, const Dataset& unlabeled,
                         const Dataset& eval_set, const std::string& out_dir = "",
                         std::ostream* status = nullptr) {
  validate_config(cfg);
  if (labeled.size() == 0) throw std::invalid_argument("train: empty labeled set");
  if (!cfg.supervised_only && unlabeled.size() == 0) {
    throw std::invalid_argument("train: empty unlabeled set");
  }
  const int classes = labeled.num_classes;
  if (classes < 2) throw std::invalid_argument("train: labeled set has no class structure");

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  Cnn net(model_config_for(cfg, labeled.images[0], classes));
  OptimizerState opt(optimizer_config_for(cfg));
  opt.attach(net.params());
  AugmentPolicy policy(cfg.ct_rho, cfg.ct_threshold, cfg.ct_depth);
  GuessState guesses(classes, cfg.buffer_window);

  const BatchOptions bopt = batch_options_for(cfg);
  const LossOptions lopt = loss_options_for(cfg);
  const int b = cfg.batch_size;
  const double inv_b = 1.0 / static_cast<double>(b);

  BatchIterator labeled_iter(labeled.size(), b, cfg.seed, detail::kStreamLabeledIter);
  BatchIterator unlabeled_iter(std::max<size_t>(unlabeled.size(), 1), b, cfg.seed,
                               detail::kStreamUnlabeledIter);

  const BatchPredictFn predictor = [&net](const std::vector<Image>& images) {
    return net.forward(images).class_probs;
  };

  TrainResult result;
  result.metrics.reserve(static_cast<size_t>(cfg.steps));
  std::vector<double> grad(net.param_count(), 0.0);

  for (int step = 1; step <= cfg.steps; ++step) {
    // refresh the augmentation policy with one labeled probe
    if (!cfg.supervised_only && cfg.strong_aug) {
      std::mt19937 pick = make_rng(cfg.seed, detail::kStreamPolicyPick, static_cast<uint64_t>(step));
      const size_t idx = static_cast<size_t>(uniform_below(pick, static_cast<int>(labeled.size())));
      std::mt19937 chain = make_rng(cfg.seed, detail::kStreamPolicyChain, static_cast<uint64_t>(step));
      SampledAugmentation sampled = sample_for_update(policy, chain);
      const Image probe = apply_chain(labeled.images[idx], sampled.specs, chain);
      const ProbVector pred = net.forward(std::vector<Image>{probe}).class_probs[0];
      const double omega = match_score(pred, one_hot(classes, labeled.labels[idx]));
      update_weights(policy, sampled.handles, omega);
    }

    const std::vector<size_t> lab_idx = labeled_iter.next();
    std::vector<Image> lab_images;
    std::vector<ProbVector> lab_targets;
    std::vector<int64_t> label_counts(static_cast<size_t>(classes), 0);
    lab_images.reserve(lab_idx.size());
    for (size_t i : lab_idx) {
      lab_images.push_back(labeled.images[i]);
      lab_targets.push_back(one_hot(classes, labeled.labels[i]));
      label_counts[labeled.labels[i]] += 1;
    }

    const uint64_t step_seed = derive_seed(cfg.seed, detail::kStreamStepSeed, static_cast<uint64_t>(step));
    MetricsRow row;
    row.step = step;

    grad.assign(grad.size(), 0.0);
    if (cfg.supervised_only) {
      // weak-augmented labeled cross-entropy only
      std::vector<Image> views;
      views.reserve(lab_images.size());
      for (size_t i = 0; i < lab_images.size(); ++i) {
        if (cfg.weak_aug) {
          std::mt19937 rng = make_rng(step_seed, 3, i);
          views.push_back(weak_augment(lab_images[i], bopt.flip_enabled, bopt.max_shift_fraction, rng));
        } else {
          views.push_back(lab_images[i]);
        }
      }
      Cnn::Cache cache;
      net.forward(views, &cache);
      const std::vector<double> dclass = softmax_ce_logit_grad(cache.class_probs, lab_targets, inv_b);
      net.backward(cache, dclass, {}, grad);
      adam_step(net.params(), grad, opt);

      std::vector<ProbVector> preds(views.size());
      for (size_t i = 0; i < views.size(); ++i) {
        preds[i].assign(cache.class_probs.begin() + static_cast<long>(i) * classes,
                        cache.class_probs.begin() + static_cast<long>(i + 1) * classes);
      }
      row.loss_supervised = detail::mean_cross_entropy(lab_targets, preds);
      row.total_loss = row.loss_supervised;
    } else {
      const std::vector<size_t> unlab_idx = unlabeled_iter.next();
      std::vector<Image> unlab_images;
      unlab_images.reserve(unlab_idx.size());
      for (size_t i : unlab_idx) unlab_images.push_back(unlabeled.images[i]);

      MixedBatch mixed =
          remixmatch_batch(lab_images, lab_targets, unlab_images, policy, guesses, predictor, bopt,
                           step_seed);

      const auto images_of = [](const std::vector<LabeledExample>& v) {
        std::vector<Image> out;
        out.reserve(v.size());
        for (const LabeledExample& e : v) out.push_back(e.image);
        return out;
      };
      const auto targets_of = [](const std::vector<LabeledExample>& v) {
        std::vector<ProbVector> out;
        out.reserve(v.size());
        for (const LabeledExample& e : v) out.push_back(e.target);
        return out;
      };

      // supervised group
      Cnn::Cache cache_sup;
      const std::vector<ProbVector> sup_targets = targets_of(mixed.mixed_labeled);
      Cnn::Output out_sup = net.forward(images_of(mixed.mixed_labeled), &cache_sup);
      net.backward(cache_sup, softmax_ce_logit_grad(cache_sup.class_probs, sup_targets, inv_b), {}, grad);

      // mixed unlabeled group
      Cnn::Cache cache_unl;
      const std::vector<ProbVector> unl_targets = targets_of(mixed.mixed_unlabeled);
      Cnn::Output out_unl = net.forward(images_of(mixed.mixed_unlabeled), &cache_unl);
      const double unl_scale = cfg.lambda_unlabeled / static_cast<double>(unl_targets.size());
      const std::vector<double> d_unl =
          cfg.l2_unlabeled ? softmax_l2_logit_grad(cache_unl.class_probs, unl_targets, unl_scale)
                           : softmax_ce_logit_grad(cache_unl.class_probs, unl_targets, unl_scale);
      net.backward(cache_unl, d_unl, {}, grad);

      // unmixed first strong view
      std::vector<ProbVector> pre_targets;
      Cnn::Output out_pre;
      if (cfg.premixup) {
        Cnn::Cache cache_pre;
        pre_targets = targets_of(mixed.first_strong);
        out_pre = net.forward(images_of(mixed.first_strong), &cache_pre);
        net.backward(cache_pre,
                     softmax_ce_logit_grad(cache_pre.class_probs, pre_targets,
                                           cfg.lambda_premixup * inv_b),
                     {}, grad);
      }

      // orientation task on the raw unlabeled batch
      RotationBatch rot;
      Cnn::Output out_rot;
      if (cfg.rotation) {
        std::mt19937 rot_rng = make_rng(cfg.seed, detail::kStreamRotationTask,
                                        static_cast<uint64_t>(step));
        rot = make_rotation_batch(unlab_images, rot_rng);
        Cnn::Cache cache_rot;
        out_rot = net.forward(rot.images, &cache_rot);
        const std::vector<double> d_rot = softmax_ce_logit_grad(
            cache_rot.rot_probs, rot.turns, 4, cfg.lambda_rotation / static_cast<double>(rot.turns.size()));
        net.backward(cache_rot, {}, d_rot, grad);
      }

      adam_step(net.params(), grad, opt);

      const LossTerms terms =
          total_loss(sup_targets, out_sup.class_probs, unl_targets, out_unl.class_probs, pre_targets,
                     out_pre.class_probs, rot.turns, out_rot.rotation_probs, lopt);
      row.total_loss = terms.total();
      row.loss_supervised = terms.supervised;
      row.loss_unlabeled = terms.unlabeled;
      row.loss_premix = terms.premixup;
      row.loss_rotation = terms.rotation;

      update_guess_state(guesses, mixed.mean_weak_prediction, label_counts);
    }

    if (eval_set.size() > 0 && (step % cfg.eval_every == 0 || step == cfg.steps)) {
      const EvalOutcome eval = evaluate_weights(net, opt.ema, eval_set, cfg.eval_count);
      row.evaluated = true;
      row.ema_test_error = eval.error;
      row.kl = marginal_kl(guesses, cfg.kl_direction);
      row.fairness = eval.info.fairness;
      row.confidence = eval.info.confidence;
      row.mutual_info = eval.info.mutual_information;
      result.final_error = eval.error;
      if (status != nullptr) {
        (*status) << "[train] step " << step << "/" << cfg.steps << " loss " << row.total_loss
                  << " ema_err " << eval.error << " (" << elapsed() << " s)\n";
      }
    }
    result.metrics.push_back(row);
  }
  result.steps_run = cfg.steps;

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    {
      std::ofstream csv(dir / "metrics.csv");
      csv << metrics_header() << "\n";
      for (const MetricsRow& r : result.metrics) csv << format_metrics_row(r) << "\n";
    }
    {
      std::ofstream cfg_out(dir / "config.txt");
      cfg_out << serialize_config(cfg);
    }
    save_checkpoint((dir / "checkpoint.bin").string(), net, opt, policy, guesses,
                    static_cast<uint64_t>(cfg.steps), serialize_config(cfg));
  }
  return result;
}

// ============================================================================
// Dataset assembly from a configuration
// ============================================================================

struct DataBundle {
  Dataset labeled;
  Dataset unlabeled;
  Dataset eval;
};

inline DataBundle build_data(const TrainConfig& cfg) {
  validate_config(cfg);
  Dataset train;
  Dataset eval;
  if (cfg.dataset == "synth") {
    SynthConfig sc;
    sc.count = cfg.synth_count;
    sc.num_classes = cfg.synth_classes;
    sc.height = cfg.synth_size;
    sc.width = cfg.synth_size;
    sc.channels = cfg.synth_channels;
    sc.noise = static_cast<float>(cfg.synth_noise);
    sc.max_shift = cfg.synth_shift;
    sc.seed = derive_seed(cfg.seed, detail::kStreamSynthTrain);
    train = synth_dataset(sc);
    sc.seed = derive_seed(cfg.seed, detail::kStreamSynthEval);
    sc.count = cfg.eval_count > 0 ? cfg.eval_count : 500;
    eval = synth_dataset(sc);
  } else if (cfg.dataset == "idx") {
    const std::filesystem::path dir(cfg.data_dir);
    train = load_idx((dir / cfg.idx_train_images).string(), (dir / cfg.idx_train_labels).string());
    eval = load_idx((dir / cfg.idx_test_images).string(), (dir / cfg.idx_test_labels).string());
    eval.num_classes = train.num_classes = std::max(train.num_classes, eval.num_classes);
  } else {
    const std::filesystem::path dir(cfg.data_dir);
    std::istringstream files(cfg.cifar_train_files);
    std::string name;
    while (std::getline(files, name, ',')) {
      name = detail::trim(name);
      if (name.empty()) continue;
      Dataset part = load_cifar_binary((dir / name).string());
      train.num_classes = part.num_classes;
      for (size_t i = 0; i < part.size(); ++i) {
        train.images.push_back(std::move(part.images[i]));
        train.labels.push_back(part.labels[i]);
      }
    }
    eval = load_cifar_binary((dir / cfg.cifar_test_file).string());
  }

  SslSplit split = make_ssl_split(train, cfg.labeled_count, cfg.seed);
  DataBundle bundle;
  bundle.labeled = std::move(split.labeled);
  bundle.unlabeled = std::move(split.unlabeled);
  bundle.eval = std::move(eval);
  return bundle;
}

inline EvalOutcome evaluate_checkpoint(const std::string& path, const Dataset& eval_set, int cap = 0) {
  const TrainState state = load_checkpoint(path);
  return evaluate_weights(state.net, state.opt.ema, eval_set, cap);
}

// ============================================================================
// Ablation suite
// ============================================================================

// Eleven runs: a K = 8 baseline plus ten variants, each flipping exactly one
// knob of the baseline configuration.
inline std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& base_in) {
  TrainConfig base = base_in;
  base.num_strong = 8;
  std::vector<std::pair<std::string, TrainConfig>> out;
  out.emplace_back("baseline", base);
  for (int k : {1, 2, 4, 16}) {
    TrainConfig v = base;
    v.num_strong = k;
    out.emplace_back("k" + std::to_string(k), v);
  }
  TrainConfig v = base;
  v.rotation = false;
  out.emplace_back("no_rotation", v);
  v = base;
  v.premixup = false;
  out.emplace_back("no_premixup", v);
  v = base;
  v.align = false;
  out.emplace_back("no_align", v);
  v = base;
  v.l2_unlabeled = true;
  out.emplace_back("l2_unlabeled", v);
  v = base;
  v.strong_aug = false;
  out.emplace_back("no_strong_aug", v);
  v = base;
  v.weak_aug = false;
  out.emplace_back("no_weak_aug", v);
  return out;
}

inline void run_ablation_suite(const TrainConfig& base, const std::string& out_dir,
                               std::ostream* status = nullptr) {
  const DataBundle data = build_data(base);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::ofstream summary(dir / "ablation.csv");
  summary << "name,steps,final_error,final_total_loss\n";
  for (const auto& [name, cfg] : ablation_variants(base)) {
    if (status != nullptr) (*status) << "[ablate] " << name << "\n";
    const TrainResult res = train(cfg, data.labeled, data.unlabeled, data.eval, (dir / name).string(),
                                  status);
    summary << name << "," << cfg.steps << "," << detail::format_double(res.final_error) << ","
            << detail::format_double(res.metrics.back().total_loss) << "\n";
  }
}

}  // namespace remix
