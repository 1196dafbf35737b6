#pragma once

#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "remix/ctaugment.hpp"
#include "remix/guess.hpp"
#include "remix/image.hpp"
#include "remix/parallel.hpp"
#include "remix/prob.hpp"
#include "remix/rng.hpp"
#include "remix/transforms.hpp"

namespace remix {

struct LabeledExample {
  Image image;
  ProbVector target;
};

// ============================================================================
// MixUp
// ============================================================================

// Beta(alpha, alpha) via two gamma draws.
inline double draw_beta(double alpha, std::mt19937& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("draw_beta: alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double x = gamma(rng);
  const double y = gamma(rng);
  const double s = x + y;
  if (s <= 0.0) return 0.5;
  return x / s;
}

// Convex combination of two examples at a fixed coefficient.
inline LabeledExample mixup_pair(const LabeledExample& a, const LabeledExample& b, double lambda) {
  if (!a.image.same_shape(b.image)) throw std::invalid_argument("mixup_pair: image shape mismatch");
  if (a.target.size() != b.target.size()) throw std::invalid_argument("mixup_pair: target length mismatch");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("mixup_pair: lambda must be in [0, 1]");
  LabeledExample out;
  out.image = a.image;
  const float l = static_cast<float>(lambda);
  for (size_t i = 0; i < out.image.data.size(); ++i) {
    out.image.data[i] = l * a.image.data[i] + (1.0f - l) * b.image.data[i];
  }
  out.target.resize(a.target.size());
  for (size_t i = 0; i < out.target.size(); ++i) {
    out.target[i] = l * a.target[i] + (1.0f - l) * b.target[i];
  }
  return out;
}

// MixUp with a Beta(alpha, alpha) coefficient. With dominant_first the draw
// is replaced by max(lambda, 1 - lambda) so the first argument always keeps
// the majority share.
inline LabeledExample mixup(const LabeledExample& a, const LabeledExample& b, double alpha,
                            bool dominant_first, std::mt19937& rng) {
  double lambda = draw_beta(alpha, rng);
  if (dominant_first) lambda = std::max(lambda, 1.0 - lambda);
  return mixup_pair(a, b, lambda);
}

// ============================================================================
// Batch assembly
// ============================================================================

// Knobs the batch assembly needs; the training loop fills this from its own
// configuration.
struct BatchOptions {
  int num_strong = 2;              // strong views per unlabeled example (K)
  double temperature = 0.5;        // guess sharpening
  double mixup_alpha = 0.75;
  bool mixup_dominant_first = true;
  bool align_enabled = true;
  bool strong_enabled = true;      // when off, strong slots use the weak policy
  bool weak_enabled = true;        // when off, weak slots pass images through
  bool flip_enabled = true;
  float max_shift_fraction = 0.125f;
};

// Batch predictions on weak views; implemented by the model.
using BatchPredictFn = std::function<std::vector<ProbVector>(const std::vector<Image>&)>;

// Pre-MixUp state: strongly augmented labeled examples, the anchored
// unlabeled set (all views of one example share one guessed target), and the
// first strong view kept aside.
struct AnchoredBatch {
  std::vector<LabeledExample> labeled;       // size B
  std::vector<LabeledExample> unlabeled;     // size B * (K + 1); weak view last per example
  std::vector<LabeledExample> first_strong;  // size B
  ProbVector mean_weak_prediction;           // raw (pre-alignment) batch mean
};

struct MixedBatch {
  std::vector<LabeledExample> mixed_labeled;    // size B
  std::vector<LabeledExample> mixed_unlabeled;  // size B * (K + 1)
  std::vector<LabeledExample> first_strong;     // size B, never mixed
  ProbVector mean_weak_prediction;
};

namespace detail {

// Slot layout inside one step: every augmentation slot gets its own derived
// generator so results do not depend on worker scheduling.
inline constexpr uint64_t kStreamStrongLabeled = 1;
inline constexpr uint64_t kStreamStrongUnlabeled = 2;
inline constexpr uint64_t kStreamWeak = 3;
inline constexpr uint64_t kStreamMix = 4;

inline Image strong_view(const Image& im, const AugmentPolicy& policy, const BatchOptions& opt,
                         std::mt19937& rng) {
  if (!opt.strong_enabled) {
    return opt.weak_enabled ? weak_augment(im, opt.flip_enabled, opt.max_shift_fraction, rng) : im;
  }
  const SampledAugmentation sample = sample_for_training(policy, rng);
  return apply_chain(im, sample.specs, rng);
}

inline Image weak_view(const Image& im, const BatchOptions& opt, std::mt19937& rng) {
  if (!opt.weak_enabled) return im;
  return weak_augment(im, opt.flip_enabled, opt.max_shift_fraction, rng);
}

}  // namespace detail

// Builds the anchored sets: strong-augments each labeled example once, each
// unlabeled example num_strong times, computes one guessed target per
// unlabeled example from its weak view (align, then sharpen), and attaches
// that target to all K + 1 views.
inline AnchoredBatch anchor_batch(std::span<const Image> labeled_images,
                                  std::span<const ProbVector> labels,
                                  std::span<const Image> unlabeled_images,
                                  const AugmentPolicy& policy, const GuessState& guesses,
                                  const BatchPredictFn& predict, const BatchOptions& opt,
                                  uint64_t step_seed) {
  const int batch = static_cast<int>(labeled_images.size());
  if (batch == 0 || labels.size() != labeled_images.size() ||
      unlabeled_images.size() != labeled_images.size()) {
    throw std::invalid_argument("anchor_batch: labeled and unlabeled batches must be nonempty and equal");
  }
  const int k = opt.num_strong;
  if (k < 1) throw std::invalid_argument("anchor_batch: need at least one strong view");

  AnchoredBatch out;
  out.labeled.resize(batch);
  out.unlabeled.resize(static_cast<size_t>(batch) * (k + 1));
  out.first_strong.resize(batch);

  // strong views, one slot per augmentation
  parallel_for(batch, [&](int b) {
    std::mt19937 rng = make_rng(step_seed, detail::kStreamStrongLabeled, static_cast<uint64_t>(b));
    out.labeled[b] = {detail::strong_view(labeled_images[b], policy, opt, rng),
                      labels[b]};
  });
  std::vector<Image> strong(static_cast<size_t>(batch) * k);
  parallel_for(batch * k, [&](int slot) {
    std::mt19937 rng = make_rng(step_seed, detail::kStreamStrongUnlabeled, static_cast<uint64_t>(slot));
    strong[slot] = detail::strong_view(unlabeled_images[slot / k], policy, opt, rng);
  });
  std::vector<Image> weak(batch);
  parallel_for(batch, [&](int b) {
    std::mt19937 rng = make_rng(step_seed, detail::kStreamWeak, static_cast<uint64_t>(b));
    weak[b] = detail::weak_view(unlabeled_images[b], opt, rng);
  });

  // one guess per unlabeled example, from the weak view only
  const std::vector<ProbVector> raw = predict(weak);
  if (raw.size() != static_cast<size_t>(batch)) {
    throw std::invalid_argument("anchor_batch: predictor returned the wrong number of rows");
  }
  const size_t classes = raw.empty() ? 0 : raw[0].size();
  out.mean_weak_prediction.assign(classes, 0.0f);
  for (const ProbVector& p : raw) {
    for (size_t c = 0; c < classes; ++c) out.mean_weak_prediction[c] += p[c] / static_cast<float>(batch);
  }

  const ProbVector label_marginal = guesses.label_marginal();
  const ProbVector running = guesses.prediction_marginal();
  for (int b = 0; b < batch; ++b) {
    ProbVector guess = raw[b];
    if (opt.align_enabled) guess = align(guess, label_marginal, running);
    guess = sharpen(guess, opt.temperature);
    for (int v = 0; v < k; ++v) {
      out.unlabeled[static_cast<size_t>(b) * (k + 1) + v] = {strong[static_cast<size_t>(b) * k + v], guess};
    }
    out.unlabeled[static_cast<size_t>(b) * (k + 1) + k] = {weak[b], guess};
    out.first_strong[b] = {strong[static_cast<size_t>(b) * k], guess};
  }
  return out;
}

// MixUp stage: shuffle the union of both anchored sets and mix each entry
// against its shuffled counterpart. The first strong views pass through.
inline MixedBatch mix_anchored(AnchoredBatch&& anchored, const BatchOptions& opt, uint64_t step_seed) {
  const size_t nl = anchored.labeled.size();
  const size_t nu = anchored.unlabeled.size();
  std::vector<const LabeledExample*> pool;
  pool.reserve(nl + nu);
  for (const auto& e : anchored.labeled) pool.push_back(&e);
  for (const auto& e : anchored.unlabeled) pool.push_back(&e);

  std::mt19937 rng = make_rng(step_seed, detail::kStreamMix);
  // Fisher-Yates, hand-rolled for cross-library stability
  for (size_t i = pool.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_below(rng, static_cast<int>(i)));
    std::swap(pool[i - 1], pool[j]);
  }

  MixedBatch out;
  out.mixed_labeled.resize(nl);
  out.mixed_unlabeled.resize(nu);
  for (size_t i = 0; i < nl; ++i) {
    out.mixed_labeled[i] =
        mixup(anchored.labeled[i], *pool[i], opt.mixup_alpha, opt.mixup_dominant_first, rng);
  }
  for (size_t i = 0; i < nu; ++i) {
    out.mixed_unlabeled[i] =
        mixup(anchored.unlabeled[i], *pool[nl + i], opt.mixup_alpha, opt.mixup_dominant_first, rng);
  }
  out.first_strong = std::move(anchored.first_strong);
  out.mean_weak_prediction = std::move(anchored.mean_weak_prediction);
  return out;
}

// Full batch assembly. Returns B mixed labeled examples, B * (K + 1) mixed
// unlabeled examples, and the B un-mixed first strong views.
inline MixedBatch remixmatch_batch(std::span<const Image> labeled_images,
                                   std::span<const ProbVector> labels,
                                   std::span<const Image> unlabeled_images,
                                   const AugmentPolicy& policy, const GuessState& guesses,
                                   const BatchPredictFn& predict, const BatchOptions& opt,
                                   uint64_t step_seed) {
  return mix_anchored(
      anchor_batch(labeled_images, labels, unlabeled_images, policy, guesses, predict, opt, step_seed),
      opt, step_seed);
}

// ============================================================================
// Rotation task
// ============================================================================

struct RotationBatch {
  std::vector<Image> images;
  std::vector<int> turns;  // quarter turns in {0, 1, 2, 3}
};

inline RotationBatch make_rotation_batch(std::span<const Image> images, std::mt19937& rng) {
  RotationBatch out;
  out.images.reserve(images.size());
  out.turns.reserve(images.size());
  for (const Image& im : images) {
    const int turns = uniform_below(rng, 4);
    out.images.push_back(rotate90(im, turns));
    out.turns.push_back(turns);
  }
  return out;
}

// ============================================================================
// Loss
// ============================================================================

struct LossOptions {
  double lambda_unlabeled = 1.5;
  double lambda_premixup = 0.5;
  double lambda_rotation = 0.5;
  bool premixup_enabled = true;
  bool rotation_enabled = true;
  bool l2_unlabeled = false;  // squared error instead of cross-entropy on mixed unlabeled
};

// Weighted per-term contributions; total is their plain sum.
struct LossTerms {
  double supervised = 0.0;
  double unlabeled = 0.0;
  double premixup = 0.0;
  double rotation = 0.0;
  double total() const { return supervised + unlabeled + premixup + rotation; }
};

namespace detail {

inline double mean_cross_entropy(std::span<const ProbVector> targets, std::span<const ProbVector> preds) {
  if (targets.size() != preds.size()) throw std::invalid_argument("loss: target/prediction count mismatch");
  if (targets.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) acc += cross_entropy(targets[i], preds[i]);
  return acc / static_cast<double>(targets.size());
}

// Mean over examples of the per-class mean squared error.
inline double mean_squared_error(std::span<const ProbVector> targets, std::span<const ProbVector> preds) {
  if (targets.size() != preds.size()) throw std::invalid_argument("loss: target/prediction count mismatch");
  if (targets.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].size() != preds[i].size()) throw std::invalid_argument("loss: class count mismatch");
    double ex = 0.0;
    for (size_t c = 0; c < targets[i].size(); ++c) {
      const double d = static_cast<double>(targets[i][c]) - static_cast<double>(preds[i][c]);
      ex += d * d;
    }
    acc += ex / static_cast<double>(targets[i].size());
  }
  return acc / static_cast<double>(targets.size());
}

}  // namespace detail

// Four-term objective. Every term is the mean over its own group, scaled by
// its weight; disabled terms contribute exactly zero.
inline LossTerms total_loss(std::span<const ProbVector> labeled_targets,
                            std::span<const ProbVector> labeled_preds,
                            std::span<const ProbVector> unlabeled_targets,
                            std::span<const ProbVector> unlabeled_preds,
                            std::span<const ProbVector> premix_targets,
                            std::span<const ProbVector> premix_preds,
                            std::span<const int> rotation_turns,
                            std::span<const ProbVector> rotation_preds, const LossOptions& opt) {
  LossTerms terms;
  terms.supervised = detail::mean_cross_entropy(labeled_targets, labeled_preds);
  terms.unlabeled = opt.lambda_unlabeled *
                    (opt.l2_unlabeled ? detail::mean_squared_error(unlabeled_targets, unlabeled_preds)
                                      : detail::mean_cross_entropy(unlabeled_targets, unlabeled_preds));
  if (opt.premixup_enabled) {
    terms.premixup = opt.lambda_premixup * detail::mean_cross_entropy(premix_targets, premix_preds);
  }
  if (opt.rotation_enabled) {
    if (rotation_turns.size() != rotation_preds.size()) {
      throw std::invalid_argument("loss: rotation target/prediction count mismatch");
    }
    if (!rotation_turns.empty()) {
      double acc = 0.0;
      for (size_t i = 0; i < rotation_turns.size(); ++i) {
        acc += cross_entropy(one_hot(4, rotation_turns[i]), rotation_preds[i]);
      }
      terms.rotation = opt.lambda_rotation * acc / static_cast<double>(rotation_turns.size());
    }
  }
  return terms;
}

}  // namespace remix
