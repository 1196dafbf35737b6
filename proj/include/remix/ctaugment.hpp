#pragma once

#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "remix/rng.hpp"
#include "remix/transforms.hpp"

namespace remix {

// Learned augmentation policy: one weight vector per (transform, parameter)
// with one entry per magnitude bin. Weights start at 1 (everything allowed)
// and are pulled toward the observed prediction-match score of the bins that
// get sampled on labeled examples.
class AugmentPolicy {
 public:
  AugmentPolicy(double rho = 0.99, double threshold = 0.80, int depth = 2)
      : rho_(rho), threshold_(threshold), depth_(depth) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("AugmentPolicy: rho must be in (0, 1)");
    if (!(threshold >= 0.0 && threshold < 1.0)) {
      throw std::invalid_argument("AugmentPolicy: threshold must be in [0, 1)");
    }
    if (depth < 1) throw std::invalid_argument("AugmentPolicy: depth must be at least 1");
    weights_.resize(kTransformKindCount);
    for (int k = 0; k < kTransformKindCount; ++k) {
      const auto params = transform_params(static_cast<TransformKind>(k));
      weights_[k].resize(params.size());
      for (size_t p = 0; p < params.size(); ++p) {
        weights_[k][p].assign(static_cast<size_t>(params[p].bins), 1.0);
      }
    }
  }

  double rho() const { return rho_; }
  double threshold() const { return threshold_; }
  int depth() const { return depth_; }

  std::span<const double> weights(TransformKind kind, int param) const {
    return check(kind, param);
  }
  double weight(TransformKind kind, int param, int bin) const {
    const auto& row = check(kind, param);
    if (bin < 0 || bin >= static_cast<int>(row.size())) throw std::out_of_range("AugmentPolicy: bin out of range");
    return row[bin];
  }
  void set_weight(TransformKind kind, int param, int bin, double value) {
    auto& row = check(kind, param);
    if (bin < 0 || bin >= static_cast<int>(row.size())) throw std::out_of_range("AugmentPolicy: bin out of range");
    row[bin] = value;
  }

 private:
  const std::vector<double>& check(TransformKind kind, int param) const {
    const int k = static_cast<int>(kind);
    if (k < 0 || k >= kTransformKindCount) throw std::invalid_argument("AugmentPolicy: bad transform kind");
    if (param < 0 || param >= static_cast<int>(weights_[k].size())) {
      throw std::invalid_argument("AugmentPolicy: bad parameter index");
    }
    return weights_[k][param];
  }
  std::vector<double>& check(TransformKind kind, int param) {
    return const_cast<std::vector<double>&>(std::as_const(*this).check(kind, param));
  }

  double rho_;
  double threshold_;
  int depth_;
  std::vector<std::vector<std::vector<double>>> weights_;  // [kind][param][bin]
};

inline AugmentPolicy init_policy(double rho = 0.99, double threshold = 0.80, int depth = 2) {
  return AugmentPolicy(rho, threshold, depth);
}

struct UpdateHandle {
  TransformKind kind;
  int param;
  int bin;
};

struct SampledAugmentation {
  std::vector<TransformSpec> specs;     // depth transforms, applied in order
  std::vector<UpdateHandle> handles;    // every (kind, param, bin) that was drawn
};

namespace detail {

// Continuous magnitude drawn uniformly inside the bin's tile of [lo, hi].
// The tiles partition the range into `bins` equal sub-intervals.
inline float magnitude_in_bin(const ParamInfo& info, int bin, std::mt19937& rng) {
  if (info.categorical) return static_cast<float>(bin);
  const float tile = (info.hi - info.lo) / static_cast<float>(info.bins);
  return info.lo + (static_cast<float>(bin) + static_cast<float>(uniform_unit(rng))) * tile;
}

}  // namespace detail

// Categorical draw over bins whose weight exceeds the policy threshold,
// proportional to those weights. Falls back to a uniform draw over all bins
// when no weight clears the threshold.
inline int sample_magnitude_bin(const AugmentPolicy& policy, TransformKind kind, int param, std::mt19937& rng) {
  const auto row = policy.weights(kind, param);
  double total = 0.0;
  for (double w : row) {
    if (w > policy.threshold()) total += w;
  }
  if (total <= 0.0) return uniform_below(rng, static_cast<int>(row.size()));
  double u = uniform_unit(rng) * total;
  for (size_t b = 0; b < row.size(); ++b) {
    if (row[b] > policy.threshold()) {
      u -= row[b];
      if (u < 0.0) return static_cast<int>(b);
    }
  }
  return static_cast<int>(row.size()) - 1;
}

namespace detail {

template <typename BinDraw>
SampledAugmentation sample_chain(const AugmentPolicy& policy, std::mt19937& rng, BinDraw&& draw_bin) {
  SampledAugmentation out;
  out.specs.reserve(policy.depth());
  for (int d = 0; d < policy.depth(); ++d) {
    const auto kind = static_cast<TransformKind>(uniform_below(rng, kTransformKindCount));
    const auto params = transform_params(kind);
    TransformSpec spec;
    spec.kind = kind;
    for (int p = 0; p < static_cast<int>(params.size()); ++p) {
      const int bin = draw_bin(kind, p, params[p]);
      spec.params.push_back({p, bin, magnitude_in_bin(params[p], bin, rng)});
      out.handles.push_back({kind, p, bin});
    }
    out.specs.push_back(std::move(spec));
  }
  return out;
}

}  // namespace detail

// Draw used inside training batches: magnitude bins honor the learned weights.
inline SampledAugmentation sample_for_training(const AugmentPolicy& policy, std::mt19937& rng) {
  return detail::sample_chain(policy, rng, [&](TransformKind kind, int param, const ParamInfo&) {
    return sample_magnitude_bin(policy, kind, param, rng);
  });
}

// Draw used on labeled examples to refresh the weights: bins are uniform so
// every magnitude keeps getting measured regardless of its current weight.
inline SampledAugmentation sample_for_update(const AugmentPolicy& policy, std::mt19937& rng) {
  return detail::sample_chain(policy, rng, [&](TransformKind, int, const ParamInfo& info) {
    return uniform_below(rng, info.bins);
  });
}

// omega = 1 - |prediction - label|_1 / (2L). A perfect match gives 1; for
// probability vectors the worst case is 1 - 1/L (disjoint one-hots).
inline double match_score(std::span<const float> prediction, std::span<const float> label) {
  if (prediction.size() != label.size() || prediction.empty()) {
    throw std::invalid_argument("match_score: vectors must be nonempty and the same length");
  }
  double abs_sum = 0.0;
  for (size_t i = 0; i < prediction.size(); ++i) {
    abs_sum += std::abs(static_cast<double>(prediction[i]) - static_cast<double>(label[i]));
  }
  return 1.0 - abs_sum / (2.0 * static_cast<double>(prediction.size()));
}

// Exponential update toward the observed score for every sampled bin.
inline void update_weights(AugmentPolicy& policy, std::span<const UpdateHandle> handles, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("update_weights: omega must be in [0, 1]");
  for (const UpdateHandle& h : handles) {
    const double m = policy.weight(h.kind, h.param, h.bin);
    policy.set_weight(h.kind, h.param, h.bin, policy.rho() * m + (1.0 - policy.rho()) * omega);
  }
}

}  // namespace remix
