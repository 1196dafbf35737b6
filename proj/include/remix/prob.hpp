#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace remix {

// Class distribution: nonnegative floats summing to 1 within 1e-6.
using ProbVector = std::vector<float>;

inline constexpr double kProbEps = 1e-6;

inline void normalize_in_place(ProbVector& v) {
  double sum = 0.0;
  for (float x : v) sum += x;
  if (sum < kProbEps) sum = kProbEps;
  for (float& x : v) x = static_cast<float>(x / sum);
}

inline ProbVector normalized(ProbVector v) {
  normalize_in_place(v);
  return v;
}

inline bool is_prob_vector(std::span<const float> v, double tol = 1e-5) {
  if (v.empty()) return false;
  double sum = 0.0;
  for (float x : v) {
    if (x < 0.0f) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline ProbVector uniform_prob(int n) {
  return ProbVector(static_cast<size_t>(n), 1.0f / static_cast<float>(n));
}

inline ProbVector one_hot(int n, int index) {
  if (index < 0 || index >= n) throw std::invalid_argument("one_hot: index out of range");
  ProbVector v(static_cast<size_t>(n), 0.0f);
  v[index] = 1.0f;
  return v;
}

// -sum p ln p, with 0 ln 0 = 0.
inline double entropy(std::span<const float> p) {
  double h = 0.0;
  for (float x : p) {
    if (x > 0.0f) h -= static_cast<double>(x) * std::log(static_cast<double>(x));
  }
  return h;
}

// -sum target ln(predicted), predicted floored at eps.
inline double cross_entropy(std::span<const float> target, std::span<const float> predicted) {
  if (target.size() != predicted.size() || target.empty()) {
    throw std::invalid_argument("cross_entropy: vectors must be nonempty and the same length");
  }
  double ce = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    if (target[i] > 0.0f) {
      ce -= static_cast<double>(target[i]) * std::log(std::max(static_cast<double>(predicted[i]), kProbEps));
    }
  }
  return ce;
}

// sum p ln(p/q) with the denominator floored at eps; clamped at zero so the
// flooring can never report a negative divergence.
inline double kl_divergence(std::span<const float> p, std::span<const float> q) {
  if (p.size() != q.size() || p.empty()) {
    throw std::invalid_argument("kl_divergence: vectors must be nonempty and the same length");
  }
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0f) {
      kl += static_cast<double>(p[i]) *
            std::log(static_cast<double>(p[i]) / std::max(static_cast<double>(q[i]), kProbEps));
    }
  }
  return std::max(kl, 0.0);
}

// Temperature sharpening: normalize(q^(1/T)). T -> 0 approaches the argmax
// one-hot; T = 1 is the identity; one-hot inputs are fixed points.
inline ProbVector sharpen(const ProbVector& q, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("sharpen: temperature must be positive");
  ProbVector out(q.size());
  double sum = 0.0;
  const double inv_t = 1.0 / temperature;
  for (size_t i = 0; i < q.size(); ++i) {
    const double p = q[i] > 0.0f ? std::pow(static_cast<double>(q[i]), inv_t) : 0.0;
    out[i] = static_cast<float>(p);
    sum += p;
  }
  if (sum < kProbEps) {
    // extreme temperatures can underflow every entry; recover the argmax
    size_t best = 0;
    for (size_t i = 1; i < q.size(); ++i) {
      if (q[i] > q[best]) best = i;
    }
    std::fill(out.begin(), out.end(), 0.0f);
    out[best] = 1.0f;
    return out;
  }
  for (float& x : out) x = static_cast<float>(x / sum);
  return out;
}

// Distribution alignment: scale the guess by the ratio of the labeled class
// marginal to the running average of recent guesses, then renormalize.
inline ProbVector align(const ProbVector& q, const ProbVector& label_marginal,
                        const ProbVector& running_marginal) {
  if (q.size() != label_marginal.size() || q.size() != running_marginal.size() || q.empty()) {
    throw std::invalid_argument("align: vectors must be nonempty and the same length");
  }
  ProbVector out(q.size());
  double sum = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    const double scaled = static_cast<double>(q[i]) * static_cast<double>(label_marginal[i]) /
                          std::max(static_cast<double>(running_marginal[i]), kProbEps);
    out[i] = static_cast<float>(scaled);
    sum += scaled;
  }
  if (sum < kProbEps) return uniform_prob(static_cast<int>(q.size()));
  for (float& x : out) x = static_cast<float>(x / sum);
  return out;
}

// Split of the summed prediction information:
//   fairness    = entropy of the mean prediction,
//   confidence  = mean entropy of the individual predictions,
//   mutual_information = fairness - confidence,
// which equals the mutual information between the example index (uniform)
// and the class drawn from that example's prediction.
struct InfoDecomposition {
  double fairness = 0.0;
  double confidence = 0.0;
  double mutual_information = 0.0;
};

inline InfoDecomposition mutual_info_decomposition(std::span<const ProbVector> predictions) {
  if (predictions.empty()) throw std::invalid_argument("mutual_info_decomposition: no predictions");
  const size_t n = predictions.size();
  const size_t classes = predictions[0].size();
  std::vector<double> mean(classes, 0.0);
  double mean_entropy = 0.0;
  for (const ProbVector& p : predictions) {
    if (p.size() != classes) throw std::invalid_argument("mutual_info_decomposition: ragged predictions");
    for (size_t c = 0; c < classes; ++c) mean[c] += p[c];
    mean_entropy += entropy(p);
  }
  mean_entropy /= static_cast<double>(n);
  double mean_h = 0.0;
  for (size_t c = 0; c < classes; ++c) {
    const double m = mean[c] / static_cast<double>(n);
    if (m > 0.0) mean_h -= m * std::log(m);
  }
  return {mean_h, mean_entropy, mean_h - mean_entropy};
}

}  // namespace remix
