#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "remix/prob.hpp"

namespace remix {

// Running statistics that feed distribution alignment:
//  - a ring buffer of recent batch-mean predictions on unlabeled weak views,
//  - cumulative class counts of labeled examples seen by the training loop.
class GuessState {
 public:
  explicit GuessState(int num_classes, int window = 128)
      : num_classes_(num_classes), window_(window), label_counts_(static_cast<size_t>(num_classes), 0) {
    if (num_classes < 2) throw std::invalid_argument("GuessState: need at least two classes");
    if (window < 1) throw std::invalid_argument("GuessState: window must be positive");
    buffer_.assign(static_cast<size_t>(window), ProbVector(static_cast<size_t>(num_classes), 0.0f));
  }

  int num_classes() const { return num_classes_; }
  int window() const { return window_; }
  int buffered() const { return static_cast<int>(count_); }
  int head() const { return static_cast<int>(head_); }
  int64_t total_labels() const { return total_labels_; }
  std::span<const int64_t> label_counts() const { return label_counts_; }
  const ProbVector& buffer_entry(int i) const { return buffer_[i]; }

  void record_prediction_mean(const ProbVector& mean_prediction) {
    if (static_cast<int>(mean_prediction.size()) != num_classes_) {
      throw std::invalid_argument("GuessState: prediction size mismatch");
    }
    buffer_[head_] = mean_prediction;
    head_ = (head_ + 1) % buffer_.size();
    if (count_ < buffer_.size()) ++count_;
  }

  void record_label_counts(std::span<const int64_t> counts) {
    if (static_cast<int>(counts.size()) != num_classes_) {
      throw std::invalid_argument("GuessState: label count size mismatch");
    }
    for (int c = 0; c < num_classes_; ++c) {
      if (counts[c] < 0) throw std::invalid_argument("GuessState: negative label count");
      label_counts_[c] += counts[c];
      total_labels_ += counts[c];
    }
  }

  // Mean of the buffered batch means; uniform before anything is recorded.
  ProbVector prediction_marginal() const {
    if (count_ == 0) return uniform_prob(num_classes_);
    std::vector<double> acc(static_cast<size_t>(num_classes_), 0.0);
    for (size_t i = 0; i < count_; ++i) {
      for (int c = 0; c < num_classes_; ++c) acc[c] += buffer_[i][c];
    }
    ProbVector out(static_cast<size_t>(num_classes_));
    for (int c = 0; c < num_classes_; ++c) out[c] = static_cast<float>(acc[c] / static_cast<double>(count_));
    normalize_in_place(out);
    return out;
  }

  // Add-one smoothed label marginal: (count_c + 1) / (total + classes).
  ProbVector label_marginal() const {
    ProbVector out(static_cast<size_t>(num_classes_));
    const double denom = static_cast<double>(total_labels_ + num_classes_);
    for (int c = 0; c < num_classes_; ++c) {
      out[c] = static_cast<float>(static_cast<double>(label_counts_[c] + 1) / denom);
    }
    return out;
  }

  // Checkpoint restore path.
  void restore(std::span<const float> flat_buffer, int count, int head,
               std::span<const int64_t> counts, int64_t total) {
    if (flat_buffer.size() != buffer_.size() * static_cast<size_t>(num_classes_) ||
        counts.size() != label_counts_.size() || count < 0 || count > window_ || head < 0 ||
        head >= static_cast<int>(buffer_.size())) {
      throw std::invalid_argument("GuessState: malformed restore payload");
    }
    for (size_t i = 0; i < buffer_.size(); ++i) {
      for (int c = 0; c < num_classes_; ++c) buffer_[i][c] = flat_buffer[i * num_classes_ + c];
    }
    count_ = static_cast<size_t>(count);
    head_ = static_cast<size_t>(head);
    std::copy(counts.begin(), counts.end(), label_counts_.begin());
    total_labels_ = total;
  }

 private:
  int num_classes_;
  int window_;
  std::vector<ProbVector> buffer_;
  size_t head_ = 0;
  size_t count_ = 0;
  std::vector<int64_t> label_counts_;
  int64_t total_labels_ = 0;
};

// Records one training step's observations. The caller invokes this after
// assembling the step's batch, so alignment always lags by at least one step.
inline void update_guess_state(GuessState& state, const ProbVector& batch_mean_prediction,
                               std::span<const int64_t> labels_seen) {
  state.record_prediction_mean(batch_mean_prediction);
  state.record_label_counts(labels_seen);
}

}  // namespace remix
