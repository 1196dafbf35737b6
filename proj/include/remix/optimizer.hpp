#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace remix {

struct OptimizerConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.02;
  bool coupled_decay = false;  // true folds decay into the gradient instead
  double ema_decay = 0.999;
};

// Adam moments plus a weight EMA used for evaluation.
struct OptimizerState {
  OptimizerConfig cfg;
  int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> ema;

  explicit OptimizerState(const OptimizerConfig& config = {}) : cfg(config) {
    if (cfg.lr <= 0.0) throw std::invalid_argument("optimizer: lr must be positive");
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
      throw std::invalid_argument("optimizer: betas must lie in [0, 1)");
    }
    if (cfg.ema_decay < 0.0 || cfg.ema_decay >= 1.0) {
      throw std::invalid_argument("optimizer: ema decay must lie in [0, 1)");
    }
  }

  void attach(std::span<const double> params) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
    ema.assign(params.begin(), params.end());
    step = 0;
  }
};

inline void ema_update(std::vector<double>& ema, std::span<const double> params, double decay) {
  if (ema.size() != params.size()) throw std::invalid_argument("ema_update: size mismatch");
  for (size_t i = 0; i < ema.size(); ++i) {
    ema[i] = decay * ema[i] + (1.0 - decay) * params[i];
  }
}

// One bias-corrected Adam step. Weight decay is decoupled by default
// (params *= 1 - lr * wd after the moment update); the coupled switch adds
// wd * param to the gradient instead. The EMA tracks the updated weights.
inline void adam_step(std::vector<double>& params, std::span<const double> grad, OptimizerState& state) {
  const size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n || state.ema.size() != n) {
    throw std::invalid_argument("adam_step: size mismatch (state not attached?)");
  }
  const OptimizerConfig& c = state.cfg;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const double shrink = 1.0 - c.lr * c.weight_decay;
  for (size_t i = 0; i < n; ++i) {
    double g = grad[i];
    if (c.coupled_decay) g += c.weight_decay * params[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    if (!c.coupled_decay) params[i] *= shrink;
    if (!std::isfinite(params[i])) {
      throw std::runtime_error("adam_step: parameter became non-finite");
    }
  }
  ema_update(state.ema, params, c.ema_decay);
}

}  // namespace remix
