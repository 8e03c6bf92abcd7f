#pragma once

// SGD and RMSprop updates, global-norm gradient clipping, and the stepwise
// "cooled" learning-rate schedule.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nprnn/net.hpp"

namespace nprnn {

enum class OptimizerKind { SGD, RMSprop };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::SGD ? "sgd" : "rmsprop"; }

inline OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd" || name == "SGD") return OptimizerKind::SGD;
  if (name == "rmsprop" || name == "RMSprop") return OptimizerKind::RMSprop;
  throw ContractViolation("unknown optimizer '" + std::string(name) + "'");
}

template <typename Scalar>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::SGD;
  Scalar lr0 = Scalar(1e-3);
  std::optional<Scalar> clip;
  Scalar rms_decay = Scalar(0.9);
  Scalar rms_eps = Scalar(1e-8);
  std::optional<Gradients<Scalar>> rms_cache;  // allocated on the first RMSprop step

  void validate() const {
    require(lr0 > Scalar(0), "optimizer: lr0 must be positive");
    require(!clip || *clip > Scalar(0), "optimizer: clip must be positive");
    require(rms_decay > Scalar(0) && rms_decay < Scalar(1), "optimizer: rms_decay must lie in (0, 1)");
    require(rms_eps > Scalar(0), "optimizer: rms_eps must be positive");
  }
};

/// Rescales all five arrays together so the global L2 norm is at most `ceiling`.
template <typename Scalar>
Gradients<Scalar> clip_gradients(Gradients<Scalar> g, Scalar ceiling) {
  require(ceiling > Scalar(0), "clip_gradients: ceiling must be positive");
  const Scalar norm = g.norm();
  if (norm > ceiling) g *= ceiling / norm;
  return g;
}

// theta <- theta - lr * g
template <typename Scalar>
RnnParams<Scalar> sgd_step(RnnParams<Scalar> params, const Gradients<Scalar>& g, Scalar lr) {
  require(params.same_shape(g), "sgd_step: gradient shape does not match parameters");
  params.zip(g, [lr](auto& theta, const auto& grad) { theta -= lr * grad; });
  return params;
}

/// cache <- decay * cache + (1 - decay) * g^2
/// theta <- theta - lr * g / (sqrt(cache) + eps)
template <typename Scalar>
RnnParams<Scalar> rmsprop_step(RnnParams<Scalar> params, const Gradients<Scalar>& g, OptimizerState<Scalar>& state,
                               Scalar lr) {
  require(state.kind == OptimizerKind::RMSprop, "rmsprop_step: optimizer state is not RMSprop");
  require(params.same_shape(g), "rmsprop_step: gradient shape does not match parameters");
  if (!state.rms_cache) state.rms_cache = g.zeros_like();
  require(state.rms_cache->same_shape(g), "rmsprop_step: cache shape does not match gradients");

  const Scalar decay = state.rms_decay;
  const Scalar eps = state.rms_eps;
  state.rms_cache->zip(g, [decay](auto& cache, const auto& grad) {
    cache = decay * cache + (Scalar(1) - decay) * grad.cwiseAbs2();
  });
  Gradients<Scalar> step = g;
  step.zip(*state.rms_cache, [lr, eps](auto& s, const auto& cache) {
    s = (lr * s.array() / (cache.array().sqrt() + eps)).matrix();
  });
  params.zip(step, [](auto& theta, const auto& s) { theta -= s; });
  return params;
}

template <typename Scalar>
RnnParams<Scalar> rmsprop_step(RnnParams<Scalar> params, const Gradients<Scalar>& g, OptimizerState<Scalar>& state) {
  return rmsprop_step(std::move(params), g, state, state.lr0);
}

struct CoolingPoint {
  std::size_t epoch = 0;
  double divisor = 10.0;
};

struct LrSchedule {
  std::size_t total_epochs = 1;
  std::vector<CoolingPoint> cooling_points;

  void validate() const {
    require(total_epochs >= 1, "schedule: total_epochs must be >= 1");
    for (std::size_t i = 0; i < cooling_points.size(); ++i) {
      require(cooling_points[i].divisor > 1.0, "schedule: cooling divisors must exceed 1");
      require(i == 0 || cooling_points[i].epoch > cooling_points[i - 1].epoch,
              "schedule: cooling epochs must be strictly increasing");
    }
  }
};

/// `times` coolings by `divisor` at floor(k E / (times + 1)), k = 1..times.
inline LrSchedule equal_interval_schedule(std::size_t epochs, std::size_t times = 2, double divisor = 10.0) {
  LrSchedule s{epochs, {}};
  for (std::size_t k = 1; k <= times; ++k) s.cooling_points.push_back({k * epochs / (times + 1), divisor});
  s.validate();
  return s;
}

// lr0 divided by every divisor whose cooling epoch is <= epoch (epochs are 0-based).
inline double lr_at(const LrSchedule& schedule, double lr0, std::size_t epoch) {
  require(epoch < schedule.total_epochs, "lr_at: epoch " + std::to_string(epoch) + " out of range");
  double lr = lr0;
  for (const auto& c : schedule.cooling_points)
    if (c.epoch <= epoch) lr /= c.divisor;
  return lr;
}

}  // namespace nprnn
