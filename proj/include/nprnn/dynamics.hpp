#pragma once

// Phase-space analysis of the autonomous hidden-state recurrence
// h_t = f(W h_{t-1}) with zero input and zero bias.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nprnn/activation.hpp"
#include "nprnn/linalg.hpp"

namespace nprnn {

enum class RegimeClass { NeutrallyStable, GlobalStableOrigin, StableManifold, Divergent };

inline std::string_view to_string(RegimeClass r) {
  switch (r) {
    case RegimeClass::NeutrallyStable: return "NeutrallyStable";
    case RegimeClass::GlobalStableOrigin: return "GlobalStableOrigin";
    case RegimeClass::StableManifold: return "StableManifold";
    case RegimeClass::Divergent: return "Divergent";
  }
  return "?";
}

inline constexpr double kRegimeTol = 1e-6;
inline constexpr double kDivergenceCeiling = 1e6;
inline constexpr double kExtinctionFloor = 1e-12;

/// Labels a spectrum by its eigenvalue magnitudes (sorted descending):
///   Divergent           if |l|_max > 1 + tol
///   NeutrallyStable     if every |l| is within tol of 1
///   StableManifold      if |l|_max is within tol of 1 and some |l| < 1 - tol
///   GlobalStableOrigin  if |l|_max < 1 - tol
template <typename Derived>
RegimeClass classify_regime(const Eigen::MatrixBase<Derived>& magnitudes, double tol = kRegimeTol) {
  require(magnitudes.size() > 0, "classify_regime: empty spectrum");
  require(tol > 0.0, "classify_regime: tol must be positive");
  for (Eigen::Index k = 1; k < magnitudes.size(); ++k)
    require(magnitudes(k - 1) >= magnitudes(k), "classify_regime: magnitudes not sorted descending");

  const double top = static_cast<double>(magnitudes(0));
  const double bottom = static_cast<double>(magnitudes(magnitudes.size() - 1));
  if (top > 1.0 + tol) return RegimeClass::Divergent;
  if (top < 1.0 - tol) return RegimeClass::GlobalStableOrigin;
  if (bottom >= 1.0 - tol) return RegimeClass::NeutrallyStable;
  return RegimeClass::StableManifold;
}

enum class TrajectoryOutcome { Completed, Diverged, Extinct };

inline std::string_view to_string(TrajectoryOutcome o) {
  switch (o) {
    case TrajectoryOutcome::Completed: return "completed";
    case TrajectoryOutcome::Diverged: return "diverged";
    case TrajectoryOutcome::Extinct: return "extinct";
  }
  return "?";
}

template <typename Scalar>
struct TrajectoryRecord {
  std::vector<Vector<Scalar>> states;  // states[0] = h0
  std::vector<Scalar> norms;           // norms[t] = ||states[t]||_2
  std::optional<std::size_t> terminated_at;
  TrajectoryOutcome outcome = TrajectoryOutcome::Completed;
};

/// Iterates h_t = f(W h_{t-1}) for up to `steps` steps, stopping early when
/// the norm leaves (floor, ceiling]. Termination is recorded, never thrown.
template <typename DerivedW, typename DerivedH>
TrajectoryRecord<typename DerivedW::Scalar> simulate_autonomous(
    const Eigen::MatrixBase<DerivedW>& w, const Eigen::MatrixBase<DerivedH>& h0, std::size_t steps,
    Activation activation, double ceiling = kDivergenceCeiling, double floor = kExtinctionFloor) {
  using Scalar = typename DerivedW::Scalar;
  require(w.rows() == w.cols(), "simulate_autonomous: W is not square");
  require(h0.size() == w.rows(), "simulate_autonomous: h0 length does not match W");
  require(steps >= 1, "simulate_autonomous: steps must be >= 1");
  require(ceiling > floor && floor > 0.0, "simulate_autonomous: need ceiling > floor > 0");

  TrajectoryRecord<Scalar> rec;
  rec.states.reserve(steps + 1);
  rec.norms.reserve(steps + 1);
  rec.states.emplace_back(h0);
  rec.norms.push_back(rec.states.back().norm());

  Vector<Scalar> h = h0;
  for (std::size_t t = 1; t <= steps; ++t) {
    h = activate(Vector<Scalar>(w * h), activation);
    const Scalar norm = h.norm();
    rec.states.push_back(h);
    rec.norms.push_back(norm);
    if (!(norm <= Scalar(ceiling))) {
      rec.terminated_at = t;
      rec.outcome = TrajectoryOutcome::Diverged;
      break;
    }
    if (norm < Scalar(floor)) {
      rec.terminated_at = t;
      rec.outcome = TrajectoryOutcome::Extinct;
      break;
    }
  }
  return rec;
}

/// h' = P^T h, where the columns of P are the eigenvectors of symmetric W.
template <typename DerivedW, typename DerivedH>
Vector<typename DerivedW::Scalar> eigenbasis_transform(const Eigen::MatrixBase<DerivedW>& w,
                                                       const Eigen::MatrixBase<DerivedH>& h) {
  using Scalar = typename DerivedW::Scalar;
  require(w.rows() == w.cols() && is_symmetric(w, Scalar(1e-10)),
          "eigenbasis_transform: W must be symmetric");
  require(h.size() == w.rows(), "eigenbasis_transform: h length does not match W");
  const auto eig = eigh_symmetric(w);
  return eig.vectors.transpose() * h;
}

}  // namespace nprnn
