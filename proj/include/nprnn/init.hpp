#pragma once

// Weight initializers: the eight recurrent recipes plus the input (alpha-scaled
// Gaussian) and output (Glorot) layers.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "nprnn/dynamics.hpp"
#include "nprnn/linalg.hpp"
#include "nprnn/net.hpp"

namespace nprnn {

enum class InitKind {
  Identity,
  ScaledIdentity,
  NormalizedPositiveDefinite,
  NormalizedGaussian,
  Orthogonal,
  Gaussian,
  PlainGaussian,
};

struct InitScheme {
  InitKind kind = InitKind::NormalizedPositiveDefinite;
  double scale = 1.0;  // ScaledIdentity only
  Activation activation = Activation::ReLU;

  static InitScheme irnn() { return {InitKind::Identity, 1.0, Activation::ReLU}; }
  static InitScheme small_irnn() { return {InitKind::ScaledIdentity, 0.01, Activation::ReLU}; }
  static InitScheme np_rnn() { return {InitKind::NormalizedPositiveDefinite, 1.0, Activation::ReLU}; }
  static InitScheme np_tanh_rnn() { return {InitKind::NormalizedPositiveDefinite, 1.0, Activation::Tanh}; }
  static InitScheme n_rnn() { return {InitKind::NormalizedGaussian, 1.0, Activation::ReLU}; }
  static InitScheme o_rnn() { return {InitKind::Orthogonal, 1.0, Activation::ReLU}; }
  static InitScheme g_rnn() { return {InitKind::Gaussian, 1.0, Activation::ReLU}; }
  static InitScheme s_rnn() { return {InitKind::PlainGaussian, 1.0, Activation::ReLU}; }
};

/// Accepts the table names (IRNN, iRNN, np-RNN, np-tanhRNN, nRNN, oRNN, gRNN,
/// sRNN) and the short aliases used on the command line.
inline InitScheme parse_scheme(std::string_view name) {
  if (name == "IRNN" || name == "identity") return InitScheme::irnn();
  if (name == "iRNN" || name == "scaled-identity") return InitScheme::small_irnn();
  if (name == "np-RNN" || name == "np") return InitScheme::np_rnn();
  if (name == "np-tanhRNN" || name == "np-tanh") return InitScheme::np_tanh_rnn();
  if (name == "nRNN" || name == "normalized-gaussian") return InitScheme::n_rnn();
  if (name == "oRNN" || name == "orthogonal") return InitScheme::o_rnn();
  if (name == "gRNN" || name == "gaussian") return InitScheme::g_rnn();
  if (name == "sRNN" || name == "plain") return InitScheme::s_rnn();
  throw ContractViolation("unknown init scheme '" + std::string(name) + "'");
}

inline std::string scheme_name(const InitScheme& s) {
  switch (s.kind) {
    case InitKind::Identity: return "IRNN";
    case InitKind::ScaledIdentity: return s.scale == 0.01 ? "iRNN" : "scaled-identity(" + std::to_string(s.scale) + ")";
    case InitKind::NormalizedPositiveDefinite: return s.activation == Activation::Tanh ? "np-tanhRNN" : "np-RNN";
    case InitKind::NormalizedGaussian: return "nRNN";
    case InitKind::Orthogonal: return "oRNN";
    case InitKind::Gaussian: return "gRNN";
    case InitKind::PlainGaussian: return "sRNN";
  }
  return "?";
}

template <typename Scalar = double>
Matrix<Scalar> identity_init(Eigen::Index n, Scalar scale = Scalar(1)) {
  require(n >= 1, "identity_init: n must be >= 1");
  require(scale > Scalar(0), "identity_init: scale must be positive");
  return scale * Matrix<Scalar>::Identity(n, n);
}

/// Normalized positive-definite recurrent matrix:
///   A = R^T R / n,  e = max eig(I + A),  W = (I + A) / e
/// with R standard normal. W is symmetric PD with top eigenvalue 1.
template <typename Scalar = double>
Matrix<Scalar> np_recurrent_init(Eigen::Index n, Rng& rng) {
  require(n >= 1, "np_recurrent_init: n must be >= 1");
  const Matrix<Scalar> r = gaussian_matrix<Scalar>(n, n, Scalar(0), Scalar(1), rng);
  Matrix<Scalar> w = r.transpose() * r;
  w /= static_cast<Scalar>(n);
  w += Matrix<Scalar>::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) w(j, i) = w(i, j);
  const Scalar e = eigh_symmetric(w).values(0);
  w /= e;
  return w;
}

template <typename Scalar = double>
Matrix<Scalar> orthogonal_init(Eigen::Index n, Rng& rng) {
  require(n >= 1, "orthogonal_init: n must be >= 1");
  return qr_householder(gaussian_matrix<Scalar>(n, n, Scalar(0), Scalar(1), rng)).q;
}

// Entries i.i.d. Normal(0, 1/n).
template <typename Scalar = double>
Matrix<Scalar> gaussian_recurrent_init(Eigen::Index n, Rng& rng) {
  require(n >= 1, "gaussian_recurrent_init: n must be >= 1");
  return gaussian_matrix<Scalar>(n, n, Scalar(0), Scalar(1) / static_cast<Scalar>(n), rng);
}

// Normal(0, 1/n) sample rescaled to unit spectral radius.
template <typename Scalar = double>
Matrix<Scalar> normalized_gaussian_init(Eigen::Index n, Rng& rng) {
  Matrix<Scalar> g = gaussian_recurrent_init<Scalar>(n, rng);
  const Scalar radius = spectral_radius(g);
  require(radius > Scalar(0), "normalized_gaussian_init: degenerate sample with zero spectral radius");
  return g / radius;
}

/// Input-weight scale sqrt(2) * exp(1.2 / (max(n, 6) - 2.4)).
inline double alpha(Eigen::Index n) {
  require(n >= 1, "alpha: n must be >= 1");
  const double clamped = static_cast<double>(std::max<Eigen::Index>(n, 6));
  return std::sqrt(2.0) * std::exp(1.2 / (clamped - 2.4));
}

// m x n_in, entries alpha(m) * Normal(0, 1/m).
template <typename Scalar = double>
Matrix<Scalar> input_weight_init(Eigen::Index m, Eigen::Index n_in, Rng& rng) {
  require(m >= 1 && n_in >= 1, "input_weight_init: dimensions must be >= 1");
  return static_cast<Scalar>(alpha(m)) *
         gaussian_matrix<Scalar>(m, n_in, Scalar(0), Scalar(1) / static_cast<Scalar>(m), rng);
}

// c x m Glorot normal: variance 2 / (fan_in + fan_out) with fan_in = m, fan_out = c.
template <typename Scalar = double>
Matrix<Scalar> output_weight_init(Eigen::Index c, Eigen::Index m, Rng& rng) {
  require(c >= 1 && m >= 1, "output_weight_init: dimensions must be >= 1");
  return gaussian_matrix<Scalar>(c, m, Scalar(0), Scalar(2) / static_cast<Scalar>(m + c), rng);
}

template <typename Scalar = double>
Matrix<Scalar> recurrent_init(const InitScheme& scheme, Eigen::Index n, Rng& rng) {
  switch (scheme.kind) {
    case InitKind::Identity: return identity_init<Scalar>(n, Scalar(1));
    case InitKind::ScaledIdentity: return identity_init<Scalar>(n, static_cast<Scalar>(scheme.scale));
    case InitKind::NormalizedPositiveDefinite: return np_recurrent_init<Scalar>(n, rng);
    case InitKind::NormalizedGaussian: return normalized_gaussian_init<Scalar>(n, rng);
    case InitKind::Orthogonal: return orthogonal_init<Scalar>(n, rng);
    case InitKind::Gaussian:
    case InitKind::PlainGaussian: return gaussian_recurrent_init<Scalar>(n, rng);
  }
  throw ContractViolation("recurrent_init: unknown scheme");
}

/// Draws W_hh, then W_hx, then W_yh from `rng`; biases start at zero.
template <typename Scalar = double>
RnnParams<Scalar> build_network(const InitScheme& scheme, Eigen::Index n_in, Eigen::Index m, Eigen::Index c,
                                Rng& rng, OutputKind output = OutputKind::Linear) {
  require(n_in >= 1 && m >= 1 && c >= 1, "build_network: dimensions must be >= 1");
  RnnParams<Scalar> p;
  p.activation = scheme.activation;
  p.output = output;
  p.w_hh = recurrent_init<Scalar>(scheme, m, rng);
  p.w_hx = input_weight_init<Scalar>(m, n_in, rng);
  p.w_yh = output_weight_init<Scalar>(c, m, rng);
  p.b_h = Vector<Scalar>::Zero(m);
  p.b_y = Vector<Scalar>::Zero(c);
  return p;
}

template <typename Scalar>
struct SpectrumReport {
  Vector<Scalar> eigenvalue_magnitudes;  // descending
  bool is_symmetric = false;
  bool is_positive_definite = false;
  Scalar max_eig = 0;
  RegimeClass regime = RegimeClass::GlobalStableOrigin;
};

/// Eigenvalue magnitudes (Jacobi for symmetric input, Hessenberg/QR otherwise),
/// definiteness flags and the phase-space regime.
template <typename Derived>
SpectrumReport<typename Derived::Scalar> spectrum_report(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  require(w.rows() == w.cols(), "spectrum_report: matrix is not square");
  SpectrumReport<Scalar> rep;
  rep.is_symmetric = is_symmetric(w, Scalar(1e-10));
  std::vector<Scalar> mags;
  if (rep.is_symmetric) {
    const auto eig = eigh_symmetric(w);
    rep.is_positive_definite = eig.values(eig.values.size() - 1) > Scalar(0);
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) mags.push_back(std::abs(eig.values(k)));
  } else {
    for (const auto& lambda : general_eigenvalues(w)) mags.push_back(std::abs(lambda));
  }
  std::sort(mags.begin(), mags.end(), std::greater<>());
  rep.eigenvalue_magnitudes = Eigen::Map<const Vector<Scalar>>(mags.data(), static_cast<Eigen::Index>(mags.size()));
  rep.max_eig = mags.front();
  rep.regime = classify_regime(rep.eigenvalue_magnitudes);
  return rep;
}

}  // namespace nprnn
