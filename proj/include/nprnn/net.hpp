#pragma once

// The simple recurrent network:
//   s_t = W_hx x_t + W_hh h_{t-1} + b_h
//   h_t = f(s_t)
//   o_t = W_yh h_t + b_y
//   y_t = g(o_t)
// with exact backpropagation through time and a finite-difference oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "nprnn/activation.hpp"
#include "nprnn/linalg.hpp"

namespace nprnn {

enum class OutputKind { Linear, Softmax };
enum class LossKind { MSE, CrossEntropy };

inline std::string_view to_string(OutputKind o) { return o == OutputKind::Linear ? "linear" : "softmax"; }
inline std::string_view to_string(LossKind l) { return l == LossKind::MSE ? "mse" : "cross_entropy"; }

inline OutputKind parse_output_kind(std::string_view name) {
  if (name == "linear") return OutputKind::Linear;
  if (name == "softmax") return OutputKind::Softmax;
  throw ContractViolation("unknown output kind '" + std::string(name) + "'");
}

inline LossKind loss_for(OutputKind o) { return o == OutputKind::Linear ? LossKind::MSE : LossKind::CrossEntropy; }

// Column t holds the input vector x_t.
template <typename Scalar>
using Sequence = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// The five trainable arrays. Also used as the gradient container.
template <typename Scalar>
struct ParamArrays {
  Matrix<Scalar> w_hx;  // m x n_in
  Matrix<Scalar> w_hh;  // m x m
  Matrix<Scalar> w_yh;  // c x m
  Vector<Scalar> b_h;   // m
  Vector<Scalar> b_y;   // c

  template <typename F>
  void for_each(F&& f) {
    f(w_hx); f(w_hh); f(w_yh); f(b_h); f(b_y);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(w_hx); f(w_hh); f(w_yh); f(b_h); f(b_y);
  }
  // Visits matching arrays of two containers pairwise.
  template <typename F>
  void zip(const ParamArrays& other, F&& f) {
    f(w_hx, other.w_hx); f(w_hh, other.w_hh); f(w_yh, other.w_yh); f(b_h, other.b_h); f(b_y, other.b_y);
  }

  Scalar squared_norm() const {
    Scalar sum = 0;
    for_each([&](const auto& a) { sum += a.squaredNorm(); });
    return sum;
  }
  Scalar norm() const { return std::sqrt(squared_norm()); }

  std::size_t size() const {
    std::size_t n = 0;
    for_each([&](const auto& a) { n += static_cast<std::size_t>(a.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const auto& a) { ok = ok && a.allFinite(); });
    return ok;
  }

  bool same_shape(const ParamArrays& o) const {
    return w_hx.rows() == o.w_hx.rows() && w_hx.cols() == o.w_hx.cols() && w_hh.rows() == o.w_hh.rows() &&
           w_hh.cols() == o.w_hh.cols() && w_yh.rows() == o.w_yh.rows() && w_yh.cols() == o.w_yh.cols() &&
           b_h.size() == o.b_h.size() && b_y.size() == o.b_y.size();
  }

  ParamArrays zeros_like() const {
    ParamArrays z;
    z.w_hx = Matrix<Scalar>::Zero(w_hx.rows(), w_hx.cols());
    z.w_hh = Matrix<Scalar>::Zero(w_hh.rows(), w_hh.cols());
    z.w_yh = Matrix<Scalar>::Zero(w_yh.rows(), w_yh.cols());
    z.b_h = Vector<Scalar>::Zero(b_h.size());
    z.b_y = Vector<Scalar>::Zero(b_y.size());
    return z;
  }

  ParamArrays& operator+=(const ParamArrays& o) {
    zip(o, [](auto& a, const auto& b) { a += b; });
    return *this;
  }
  ParamArrays& operator*=(Scalar k) {
    for_each([k](auto& a) { a *= k; });
    return *this;
  }

  // Flat views in the fixed order w_hx, w_hh, w_yh, b_h, b_y (row-major within each).
  Scalar& flat(std::size_t index);
};

template <typename Scalar>
Scalar& ParamArrays<Scalar>::flat(std::size_t index) {
  Scalar* found = nullptr;
  for_each([&](auto& a) {
    if (found) return;
    const auto n = static_cast<std::size_t>(a.size());
    if (index < n) {
      found = a.data() + index;
    } else {
      index -= n;
    }
  });
  require(found != nullptr, "ParamArrays::flat: index out of range");
  return *found;
}

template <typename Scalar>
using Gradients = ParamArrays<Scalar>;

template <typename Scalar>
struct RnnParams : ParamArrays<Scalar> {
  Activation activation = Activation::ReLU;
  OutputKind output = OutputKind::Linear;

  Eigen::Index n_in() const { return this->w_hx.cols(); }
  Eigen::Index hidden() const { return this->w_hh.rows(); }
  Eigen::Index n_out() const { return this->w_yh.rows(); }

  // Throws ContractViolation unless shapes are mutually consistent and finite.
  void validate() const {
    const auto m = hidden();
    require(m >= 1 && n_in() >= 1 && n_out() >= 1, "RnnParams: empty dimension");
    require(this->w_hx.rows() == m, "RnnParams: W_hx rows != hidden size");
    require(this->w_hh.cols() == m, "RnnParams: W_hh is not square");
    require(this->w_yh.cols() == m, "RnnParams: W_yh cols != hidden size");
    require(this->b_h.size() == m, "RnnParams: b_h length != hidden size");
    require(this->b_y.size() == n_out(), "RnnParams: b_y length != output size");
    require(this->all_finite(), "RnnParams: non-finite entry");
  }
};

template <typename Scalar>
struct ForwardTrace {
  Sequence<Scalar> inputs;       // n_in x T
  Sequence<Scalar> pre;          // m x T, column t-1 holds s_t
  Sequence<Scalar> hidden;       // m x (T+1), column 0 holds h_0
  Vector<Scalar> output;         // o_T
  Vector<Scalar> prediction;     // y_T
  OutputKind output_kind = OutputKind::Linear;

  Eigen::Index steps() const { return inputs.cols(); }
};

// Regression targets are vectors z; classification targets are labels.
template <typename Scalar>
using Target = std::variant<Vector<Scalar>, std::size_t>;

template <typename Scalar>
Target<Scalar> scalar_target(Scalar z) {
  Vector<Scalar> v(1);
  v(0) = z;
  return v;
}

template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& o) {
  using Plain = typename Derived::PlainObject;
  Plain e = (o.array() - o.maxCoeff()).exp().matrix();
  return Plain(e / e.sum());
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& o) {
  const auto top = o.maxCoeff();
  return top + std::log((o.array() - top).exp().sum());
}

/// Runs the recurrence over every column of `x` starting from `h0`.
/// Throws NumericOverflow naming the first step whose pre-activation is not finite.
template <typename Scalar>
ForwardTrace<Scalar> forward(const RnnParams<Scalar>& params, const std::type_identity_t<Sequence<Scalar>>& x,
                             const std::type_identity_t<Vector<Scalar>>& h0) {
  const Eigen::Index m = params.hidden();
  const Eigen::Index steps = x.cols();
  require(steps >= 1, "forward: empty input sequence");
  require(x.rows() == params.n_in(), "forward: input width " + std::to_string(x.rows()) +
                                         " does not match W_hx (" + std::to_string(params.n_in()) + ")");
  require(h0.size() == m, "forward: h0 length does not match hidden size");
  require(params.w_hh.rows() == m && params.w_hh.cols() == m && params.b_h.size() == m,
          "forward: inconsistent hidden-layer shapes");
  require(params.w_yh.cols() == m && params.b_y.size() == params.n_out(),
          "forward: inconsistent output-layer shapes");

  ForwardTrace<Scalar> tr;
  tr.inputs = x;
  tr.output_kind = params.output;
  tr.pre.noalias() = params.w_hx * x;
  tr.pre.colwise() += params.b_h;
  tr.hidden.resize(m, steps + 1);
  tr.hidden.col(0) = h0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    tr.pre.col(t).noalias() += params.w_hh * tr.hidden.col(t);
    if (!tr.pre.col(t).allFinite())
      throw NumericOverflow("forward: non-finite pre-activation at step " + std::to_string(t + 1),
                            static_cast<std::size_t>(t + 1));
    tr.hidden.col(t + 1) = activate(tr.pre.col(t), params.activation);
  }
  tr.output.noalias() = params.w_yh * tr.hidden.col(steps);
  tr.output += params.b_y;
  if (!tr.output.allFinite())
    throw NumericOverflow("forward: non-finite output at step " + std::to_string(steps),
                          static_cast<std::size_t>(steps));
  tr.prediction = params.output == OutputKind::Softmax ? Vector<Scalar>(softmax(tr.output)) : tr.output;
  return tr;
}

template <typename Scalar>
ForwardTrace<Scalar> forward(const RnnParams<Scalar>& params, const std::type_identity_t<Sequence<Scalar>>& x) {
  return forward(params, x, Vector<Scalar>(Vector<Scalar>::Zero(params.hidden())));
}

/// Per-step outputs y_t for every t (the trace keeps only the final one).
template <typename Scalar>
Sequence<Scalar> outputs_all(const RnnParams<Scalar>& params, const ForwardTrace<Scalar>& tr) {
  Sequence<Scalar> o = params.w_yh * tr.hidden.rightCols(tr.steps());
  o.colwise() += params.b_y;
  if (params.output == OutputKind::Softmax)
    for (Eigen::Index t = 0; t < o.cols(); ++t) o.col(t) = softmax(o.col(t));
  return o;
}

namespace detail {

inline void check_loss_pairing(OutputKind output, LossKind kind) {
  require(kind != LossKind::MSE || output == OutputKind::Linear, "MSE loss requires a linear output layer");
  require(kind != LossKind::CrossEntropy || output == OutputKind::Softmax,
          "cross-entropy loss requires a softmax output layer");
}

template <typename Scalar>
std::size_t checked_label(const Target<Scalar>& target, Eigen::Index classes) {
  const auto* label = std::get_if<std::size_t>(&target);
  require(label != nullptr, "cross-entropy loss needs a class label target");
  require(*label < static_cast<std::size_t>(classes),
          "label " + std::to_string(*label) + " out of range for " + std::to_string(classes) + " classes");
  return *label;
}

template <typename Scalar>
const Vector<Scalar>& checked_vector(const Target<Scalar>& target, Eigen::Index size) {
  const auto* z = std::get_if<Vector<Scalar>>(&target);
  require(z != nullptr, "MSE loss needs a vector target");
  require(z->size() == size, "MSE target length does not match output size");
  return *z;
}

}  // namespace detail

/// Loss at the final step: squared error ||y_T - z||^2, or -log y_T[label].
template <typename Scalar>
Scalar loss(const ForwardTrace<Scalar>& tr, const Target<Scalar>& target, LossKind kind) {
  detail::check_loss_pairing(tr.output_kind, kind);
  if (kind == LossKind::MSE) {
    const auto& z = detail::checked_vector(target, tr.prediction.size());
    return (tr.prediction - z).squaredNorm();
  }
  const auto label = static_cast<Eigen::Index>(detail::checked_label(target, tr.output.size()));
  const Scalar at_label = tr.output(label);
  if (tr.output.maxCoeff() > at_label) return log_sum_exp(tr.output) - at_label;
  // Label is the arg-max: log1p form avoids cancelling two large terms when the loss is small.
  Scalar rest = 0;
  for (Eigen::Index j = 0; j < tr.output.size(); ++j)
    if (j != label) rest += std::exp(tr.output(j) - at_label);
  return std::log1p(rest);
}

/// Reverse-mode accumulation through the unrolled recurrence.
template <typename Scalar>
Gradients<Scalar> backward(const RnnParams<Scalar>& params, const ForwardTrace<Scalar>& tr,
                           const Target<Scalar>& target, LossKind kind) {
  detail::check_loss_pairing(params.output, kind);
  const Eigen::Index m = params.hidden();
  const Eigen::Index steps = tr.steps();
  require(tr.hidden.rows() == m && tr.hidden.cols() == steps + 1 && tr.pre.cols() == steps &&
              tr.inputs.rows() == params.n_in() && tr.output.size() == params.n_out(),
          "backward: trace does not match parameters");

  Vector<Scalar> d_out;
  if (kind == LossKind::MSE) {
    d_out = Scalar(2) * (tr.prediction - detail::checked_vector(target, tr.prediction.size()));
  } else {
    d_out = tr.prediction;
    d_out(static_cast<Eigen::Index>(detail::checked_label(target, tr.output.size()))) -= Scalar(1);
  }

  Gradients<Scalar> g;
  g.w_yh.noalias() = d_out * tr.hidden.col(steps).transpose();
  g.b_y = d_out;

  Sequence<Scalar> d_pre(m, steps);
  Vector<Scalar> d_hidden = params.w_yh.transpose() * d_out;
  const Sequence<Scalar> slope = activation_derivative(tr.pre, params.activation);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    d_pre.col(t) = d_hidden.cwiseProduct(slope.col(t));
    if (t > 0) d_hidden.noalias() = params.w_hh.transpose() * d_pre.col(t);
  }
  g.w_hh.noalias() = d_pre * tr.hidden.leftCols(steps).transpose();
  g.w_hx.noalias() = d_pre * tr.inputs.transpose();
  g.b_h = d_pre.rowwise().sum();
  return g;
}

/// Spectral norm of each step Jacobian dh_t/dh_{t-1} = diag(f'(s_t)) W_hh,
/// computed as sqrt(max eig(J^T J)).
template <typename Scalar>
std::vector<Scalar> jacobian_norms(const RnnParams<Scalar>& params, const ForwardTrace<Scalar>& tr) {
  const Sequence<Scalar> slope = activation_derivative(tr.pre, params.activation);
  std::vector<Scalar> norms;
  norms.reserve(static_cast<std::size_t>(tr.steps()));
  for (Eigen::Index t = 0; t < tr.steps(); ++t) {
    Matrix<Scalar> j = slope.col(t).asDiagonal() * params.w_hh;
    Matrix<Scalar> jtj = j.transpose() * j;
    jtj = Scalar(0.5) * (jtj + Matrix<Scalar>(jtj.transpose()));
    const Scalar top = eigh_symmetric(jtj).values(0);
    norms.push_back(std::sqrt(std::max(top, Scalar(0))));
  }
  return norms;
}

template <typename To, typename From>
RnnParams<To> cast_params(const RnnParams<From>& p) {
  RnnParams<To> out;
  out.activation = p.activation;
  out.output = p.output;
  out.w_hx = p.w_hx.template cast<To>();
  out.w_hh = p.w_hh.template cast<To>();
  out.w_yh = p.w_yh.template cast<To>();
  out.b_h = p.b_h.template cast<To>();
  out.b_y = p.b_y.template cast<To>();
  return out;
}

/// Largest relative disagreement between BPTT and central differences over
/// every parameter coordinate: |g_bptt - g_fd| / max(|g_bptt|, |g_fd|, 1e-8).
///
/// The difference quotients are evaluated in long double so that roundoff in
/// L(theta +- eps) stays far below the gradients being checked.
template <typename Scalar>
Scalar grad_check(const RnnParams<Scalar>& params, const std::type_identity_t<Sequence<Scalar>>& x,
                  const std::type_identity_t<Target<Scalar>>& target, LossKind kind, Scalar eps = Scalar(1e-5)) {
  using Wide = std::conditional_t<(sizeof(Scalar) < sizeof(long double)), long double, Scalar>;
  Gradients<Scalar> analytic = backward(params, forward(params, x), target, kind);

  RnnParams<Wide> probe = cast_params<Wide>(params);
  const Sequence<Wide> wide_x = x.template cast<Wide>();
  const Target<Wide> wide_target = std::visit(
      [](const auto& t) -> Target<Wide> {
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, std::size_t>) {
          return t;
        } else {
          return Vector<Wide>(t.template cast<Wide>());
        }
      },
      target);
  const Wide step = static_cast<Wide>(eps);

  Scalar worst = 0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    Wide& theta = probe.flat(i);
    const Wide saved = theta;
    theta = saved + step;
    const Wide up = loss(forward(probe, wide_x), wide_target, kind);
    theta = saved - step;
    const Wide down = loss(forward(probe, wide_x), wide_target, kind);
    theta = saved;
    const auto numeric = static_cast<Scalar>((up - down) / (Wide(2) * step));
    const Scalar exact = analytic.flat(i);
    const Scalar denom = std::max({std::abs(exact), std::abs(numeric), Scalar(1e-8)});
    worst = std::max(worst, std::abs(exact - numeric) / denom);
  }
  return worst;
}

}  // namespace nprnn
