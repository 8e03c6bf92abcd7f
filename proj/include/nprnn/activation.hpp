#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <string_view>

#include "nprnn/errors.hpp"

namespace nprnn {

// Hidden-unit nonlinearity f. Linear exists for smooth gradient checks.
enum class Activation { ReLU, Tanh, Linear };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "?";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu" || name == "ReLU") return Activation::ReLU;
  if (name == "tanh" || name == "Tanh") return Activation::Tanh;
  if (name == "linear" || name == "Linear") return Activation::Linear;
  throw ContractViolation("unknown activation '" + std::string(name) + "'");
}

template <typename Derived>
auto activate(const Eigen::MatrixBase<Derived>& s, Activation a) {
  using Scalar = typename Derived::Scalar;
  using Plain = typename Derived::PlainObject;
  switch (a) {
    case Activation::ReLU: return Plain(s.cwiseMax(Scalar(0)));
    case Activation::Tanh: return Plain(s.array().tanh().matrix());
    case Activation::Linear: break;
  }
  return Plain(s);
}

// f'(s). The ReLU derivative at exactly 0 is taken as 0.
template <typename Derived>
auto activation_derivative(const Eigen::MatrixBase<Derived>& s, Activation a) {
  using Scalar = typename Derived::Scalar;
  using Plain = typename Derived::PlainObject;
  switch (a) {
    case Activation::ReLU:
      return Plain((s.array() > Scalar(0)).template cast<Scalar>().matrix());
    case Activation::Tanh:
      return Plain((Scalar(1) - s.array().tanh().square()).matrix());
    case Activation::Linear: break;
  }
  return Plain(Plain::Ones(s.rows(), s.cols()));
}

}  // namespace nprnn
