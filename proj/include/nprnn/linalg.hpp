#pragma once

// Dense linear algebra over Eigen types: the products, factorizations and
// spectral routines the initializers and analyzers are built on.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "nprnn/errors.hpp"
#include "nprnn/rng.hpp"

namespace nprnn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixD = Matrix<double>;
using VectorD = Vector<double>;

inline constexpr double kEigenTol = 1e-10;
inline constexpr double kSpectralTol = 1e-8;

template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  require(a.cols() == b.rows(), "matmul: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " times " + std::to_string(b.rows()) +
                                    "x" + std::to_string(b.cols()) + ")");
  Matrix<Scalar> out = a * b;
  return out;
}

/// i.i.d. Normal(mean, variance) entries, drawn in row-major order.
template <typename Scalar = double>
Matrix<Scalar> gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Scalar mean, Scalar variance,
                               Rng& rng) {
  require(variance > Scalar(0), "gaussian_matrix: variance must be positive");
  require(rows >= 0 && cols >= 0, "gaussian_matrix: negative dimension");
  const double stddev = std::sqrt(static_cast<double>(variance));
  Matrix<Scalar> out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out(i, j) = static_cast<Scalar>(rng.normal(static_cast<double>(mean), stddev));
  return out;
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

template <typename Scalar>
struct SymmetricEigen {
  Vector<Scalar> values;   // descending
  Matrix<Scalar> vectors;  // column k pairs with values[k]
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Sweeps over all (p, q) pairs with plane rotations until the off-diagonal
/// Frobenius norm drops below max(tol / 100, eps * ||m||_F). Eigenvectors are
/// sign-normalized so their largest-magnitude component is positive.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> eigh_symmetric(const Eigen::MatrixBase<Derived>& m,
                                                        typename Derived::Scalar tol = kEigenTol) {
  using Scalar = typename Derived::Scalar;
  require(m.rows() == m.cols(), "eigh_symmetric: matrix is not square");
  require(is_symmetric(m, Scalar(1e-10)), "eigh_symmetric: matrix is not symmetric");

  const Eigen::Index n = m.rows();
  Matrix<Scalar> a = m;
  Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar threshold = std::max(tol / Scalar(100), eps * a.norm());

  auto off_norm = [&] {
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) sum += a(i, j) * a(i, j);
    return std::sqrt(Scalar(2) * sum);
  };

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= threshold) break;
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        rotated = true;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == kMaxSweeps)
    throw ConvergenceError("eigh_symmetric: Jacobi sweeps did not converge",
                           static_cast<double>(a.diagonal().cwiseAbs().maxCoeff()));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  SymmetricEigen<Scalar> out{Vector<Scalar>(n), Matrix<Scalar>(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    Vector<Scalar> col = v.col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < Scalar(0)) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

template <typename Scalar>
struct QrFactors {
  Matrix<Scalar> q;
  Matrix<Scalar> r;
};

/// Householder QR of a square matrix. R's diagonal is made nonnegative, which
/// pins down the factorization uniquely for nonsingular input.
template <typename Derived>
QrFactors<typename Derived::Scalar> qr_householder(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require(m.rows() == m.cols(), "qr_householder: matrix is not square");
  const Eigen::Index n = m.rows();
  Matrix<Scalar> r = m;
  Matrix<Scalar> q = Matrix<Scalar>::Identity(n, n);

  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const Eigen::Index len = n - k;
    Vector<Scalar> v = r.col(k).tail(len);
    const Scalar norm_x = v.norm();
    if (norm_x == Scalar(0)) continue;
    const Scalar alpha = v(0) >= Scalar(0) ? -norm_x : norm_x;
    v(0) -= alpha;
    const Scalar norm_v = v.norm();
    if (norm_v == Scalar(0)) continue;
    v /= norm_v;
    auto block = r.bottomRightCorner(len, n - k);
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> vt_block = v.transpose() * block;
    block.noalias() -= Scalar(2) * v * vt_block;
    auto qblock = q.rightCols(len);
    Vector<Scalar> qv = qblock * v;
    qblock.noalias() -= Scalar(2) * qv * v.transpose();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) r(i, j) = Scalar(0);
    if (r(i, i) < Scalar(0)) {
      r.row(i) *= Scalar(-1);
      q.col(i) *= Scalar(-1);
    }
  }
  return {std::move(q), std::move(r)};
}

/// Upper Hessenberg form via Householder similarity transforms.
template <typename Derived>
Matrix<typename Derived::Scalar> hessenberg_reduce(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require(m.rows() == m.cols(), "hessenberg_reduce: matrix is not square");
  const Eigen::Index n = m.rows();
  Matrix<Scalar> h = m;
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    Vector<Scalar> v = h.col(k).tail(len);
    const Scalar norm_x = v.norm();
    if (norm_x == Scalar(0)) continue;
    const Scalar alpha = v(0) >= Scalar(0) ? -norm_x : norm_x;
    v(0) -= alpha;
    const Scalar norm_v = v.norm();
    if (norm_v == Scalar(0)) continue;
    v /= norm_v;
    auto rows = h.bottomRows(len);
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> vt_rows = v.transpose() * rows;
    rows.noalias() -= Scalar(2) * v * vt_rows;
    auto cols = h.rightCols(len);
    Vector<Scalar> cv = cols * v;
    cols.noalias() -= Scalar(2) * cv * v.transpose();
    h.col(k).tail(len - 1).setZero();
    h(k + 1, k) = alpha;
  }
  return h;
}

/// All eigenvalues of a general real square matrix: Hessenberg reduction, then
/// Francis double-shift QR deflating to the real Schur form. Complex pairs
/// (one per 2x2 Schur block) appear as adjacent conjugates.
///
/// `max_iter` bounds the total number of QR iterations; 0 selects 10 n^2.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> general_eigenvalues(
    const Eigen::MatrixBase<Derived>& m, std::size_t max_iter = 0) {
  using Scalar = typename Derived::Scalar;
  using Complex = std::complex<Scalar>;
  require(m.rows() == m.cols(), "general_eigenvalues: matrix is not square");
  const int n = static_cast<int>(m.rows());
  if (max_iter == 0) max_iter = 10 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<Complex> wri(static_cast<std::size_t>(n));
  if (n == 0) return wri;

  Matrix<Scalar> a = hessenberg_reduce(m);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  auto sign = [](Scalar magnitude, Scalar s) { return s >= Scalar(0) ? std::abs(magnitude) : -std::abs(magnitude); };

  Scalar anorm = 0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  std::size_t total_iterations = 0;
  int nn = n - 1;
  Scalar t = 0;
  Scalar p = 0, q = 0, r = 0, s = 0, w = 0, x = 0, y = 0, z = 0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l > 0; --l) {
        s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == Scalar(0)) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = Scalar(0);
          break;
        }
      }
      x = a(nn, nn);
      if (l == nn) {
        wri[static_cast<std::size_t>(nn--)] = Complex(x + t, 0);
      } else {
        y = a(nn - 1, nn - 1);
        w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          p = Scalar(0.5) * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= Scalar(0)) {
            z = p + sign(z, p);
            wri[static_cast<std::size_t>(nn - 1)] = wri[static_cast<std::size_t>(nn)] = Complex(x + z, 0);
            if (z != Scalar(0)) wri[static_cast<std::size_t>(nn)] = Complex(x - w / z, 0);
          } else {
            wri[static_cast<std::size_t>(nn)] = Complex(x + p, -z);
            wri[static_cast<std::size_t>(nn - 1)] = std::conj(wri[static_cast<std::size_t>(nn)]);
          }
          nn -= 2;
        } else {
          if (total_iterations >= max_iter) {
            Scalar best = 0;
            for (int i = nn + 1; i < n; ++i) best = std::max(best, std::abs(wri[static_cast<std::size_t>(i)]));
            for (int i = 0; i <= nn; ++i) best = std::max(best, std::abs(a(i, i) + t));
            throw ConvergenceError("general_eigenvalues: QR iteration did not converge",
                                   static_cast<double>(best));
          }
          if (its > 0 && its % 10 == 0) {
            // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = Scalar(0.75) * s;
            w = Scalar(-0.4375) * s * s;
          }
          ++its;
          ++total_iterations;
          int mm = nn - 2;
          for (; mm >= l; --mm) {
            z = a(mm, mm);
            r = x - z;
            s = y - z;
            p = (r * s - w) / a(mm + 1, mm) + a(mm, mm + 1);
            q = a(mm + 1, mm + 1) - z - r - s;
            r = a(mm + 2, mm + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (mm == l) break;
            const Scalar u = std::abs(a(mm, mm - 1)) * (std::abs(q) + std::abs(r));
            const Scalar v = std::abs(p) * (std::abs(a(mm - 1, mm - 1)) + std::abs(z) + std::abs(a(mm + 1, mm + 1)));
            if (u <= eps * v) break;
          }
          for (int i = mm; i < nn - 1; ++i) {
            a(i + 2, i) = Scalar(0);
            if (i != mm) a(i + 2, i - 1) = Scalar(0);
          }
          for (int k = mm; k < nn; ++k) {
            if (k != mm) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = Scalar(0);
              if (k + 1 != nn) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != Scalar(0)) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = sign(std::sqrt(p * p + q * q + r * r), p)) != Scalar(0)) {
              if (k == mm) {
                if (l != mm) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k + 1 != nn) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k + 1 != nn) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return wri;
}

/// Largest eigenvalue magnitude of a general square matrix.
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& m,
                                         typename Derived::Scalar tol = kSpectralTol,
                                         std::size_t max_iter = 0) {
  using Scalar = typename Derived::Scalar;
  require(m.rows() == m.cols(), "spectral_radius: matrix is not square");
  require(tol > Scalar(0), "spectral_radius: tol must be positive");
  // Deflation in the QR sweep is at machine precision, well inside tol.
  Scalar radius = 0;
  for (const auto& lambda : general_eigenvalues(m, max_iter)) radius = std::max(radius, std::abs(lambda));
  return radius;
}

}  // namespace nprnn
