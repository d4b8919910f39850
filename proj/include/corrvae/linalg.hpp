#pragma once

#include "corrvae/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Jacobi>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace corrvae {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
template <typename Scalar>
struct EigenDecomposition {
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> eigenvectors;
};

/// Loadings alpha of uncorrelated drivers with alpha * alpha^T = S.
template <typename Scalar>
struct FactorRoot {
  MatrixX<Scalar> alpha;
};

template <typename Derived>
typename Derived::Scalar max_asymmetry(const Eigen::MatrixBase<Derived>& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

/// Flips each column so that its largest-magnitude component is positive.
/// Ties go to the lowest row index.
template <typename Derived>
void apply_sign_convention(Eigen::MatrixBase<Derived>& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0) vectors.col(j) = -vectors.col(j);
  }
}

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
///
/// The first three sweeps skip rotations whose pivot is below a fifth of the
/// mean off-diagonal magnitude; later sweeps rotate every nonzero pivot.
/// Converged once the off-diagonal Frobenius norm drops to
/// 1e-12 * ||A||_F. Eigenvectors follow apply_sign_convention.
template <typename Derived>
EigenDecomposition<typename Derived::Scalar> eigh_symmetric(
    const Eigen::MatrixBase<Derived>& input, int max_sweeps = 100) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;
  const Eigen::Index n = input.rows();
  if (n != input.cols()) throw DataError("linalg", "eigh_symmetric: matrix is not square");
  if (!input.allFinite()) throw DataError("linalg", "eigh_symmetric: non-finite entries");

  MatrixX<Scalar> a = input;
  const Scalar scale = std::max<Scalar>(Scalar(1), n > 0 ? a.cwiseAbs().maxCoeff() : Scalar(0));
  if (n > 0 && max_asymmetry(a) > Scalar(1e-10) * scale)
    throw DataError("linalg", "eigh_symmetric: matrix is not symmetric");
  a = ((a + a.transpose()) / Scalar(2)).eval();

  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar norm_f = a.norm();
  const Scalar tol = Scalar(1e-12) * norm_f;

  auto off_diagonal_norm = [&] {
    Scalar s(0);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return sqrt(s);
  };

  bool converged = false;
  Scalar off = off_diagonal_norm();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off <= tol) {
      converged = true;
      break;
    }
    Scalar threshold(0);
    if (sweep < 3) {
      Scalar sum(0);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) sum += abs(a(i, j));
      threshold = Scalar(0.2) * sum / Scalar(n * n);
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == Scalar(0) || abs(a(p, q)) <= threshold) continue;
        Eigen::JacobiRotation<Scalar> rot;
        rot.makeJacobi(a, p, q);
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        v.applyOnTheRight(p, q, rot);
        a(p, q) = a(q, p) = Scalar(0);
      }
    }
    off = off_diagonal_norm();
  }
  if (!converged && off > tol)
    throw NumericalError("linalg", "eigh_symmetric did not converge after " +
                                       std::to_string(max_sweeps) +
                                       " sweeps; off-diagonal norm " + std::to_string(double(off)));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return a(l, l) > a(r, r); });

  EigenDecomposition<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src);
  }
  apply_sign_convention(out.eigenvectors);
  return out;
}

/// Q diag(sqrt(max(lambda, 0))) from the descending decomposition, so the
/// first column loads on the dominant principal factor.
template <typename Derived>
FactorRoot<typename Derived::Scalar> spectral_root(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  auto eig = eigh_symmetric(s);
  if (eig.eigenvalues.size() > 0 && eig.eigenvalues.minCoeff() < Scalar(-1e-6))
    throw NumericalError("linalg", "spectral_root: matrix is not positive semidefinite "
                                   "(min eigenvalue " +
                                       std::to_string(double(eig.eigenvalues.minCoeff())) +
                                       "); repair it to a valid correlation matrix first");
  const VectorX<Scalar> roots = eig.eigenvalues.cwiseMax(Scalar(0)).cwiseSqrt();
  return {eig.eigenvectors * roots.asDiagonal()};
}

struct CorrelationTolerance {
  double symmetry = 1e-12;
  double min_eigenvalue = -1e-8;
};

/// First violated correlation-matrix invariant, or nullopt when valid.
template <typename Derived>
std::optional<std::string> correlation_violation(const Eigen::MatrixBase<Derived>& s,
                                                 CorrelationTolerance tol = {}) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols()) return "matrix is not square";
  if (s.rows() == 0) return "matrix is empty";
  if (!s.allFinite()) return "matrix has non-finite entries";
  if (double(max_asymmetry(s)) > tol.symmetry) return "matrix is not symmetric";
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    if (s(i, i) != Scalar(1)) return "diagonal entry " + std::to_string(i) + " is not 1";
  if (s.cwiseAbs().maxCoeff() > Scalar(1)) return "entry outside [-1, 1]";
  const auto eig = eigh_symmetric(s);
  if (double(eig.eigenvalues.minCoeff()) < tol.min_eigenvalue)
    return "matrix is not positive semidefinite (min eigenvalue " +
           std::to_string(double(eig.eigenvalues.minCoeff())) + ")";
  return std::nullopt;
}

/// Alternating projection onto the correlation matrices: symmetrize, clip
/// entries to [-1, 1], clip eigenvalues at zero, rescale to unit diagonal.
/// Stops when an iteration moves no entry by more than 1e-10.
template <typename Derived>
MatrixX<typename Derived::Scalar> repair_to_correlation(const Eigen::MatrixBase<Derived>& input,
                                                        int max_iterations = 50) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = input.rows();
  if (n != input.cols() || n == 0) throw DataError("linalg", "repair: matrix must be square");
  if (!input.allFinite()) throw DataError("linalg", "repair: non-finite entries");

  MatrixX<Scalar> x = input;
  for (int it = 0; it < max_iterations; ++it) {
    const MatrixX<Scalar> previous = x;
    x = ((x + x.transpose()) / Scalar(2)).eval();
    x = x.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));

    const auto eig = eigh_symmetric(x);
    if (eig.eigenvalues.minCoeff() < Scalar(0)) {
      const VectorX<Scalar> clipped = eig.eigenvalues.cwiseMax(Scalar(0));
      x = eig.eigenvectors * clipped.asDiagonal() * eig.eigenvectors.transpose();
      x = ((x + x.transpose()) / Scalar(2)).eval();
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i, i) <= Scalar(1e-14)) {
        // Row lost all variance: detach it as an independent asset.
        x.row(i).setZero();
        x.col(i).setZero();
        x(i, i) = Scalar(1);
      }
    }
    const VectorX<Scalar> inv_sd = x.diagonal().cwiseSqrt().cwiseInverse();
    x = inv_sd.asDiagonal() * x * inv_sd.asDiagonal();
    x = ((x + x.transpose()) / Scalar(2)).eval();
    x = x.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
    x.diagonal().setOnes();

    if ((x - previous).cwiseAbs().maxCoeff() < Scalar(1e-10)) break;
  }
  return x;
}

}  // namespace corrvae
