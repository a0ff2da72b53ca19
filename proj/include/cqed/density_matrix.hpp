#pragma once

#include "cqed/operators.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace cqed {

class StateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Hermitian, unit-trace, positive semidefinite state of the joint system.
/// Construction checks all three invariants.
class DensityMatrix {
public:
  static constexpr double kHermitianTol = 1e-9;
  static constexpr double kTraceTol = 1e-9;
  static constexpr double kPositivityTol = 1e-8;

  DensityMatrix(SpaceLayout layout, Matrix entries) : layout_(layout), m_(std::move(entries)) {
    const auto d = layout_.dimension();
    if (m_.rows() != d || m_.cols() != d) throw LayoutError("density matrix dimension mismatch");
    if (!m_.allFinite()) throw StateError("density matrix has non-finite entries");
    const double herm = (m_ - m_.adjoint()).norm();
    if (herm > kHermitianTol)
      throw StateError("density matrix not Hermitian (defect " + std::to_string(herm) + ")");
    const Complex tr = m_.trace();
    if (std::abs(tr - 1.0) > kTraceTol)
      throw StateError("density matrix trace " + std::to_string(tr.real()) + " != 1");
    const double lmin = min_eigenvalue();
    if (lmin < -kPositivityTol)
      throw StateError("density matrix has negative eigenvalue " + std::to_string(lmin));
  }

  static DensityMatrix from_ket(const SpaceLayout& layout, const Vector& ket) {
    const double n = ket.norm();
    if (n == 0.0) throw StateError("zero ket");
    const Vector v = ket / n;
    return {layout, v * v.adjoint()};
  }
  static DensityMatrix basis_state(const SpaceLayout& layout, int index) {
    Matrix m = Matrix::Zero(layout.dimension(), layout.dimension());
    m(index, index) = 1.0;
    return {layout, m};
  }
  /// |0, g...g><0, g...g|
  static DensityMatrix ground(const SpaceLayout& layout) { return basis_state(layout, 0); }

  const SpaceLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return m_; }
  int dimension() const { return layout_.dimension(); }

  double min_eigenvalue() const {
    const Matrix h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

private:
  SpaceLayout layout_;
  Matrix m_;
};

/// Tr(A rho)
inline Complex expectation(const Operator& a, const DensityMatrix& rho) {
  require_same_layout(a.layout(), rho.layout(), "expectation");
  return (a.matrix() * rho.matrix()).trace();
}

inline double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_layout(a.layout(), b.layout(), "frobenius_distance");
  return (a.matrix() - b.matrix()).norm();
}

}  // namespace cqed
