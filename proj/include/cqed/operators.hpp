#pragma once

// Dense operators on the truncated cavity (x) atoms Hilbert space.
//
// Factor order is fixed: cavity Fock space first, then atom 1, atom 2, ...
// Each atom is a two-level system with basis {|g>, |e>} (index 0 = ground).
// A basis state |n, s_1, ..., s_k> has the flat index
//     n * 2^k + sum_j s_j * 2^(k-1-j)
// which is exactly the index produced by Kronecker products in that order.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqed {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

class LayoutError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class SpaceLayout {
public:
  static constexpr int kMaxAtoms = 8;

  SpaceLayout(int n_max, int n_atoms) : n_max_(n_max), n_atoms_(n_atoms) {
    if (n_max < 1)
      throw LayoutError("photon truncation n_max must be >= 1, got " + std::to_string(n_max));
    if (n_atoms < 0 || n_atoms > kMaxAtoms)
      throw LayoutError("n_atoms must lie in [0, " + std::to_string(kMaxAtoms) + "], got " +
                        std::to_string(n_atoms));
  }

  int n_max() const { return n_max_; }
  int n_atoms() const { return n_atoms_; }
  int cavity_dim() const { return n_max_ + 1; }
  int atom_dim() const { return 1 << n_atoms_; }
  int dimension() const { return cavity_dim() * atom_dim(); }

  int photons(int index) const { return index / atom_dim(); }
  // 0 = ground, 1 = excited
  int atom_state(int index, int which) const {
    return (index >> (n_atoms_ - 1 - which)) & 1;
  }
  int excitations(int index) const {
    int n = photons(index);
    for (int k = 0; k < n_atoms_; ++k) n += atom_state(index, k);
    return n;
  }
  int index(int photons, const std::vector<int>& atom_states) const {
    if (photons < 0 || photons > n_max_) throw LayoutError("photon number out of range");
    if (static_cast<int>(atom_states.size()) != n_atoms_)
      throw LayoutError("atom state list does not match n_atoms");
    int idx = photons;
    for (int s : atom_states) idx = 2 * idx + (s ? 1 : 0);
    return idx;
  }
  // Human-readable bare-basis label, e.g. "2gg" or "0eg".
  std::string label(int index) const {
    std::string out = std::to_string(photons(index));
    for (int k = 0; k < n_atoms_; ++k) out += atom_state(index, k) ? 'e' : 'g';
    return out;
  }

  friend bool operator==(const SpaceLayout&, const SpaceLayout&) = default;

private:
  int n_max_;
  int n_atoms_;
};

inline void require_same_layout(const SpaceLayout& a, const SpaceLayout& b, const char* what) {
  if (!(a == b)) {
    throw LayoutError(std::string(what) + ": layout mismatch (n_max " + std::to_string(a.n_max()) +
                      "/" + std::to_string(b.n_max()) + ", n_atoms " +
                      std::to_string(a.n_atoms()) + "/" + std::to_string(b.n_atoms()) + ")");
  }
}

/// Kronecker product A (x) B.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

class Operator {
public:
  Operator(SpaceLayout layout, Matrix entries) : layout_(layout), m_(std::move(entries)) {
    const auto d = layout_.dimension();
    if (m_.rows() != d || m_.cols() != d)
      throw LayoutError("operator matrix is " + std::to_string(m_.rows()) + "x" +
                        std::to_string(m_.cols()) + ", layout needs " + std::to_string(d));
  }

  static Operator identity(SpaceLayout layout) {
    return {layout, Matrix::Identity(layout.dimension(), layout.dimension())};
  }
  static Operator zero(SpaceLayout layout) {
    return {layout, Matrix::Zero(layout.dimension(), layout.dimension())};
  }

  const SpaceLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return m_; }
  int dimension() const { return layout_.dimension(); }
  Complex operator()(int row, int col) const { return m_(row, col); }

  Operator adjoint() const { return {layout_, m_.adjoint()}; }
  Complex trace() const { return m_.trace(); }

  Operator& operator+=(const Operator& o) {
    require_same_layout(layout_, o.layout_, "operator +");
    m_ += o.m_;
    return *this;
  }
  Operator& operator-=(const Operator& o) {
    require_same_layout(layout_, o.layout_, "operator -");
    m_ -= o.m_;
    return *this;
  }
  Operator& operator*=(Complex s) {
    m_ *= s;
    return *this;
  }

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator-(Operator a) { return a *= -1.0; }
  friend Operator operator*(Complex s, Operator a) { return a *= s; }
  friend Operator operator*(Operator a, Complex s) { return a *= s; }
  friend Operator operator*(double s, Operator a) { return a *= Complex(s); }
  friend Operator operator*(const Operator& a, const Operator& b) {
    require_same_layout(a.layout_, b.layout_, "operator *");
    return {a.layout_, a.m_ * b.m_};
  }

private:
  SpaceLayout layout_;
  Matrix m_;
};

inline Operator adjoint(const Operator& a) { return a.adjoint(); }
inline Operator multiply(const Operator& a, const Operator& b) { return a * b; }
inline Operator add(const Operator& a, const Operator& b) { return a + b; }
inline Operator scale(Complex s, const Operator& a) { return s * a; }
inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

/// Cavity annihilation operator a|n> = sqrt(n)|n-1>, identity on the atoms.
inline Operator annihilation(const SpaceLayout& layout) {
  Matrix a = Matrix::Zero(layout.cavity_dim(), layout.cavity_dim());
  for (int n = 1; n <= layout.n_max(); ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return {layout, kron(a, Matrix::Identity(layout.atom_dim(), layout.atom_dim()))};
}

inline Operator creation(const SpaceLayout& layout) { return annihilation(layout).adjoint(); }

/// a^dag a, built directly on the diagonal so the photon numbers are exact integers.
inline Operator photon_number(const SpaceLayout& layout) {
  Matrix m = Matrix::Zero(layout.dimension(), layout.dimension());
  for (int i = 0; i < layout.dimension(); ++i) m(i, i) = layout.photons(i);
  return {layout, m};
}

/// sigma^- = |g><e| on atom `which_atom`, identity on every other factor.
inline Operator atomic_lowering(const SpaceLayout& layout, int which_atom) {
  if (which_atom < 0 || which_atom >= layout.n_atoms())
    throw LayoutError("atom index " + std::to_string(which_atom) + " out of range for " +
                      std::to_string(layout.n_atoms()) + " atom(s)");
  Matrix sigma = Matrix::Zero(2, 2);
  sigma(0, 1) = 1.0;
  Matrix out = Matrix::Identity(layout.cavity_dim(), layout.cavity_dim());
  for (int k = 0; k < layout.n_atoms(); ++k)
    out = kron(out, k == which_atom ? sigma : Matrix::Identity(2, 2));
  return {layout, out};
}

inline Operator atomic_raising(const SpaceLayout& layout, int which_atom) {
  return atomic_lowering(layout, which_atom).adjoint();
}

/// Embeds a 2x2 single-atom operator on atom `which_atom`.
inline Operator embed_atom_operator(const SpaceLayout& layout, int which_atom,
                                    const Eigen::Matrix2cd& local) {
  if (which_atom < 0 || which_atom >= layout.n_atoms())
    throw LayoutError("atom index out of range");
  Matrix out = Matrix::Identity(layout.cavity_dim(), layout.cavity_dim());
  for (int k = 0; k < layout.n_atoms(); ++k)
    out = kron(out, k == which_atom ? Matrix(local) : Matrix::Identity(2, 2));
  return {layout, out};
}

/// Total excitation number a^dag a + sum_j sigma_j^+ sigma_j^-.
inline Operator excitation_number(const SpaceLayout& layout) {
  Matrix m = Matrix::Zero(layout.dimension(), layout.dimension());
  for (int i = 0; i < layout.dimension(); ++i) m(i, i) = layout.excitations(i);
  return {layout, m};
}

/// Exchange of atoms i and j.
inline Operator atom_swap(const SpaceLayout& layout, int i = 0, int j = 1) {
  if (i < 0 || j < 0 || i >= layout.n_atoms() || j >= layout.n_atoms())
    throw LayoutError("swap indices out of range");
  const int d = layout.dimension();
  Matrix m = Matrix::Zero(d, d);
  for (int col = 0; col < d; ++col) {
    std::vector<int> s(layout.n_atoms());
    for (int k = 0; k < layout.n_atoms(); ++k) s[k] = layout.atom_state(col, k);
    std::swap(s[i], s[j]);
    m(layout.index(layout.photons(col), s), col) = 1.0;
  }
  return {layout, m};
}

/// Relative Frobenius-norm deviation from Hermiticity.
inline double hermiticity_defect(const Matrix& m) {
  const double n = m.norm();
  if (n == 0.0) return 0.0;
  return (m - m.adjoint()).norm() / n;
}

}  // namespace cqed
