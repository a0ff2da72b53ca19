#pragma once

// Lindblad generator, steady states, time evolution and two-time correlations.
//
// Channels follow the convention
//     d rho/dt = -i[H, rho] + sum_k r_k (2 C_k rho C_k^dag - C_k^dag C_k rho - rho C_k^dag C_k)
// so a cavity channel (kappa, a) empties the intensity at 2*kappa.
//
// Superoperators act on column-stacked vec(rho) (Eigen's native storage order):
//     vec(A X B) = (B^T (x) A) vec(X).

#include "cqed/density_matrix.hpp"
#include "cqed/operators.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqed {

class ModelError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonUniqueSteadyState : public NumericalFailure {
public:
  explicit NonUniqueSteadyState(int dimension)
      : NumericalFailure("non-unique steady state: null space of the Liouvillian has dimension " +
                         std::to_string(dimension)),
        dimension_(dimension) {}
  int dimension() const { return dimension_; }

private:
  int dimension_;
};

class NoSteadyStateField : public std::runtime_error {
public:
  NoSteadyStateField() : std::runtime_error("no steady-state field: <a^dag a> is zero") {}
};

struct DecayChannel {
  double rate;  // rad/s
  Operator jump;
};

class LindbladModel {
public:
  static constexpr double kHermitianTol = 1e-10;

  LindbladModel(Operator hamiltonian, std::vector<DecayChannel> channels)
      : h_(std::move(hamiltonian)), channels_(std::move(channels)) {
    if (hermiticity_defect(h_.matrix()) > kHermitianTol)
      throw ModelError("Hamiltonian is not Hermitian");
    for (const auto& c : channels_) {
      require_same_layout(h_.layout(), c.jump.layout(), "LindbladModel channel");
      if (!(c.rate >= 0.0)) throw ModelError("channel rate must be >= 0");
    }
  }

  const Operator& hamiltonian() const { return h_; }
  const std::vector<DecayChannel>& channels() const { return channels_; }
  const SpaceLayout& layout() const { return h_.layout(); }

  double slowest_rate() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& c : channels_)
      if (c.rate > 0.0) r = std::min(r, c.rate);
    return r;
  }

private:
  Operator h_;
  std::vector<DecayChannel> channels_;
};

inline Matrix liouvillian(const LindbladModel& model) {
  const int n = model.layout().dimension();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix& h = model.hamiltonian().matrix();
  Matrix l = -kI * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& ch : model.channels()) {
    if (ch.rate == 0.0) continue;
    const Matrix& c = ch.jump.matrix();
    const Matrix cdc = c.adjoint() * c;
    l += ch.rate * (2.0 * kron(c.conjugate(), c) - kron(id, cdc) - kron(cdc.transpose(), id));
  }
  return l;
}

inline Vector vectorize(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix unvectorize(const Vector& v, int n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

using SparseMatrix = Eigen::SparseMatrix<Complex>;

namespace detail {

using Triplets = std::vector<Eigen::Triplet<Complex>>;

// Appends coeff * (b^T (x) a), skipping structural zeros of the small factors.
inline void add_kron(Triplets& out, Complex coeff, const Matrix& bt, const Matrix& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index bc = 0; bc < bt.cols(); ++bc)
    for (Eigen::Index br = 0; br < bt.rows(); ++br) {
      const Complex b = bt(br, bc);
      if (b == Complex{}) continue;
      for (Eigen::Index ac = 0; ac < n; ++ac)
        for (Eigen::Index ar = 0; ar < n; ++ar) {
          const Complex v = a(ar, ac);
          if (v != Complex{}) out.emplace_back(br * n + ar, bc * n + ac, coeff * b * v);
        }
    }
}

}  // namespace detail

/// Sparse form of liouvillian(); same vec() convention.
inline SparseMatrix liouvillian_sparse(const LindbladModel& model) {
  const int n = model.layout().dimension();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix& h = model.hamiltonian().matrix();
  detail::Triplets t;
  detail::add_kron(t, -kI, id, h);
  detail::add_kron(t, kI, h.transpose(), id);
  for (const auto& ch : model.channels()) {
    if (ch.rate == 0.0) continue;
    const Matrix& c = ch.jump.matrix();
    const Matrix cdc = c.adjoint() * c;
    detail::add_kron(t, 2.0 * ch.rate, c.conjugate(), c);
    detail::add_kron(t, -ch.rate, id, cdc);
    detail::add_kron(t, -ch.rate, cdc.transpose(), id);
  }
  SparseMatrix l(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

namespace detail {

// Real coordinates of a Hermitian matrix, indexed like vec(): diagonal p=(i,i) holds rho_ii,
// upper p=(i,j), i<j holds Re rho_ij and the mirrored slot (j,i) holds Im rho_ij.
// Returns the real operator M with M x = coordinates of L rho(x).
inline Eigen::SparseMatrix<double> hermitian_superoperator(const SparseMatrix& l, int n) {
  const Eigen::Index big = static_cast<Eigen::Index>(n) * n;
  // T maps real coordinates to vec(rho).
  std::vector<Eigen::Triplet<Complex>> tt;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      const Eigen::Index p = i + static_cast<Eigen::Index>(j) * n;
      if (i == j) {
        tt.emplace_back(p, p, 1.0);
      } else {
        const Eigen::Index q = j + static_cast<Eigen::Index>(i) * n;
        tt.emplace_back(p, p, 1.0);
        tt.emplace_back(q, p, 1.0);
        tt.emplace_back(p, q, kI);
        tt.emplace_back(q, q, -kI);
      }
    }
  SparseMatrix tmap(big, big);
  tmap.setFromTriplets(tt.begin(), tt.end());
  const SparseMatrix lt = l * tmap;

  std::vector<Eigen::Triplet<double>> out;
  out.reserve(static_cast<std::size_t>(lt.nonZeros()) * 2);
  for (Eigen::Index col = 0; col < lt.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(lt, col); it; ++it) {
      const Eigen::Index r = it.row();
      const Eigen::Index i = r % n, j = r / n;
      if (i <= j) {
        out.emplace_back(r, col, it.value().real());
        if (i != j) out.emplace_back(j + i * n, col, it.value().imag());
      }
    }
  Eigen::SparseMatrix<double> m(big, big);
  m.setFromTriplets(out.begin(), out.end());
  return m;
}

inline Matrix hermitian_from_coordinates(const Eigen::VectorXd& x, int n) {
  Matrix rho(n, n);
  for (int j = 0; j < n; ++j) {
    rho(j, j) = x(j + static_cast<Eigen::Index>(j) * n);
    for (int i = 0; i < j; ++i) {
      const Complex v(x(i + static_cast<Eigen::Index>(j) * n), x(j + static_cast<Eigen::Index>(i) * n));
      rho(i, j) = v;
      rho(j, i) = std::conj(v);
    }
  }
  return rho;
}

template <class Op>
double residual_norm(const Op& l, const Matrix& rho) {
  return (l * vectorize(rho)).norm();
}

}  // namespace detail

enum class SteadyStateMethod {
  TraceConstrained,  // replace one equation of L x = 0 by Tr rho = 1
  NullSpace,         // SVD null-space extraction; detects non-uniqueness
};

inline constexpr double kSteadyResidualTol = 1e-10;

/// Steady state via the singular-value decomposition of L. Throws NonUniqueSteadyState when the
/// numerical null space is more than one-dimensional.
inline DensityMatrix steady_state_nullspace(const LindbladModel& model, const Matrix& l) {
  const int n = model.layout().dimension();
  Eigen::BDCSVD<Matrix> svd(l, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double tol = 1e-9 * std::max(smax, std::numeric_limits<double>::min());
  int null_dim = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) <= tol) ++null_dim;
  if (null_dim == 0) throw NumericalFailure("Liouvillian has no numerical null space");
  if (null_dim > 1) throw NonUniqueSteadyState(null_dim);
  Matrix rho = unvectorize(svd.matrixV().col(s.size() - 1), n);
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-300) throw NumericalFailure("null vector has zero trace");
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return {model.layout(), rho};
}

inline DensityMatrix steady_state(const LindbladModel& model,
                                  SteadyStateMethod method = SteadyStateMethod::TraceConstrained) {
  const int n = model.layout().dimension();
  if (method == SteadyStateMethod::NullSpace) return steady_state_nullspace(model, liouvillian(model));

  const SparseMatrix l = liouvillian_sparse(model);
  Eigen::SparseMatrix<double> m = detail::hermitian_superoperator(l, n);
  // Row 0 (the rho_00 equation) is redundant with trace preservation; replace it by Tr rho = 1.
  m = m.transpose();  // row 0 becomes column 0, which compressed column storage can rewrite
  m.prune([](Eigen::Index, Eigen::Index col, double) { return col != 0; });
  for (int i = 0; i < n; ++i) m.coeffRef(i + static_cast<Eigen::Index>(i) * n, 0) = 1.0;
  m = m.transpose();
  m.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m.rows());
  rhs(0) = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(m);
  Matrix rho;
  if (lu.info() == Eigen::Success) {
    const Eigen::VectorXd x = lu.solve(rhs);
    rho = detail::hermitian_from_coordinates(x, n);
  }
  const double lnorm = std::sqrt(l.cwiseAbs2().sum());
  if (rho.size() == 0 || !rho.allFinite() || detail::residual_norm(l, rho) > kSteadyResidualTol * lnorm) {
    // Either the null space is degenerate or the solve lost accuracy; the SVD route tells which.
    return steady_state_nullspace(model, liouvillian(model));
  }
  return {model.layout(), rho};
}

// ---------------------------------------------------------------------------------------------
// Time evolution: adaptive Dormand-Prince 5(4) on the matrix form of the master equation.

struct EvolveOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double min_step = 1e-21;  // seconds
  long max_steps = 50'000'000;
};

class MasterEquationRhs {
public:
  explicit MasterEquationRhs(const LindbladModel& model) {
    const Matrix& h = model.hamiltonian().matrix();
    heff_ = h;
    for (const auto& ch : model.channels()) {
      if (ch.rate == 0.0) continue;
      const Matrix& c = ch.jump.matrix();
      heff_ -= kI * ch.rate * (c.adjoint() * c);
      jumps_.push_back(c);
      jump_adj_.push_back(c.adjoint());
      rates_.push_back(ch.rate);
    }
    scale_ = heff_.norm();
    for (std::size_t k = 0; k < jumps_.size(); ++k) scale_ += 2.0 * rates_[k] * jumps_[k].squaredNorm();
  }

  Matrix operator()(const Matrix& rho) const {
    Matrix out = -kI * (heff_ * rho - rho * heff_.adjoint());
    for (std::size_t k = 0; k < jumps_.size(); ++k)
      out.noalias() += (2.0 * rates_[k]) * (jumps_[k] * rho * jump_adj_[k]);
    return out;
  }

  double rate_scale() const { return scale_; }

private:
  Matrix heff_;
  std::vector<Matrix> jumps_, jump_adj_;
  std::vector<double> rates_;
  double scale_ = 0.0;
};

inline std::vector<DensityMatrix> evolve(const LindbladModel& model, const DensityMatrix& rho0,
                                         std::span<const double> t_grid, EvolveOptions opt = {}) {
  require_same_layout(model.layout(), rho0.layout(), "evolve");
  if (t_grid.empty()) return {};
  if (t_grid.front() < 0.0) throw std::invalid_argument("evolve: times must be >= 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw std::invalid_argument("evolve: t_grid must be ascending");

  // Dormand-Prince coefficients.
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const MasterEquationRhs f(model);
  std::vector<DensityMatrix> out;
  out.reserve(t_grid.size());

  Matrix y = rho0.matrix();
  double t = 0.0;
  double h = f.rate_scale() > 0.0 ? 0.01 / f.rate_scale() : (t_grid.back() > 0 ? t_grid.back() : 1.0);
  Matrix k1 = f(y);
  long steps = 0;

  for (double target : t_grid) {
    while (t < target) {
      if (++steps > opt.max_steps) throw NumericalFailure("evolve: step budget exhausted");
      const bool last = t + h >= target;
      const double step = last ? target - t : h;
      const Matrix k2 = f(y + step * (a21 * k1));
      const Matrix k3 = f(y + step * (a31 * k1 + a32 * k2));
      const Matrix k4 = f(y + step * (a41 * k1 + a42 * k2 + a43 * k3));
      const Matrix k5 = f(y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Matrix k6 = f(y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Matrix ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Matrix k7 = f(ynew);
      const Matrix err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double en = 0.0;
      for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
        en = std::max(en, std::abs(err(i)) / sc);
      }
      if (en <= 1.0) {
        t = last ? target : t + step;
        y = ynew;
        k1 = k7;
      }
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      // Do not let an output-aligned short step shrink the working step size.
      if (!(last && en <= 1.0)) h = step * factor;
      if (h < opt.min_step)
        throw NumericalFailure("evolve: step-size underflow at t=" + std::to_string(t));
    }
    out.emplace_back(model.layout(), y);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Output rates and photon statistics.

/// Per-second conversion from intracavity photon number to detected output rate.
struct RateConstant {
  double per_second;

  static constexpr RateConstant nominal() { return {3.04e7}; }
  /// Output-coupler intensity decay 2*kappa_oc (kappa_oc in rad/s).
  static constexpr RateConstant output_coupler(double kappa_oc) { return {2.0 * kappa_oc}; }
};

inline double mean_photon_number(const DensityMatrix& rho) {
  return expectation(photon_number(rho.layout()), rho).real();
}

inline double emission_rate(const DensityMatrix& rho_ss, RateConstant c = RateConstant::nominal()) {
  return c.per_second * mean_photon_number(rho_ss);
}

inline constexpr double kMinPhotonNumber = 1e-14;

/// <a^dag a^dag a a> / <a^dag a>^2
inline double g2_zero(const DensityMatrix& rho) {
  const auto a = annihilation(rho.layout());
  const auto ad = a.adjoint();
  const double n = expectation(ad * a, rho).real();
  if (!(n > kMinPhotonNumber)) throw NoSteadyStateField();
  return expectation(ad * ad * a * a, rho).real() / (n * n);
}

struct CorrelationSeries {
  std::vector<double> taus;    // s
  std::vector<double> values;  // g2(tau)
};

/// Unnormalised G2(tau) = Tr[a^dag a exp(L tau)(a rho a^dag)] together with <a^dag a>.
struct UnnormalizedCorrelation {
  double mean_photons = 0.0;
  std::vector<double> taus;
  std::vector<double> g2_unnormalized;
};

/// Caches exp(L * dt) per distinct step; steps equal to 1e-9 relative share one propagator.
class RegressionPropagator {
public:
  explicit RegressionPropagator(Matrix l) : l_(std::move(l)) {}

  const Matrix& step(double dt) {
    for (auto& [key, p] : cache_)
      if (std::abs(key - dt) <= 1e-9 * std::max(key, dt)) return p;
    cache_.emplace_back(dt, Matrix((l_ * dt).exp()));
    return cache_.back().second;
  }
  const Matrix& generator() const { return l_; }

private:
  Matrix l_;
  std::vector<std::pair<double, Matrix>> cache_;
};

inline void check_tau_grid(std::span<const double> taus) {
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(taus[k] >= 0.0)) throw std::invalid_argument("tau grid must be non-negative");
    if (k > 0 && !(taus[k] > taus[k - 1]))
      throw std::invalid_argument("tau grid must be ascending");
  }
}

inline UnnormalizedCorrelation second_order_correlation(const LindbladModel& model,
                                                        const DensityMatrix& rho_ss,
                                                        std::span<const double> taus) {
  require_same_layout(model.layout(), rho_ss.layout(), "second_order_correlation");
  check_tau_grid(taus);
  const int n = model.layout().dimension();
  const auto a = annihilation(model.layout());
  const Matrix number = (a.adjoint() * a).matrix();
  UnnormalizedCorrelation out;
  out.mean_photons = (number * rho_ss.matrix()).trace().real();
  if (!(out.mean_photons > kMinPhotonNumber)) throw NoSteadyStateField();

  RegressionPropagator prop(liouvillian(model));
  Vector v = vectorize(a.matrix() * rho_ss.matrix() * a.matrix().adjoint());
  double t_prev = 0.0;
  for (double tau : taus) {
    if (tau > t_prev) v = prop.step(tau - t_prev) * v;
    t_prev = tau;
    out.taus.push_back(tau);
    out.g2_unnormalized.push_back((number * unvectorize(v, n)).trace().real());
  }
  return out;
}

inline CorrelationSeries g2_of_tau(const LindbladModel& model, const DensityMatrix& rho_ss,
                                   std::span<const double> taus) {
  const auto u = second_order_correlation(model, rho_ss, taus);
  CorrelationSeries out{u.taus, {}};
  const double n2 = u.mean_photons * u.mean_photons;
  for (double v : u.g2_unnormalized) out.values.push_back(v / n2);
  return out;
}

}  // namespace cqed
