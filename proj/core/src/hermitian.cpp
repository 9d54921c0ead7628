#include "emfsec/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emfsec {

namespace {

constexpr double kPsdClipTol = 1e-12;

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

HermitianMatrix::HermitianMatrix(std::size_t dim)
    : m_(ComplexMatrix::Zero(as_index(dim), as_index(dim))) {}

HermitianMatrix::HermitianMatrix(const ComplexMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) {
    throw NumericalError("HermitianMatrix: matrix is not square");
  }
  if (!a.allFinite()) {
    throw NumericalError("HermitianMatrix: non-finite entries");
  }
  const double asym = (a - a.adjoint()).norm();
  if (asym > rel_tol * std::max(1.0, a.norm())) {
    throw NumericalError("HermitianMatrix: input is not Hermitian (asymmetry " +
                         std::to_string(asym) + ")");
  }
  m_ = 0.5 * (a + a.adjoint());
  // Diagonal of a Hermitian matrix is real.
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    m_(i, i) = cdouble(m_(i, i).real(), 0.0);
  }
}

HermitianMatrix HermitianMatrix::identity(std::size_t dim, double scale) {
  HermitianMatrix h(dim);
  for (Eigen::Index i = 0; i < as_index(dim); ++i) h.m_(i, i) = scale;
  return h;
}

HermitianMatrix HermitianMatrix::diagonal(const std::vector<double>& diag) {
  HermitianMatrix h(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    h.m_(as_index(i), as_index(i)) = diag[i];
  }
  return h;
}

HermitianMatrix HermitianMatrix::outer(const ComplexVector& x) {
  return HermitianMatrix(ComplexMatrix(x * x.adjoint()));
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  HermitianMatrix r = *this;
  r += o;
  return r;
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const {
  HermitianMatrix r = *this;
  r.m_ -= o.m_;
  return r;
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  HermitianMatrix r = *this;
  r.m_ *= s;
  return r;
}

HermitianMatrix& HermitianMatrix::operator+=(const HermitianMatrix& o) {
  m_ += o.m_;
  return *this;
}

double HermitianMatrix::inner(const HermitianMatrix& o) const {
  // trace(A B) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B.
  return (m_.array() * o.m_.conjugate().array()).sum().real();
}

HermitianMatrix HermitianMatrix::congruence(const ComplexMatrix& t) const {
  return HermitianMatrix(ComplexMatrix(t * m_ * t.adjoint()), 1e-6);
}

EigenDecomposition hermitian_eig(const HermitianMatrix& a) {
  if (!a.is_finite()) throw NumericalError("hermitian_eig: non-finite input");
  const Eigen::Index n = a.matrix().rows();
  EigenDecomposition out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_eig: eigensolver did not converge");
  }
  // Eigen sorts ascending.
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[static_cast<std::size_t>(i)] = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

ComplexMatrix half_factor(const HermitianMatrix& g) {
  const auto eig = hermitian_eig(g);
  const double floor = -kPsdClipTol * g.frobenius_norm();
  const Eigen::Index n = eig.vectors.rows();
  ComplexMatrix l(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lam = eig.values[static_cast<std::size_t>(i)];
    if (lam < floor) {
      throw NumericalError("half_factor: matrix is indefinite (eigenvalue " +
                           std::to_string(lam) + ")");
    }
    lam = std::max(lam, 0.0);
    l.row(i) = std::sqrt(lam / 2.0) * eig.vectors.col(i).adjoint();
  }
  return l;
}

HermitianMatrix psd_project(const HermitianMatrix& a) {
  const auto eig = hermitian_eig(a);
  const Eigen::Index n = eig.vectors.rows();
  RealVector clipped(n);
  bool changed = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = eig.values[static_cast<std::size_t>(i)];
    clipped(i) = std::max(lam, 0.0);
    changed = changed || lam < 0.0;
  }
  if (!changed) return a;
  return HermitianMatrix(
      ComplexMatrix(eig.vectors * clipped.cast<cdouble>().asDiagonal() * eig.vectors.adjoint()),
      1e-6);
}

double min_eigenvalue(const HermitianMatrix& a) {
  if (a.dim() == 0) return 0.0;
  return hermitian_eig(a).values.back();
}

bool is_psd(const HermitianMatrix& a, double rel_tol) {
  return min_eigenvalue(a) >= -rel_tol * std::max(1.0, a.frobenius_norm());
}

std::string to_string(const HermitianMatrix& a) {
  std::ostringstream os;
  os << a.matrix();
  return os.str();
}

}  // namespace emfsec
