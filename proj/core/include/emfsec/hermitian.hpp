#pragma once

// Small dense complex linear algebra: Hermitian storage, eigendecomposition,
// the G = 2 L^H L half factorization and PSD projection. Every covariance in
// the library passes through here; dimensions are tiny (<= 8 in practice).

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emfsec {

using cdouble = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Raised when an input violates a numerical precondition (non-finite
/// entries, indefinite matrix where PSD is required, mismatched sizes).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Complex square matrix that is exactly conjugate-symmetric.
///
/// Construction symmetrizes as (A + A^H)/2 after checking that the input is
/// Hermitian to a relative tolerance, so downstream code can rely on
/// `matrix() == matrix().adjoint()` bit for bit.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(std::size_t dim);
  explicit HermitianMatrix(const ComplexMatrix& a, double rel_tol = 1e-9);

  static HermitianMatrix zero(std::size_t dim) { return HermitianMatrix(dim); }
  static HermitianMatrix identity(std::size_t dim, double scale = 1.0);
  static HermitianMatrix diagonal(const std::vector<double>& diag);
  /// Builds x x^H.
  static HermitianMatrix outer(const ComplexVector& x);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  cdouble operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  double trace() const { return m_.trace().real(); }
  double frobenius_norm() const { return m_.norm(); }
  bool is_finite() const { return m_.allFinite(); }

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator-(const HermitianMatrix& o) const;
  HermitianMatrix operator*(double s) const;
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a) { return a * s; }
  HermitianMatrix& operator+=(const HermitianMatrix& o);

  /// Real inner product trace(A B) for Hermitian A, B.
  double inner(const HermitianMatrix& o) const;

  /// T A T^H for an arbitrary (possibly rectangular) T.
  HermitianMatrix congruence(const ComplexMatrix& t) const;

 private:
  ComplexMatrix m_;
};

struct EigenDecomposition {
  std::vector<double> values;  // descending
  ComplexMatrix vectors;       // columns are eigenvectors, unitary
};

/// A = U diag(lambda) U^H with eigenvalues sorted in descending order.
/// Throws NumericalError on non-finite input.
EigenDecomposition hermitian_eig(const HermitianMatrix& a);

/// L with 2 L^H L = G for a PSD G (rank deficiency allowed).
///
/// Uses the eigendecomposition square root L = diag(sqrt(lambda/2)) U^H, so
/// L has dim rows and zero rows for zero eigenvalues. Eigenvalues down to
/// -1e-12 * ||G||_F are clipped to zero; anything more negative throws.
ComplexMatrix half_factor(const HermitianMatrix& g);

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
HermitianMatrix psd_project(const HermitianMatrix& a);

/// Smallest eigenvalue; convenience for feasibility checks.
double min_eigenvalue(const HermitianMatrix& a);

bool is_psd(const HermitianMatrix& a, double rel_tol = 1e-12);

std::string to_string(const HermitianMatrix& a);

}  // namespace emfsec
