#pragma once

// Dense linear-algebra primitives: flattening, Khatri-Rao products, the
// isometric embedding of symmetric matrices, projections onto the probability
// simplex and the unit-trace PSD set, and linear assignment.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace oica {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dimension of the space of symmetric p x p matrices, p(p+1)/2.
constexpr Index sym_dim(Index p) noexcept { return p * (p + 1) / 2; }

/// Real symmetric matrix. Symmetry is exact: the constructor stores (M+M^T)/2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zero(Index p);
  static SymMatrix identity(Index p);
  /// v v^T
  static SymMatrix outer(const Vector& v);

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }
  /// Frobenius inner product.
  double dot(const SymMatrix& other) const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double s);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

 private:
  struct Trusted {};
  SymMatrix(Matrix m, Trusted) : m_(std::move(m)) {}

  Matrix m_;
};

/// Bijection on {0, ..., k-1}; map()[i] is the image of i.
class Permutation {
 public:
  Permutation() = default;
  /// Throws InputError unless `map` is a bijection.
  explicit Permutation(std::vector<Index> map);

  static Permutation identity(Index k);

  Index size() const noexcept { return static_cast<Index>(map_.size()); }
  Index operator[](Index i) const { return map_[static_cast<std::size_t>(i)]; }
  const std::vector<Index>& map() const noexcept { return map_; }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Index> map_;
};

// ---------------------------------------------------------------------------
// Flattening

/// Row-major flattening: v[i*q + j] = M(i, j). With this layout
/// vec(a b^T) == khatri_rao(a, b).
Vector vec(const Matrix& m);

/// Inverse of vec. Throws DimensionError if v.size() != p*q.
Matrix mat(const Vector& v, Index p, Index q);

/// Column-wise Kronecker product: column j is vec(A_j B_j^T).
Matrix khatri_rao(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Symmetric coordinates (the SymBasisVector embedding)
//
// Upper-triangle entries in row-major order, off-diagonals scaled by sqrt(2),
// so the Euclidean inner product of coordinates equals the Frobenius inner
// product of the matrices.

/// Position of entry (i, j), i <= j, inside the coordinate vector.
Index sym_index(Index i, Index j, Index p) noexcept;

Vector sym_coords(const SymMatrix& m);
/// Symmetrizes a general square matrix before embedding it.
Vector sym_coords(const Matrix& m);
SymMatrix sym_from_coords(const Eigen::Ref<const Vector>& c, Index p);

/// Recovers p from m = p(p+1)/2; throws DimensionError if m is not triangular.
Index sym_order(Index m);

// ---------------------------------------------------------------------------
// Projections

/// Euclidean projection onto {w : w >= 0, sum w = 1}. Sort-based, O(p log p).
Vector project_simplex(const Vector& v);

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // columns match `values`
};

/// Symmetric eigendecomposition with ascending eigenvalues. Throws
/// NumericalError on non-finite input or solver failure.
SymEigen sym_eig(const SymMatrix& m);

/// Projection onto {B : B >= 0, Tr B = 1}: eigenvalues are projected onto
/// the simplex and the eigenvectors kept.
SymMatrix project_psd_trace1(const SymMatrix& b);

// ---------------------------------------------------------------------------
// Assignment

/// Permutation sigma minimizing sum_i cost(i, sigma(i)). O(k^3) shortest
/// augmenting paths with potentials. Throws InputError for non-square or
/// non-finite costs.
Permutation hungarian(const Matrix& cost);

double assignment_cost(const Matrix& cost, const Permutation& sigma);

// ---------------------------------------------------------------------------
// Misc helpers shared by the other modules

/// Columns of `q` (orthonormal, m x r) completed to an orthonormal basis of
/// R^m; returns the m x (m - r) complement.
Matrix orthonormal_complement(const Matrix& q);

/// Numerical rank: number of singular values above tol * sigma_max.
Index numerical_rank(const Matrix& a, double rel_tol);

/// Largest principal angle (radians) between the column spans of two
/// matrices with orthonormal columns.
double max_principal_angle(const Matrix& q1, const Matrix& q2);

}  // namespace oica
