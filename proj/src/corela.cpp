#include "oica/corela.hpp"

#include "oica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace oica {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "SymMatrix: expected a square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(Index p) { return SymMatrix(Matrix::Zero(p, p), Trusted{}); }

SymMatrix SymMatrix::identity(Index p) { return SymMatrix(Matrix::Identity(p, p), Trusted{}); }

SymMatrix SymMatrix::outer(const Vector& v) { return SymMatrix(v * v.transpose(), Trusted{}); }

double SymMatrix::dot(const SymMatrix& other) const {
  if (other.dim() != dim()) throw DimensionError("SymMatrix::dot: dimension mismatch");
  return m_.cwiseProduct(other.m_).sum();
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.dim() != dim()) throw DimensionError("SymMatrix: dimension mismatch");
  m_ += other.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  if (other.dim() != dim()) throw DimensionError("SymMatrix: dimension mismatch");
  m_ -= other.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

Permutation::Permutation(std::vector<Index> map) : map_(std::move(map)) {
  std::vector<char> seen(map_.size(), 0);
  for (Index v : map_) {
    if (v < 0 || v >= static_cast<Index>(map_.size()) || seen[static_cast<std::size_t>(v)])
      throw InputError("Permutation: map is not a bijection");
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

Permutation Permutation::identity(Index k) {
  std::vector<Index> m(static_cast<std::size_t>(k));
  std::iota(m.begin(), m.end(), Index{0});
  return Permutation(std::move(m));
}

Vector vec(const Matrix& m) {
  const Index p = m.rows(), q = m.cols();
  Vector v(p * q);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < q; ++j) v[i * q + j] = m(i, j);
  return v;
}

Matrix mat(const Vector& v, Index p, Index q) {
  if (p < 0 || q < 0 || v.size() != p * q) {
    std::ostringstream os;
    os << "mat: vector of length " << v.size() << " cannot be reshaped to " << p << "x" << q;
    throw DimensionError(os.str());
  }
  Matrix m(p, q);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < q; ++j) m(i, j) = v[i * q + j];
  return m;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    std::ostringstream os;
    os << "khatri_rao: column counts differ (" << a.cols() << " vs " << b.cols() << ")";
    throw DimensionError(os.str());
  }
  const Index n = a.rows(), m = b.rows();
  Matrix out(n * m, a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < n; ++i) out.col(j).segment(i * m, m) = a(i, j) * b.col(j);
  return out;
}

Index sym_index(Index i, Index j, Index p) noexcept {
  if (i > j) std::swap(i, j);
  // rows 0..i-1 contribute p, p-1, ..., p-i+1 entries
  return i * p - i * (i - 1) / 2 + (j - i);
}

Vector sym_coords(const SymMatrix& m) {
  const Index p = m.dim();
  Vector c(sym_dim(p));
  Index t = 0;
  for (Index i = 0; i < p; ++i) {
    c[t++] = m(i, i);
    for (Index j = i + 1; j < p; ++j) c[t++] = kSqrt2 * m(i, j);
  }
  return c;
}

Vector sym_coords(const Matrix& m) { return sym_coords(SymMatrix(m)); }

SymMatrix sym_from_coords(const Eigen::Ref<const Vector>& c, Index p) {
  if (c.size() != sym_dim(p)) throw DimensionError("sym_from_coords: coordinate length mismatch");
  Matrix m(p, p);
  Index t = 0;
  for (Index i = 0; i < p; ++i) {
    m(i, i) = c[t++];
    for (Index j = i + 1; j < p; ++j) {
      const double v = c[t++] / kSqrt2;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return SymMatrix(m);
}

Index sym_order(Index m) {
  const auto p = static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(m) + 1.0) - 1.0) / 2.0));
  if (sym_dim(p) != m) throw DimensionError("sym_order: length is not of the form p(p+1)/2");
  return p;
}

Vector project_simplex(const Vector& v) {
  if (v.size() == 0) throw DimensionError("project_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double running = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    running += u[j];
    const double t = (running - 1.0) / static_cast<double>(j + 1);
    // The last index with u_j > t_j fixes the shift.
    if (u[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

SymEigen sym_eig(const SymMatrix& m) {
  if (!m.matrix().allFinite()) throw NumericalError("sym_eig: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix());
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "sym_eig: eigendecomposition failed (p=" << m.dim() << ", |M|_F=" << m.norm() << ")";
    throw NumericalError(os.str());
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

SymMatrix project_psd_trace1(const SymMatrix& b) {
  const SymEigen e = sym_eig(b);
  const Vector w = project_simplex(e.values);
  return SymMatrix(e.vectors * w.asDiagonal() * e.vectors.transpose());
}

Permutation hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw InputError("hungarian: cost matrix must be square");
  if (!cost.allFinite()) throw InputError("hungarian: cost matrix has non-finite entries");
  const Index n = cost.rows();
  if (n == 0) return Permutation{};

  // 1-based potentials formulation; row 0 / column 0 are sentinels.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  auto at = [](auto& vecref, Index i) -> auto& { return vecref[static_cast<std::size_t>(i)]; };

  for (Index row = 1; row <= n; ++row) {
    at(match, 0) = row;
    Index col0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      at(used, col0) = 1;
      const Index i0 = at(match, col0);
      double delta = inf;
      Index col1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (at(used, j)) continue;
        const double cur = cost(i0 - 1, j - 1) - at(u, i0) - at(v, j);
        if (cur < at(minv, j)) {
          at(minv, j) = cur;
          at(way, j) = col0;
        }
        if (at(minv, j) < delta) {
          delta = at(minv, j);
          col1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (at(used, j)) {
          at(u, at(match, j)) += delta;
          at(v, j) -= delta;
        } else {
          at(minv, j) -= delta;
        }
      }
      col0 = col1;
    } while (at(match, col0) != 0);
    do {
      const Index col1 = at(way, col0);
      at(match, col0) = at(match, col1);
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<Index> sigma(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j) sigma[static_cast<std::size_t>(at(match, j) - 1)] = j - 1;
  return Permutation(std::move(sigma));
}

double assignment_cost(const Matrix& cost, const Permutation& sigma) {
  if (cost.rows() != sigma.size() || cost.cols() != sigma.size())
    throw DimensionError("assignment_cost: size mismatch");
  double total = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) total += cost(i, sigma[i]);
  return total;
}

Matrix orthonormal_complement(const Matrix& q) {
  const Index m = q.rows(), r = q.cols();
  if (r == 0) return Matrix::Identity(m, m);
  if (r >= m) return Matrix(m, 0);
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix full = qr.householderQ() * Matrix::Identity(m, m);
  Matrix comp = full.rightCols(m - r);
  // One re-orthogonalization pass against q keeps the complement orthogonal
  // to machine precision even if q is slightly off-orthonormal.
  comp -= q * (q.transpose() * comp);
  Eigen::HouseholderQR<Matrix> qr2(comp);
  Matrix out = qr2.householderQ() * Matrix::Identity(m, m - r);
  return out;
}

Index numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * s[0]) ++r;
  return r;
}

double max_principal_angle(const Matrix& q1, const Matrix& q2) {
  if (q1.rows() != q2.rows()) throw DimensionError("max_principal_angle: ambient dimension mismatch");
  if (q1.cols() == 0 || q2.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(q1.transpose() * q2);
  const Vector s = svd.singularValues();
  const double smin = std::clamp(s[s.size() - 1], -1.0, 1.0);
  return std::acos(smin);
}

}  // namespace oica
