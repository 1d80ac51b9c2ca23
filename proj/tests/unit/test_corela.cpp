#include <doctest.h>

#include "oica/corela.hpp"
#include "oica/errors.hpp"
#include "oica/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

using namespace oica;

namespace {

// Exact Euclidean projection onto the simplex by enumerating supports; for
// each support the KKT system has a closed-form solution.
Vector simplex_oracle(const Vector& v) {
  const Index p = v.size();
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << p); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (Index i = 0; i < p; ++i)
      if (mask & (1u << i)) {
        sum += v[i];
        ++count;
      }
    const double shift = (sum - 1.0) / count;
    Vector w = Vector::Zero(p);
    bool ok = true;
    for (Index i = 0; i < p; ++i)
      if (mask & (1u << i)) {
        w[i] = v[i] - shift;
        if (w[i] < 0.0) ok = false;
      }
    if (ok && (w - v).norm() < best_dist) {
      best_dist = (w - v).norm();
      best = w;
    }
  }
  return best;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec_of(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("vec follows the row-major index formula") {
  CHECK(vec(mat2(1, 3, 2, 4)) == vec_of({1, 3, 2, 4}));
  CHECK(mat(vec_of({1, 3, 2, 4}), 2, 2) == mat2(1, 3, 2, 4));
  const Vector a = vec_of({1, 2}), b = vec_of({3, 4});
  CHECK(vec(a * b.transpose()) == vec_of({3, 4, 6, 8}));
  CHECK(khatri_rao(a, b) == Matrix(vec_of({3, 4, 6, 8})));
  CHECK(mat(Vector::Zero(6), 2, 3).isZero(0.0));
  CHECK_THROWS_AS(mat(Vector::Zero(5), 2, 3), DimensionError);
}

TEST_CASE("vec and mat are inverse bijections") {
  Rng rng(1);
  for (Index p = 1; p <= 20; p += 3)
    for (Index q = 1; q <= 20; q += 4) {
      const Matrix m = standard_normal(p, q, rng);
      CHECK(mat(vec(m), p, q) == m);
      const Vector v = standard_normal(p * q, 1, rng);
      CHECK(vec(mat(v, p, q)) == v);
    }
}

TEST_CASE("khatri_rao") {
  const Matrix i2 = Matrix::Identity(2, 2);
  Matrix expect(4, 2);
  expect << 1, 0, 0, 0, 0, 0, 0, 1;
  CHECK(khatri_rao(i2, i2) == expect);
  CHECK_THROWS_AS(khatri_rao(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), DimensionError);

  Rng rng(2);
  const Matrix d = standard_normal(4, 6, rng);
  const Matrix kr = khatri_rao(d, d);
  CHECK(numerical_rank(kr, 1e-8) == 6);
  for (Index i = 0; i < 6; ++i)
    CHECK((mat(kr.col(i), 4, 4) - d.col(i) * d.col(i).transpose()).norm() < 1e-14);

  for (int t = 0; t < 50; ++t) {
    const Vector a = standard_normal(5, 1, rng), b = standard_normal(3, 1, rng);
    const Vector lhs = vec(a * b.transpose()), rhs = khatri_rao(a, b);
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }
}

TEST_CASE("symmetric coordinates are an isometry") {
  Rng rng(3);
  for (Index p : {1, 2, 5, 9}) {
    const SymMatrix a(standard_normal(p, p, rng)), b(standard_normal(p, p, rng));
    const Vector ca = sym_coords(a), cb = sym_coords(b);
    CHECK(ca.size() == sym_dim(p));
    CHECK(std::abs(a.dot(b) - ca.dot(cb)) <= 1e-12 * a.norm() * b.norm());
    CHECK((sym_from_coords(ca, p).matrix() - a.matrix()).norm() < 1e-14);
    CHECK(sym_order(sym_dim(p)) == p);
  }
  CHECK(sym_index(0, 0, 3) == 0);
  CHECK(sym_index(1, 0, 3) == 1);
  CHECK(sym_index(1, 1, 3) == 3);
  CHECK(sym_index(2, 2, 3) == 5);
  CHECK_THROWS_AS(sym_order(4), DimensionError);
  CHECK_THROWS_AS(SymMatrix(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("SymMatrix is exactly symmetric") {
  Rng rng(4);
  const SymMatrix s(standard_normal(6, 6, rng));
  CHECK(s.matrix() == s.matrix().transpose());
}

TEST_CASE("project_simplex examples") {
  CHECK((project_simplex(vec_of({0.6, 0.8})) - vec_of({0.4, 0.6})).norm() < 1e-15);
  CHECK(project_simplex(vec_of({1, 0, 0})) == vec_of({1, 0, 0}));
  CHECK(project_simplex(vec_of({2, -1})) == vec_of({1, 0}));
  CHECK_THROWS_AS(project_simplex(Vector()), DimensionError);
}

TEST_CASE("project_simplex matches the support-enumeration oracle") {
  Rng rng(5);
  for (Index p : {2, 3, 5}) {
    for (int t = 0; t < 200; ++t) {
      const Vector v = 2.0 * standard_normal(p, 1, rng);
      const Vector w = project_simplex(v);
      CHECK(std::abs(w.sum() - 1.0) < 1e-12);
      CHECK(w.minCoeff() >= 0.0);
      CHECK((w - simplex_oracle(v)).norm() < 1e-10);
    }
  }
}

TEST_CASE("project_psd_trace1") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 3, -1;
  CHECK((project_psd_trace1(SymMatrix(d)).matrix() - mat2(1, 0, 0, 0)).norm() < 1e-14);
  const SymMatrix half(Matrix::Identity(2, 2) * 0.5);
  CHECK((project_psd_trace1(half).matrix() - half.matrix()).norm() < 1e-14);
  const SymMatrix bary(Matrix::Identity(7, 7) / 7.0);
  CHECK((project_psd_trace1(bary).matrix() - bary.matrix()).norm() < 1e-14);

  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const SymMatrix a(standard_normal(6, 6, rng)), b(standard_normal(6, 6, rng));
    const SymMatrix pa = project_psd_trace1(a), pb = project_psd_trace1(b);
    CHECK(sym_eig(pa).values[0] >= -1e-10);
    CHECK(std::abs(pa.trace() - 1.0) < 1e-10);
    CHECK((project_psd_trace1(pa).matrix() - pa.matrix()).norm() < 1e-12);
    CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);
  }

  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(project_psd_trace1(SymMatrix(bad)), NumericalError);
}

TEST_CASE("hungarian") {
  CHECK(hungarian(mat2(1, 2, 2, 1)) == Permutation::identity(2));
  CHECK(hungarian(mat2(2, 1, 1, 2)) == Permutation({1, 0}));
  CHECK(assignment_cost(mat2(2, 1, 1, 2), hungarian(mat2(2, 1, 1, 2))) == 2.0);
  CHECK_THROWS_AS(hungarian(Matrix::Zero(2, 3)), InputError);
  CHECK_THROWS_AS(hungarian(mat2(1, std::numeric_limits<double>::infinity(), 0, 0)), InputError);

  Rng rng(7);
  for (int t = 0; t < 40; ++t) {
    const Matrix cost = standard_normal(6, 6, rng);
    std::vector<Index> perm(6);
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (Index i = 0; i < 6; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(assignment_cost(cost, hungarian(cost)) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("Permutation rejects non-bijections") {
  CHECK_THROWS_AS(Permutation({0, 0}), InputError);
  CHECK_THROWS_AS(Permutation({0, 2}), InputError);
}

TEST_CASE("orthonormal_complement") {
  Rng rng(8);
  Eigen::HouseholderQR<Matrix> qr(standard_normal(10, 4, rng));
  const Matrix q = qr.householderQ() * Matrix::Identity(10, 4);
  const Matrix c = orthonormal_complement(q);
  CHECK(c.cols() == 6);
  CHECK((q.transpose() * c).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((c.transpose() * c - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(max_principal_angle(q, q) < 1e-7);
}
