#include <doctest.h>

#include "oica/errors.hpp"
#include "oica/subspace.hpp"

#include <cmath>

using namespace oica;

namespace {

MixingMatrix random_mixing(Index p, Index k, Rng& rng) { return MixingMatrix::normalized(standard_normal(p, k, rng)); }

// Second derivative of the cgf of U(-a, a): 1/y^2 - a^2 / sinh^2(a y).
double omega_uniform(double y, double a) {
  if (std::abs(y) < 1e-3) return a * a / 3.0 - std::pow(a, 4) * y * y / 15.0;
  const double s = std::sinh(a * y);
  return 1.0 / (y * y) - a * a / (s * s);
}

// Laplace with scale b: cgf -log(1 - b^2 y^2), second derivative
// 2 b^2 (1 + b^2 y^2) / (1 - b^2 y^2)^2.
double omega_laplace(double y, double b) {
  const double u = b * b * y * y;
  return 2.0 * b * b * (1.0 + u) / ((1.0 - u) * (1.0 - u));
}

SymMatrix population_gencov(const MixingMatrix& d, const Vector& t) {
  SymMatrix c = SymMatrix::zero(d.p());
  for (Index i = 0; i < d.k(); ++i) {
    const double y = d.component(i).dot(t);
    const double w = (i % 2 == 0) ? omega_uniform(y, 0.5) : omega_laplace(y, 0.3);
    c += w * d.atom(i);
  }
  return c;
}

double max_atom_residual(const SubspaceBasis& w, const MixingMatrix& d) {
  double r = 0.0;
  for (Index i = 0; i < d.k(); ++i) r = std::max(r, w.residual(d.atom(i)));
  return r;
}

void check_invariants(const SubspaceBasis& w) {
  CHECK(w.k() + w.null_basis().cols() == w.m());
  CHECK(w.orthonormality_error() < 1e-10);
}

}  // namespace

TEST_CASE("basis from exact atoms spans the atoms") {
  Rng rng(1);
  const MixingMatrix d = random_mixing(5, 8, rng);
  std::vector<SymMatrix> atoms;
  for (Index i = 0; i < d.k(); ++i) atoms.push_back(d.atom(i));
  const SubspaceBasis w = basis_from_gencovs(atoms, d.k());
  check_invariants(w);
  CHECK(max_atom_residual(w, d) < 1e-10);
  CHECK(w.source() == SubspaceSource::gencov);
  CHECK(!w.rank_deficient());
}

TEST_CASE("basis from population gencovs") {
  Rng rng(2);
  const Index p = 6, k = 9;
  const MixingMatrix d = random_mixing(p, k, rng);
  std::vector<SymMatrix> hs;
  for (Index j = 0; j < 10 * k; ++j) hs.push_back(population_gencov(d, 0.8 * standard_normal(p, 1, rng)));
  const SubspaceBasis w = basis_from_gencovs(hs, k);
  check_invariants(w);
  CHECK(max_atom_residual(w, d) < 1e-8);
  CHECK(w.gap_ratio() > 2.0);
  // Every null element is orthogonal to the true atoms.
  for (Index j = 0; j < w.null_basis().cols(); ++j)
    for (Index i = 0; i < k; ++i) CHECK(std::abs(w.null_basis().col(j).dot(sym_coords(d.atom(i)))) < 1e-8);
}

TEST_CASE("full-rank input with k = m leaves an empty null basis") {
  Rng rng(3);
  const Index p = 4, m = sym_dim(p);
  std::vector<SymMatrix> hs;
  for (Index j = 0; j < m + 3; ++j) hs.emplace_back(standard_normal(p, p, rng));
  const SubspaceBasis w = basis_from_gencovs(hs, m);
  CHECK(w.null_basis().cols() == 0);
  check_invariants(w);
}

TEST_CASE("basis_from_gencovs preconditions") {
  Rng rng(4);
  std::vector<SymMatrix> hs(2, SymMatrix::identity(3));
  CHECK_THROWS_AS(basis_from_gencovs(hs, 3), InputError);
  CHECK_THROWS_AS(basis_from_gencovs(hs, 7), InputError);
  // Two identical matrices: rank one, asking for two directions warns.
  const SubspaceBasis w = basis_from_gencovs(hs, 2);
  CHECK(w.rank_deficient());
  CHECK(!w.warnings().empty());
}

TEST_CASE("basis from the population cumulant flattening") {
  Rng rng(5);
  const Index p = 4, k = 5;
  const MixingMatrix d = random_mixing(p, k, rng);
  const Matrix a = khatri_rao(d.matrix(), d.matrix());
  for (const Vector& kappa : {Vector(Vector::Ones(k)), Vector((Vector(k) << -1.2, 3.0, -1.2, 3.0, -0.5).finished())}) {
    Cum4Flattening c{p, a * kappa.asDiagonal() * a.transpose()};
    const SubspaceBasis w = basis_from_cum4(c, k);
    check_invariants(w);
    CHECK(w.source() == SubspaceSource::cum4);
    CHECK(max_atom_residual(w, d) < 1e-8);
    CHECK(!w.rank_deficient());
  }
  Cum4Flattening c{p, a * a.transpose()};
  CHECK(basis_from_cum4(c, k + 1).rank_deficient());
  CHECK_THROWS_AS(basis_from_cum4(c, 11), InputError);
}

TEST_CASE("gencov and cum4 bases agree on population inputs") {
  Rng rng(6);
  const Index p = 5, k = 9;
  const MixingMatrix d = random_mixing(p, k, rng);
  std::vector<SymMatrix> hs;
  for (Index j = 0; j < 10 * k; ++j) hs.push_back(population_gencov(d, 0.8 * standard_normal(p, 1, rng)));
  const Matrix a = khatri_rao(d.matrix(), d.matrix());
  const Vector kappa = Vector::LinSpaced(k, -1.2, 3.0);
  const SubspaceBasis wg = basis_from_gencovs(hs, k);
  const SubspaceBasis wc = basis_from_cum4({p, a * kappa.asDiagonal() * a.transpose()}, k);
  CHECK(max_principal_angle(wg.basis(), wc.basis()) < 1e-6);
}

TEST_CASE("population_basis") {
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  const SubspaceBasis w1 = population_basis(MixingMatrix(e1));
  CHECK(w1.k() == 1);
  CHECK(w1.null_basis().cols() == sym_dim(3) - 1);
  CHECK(std::abs(std::abs(w1.basis()(0, 0)) - 1.0) < 1e-15);
  check_invariants(w1);

  Rng rng(7);
  const MixingMatrix d = random_mixing(10, 25, rng);
  const SubspaceBasis w = population_basis(d);
  check_invariants(w);
  CHECK(max_atom_residual(w, d) < 1e-10);
  CHECK(w.source() == SubspaceSource::population);

  Matrix dup = standard_normal(4, 3, rng);
  dup.col(2) = dup.col(0);
  CHECK_THROWS_AS(population_basis(MixingMatrix::normalized(dup)), AssumptionError);
}

TEST_CASE("augment_null") {
  Rng rng(8);
  const MixingMatrix d = random_mixing(5, 6, rng);
  const SubspaceBasis w = population_basis(d);

  const SubspaceBasis same = augment_null(w, {});
  CHECK(same.basis() == w.basis());
  CHECK(same.null_basis() == w.null_basis());

  const std::vector<SymMatrix> one{d.atom(0)};
  const SubspaceBasis w1 = augment_null(w, one);
  check_invariants(w1);
  CHECK(w1.k() == w.k() - 1);
  CHECK(w1.deflated() == 1);
  CHECK(w1.residual(d.atom(0)) == doctest::Approx(1.0).epsilon(1e-10));
  // Remaining atoms still have their components orthogonal to atom 0 in W.
  for (Index i = 1; i < d.k(); ++i) CHECK(w.residual(d.atom(i)) < 1e-10);

  std::vector<SymMatrix> all;
  for (Index i = 0; i < d.k(); ++i) all.push_back(d.atom(i));
  const SubspaceBasis w0 = augment_null(w, all);
  check_invariants(w0);
  CHECK(w0.exhausted());
  CHECK(!w0.warnings().empty());

  const std::vector<SymMatrix> outside{SymMatrix(sym_from_coords(w.null_basis().col(0), 5))};
  CHECK_THROWS_AS(augment_null(w, outside), DeflationError);
}

TEST_CASE("projections are complementary") {
  Rng rng(9);
  const SubspaceBasis w = population_basis(random_mixing(4, 3, rng));
  const Vector c = standard_normal(sym_dim(4), 1, rng);
  CHECK((w.project_w(c) + w.project_null(c) - c).norm() < 1e-14);
  CHECK(std::abs(w.project_w(c).dot(w.project_null(c))) < 1e-14);
}
