#include <doctest.h>

#include "alloc_tracker.hpp"
#include "oica/errors.hpp"
#include "oica/moments.hpp"
#include "oica/subspace.hpp"

#include <cmath>
#include <random>

using namespace oica;

namespace {

// Unit-variance uniform sources: U(-sqrt3, sqrt3).
Matrix uniform_sources(Index k, Index n, Rng& rng, double half_width = std::sqrt(3.0)) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Matrix a(k, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < k; ++i) a(i, j) = u(rng);
  return a;
}

Matrix unit_columns(Matrix d) {
  d.colwise().normalize();
  return d;
}

}  // namespace

TEST_CASE("center") {
  Matrix constant = Matrix::Ones(3, 5);
  constant.row(1) *= 7.0;
  CHECK(center(SampleMatrix(constant)).data().isZero(0.0));

  Rng rng(1);
  const SampleMatrix x(standard_normal(4, 100, rng) + Matrix::Constant(4, 100, 3.0));
  const SampleMatrix c = center(x);
  CHECK(c.centered());
  CHECK(c.data().rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  CHECK((center(c).data() - c.data()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(center(SampleMatrix(Matrix::Ones(2, 1))), InputError);
}

TEST_CASE("SampleMatrix rejects non-finite data") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(SampleMatrix{m}, InputError);
}

TEST_CASE("gencov at t = 0 is the sample covariance") {
  Rng rng(2);
  const SampleMatrix x(standard_normal(5, 2000, rng) * 2.0);
  const GenCov g = gencov(x, Vector::Zero(5));
  // Independent oracle: two-pass covariance.
  const Matrix centered = x.data().colwise() - x.data().rowwise().mean();
  const Matrix oracle = centered * centered.transpose() / 2000.0;
  CHECK((g.hessian.matrix() - oracle).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g.hessian.matrix() - sample_covariance(x).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(g.hessian.matrix() == g.hessian.matrix().transpose());
  CHECK(!g.degenerate);
}

TEST_CASE("gencov matches a direct weighted computation") {
  Rng rng(3);
  const SampleMatrix x(standard_normal(3, 600, rng));
  const Vector t = 0.4 * standard_normal(3, 1, rng);
  const GenCov g = gencov(x, t);
  // Unshifted weights are harmless at this scale.
  Vector w = (t.transpose() * x.data()).transpose().array().exp().matrix();
  w /= w.sum();
  const Vector mean = x.data() * w;
  const Matrix cov = x.data() * w.asDiagonal() * x.data().transpose() - mean * mean.transpose();
  CHECK((g.mean - mean).norm() < 1e-12);
  CHECK((g.hessian.matrix() - cov).norm() < 1e-12);
}

TEST_CASE("gencov flags weight collapse") {
  Matrix data = Matrix::Zero(2, 10);
  data(0, 3) = 1.0;
  const GenCov g = gencov(SampleMatrix(data), Vector::Constant(2, 50.0));
  CHECK(g.degenerate);
  CHECK(g.max_weight_fraction > 0.999);
  CHECK(g.hessian.matrix().allFinite());
}

TEST_CASE("gencov of Gaussian data does not depend on the probe") {
  Rng rng(4);
  const Index n = 1000000;
  Matrix l(3, 3);
  l << 1.0, 0.0, 0.0, 0.5, 1.2, 0.0, -0.3, 0.4, 0.8;
  const Matrix sigma = l * l.transpose();
  const SampleMatrix x(l * standard_normal(3, n, rng));
  const double tol = 5.0 / std::sqrt(static_cast<double>(n)) * sigma.norm();  // Frobenius
  // Probes with t^T S t around 1/4 keep the effective sample size near n.
  const Matrix probes = sample_probes(3, 10, 0.5 * default_probe_scale(x), rng);
  const GenCovBatch b = gencov_batch(x, probes);
  const SymMatrix c0 = gencov(x, Vector::Zero(3)).hessian;
  for (Index j = 0; j < b.size(); ++j) {
    CHECK((b.hessian(j).matrix() - sigma).norm() <= tol);
    CHECK((b.hessian(j) - c0).norm() <= tol);
  }
}

TEST_CASE("gencov stack of ICA data is close to rank k") {
  Rng rng(5);
  const Index p = 4, k = 3, n = 400000;
  const Matrix d = unit_columns(standard_normal(p, k, rng));
  const SampleMatrix x = center(SampleMatrix(d * uniform_sources(k, n, rng)));
  const GenCovBatch b = gencov_batch(x, sample_probes(p, 30, 2.0 * default_probe_scale(x), rng));
  const SubspaceBasis w = basis_from_gencovs(b, k);
  const Vector& sv = w.spectrum();
  // Beyond k only sampling noise remains.
  CHECK(sv[k] < 0.2 * sv[k - 1]);
}

TEST_CASE("sample_probes") {
  Rng rng(6);
  CHECK_THROWS_AS(sample_probes(3, 0, 1.0, rng), InputError);
  CHECK_THROWS_AS(sample_probes(3, 2, 0.0, rng), InputError);
  Rng r1(9), r2(9);
  CHECK(sample_probes(5, 7, 0.3, r1) == sample_probes(5, 7, 0.3, r2));

  Rng r3(7);
  const Matrix big = sample_probes(2, 50000, 0.5, r3);
  const double mean_sd = std::sqrt(big.array().square().mean());
  CHECK(mean_sd == doctest::Approx(0.5).epsilon(0.01));

  // Default scale on standardized p=15 data keeps |t^T x| tame.
  Rng r4(8);
  const SampleMatrix x(standard_normal(15, 20000, r4));
  const Matrix probes = sample_probes(15, 150, default_probe_scale(x), r4);
  CHECK((probes.transpose() * x.data()).cwiseAbs().maxCoeff() <= 20.0);
}

TEST_CASE("cum4 of Gaussian data vanishes") {
  Rng rng(10);
  const Index p = 4, n = 1000000;
  const Cum4Flattening c = cum4_flattening(SampleMatrix(standard_normal(p, n, rng)));
  CHECK(c.c.rows() == p * p);
  CHECK(c.c.norm() / (p * p) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK((c.c - c.c.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * c.c.cwiseAbs().maxCoeff());
}

TEST_CASE("cum4 of a scalar uniform source") {
  Rng rng(11);
  const Index n = 1000000;
  const Cum4Flattening c = cum4_flattening(SampleMatrix(uniform_sources(1, n, rng, 0.5)));
  // kappa_4 of U(-a, a) is -2 a^4 / 15.
  CHECK(std::abs(c.c(0, 0) - (-2.0 * std::pow(0.5, 4) / 15.0)) <= 10.0 / std::sqrt(static_cast<double>(n)));
  CHECK_THROWS_AS(cum4_flattening(SampleMatrix(Matrix::Ones(1, 3))), InputError);
}

TEST_CASE("cum4 entries match a direct formula") {
  Rng rng(12);
  const Index p = 3, n = 500;
  const SampleMatrix x = center(SampleMatrix(standard_normal(p, n, rng) + 0.3 * standard_normal(p, n, rng).cwiseAbs2()));
  const Cum4Flattening c = cum4_flattening(x);
  const Matrix& d = x.data();
  auto e2 = [&](Index a, Index b) { return d.row(a).dot(d.row(b)) / n; };
  for (Index a = 0; a < p; ++a)
    for (Index b = 0; b < p; ++b)
      for (Index cc = 0; cc < p; ++cc)
        for (Index dd = 0; dd < p; ++dd) {
          double m4 = 0.0;
          for (Index i = 0; i < n; ++i) m4 += d(a, i) * d(b, i) * d(cc, i) * d(dd, i);
          m4 /= n;
          const double expect = m4 - e2(a, b) * e2(cc, dd) - e2(a, cc) * e2(b, dd) - e2(a, dd) * e2(b, cc);
          CHECK(c.c(a * p + b, cc * p + dd) == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
        }
}

TEST_CASE("cum4 column space aligns with khatri_rao(D, D)") {
  Rng rng(13);
  const Index p = 4, k = 5, n = 1000000;
  const Matrix d = unit_columns(standard_normal(p, k, rng));
  const SampleMatrix x(d * uniform_sources(k, n, rng));
  const Cum4Flattening c = cum4_flattening(x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.c);
  // top-k by magnitude; all cumulants are negative here
  const Matrix top = es.eigenvectors().leftCols(k);
  const Matrix kr = khatri_rao(d, d);
  Eigen::HouseholderQR<Matrix> qr(kr);
  const Matrix qkr = qr.householderQ() * Matrix::Identity(p * p, k);
  CHECK(max_principal_angle(top, qkr) < 5.0 * M_PI / 180.0);
}

TEST_CASE("kurtosis") {
  Rng rng(14);
  const std::size_t n = 1000000;
  const double bound = 10.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> g(n), u(n), l(n);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-std::sqrt(3.0), std::sqrt(3.0));
  std::exponential_distribution<double> ed(std::sqrt(2.0));
  std::bernoulli_distribution coin;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = nd(rng);
    u[i] = ud(rng);
    l[i] = (coin(rng) ? 1.0 : -1.0) * ed(rng);
  }
  CHECK(std::abs(kurtosis(g)) <= bound);
  CHECK(std::abs(kurtosis(u) + 1.2) <= bound);
  CHECK(std::abs(kurtosis(l) - 3.0) <= 2.0 * bound);
  const std::vector<double> few{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(kurtosis(few), InputError);
}

TEST_CASE("memory grows as p^2 s for gencov and p^4 for cum4") {
  Rng rng(15);
  const Index n = 2000, s = 100;
  std::size_t gen[2], cum[2];
  int slot = 0;
  for (Index p : {20, 40}) {
    const SampleMatrix x = center(SampleMatrix(standard_normal(p, n, rng)));
    const Matrix probes = sample_probes(p, s, default_probe_scale(x), rng);
    {
      testing::PeakScope scope;
      const GenCovBatch b = gencov_batch(x, probes);
      gen[slot] = scope.peak();
    }
    {
      testing::PeakScope scope;
      const Cum4Flattening c = cum4_flattening(x);
      cum[slot] = scope.peak();
    }
    ++slot;
  }
  const double gen_ratio = static_cast<double>(gen[1]) / static_cast<double>(gen[0]);
  const double cum_ratio = static_cast<double>(cum[1]) / static_cast<double>(cum[0]);
  MESSAGE("gencov peak ratio " << gen_ratio << ", cum4 peak ratio " << cum_ratio);
  CHECK(gen_ratio >= 4.0 / 3.0);
  CHECK(gen_ratio <= 4.0 * 3.0);
  CHECK(cum_ratio >= 16.0 / 3.0);
  CHECK(cum_ratio <= 16.0 * 3.0);
}
