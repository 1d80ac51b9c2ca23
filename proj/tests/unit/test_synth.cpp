#include <doctest.h>

#include "oica/errors.hpp"
#include "oica/moments.hpp"
#include "oica/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace oica;

namespace {

void check_unit_columns(const MixingMatrix& d) {
  for (Index i = 0; i < d.k(); ++i) CHECK(std::abs(d.matrix().col(i).norm() - 1.0) <= 1e-12);
}

SamplingSpec spec_of(Index p, Index k, MixingMode mode, std::uint64_t seed) {
  SamplingSpec s;
  s.p = p;
  s.k = k;
  s.mode = mode;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("every mode returns unit-norm columns") {
  for (MixingMode mode : {MixingMode::normal, MixingMode::prune, MixingMode::sparse})
    for (auto [p, k] : {std::pair<Index, Index>{3, 2}, {6, 10}, {10, 20}}) {
      const MixingMatrix d = sample_mixing(spec_of(p, k, mode, 5));
      CHECK(d.p() == p);
      CHECK(d.k() == k);
      check_unit_columns(d);
    }
}

TEST_CASE("sparse mode zeroes half of the entries") {
  for (auto [p, k] : {std::pair<Index, Index>{4, 6}, {5, 7}, {10, 20}, {3, 5}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const MixingMatrix d = sample_mixing(spec_of(p, k, MixingMode::sparse, seed));
      const auto zeros = (d.matrix().array() == 0.0).count();
      const Index half = p * k / 2;
      CHECK((zeros == half || zeros == (p * k + 1) / 2));
      for (Index i = 0; i < k; ++i) CHECK(d.matrix().col(i).squaredNorm() > 0.0);
    }
  }
}

TEST_CASE("sampling is reproducible from the seed") {
  for (MixingMode mode : {MixingMode::normal, MixingMode::prune, MixingMode::sparse}) {
    const Matrix a = sample_mixing(spec_of(6, 9, mode, 42)).matrix();
    const Matrix b = sample_mixing(spec_of(6, 9, mode, 42)).matrix();
    const Matrix c = sample_mixing(spec_of(6, 9, mode, 43)).matrix();
    CHECK(a == b);
    CHECK(a != c);
  }
}

TEST_CASE("coherence examples") {
  CHECK(coherence(MixingMatrix(Matrix::Identity(4, 4))) == 0.0);

  Matrix dup(3, 3);
  dup << 1, 1, 0, 0, 0, 1, 0, 0, 0;
  CHECK(coherence(MixingMatrix(dup)) == doctest::Approx(1.0).epsilon(1e-15));

  const double c60 = std::cos(std::numbers::pi / 3), s60 = std::sin(std::numbers::pi / 3);
  Matrix d(2, 2);
  d << 1, c60, 0, s60;
  CHECK(coherence(MixingMatrix::normalized(d)) == doctest::Approx(0.5).epsilon(1e-14));

  CHECK(coherence(MixingMatrix(Matrix::Identity(3, 1))) == 0.0);
}

TEST_CASE("prune mode respects the coherence cap") {
  SamplingSpec s = spec_of(8, 12, MixingMode::prune, 3);
  s.coherence_cap = 0.75;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    s.seed = seed;
    CHECK(coherence(sample_mixing(s)) <= 0.75);
  }
  // Three directions in the plane always have a pair within 60 degrees.
  SamplingSpec impossible = spec_of(2, 3, MixingMode::prune, 1);
  impossible.coherence_cap = 0.4;
  CHECK_THROWS_AS(sample_mixing(impossible), SamplingError);
}

TEST_CASE("median coherence of normal draws stays in its frozen band") {
  // Band frozen from 200 replicate medians on an unrelated stream
  // (range 0.786 to 0.800, sd about 0.0025).
  Rng rng(20240517);
  SamplingSpec s = spec_of(10, 20, MixingMode::normal, 0);
  std::vector<double> c;
  for (int i = 0; i < 1000; ++i) c.push_back(coherence(sample_mixing(s, rng)));
  std::nth_element(c.begin(), c.begin() + 500, c.end());
  CHECK(c[500] >= 0.780);
  CHECK(c[500] <= 0.806);
}

TEST_CASE("mean coherence is persisted in the cache directory") {
  const auto dir = std::filesystem::temp_directory_path() / "oica_test_cache";
  std::filesystem::remove_all(dir);
  ::setenv("OICA_CACHE_DIR", dir.c_str(), 1);
  const double v = mean_coherence(5, 7);
  CHECK(v == mean_coherence_uncached(5, 7, 10000));
  const auto file = dir / "coherence_p5_k7_n10000.txt";
  REQUIRE(std::filesystem::exists(file));
  std::ifstream in(file);
  double stored = 0.0;
  in >> stored;
  CHECK(stored == v);
  CHECK(mean_coherence(5, 7) == v);
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(sample_mixing(spec_of(0, 1, MixingMode::normal, 0)), InputError);
  CHECK_THROWS_AS(sample_mixing(spec_of(4, 0, MixingMode::normal, 0)), InputError);
  CHECK_THROWS_AS(sample_mixing(spec_of(4, 11, MixingMode::normal, 0)), InputError);
  CHECK_NOTHROW(sample_mixing(spec_of(4, 10, MixingMode::normal, 0)));
  CHECK(parse_mixing_mode("sparse") == MixingMode::sparse);
  CHECK_THROWS_AS(parse_mixing_mode("dense"), InputError);
}

TEST_CASE("uniform sources with D = I have covariance I/12") {
  const Index n = 200000;
  Rng rng(11);
  const IcaSample s = sample_ica_with_sources(MixingMatrix(Matrix::Identity(4, 4)), n, SourceLaw::uniform(), rng);
  const Matrix cov = sample_covariance(s.x).matrix();
  const double tol = 5.0 / std::sqrt(static_cast<double>(n));
  CHECK((cov - Matrix::Identity(4, 4) / 12.0).cwiseAbs().maxCoeff() <= tol);
  CHECK(s.sources.cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("uniform source rows have kurtosis -1/120") {
  // The plug-in estimator has sd sqrt(Var(a^4 - 6 s2 a^2) / n) ~ 0.0218 / sqrt(n)
  // for U(-1/2, 1/2); 6 sd is allowed.
  const Index n = 200000;
  Rng rng(12);
  const IcaSample s = sample_ica_with_sources(sample_mixing(spec_of(5, 8, MixingMode::normal, 1)), n,
                                              SourceLaw::uniform(), rng);
  for (Index i = 0; i < s.sources.rows(); ++i) {
    const Vector row = s.sources.row(i);
    const double k4 = kurtosis(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    CHECK(std::abs(k4 + 1.0 / 120.0) <= 6.0 * 0.0218 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("samples are exactly D times the sources") {
  Rng rng(13);
  const MixingMatrix d = sample_mixing(spec_of(6, 10, MixingMode::normal, 2));
  const IcaSample s = sample_ica_with_sources(d, 1000, SourceLaw::laplace(), rng);
  CHECK(s.x.n() == 1000);
  const Matrix dx = d.matrix() * s.sources;
  CHECK((s.x.data() - dx).cwiseAbs().maxCoeff() == 0.0);

  Rng a(14), b(14);
  CHECK(sample_ica(d, 50, SourceLaw::uniform(), a).data() == sample_ica(d, 50, SourceLaw::uniform(), b).data());
}

TEST_CASE("single observation and source-law errors") {
  Rng rng(15);
  const MixingMatrix d = sample_mixing(spec_of(3, 4, MixingMode::normal, 3));
  const SampleMatrix one = sample_ica(d, 1, SourceLaw::uniform(), rng);
  CHECK(one.p() == 3);
  CHECK(one.n() == 1);
  CHECK_THROWS_AS(sample_ica(d, 10, SourceLaw{SourceKind::gaussian, {}}, rng), AssumptionError);
  CHECK_THROWS_AS(sample_ica(d, 0, SourceLaw::uniform(), rng), InputError);

  SourceLaw two_point{SourceKind::custom, [](Rng& r) { return (r() & 1u) ? 1.0 : -1.0; }};
  const IcaSample s = sample_ica_with_sources(d, 100, two_point, rng);
  CHECK((s.sources.array().abs() == 1.0).all());
}

TEST_CASE("laplace draws have unit variance") {
  Rng rng(16);
  const int n = 400000;
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = draw_source(SourceLaw::laplace(), rng);
    m2 += v * v;
  }
  // Var(a^2) = E a^4 - 1 = 5 for the unit-variance Laplace law.
  CHECK(std::abs(m2 / n - 1.0) <= 6.0 * std::sqrt(5.0 / n));
}

TEST_CASE("population instances reconstruct their atoms") {
  const PopulationInstance inst = population_instance(6, 12, 7);
  CHECK(inst.w.k() == 12);
  for (Index i = 0; i < inst.d.k(); ++i) CHECK(inst.w.residual(inst.d.atom(i)) < 1e-10);

  const PopulationInstance full = population_instance(10, 55, 8);
  CHECK(full.w.k() == 55);
  CHECK(full.w.null_basis().cols() == 0);
  CHECK_THROWS_AS(population_instance(10, 56, 8), InputError);
}
