#include "oica/moments.hpp"

#include "oica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace oica {

namespace {

constexpr Index kChunk = 256;
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kCollapseFraction = 0.999;

// Column i of the output holds sym_coords(x_i x_i^T).
void pair_products(const Eigen::Ref<const Matrix>& x, Matrix& out) {
  const Index p = x.rows(), c = x.cols();
  out.resize(sym_dim(p), c);
  for (Index col = 0; col < c; ++col) {
    Index t = 0;
    for (Index a = 0; a < p; ++a) {
      const double xa = x(a, col);
      out(t++, col) = xa * xa;
      for (Index b = a + 1; b < p; ++b) out(t++, col) = kSqrt2 * xa * x(b, col);
    }
  }
}

Vector outer_coords(const Vector& v) {
  const Index p = v.size();
  Vector c(sym_dim(p));
  Index t = 0;
  for (Index a = 0; a < p; ++a) {
    c[t++] = v[a] * v[a];
    for (Index b = a + 1; b < p; ++b) c[t++] = kSqrt2 * v[a] * v[b];
  }
  return c;
}

}  // namespace

SampleMatrix::SampleMatrix(Matrix data, bool centered) : data_(std::move(data)), centered_(centered) {
  if (!data_.allFinite()) throw InputError("SampleMatrix: data contains non-finite values");
}

SampleMatrix center(const SampleMatrix& x) {
  if (x.n() < 2) throw InputError("center: need at least 2 samples");
  const Vector mean = x.data().rowwise().mean();
  return SampleMatrix(x.data().colwise() - mean, true);
}

SymMatrix sample_covariance(const SampleMatrix& x) {
  if (x.n() < 1) throw InputError("sample_covariance: empty sample");
  const double inv_n = 1.0 / static_cast<double>(x.n());
  const Vector mean = x.data().rowwise().mean();
  Matrix s = inv_n * (x.data() * x.data().transpose()) - mean * mean.transpose();
  return SymMatrix(s);
}

SymMatrix GenCovBatch::hessian(Index j) const {
  return sym_from_coords(coords.col(j), means.rows());
}

GenCovBatch gencov_batch(const SampleMatrix& x, const Matrix& probes) {
  const Index p = x.p(), n = x.n(), s = probes.cols();
  if (probes.rows() != p) throw DimensionError("gencov_batch: probe dimension differs from data dimension");
  if (n < 1) throw InputError("gencov_batch: empty sample");
  if (!probes.allFinite()) throw InputError("gencov_batch: probes contain non-finite values");

  const Matrix& data = x.data();

  // Pass 1: per-probe maximum of t^T x_i for the log-sum-exp shift.
  Vector shift = Vector::Constant(s, -std::numeric_limits<double>::infinity());
  for (Index start = 0; start < n; start += kChunk) {
    const Index c = std::min(kChunk, n - start);
    const Matrix scores = probes.transpose() * data.middleCols(start, c);
    shift = shift.cwiseMax(scores.rowwise().maxCoeff());
  }

  // Pass 2: weighted zeroth, first and second moments, accumulated in place.
  GenCovBatch out;
  out.coords = Matrix::Zero(sym_dim(p), s);
  out.means = Matrix::Zero(p, s);
  Vector s0 = Vector::Zero(s);
  Matrix weights, products;
  for (Index start = 0; start < n; start += kChunk) {
    const Index c = std::min(kChunk, n - start);
    const auto block = data.middleCols(start, c);
    weights.noalias() = probes.transpose() * block;
    weights.colwise() -= shift;
    weights = weights.array().exp().matrix();
    s0 += weights.rowwise().sum();
    out.means.noalias() += block * weights.transpose();
    pair_products(block, products);
    out.coords.noalias() += products * weights.transpose();
  }

  out.max_weight_fraction.resize(static_cast<std::size_t>(s));
  out.degenerate.resize(static_cast<std::size_t>(s));
  for (Index j = 0; j < s; ++j) {
    const double total = s0[j];
    if (!std::isfinite(total) || total <= 0.0)
      throw NumericalError("gencov_batch: weight normalizer is not finite");
    out.means.col(j) /= total;
    out.coords.col(j) = out.coords.col(j) / total - outer_coords(out.means.col(j));
    // The maximizing sample has weight exactly exp(0) = 1.
    const double frac = 1.0 / total;
    out.max_weight_fraction[static_cast<std::size_t>(j)] = frac;
    out.degenerate[static_cast<std::size_t>(j)] = frac > kCollapseFraction;
  }
  if (!out.coords.allFinite()) throw NumericalError("gencov_batch: non-finite generalized covariance");
  return out;
}

GenCov gencov(const SampleMatrix& x, const Vector& t) {
  if (t.size() != x.p()) throw DimensionError("gencov: probe dimension differs from data dimension");
  const GenCovBatch b = gencov_batch(x, t);
  GenCov g;
  g.t = t;
  g.mean = b.means.col(0);
  g.hessian = b.hessian(0);
  g.max_weight_fraction = b.max_weight_fraction[0];
  g.degenerate = b.degenerate[0];
  return g;
}

double default_probe_scale(const SampleMatrix& x) {
  if (x.n() < 2) throw InputError("default_probe_scale: need at least 2 samples");
  const Vector mean = x.data().rowwise().mean();
  const Vector var =
      (x.data().colwise() - mean).rowwise().squaredNorm() / static_cast<double>(x.n());
  const double mean_std = var.array().sqrt().mean();
  if (!(mean_std > 0.0)) throw InputError("default_probe_scale: data has zero variance");
  return 1.0 / (std::sqrt(static_cast<double>(x.p())) * mean_std);
}

Matrix sample_probes(Index p, Index s, double scale, Rng& rng) {
  if (s < 1) throw InputError("sample_probes: need at least one probe");
  if (p < 1) throw InputError("sample_probes: dimension must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("sample_probes: scale must be positive");
  return scale * standard_normal(p, s, rng);
}

Cum4Flattening cum4_flattening(const SampleMatrix& x) {
  if (x.n() < 4) throw InputError("cum4_flattening: need at least 4 samples");
  const SampleMatrix xc = x.centered() ? x : center(x);
  const Matrix& data = xc.data();
  const Index p = xc.p(), n = xc.n(), q = p * p;

  Matrix m4 = Matrix::Zero(q, q);
  Matrix z(q, kChunk);
  for (Index start = 0; start < n; start += kChunk) {
    const Index c = std::min(kChunk, n - start);
    if (z.cols() != c) z.resize(q, c);
    for (Index col = 0; col < c; ++col)
      for (Index a = 0; a < p; ++a) z.col(col).segment(a * p, p) = data(a, start + col) * data.col(start + col);
    m4.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0);
  }
  for (Index col = 1; col < q; ++col)
    for (Index row = 0; row < col; ++row) m4(row, col) = m4(col, row);
  m4 /= static_cast<double>(n);

  Matrix sigma = data * data.transpose() / static_cast<double>(n);
  sigma = (0.5 * (sigma + sigma.transpose())).eval();
  for (Index a = 0; a < p; ++a)
    for (Index b = 0; b < p; ++b)
      for (Index c = 0; c < p; ++c)
        for (Index d = 0; d < p; ++d)
          m4(a * p + b, c * p + d) -=
              sigma(a, b) * sigma(c, d) + sigma(a, c) * sigma(b, d) + sigma(a, d) * sigma(b, c);

  Cum4Flattening out;
  out.p = p;
  out.c = std::move(m4);  // symmetric by construction
  return out;
}

double kurtosis(std::span<const double> sample) {
  if (sample.size() < 4) throw InputError("kurtosis: need at least 4 values");
  const auto n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : sample) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  return m4 - 3.0 * m2 * m2;
}

}  // namespace oica
