#include "oica/metrics.hpp"

#include "oica/errors.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace oica {

namespace {

void check_shapes(const Matrix& d, const Matrix& d_hat, const char* who) {
  if (d.rows() != d_hat.rows() || d.cols() < d_hat.cols()) {
    std::ostringstream os;
    os << who << ": shape mismatch (" << d.rows() << "x" << d.cols() << " vs " << d_hat.rows() << "x"
       << d_hat.cols() << ")";
    throw InputError(os.str());
  }
  if (d.cols() == 0) throw InputError(std::string(who) + ": no columns");
}

// A partial estimate (fewer columns) is padded with zero columns, which
// match nothing: cost ||d_i||^2 in the f-error, angle pi/2 in the a-error.
Matrix padded(const Matrix& d, const Matrix& d_hat) {
  if (d_hat.cols() == d.cols()) return d_hat;
  Matrix out = Matrix::Zero(d.rows(), d.cols());
  out.leftCols(d_hat.cols()) = d_hat;
  return out;
}

Matrix angle_costs(const Matrix& d, const Matrix& d_hat) {
  const Vector nd = d.colwise().norm().transpose(), nh = d_hat.colwise().norm().transpose();
  if (nd.minCoeff() == 0.0 || (nh.size() > 0 && nh.minCoeff() == 0.0)) throw InputError("a_error: zero column");
  Matrix cos = Matrix::Zero(d.cols(), d.cols());
  cos.leftCols(d_hat.cols()) = nd.cwiseInverse().asDiagonal() * (d.transpose() * d_hat).cwiseAbs() *
                               nh.cwiseInverse().asDiagonal();
  return cos.unaryExpr([](double c) { return std::acos(std::min(1.0, c)); });
}

}  // namespace

double f_error(const Matrix& d, const Matrix& d_hat, bool sign_align) {
  check_shapes(d, d_hat, "f_error");
  const Index k = d.cols();
  const Matrix full = padded(d, d_hat);
  Matrix cost(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) {
      const double plus = (d.col(i) - full.col(j)).squaredNorm();
      cost(i, j) = sign_align ? std::min(plus, (d.col(i) + full.col(j)).squaredNorm()) : plus;
    }
  const double denom = d.squaredNorm();
  if (denom == 0.0) throw InputError("f_error: reference matrix is zero");
  return assignment_cost(cost, hungarian(cost)) / denom;
}

AngleMatch angle_match(const Matrix& d, const Matrix& d_hat) {
  check_shapes(d, d_hat, "a_error");
  const Matrix cost = angle_costs(d, d_hat);
  AngleMatch m;
  m.sigma = hungarian(cost);
  const Index k = d.cols();
  double total = 0.0;
  for (Index i = 0; i < k; ++i) {
    m.angle.push_back(cost(i, m.sigma[i]));
    total += m.angle.back();
  }
  m.error = 2.0 * total / (static_cast<double>(k) * std::numbers::pi);
  return m;
}

double a_error(const Matrix& d, const Matrix& d_hat) { return angle_match(d, d_hat).error; }

Index perfect_count(const Matrix& d, const Matrix& d_hat, double theta) {
  const AngleMatch m = angle_match(d, d_hat);
  // A hair of slack so that exact matches are not lost to acos rounding.
  return std::count_if(m.angle.begin(), m.angle.end(), [&](double a) { return a <= theta + 1e-12; });
}

RecoveryVector recovery_from_counts(Index k, std::span<const Index> counts) {
  if (k < 1) throw InputError("recovery_vector: k must be >= 1");
  if (counts.empty()) throw InputError("recovery_vector: no runs");
  RecoveryVector out;
  out.k = k;
  out.r.assign(static_cast<std::size_t>(k), 0.0);
  for (Index c : counts) {
    if (c < 0 || c > k) throw InputError("recovery_vector: count outside [0, k]");
    for (Index i = 0; i < c; ++i) out.r[static_cast<std::size_t>(i)] += 1.0;
  }
  for (double& v : out.r) v /= static_cast<double>(counts.size());
  return out;
}

RecoveryVector recovery_vector(const Matrix& d, std::span<const Matrix> runs, double theta) {
  std::vector<Index> counts;
  counts.reserve(runs.size());
  for (const Matrix& run : runs) counts.push_back(perfect_count(d, run, theta));
  return recovery_from_counts(d.cols(), counts);
}

}  // namespace oica
