#pragma once

// Empirical generalized covariances (Hessians of the cumulant generating
// function evaluated at probe vectors), the flattened fourth-order cumulant,
// and univariate kurtosis.

#include "oica/corela.hpp"
#include "oica/random.hpp"

#include <span>
#include <vector>

namespace oica {

/// Observations as columns: p rows (dimension) by n columns (samples).
class SampleMatrix {
 public:
  SampleMatrix() = default;
  /// Throws InputError on non-finite entries.
  explicit SampleMatrix(Matrix data, bool centered = false);

  Index p() const noexcept { return data_.rows(); }
  Index n() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  bool centered() const noexcept { return centered_; }

 private:
  Matrix data_;
  bool centered_ = false;
};

/// Subtracts each row mean. Throws InputError when n < 2.
SampleMatrix center(const SampleMatrix& x);

/// Plug-in covariance (1/n normalization) of the columns of x.
SymMatrix sample_covariance(const SampleMatrix& x);

struct GenCov {
  Vector t;
  Vector mean;        // E_x(t)
  SymMatrix hessian;  // C_x(t)
  /// Largest normalized weight max_i w_i / sum_i w_i.
  double max_weight_fraction = 0.0;
  /// Set when one sample carries more than 99.9% of the weight.
  bool degenerate = false;
};

/// Generalized covariance at probe t with weights exp(t^T x_i), shifted by
/// max_i t^T x_i before exponentiation.
GenCov gencov(const SampleMatrix& x, const Vector& t);

/// Generalized covariances for all columns of `probes` (p x s) in one pass
/// over the data. Hessians are returned in symmetric coordinates; memory is
/// O(p^2 s) plus a fixed-width chunk buffer.
struct GenCovBatch {
  Matrix coords;                 // m x s, column j = sym_coords(C_x(t_j))
  Matrix means;                  // p x s
  std::vector<double> max_weight_fraction;
  std::vector<bool> degenerate;

  Index size() const noexcept { return coords.cols(); }
  SymMatrix hessian(Index j) const;
};

GenCovBatch gencov_batch(const SampleMatrix& x, const Matrix& probes);

/// Default probe standard deviation 1 / (sqrt(p) * mean row std of x), which
/// keeps t^T x of order one.
double default_probe_scale(const SampleMatrix& x);

/// s i.i.d. N(0, scale^2 I_p) probes as the columns of a p x s matrix.
/// Throws InputError when s < 1 or scale <= 0.
Matrix sample_probes(Index p, Index s, double scale, Rng& rng);

/// Flattened fourth-order cumulant: p^2 x p^2 matrix with
/// C[(a,b),(c,d)] = E[x_a x_b x_c x_d] - S_ab S_cd - S_ac S_bd - S_ad S_bc,
/// using row-major pair indices (a*p + b). Plug-in moment estimator.
struct Cum4Flattening {
  Index p = 0;
  Matrix c;
};

/// Throws InputError when n < 4.
Cum4Flattening cum4_flattening(const SampleMatrix& x);

/// E[a^4] - 3 E[a^2]^2 of the (internally centered) sample. Throws
/// InputError when fewer than 4 values are given.
double kurtosis(std::span<const double> sample);

}  // namespace oica
