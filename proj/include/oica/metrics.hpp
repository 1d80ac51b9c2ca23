#pragma once

// Permutation-matched estimation errors: f-error, a-error and the perfect
// recovery vector.

#include "oica/corela.hpp"
#include "oica/mixing.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace oica {

/// acos(0.99): about 8.1 degrees.
inline const double kRecoveryAngle = std::acos(0.99);

/// min over column permutations (and per-column signs when sign_align) of
/// ||D - D_hat P||_F^2 / ||D||_F^2. D_hat may have fewer columns than D (a
/// partial estimate); missing columns count as unrecovered. Throws InputError
/// when the row counts differ or D_hat has more columns.
double f_error(const Matrix& d, const Matrix& d_hat, bool sign_align = true);

struct AngleMatch {
  Permutation sigma;          // column i of D matched to column sigma[i] of D_hat
  std::vector<double> angle;  // acos(|cos|) per matched pair, radians
  double error = 0.0;         // normalized a-error in [0, 1]
};

/// Hungarian matching on acos(|<d_i, d_hat_j>| / (|d_i| |d_hat_j|)).
AngleMatch angle_match(const Matrix& d, const Matrix& d_hat);

/// (2 / (k pi)) min_sigma sum_i acos(|cos(d_i, d_hat_sigma(i))|).
double a_error(const Matrix& d, const Matrix& d_hat);

/// Number of columns recovered within `theta` under the a-error matching.
Index perfect_count(const Matrix& d, const Matrix& d_hat, double theta = kRecoveryAngle);

struct RecoveryVector {
  Index k = 0;
  /// r[i] = fraction of runs recovering at least i+1 components.
  std::vector<double> r;
};

/// Builds the vector from per-run perfect counts (each in [0, k]).
RecoveryVector recovery_from_counts(Index k, std::span<const Index> counts);

RecoveryVector recovery_vector(const Matrix& d, std::span<const Matrix> runs, double theta = kRecoveryAngle);

}  // namespace oica
