#pragma once

// Numerical checks of the identifiability theory: the explicit ellipsoid
// construction, a dual certificate for atom optimality and the Monte Carlo
// phase-transition harness for the exact program.

#include "oica/corela.hpp"
#include "oica/mixing.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace oica {

/// Tolerance on lambda_min and on constraint residuals. Frozen.
inline constexpr double kTheoryTol = 1e-8;
/// Systems with a larger condition number count as singular.
inline constexpr double kMaxCondition = 1e12;

struct EllipsoidFit {
  SymMatrix y;
  Vector beta;
  /// |v_i^T Y v_i - 1|
  Vector residuals;
  double min_eig = 0.0;
  double condition = 0.0;
  /// False when V was too ill-conditioned to solve; y and beta are then empty.
  bool solved = false;
  bool success = false;
};

/// Y = I/p + sum_j beta_j v_j v_j^T with V beta = h, V_ij = <v_i, v_j>^2 and
/// h_i = 1 - ||v_i||^2 / p. Columns of `points` are the v_i. A singular V
/// gives an unsolved result instead of an exception.
EllipsoidFit fit_ellipsoid(const Matrix& points);

/// Fraction of `trials` draws of k standard Gaussian points in R^p for which
/// fit_ellipsoid succeeds. Trial t uses Rng(derive_seed(seed, t)).
double ellipsoid_success_rate(Index p, Index k, int trials, std::uint64_t seed);

struct DualCertificate {
  SymMatrix z;
  /// Coefficients of the projected atoms (index i != j, in order) and of the
  /// projector onto the complement of d_j.
  Vector beta;
  double a = 0.0;
  /// |d_i^T Z d_i - (c_j - c_i)| for i != j (entry j is zero).
  Vector residuals;
  double min_eig = 0.0;
  double condition = 0.0;
  bool solved = false;
  /// Sufficient for optimality of atom j; false is inconclusive.
  bool feasible = false;
};

/// Searches Z = a P + sum_{i != j} beta_i dbar_i dbar_i^T, with P the
/// projector onto the complement of d_j and dbar_i = P d_i, such that
/// d_i^T Z d_i = c_j - c_i (c_i = d_i^T G d_i). beta is affine in a and
/// lambda_min(Z(a)) is concave, so a is chosen by a one-dimensional search.
/// Throws InputError for j outside [0, k) or a mismatched G.
DualCertificate dual_certificate(const MixingMatrix& d, const SymMatrix& g, Index j);

struct PhaseGrid {
  std::vector<Index> p_values;
  std::vector<Index> k_values;
  int n_rep = 0;
  std::uint64_t seed = 0;
  /// p_values.size() x k_values.size()
  Matrix success_fraction;
  /// Replicates that threw, per cell (counted as failures).
  Eigen::MatrixXi errors;
  /// First error message per cell, empty when none.
  std::vector<std::string> error_messages;
};

/// For every (p, k) and replicate r: D with standard normal columns
/// (normalized), G = (A + A^T)/2 with A standard normal, success when
/// solve_exact_reference recovers an atom. Replicate r of cell c uses
/// Rng(derive_seed(derive_seed(seed, c), r)); cells are numbered row-major.
PhaseGrid phase_transition(const std::vector<Index>& p_values, const std::vector<Index>& k_values, int n_rep,
                           std::uint64_t seed);

/// CSV with a leading "# {json}" metadata line and columns p,k,n_rep,success_fraction.
std::string phase_csv(const PhaseGrid& grid);
/// Plot data: cells plus the reference curves k = p^2/4 and k = p(p+1)/2.
std::string phase_plot_json(const PhaseGrid& grid);
/// Static heat map (black = always recovered) with both reference curves.
std::string phase_svg(const PhaseGrid& grid);

}  // namespace oica
