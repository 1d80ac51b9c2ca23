#pragma once

// Relaxed SDP for a single atom:
//   min_B  -<G, B> + (mu/2) sum_j <B, F_j>^2   s.t.  B >= 0, Tr B = 1,
// solved by FISTA with projection onto the unit-trace PSD set and
// majorization-minimization restarts from the leading rank-one matrix.

#include "oica/corela.hpp"
#include "oica/mixing.hpp"
#include "oica/random.hpp"
#include "oica/subspace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace oica {

struct SolverConfig {
  /// Penalty weight; 0 selects 1e3 * ||G||_F.
  double mu = 0.0;
  int max_iter = 100;
  int mm_rounds = 50;
  /// Relative objective change across an MM round that counts as converged.
  double tol = 1e-9;
  std::uint64_t seed = 0;
  /// Update a multiplier for the subspace constraint after every MM round
  /// (augmented Lagrangian), which removes the O(||G|| / mu) bias of the
  /// penalty and drives B* into W.
  bool augmented = false;
  /// Called with every projected iterate (diagnostics and tests).
  std::function<void(const SymMatrix&)> on_iterate;

  /// Throws InputError unless mu >= 0, max_iter >= 1 and mm_rounds >= 1.
  void validate() const;
};

struct SolverResult {
  SymMatrix b_star;
  /// Objective after every FISTA iteration, in order.
  std::vector<double> objective_trace;
  /// Best objective after each MM round (nonincreasing).
  std::vector<double> round_objectives;
  Vector top_eigvec;
  double top_eigval = 0.0;
  /// lambda_1 - lambda_2 of b_star.
  double certificate_gap = 0.0;
  double objective = 0.0;
  /// ||P_null(b_star)||_F
  double subspace_residual = 0.0;
  double mu = 0.0;
  int iterations = 0;
  int rounds = 0;
  bool converged = false;
};

struct Objective {
  double value = 0.0;
  SymMatrix gradient;
};

/// f(B) = -<G, B> + (mu/2) ||P_null B||^2 with gradient -G + mu P_null(B).
Objective relax_objective(const SymMatrix& b, const SymMatrix& g, const SubspaceBasis& w, double mu);

/// A single accelerated run from `b0` (at most config.max_iter iterations).
SolverResult fista_run(const SymMatrix& g, const SubspaceBasis& w, double mu, const SymMatrix& b0,
                       const SolverConfig& config);

/// FISTA with MM restarts, starting from I/p. The returned iterate is the best
/// one seen, so the per-round objective never increases.
SolverResult fista(const SymMatrix& g, const SubspaceBasis& w, const SolverConfig& config);

struct Restart {
  SymMatrix b0;
  /// Set when the top eigenvalue is tied (within 1e-12), so the choice of v is
  /// arbitrary.
  bool degenerate = false;
};

/// v v^T for the top eigenvector v of prev.b_star.
Restart mm_restart(const SolverResult& prev);

enum class GMode { deterministic, random };

/// Objective matrix inside the current W. Deterministic mode uses the leading
/// basis direction; random mode a Gaussian unit-norm combination of the basis.
/// Throws DeflationError when W is exhausted.
SymMatrix choose_g(const SubspaceBasis& w, GMode mode, Rng& rng);

struct ReferenceResult {
  SolverResult solve;
  /// Nearest atom (by Frobenius distance of b_star to d_i d_i^T).
  Index atom = -1;
  double distance = 0.0;
  bool success = false;
};

/// Exact program with the hard constraint B in span{d_i d_i^T}: augmented
/// Lagrangian over the penalized FISTA solver with a mu-continuation schedule.
/// Success means ||B* - d_i d_i^T||_F < 1e-3 for some i and converged means
/// the subspace residual is below 1e-6. When k >= p(p+1)/2 the constraint is
/// void and W is the whole space.
ReferenceResult solve_exact_reference(const MixingMatrix& d, const SymMatrix& g);

}  // namespace oica
