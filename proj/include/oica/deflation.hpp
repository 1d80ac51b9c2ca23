#pragma once

// Recovering all k atoms around the single-atom solver (clustering, adaptive
// and semi-adaptive deflation) and the full OverICA pipeline.

#include "oica/mixing.hpp"
#include "oica/moments.hpp"
#include "oica/solver.hpp"
#include "oica/subspace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace oica {

enum class DeflationStrategy { clustering, adaptive, semi_adaptive };

const char* to_string(DeflationStrategy s) noexcept;
DeflationStrategy parse_deflation_strategy(const std::string& s);

struct DeflationConfig {
  DeflationStrategy strategy = DeflationStrategy::semi_adaptive;
  /// Solves per atom in the clustering pass.
  int oversample_factor = 5;
  /// Largest cluster spread (ClusterInfo::variance) accepted. 0 accepts nothing;
  /// values >= 1 accept every cluster (pure clustering).
  double cluster_var_threshold = 0.05;
  std::uint64_t seed = 0;
  /// Two directions with |cos| above this are the same component.
  double distinct_threshold = 0.99;
  /// Relative distance to W tolerated when an atom is deflated.
  double null_tol = 0.3;
  /// Relative distance to W above which a deflated atom raises a warning.
  double residual_warn = 0.05;
  /// Fresh objective draws allowed per adaptive step before giving up.
  int retries = 10;
  GMode g_mode = GMode::random;
  /// Adaptive steps always draw G from the deflated subspace, so found atoms
  /// score zero. When set, the penalty also uses the deflated subspace; the
  /// remaining atoms then sit partly outside the constraint (their overlap
  /// with found atoms), which a large mu turns into infeasibility.
  bool constrain_deflated = false;

  void validate() const;
};

struct ClusterInfo {
  Vector centroid;
  /// sqrt(mean 1 - <u, c>^2) over members: RMS of the normalized atom
  /// distance ||u u^T - c c^T||_F / sqrt 2.
  double variance = 0.0;
  Index size = 0;
  bool accepted = false;
};

struct ClusterResult {
  std::vector<Vector> atoms;  // one unit vector per cluster
  std::vector<ClusterInfo> clusters;
  Index solves = 0;
  bool partial = false;  // fewer than k clusters
  std::vector<std::string> warnings;
};

/// Groups unit vectors into at most k clusters under 1 - |<u, v>|:
/// farthest-point seeding, Lloyd refinement with centroid = top eigenvector of
/// sum u u^T, then merging of clusters whose centroids have |cos| above
/// `merge_cos`.
std::vector<ClusterInfo> cluster_directions(const std::vector<Vector>& dirs, Index k, double merge_cos);

ClusterResult cluster_deflation(const SubspaceBasis& w, Index k, const SolverConfig& solver,
                                const DeflationConfig& config);

struct AdaptiveResult {
  std::vector<Vector> atoms;
  /// Relative distance of each deflated atom to W.
  std::vector<double> residuals;
  /// Step at which the procedure stopped early, or -1.
  Index failed_step = -1;
  bool partial = false;
  Index solves = 0;
  std::vector<std::string> warnings;
};

/// k sequential steps, each followed by augment_null with the found atom. A
/// step retries with fresh objectives until a distinct atom within
/// residual_warn of W appears, otherwise it keeps the closest distinct one.
/// `seed_atoms` are deflated first (and returned first); they let callers
/// continue from earlier results or inject faults.
AdaptiveResult adaptive_deflation(const SubspaceBasis& w, Index k, const SolverConfig& solver,
                                  const DeflationConfig& config, const std::vector<Vector>& seed_atoms = {});

struct DeflationResult {
  std::vector<Vector> atoms;
  Index from_clusters = 0;
  Index solves = 0;
  bool partial = false;
  std::vector<ClusterInfo> clusters;
  std::vector<std::string> warnings;
};

DeflationResult semi_adaptive_deflation(const SubspaceBasis& w, Index k, const SolverConfig& solver,
                                        const DeflationConfig& config);

/// Dispatches on config.strategy.
DeflationResult deflate(const SubspaceBasis& w, Index k, const SolverConfig& solver, const DeflationConfig& config);

enum class Step1 { gencov, cum4 };

const char* to_string(Step1 s) noexcept;
Step1 parse_step1(const std::string& s);

struct OverIcaConfig {
  Step1 step1 = Step1::gencov;
  /// Number of probes; 0 selects 10 k.
  Index probes = 0;
  /// Probe standard deviation; 0 selects default_probe_scale.
  double probe_scale = 0.0;
  SolverConfig solver;
  DeflationConfig deflation;
  std::uint64_t seed = 0;
};

struct OverIcaResult {
  MixingMatrix d;
  SubspaceBasis w;
  bool partial = false;
  Index solves = 0;
  std::vector<std::string> warnings;
};

/// Step I (subspace) followed by Step II (deflation). Errors carry the stage
/// name. Throws InputError when k > p(p+1)/2.
OverIcaResult overica(const SampleMatrix& x, Index k, const OverIcaConfig& config);

/// Step I only.
SubspaceBasis estimate_subspace(const SampleMatrix& x, Index k, const OverIcaConfig& config);

/// Step II on a given subspace; columns are unit-norm.
OverIcaResult recover_mixing(const SubspaceBasis& w, Index k, const OverIcaConfig& config);

}  // namespace oica
