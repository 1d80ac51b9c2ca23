#pragma once

// Synthetic instances: mixing matrices (normal, pruned by coherence, sparse),
// population-case subspaces and finite-sample ICA data.

#include "oica/mixing.hpp"
#include "oica/moments.hpp"
#include "oica/random.hpp"
#include "oica/subspace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace oica {

enum class MixingMode { normal, prune, sparse };

const char* to_string(MixingMode m) noexcept;
/// Throws InputError for unknown names.
MixingMode parse_mixing_mode(const std::string& s);

struct SamplingSpec {
  Index p = 0;
  Index k = 0;
  MixingMode mode = MixingMode::normal;
  /// Prune threshold; defaults to mean_coherence(p, k) when unset.
  std::optional<double> coherence_cap;
  std::uint64_t seed = 0;

  /// Throws InputError unless p >= 1 and 1 <= k <= p(p+1)/2.
  void validate() const;
};

/// Attempts allowed for the prune and sparse rejection loops.
inline constexpr int kRejectionBudget = 10000;

MixingMatrix sample_mixing(const SamplingSpec& spec);
MixingMatrix sample_mixing(const SamplingSpec& spec, Rng& rng);

/// max_{i != j} |<d_i, d_j>|; 0 when k < 2.
double coherence(const MixingMatrix& d);

/// Mean coherence of normal-mode draws over 10,000 samples. Memoized in
/// process and persisted under $OICA_CACHE_DIR (default ~/.cache/oica).
double mean_coherence(Index p, Index k);

/// Mean coherence over `draws` normal-mode samples with a fixed stream (no
/// caching); mean_coherence uses draws = 10,000.
double mean_coherence_uncached(Index p, Index k, int draws);

enum class SourceKind { uniform, laplace, gaussian, custom };

const char* to_string(SourceKind s) noexcept;
SourceKind parse_source_kind(const std::string& s);

struct SourceLaw {
  SourceKind kind = SourceKind::uniform;
  /// Draw function for SourceKind::custom.
  std::function<double(Rng&)> custom;

  static SourceLaw uniform() { return {SourceKind::uniform, {}}; }
  static SourceLaw laplace() { return {SourceKind::laplace, {}}; }
};

/// uniform: U(-0.5, 0.5); laplace: unit variance (scale 1/sqrt 2).
double draw_source(const SourceLaw& law, Rng& rng);

struct IcaSample {
  SampleMatrix x;
  Matrix sources;  // k x n
};

/// X = D A with A_ij i.i.d. from `law`. Gaussian sources are rejected with an
/// AssumptionError (the model is not identifiable).
IcaSample sample_ica_with_sources(const MixingMatrix& d, Index n, const SourceLaw& law, Rng& rng);
SampleMatrix sample_ica(const MixingMatrix& d, Index n, const SourceLaw& law, Rng& rng);

struct PopulationInstance {
  MixingMatrix d;
  SubspaceBasis w;
};

/// Normal-mode mixing with its exact subspace; resamples when the atoms are
/// numerically dependent. Throws InputError when k > p(p+1)/2.
PopulationInstance population_instance(Index p, Index k, std::uint64_t seed);

}  // namespace oica
