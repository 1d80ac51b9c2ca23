#pragma once

// Orthonormal bases of W = span{d_i d_i^T} and of its orthogonal complement
// inside the symmetric matrices, expressed in symmetric coordinates.

#include "oica/corela.hpp"
#include "oica/mixing.hpp"
#include "oica/moments.hpp"

#include <span>
#include <string>
#include <vector>

namespace oica {

enum class SubspaceSource { gencov, cum4, population };

const char* to_string(SubspaceSource s) noexcept;

class SubspaceBasis {
 public:
  SubspaceBasis() = default;
  /// `basis` (m x k) must have orthonormal columns; the null basis is
  /// completed automatically. Throws DimensionError if m is not p(p+1)/2.
  SubspaceBasis(Index p, Matrix basis, SubspaceSource source);

  Index p() const noexcept { return p_; }
  Index m() const noexcept { return sym_dim(p_); }
  /// Effective dimension of W (shrinks under augment_null).
  Index k() const noexcept { return basis_.cols(); }
  const Matrix& basis() const noexcept { return basis_; }
  const Matrix& null_basis() const noexcept { return null_; }
  SubspaceSource source() const noexcept { return source_; }

  /// Singular values of the stack the basis was extracted from (empty for
  /// population bases).
  const Vector& spectrum() const noexcept { return spectrum_; }
  /// sigma_k / sigma_{k+1}; infinity when sigma_{k+1} is absent or zero.
  double gap_ratio() const noexcept { return gap_ratio_; }
  bool rank_deficient() const noexcept { return rank_deficient_; }
  bool exhausted() const noexcept { return k() == 0; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  /// Number of atoms moved into the null basis so far.
  Index deflated() const noexcept { return deflated_; }

  /// Orthogonal projections in symmetric coordinates; each is computed through
  /// whichever of the two bases is thinner.
  Vector project_w(const Vector& coords) const;
  Vector project_null(const Vector& coords) const;
  SymMatrix project_w(const SymMatrix& b) const;

  /// ||a - P_W a||_F (absolute).
  double residual(const SymMatrix& a) const;

  /// max |[basis null]^T [basis null] - I|.
  double orthonormality_error() const;

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  void set_spectrum(Vector spectrum, Index k);

  friend SubspaceBasis basis_from_stack(const Matrix&, Index, Index, SubspaceSource);
  friend SubspaceBasis basis_from_cum4(const Cum4Flattening&, Index);
  friend SubspaceBasis augment_null(const SubspaceBasis&, std::span<const SymMatrix>, double);

  Index p_ = 0;
  Matrix basis_;
  Matrix null_;
  SubspaceSource source_ = SubspaceSource::population;
  Vector spectrum_;
  double gap_ratio_ = 0.0;
  bool rank_deficient_ = false;
  Index deflated_ = 0;
  std::vector<std::string> warnings_;
};

/// Top-k left singular directions of the columns of `stack` (m x s, symmetric
/// coordinates). Flags rank deficiency when sigma_k / sigma_{k+1} < 2.
SubspaceBasis basis_from_stack(const Matrix& stack, Index p, Index k, SubspaceSource source);

/// Throws InputError when fewer than k matrices are given or k > m.
SubspaceBasis basis_from_gencovs(std::span<const SymMatrix> hessians, Index k);

/// Degenerate probes are dropped before the SVD (and reported as a warning).
SubspaceBasis basis_from_gencovs(const GenCovBatch& batch, Index k);

/// Top-k eigenvectors of the (symmetric) flattened cumulant by |eigenvalue|,
/// symmetrized, mapped to symmetric coordinates and re-orthonormalized.
SubspaceBasis basis_from_cum4(const Cum4Flattening& c, Index k);

/// Exact basis of span{d_i d_i^T}. Throws AssumptionError when the atoms are
/// numerically dependent (Gram eigenvalue ratio below 1e-10).
SubspaceBasis population_basis(const MixingMatrix& d);

/// Moves each found atom's component inside W to the null basis. Throws
/// DeflationError when an atom's relative distance to W exceeds `tol`.
SubspaceBasis augment_null(const SubspaceBasis& w, std::span<const SymMatrix> atoms, double tol = 0.3);

}  // namespace oica
