#pragma once

#include "oica/corela.hpp"

namespace oica {

/// p x k mixing matrix whose columns (mixing components) have unit norm.
class MixingMatrix {
 public:
  MixingMatrix() = default;
  /// Normalizes every column; throws InputError on zero or non-finite columns.
  static MixingMatrix normalized(const Matrix& d);
  /// Requires unit-norm columns within 1e-12; throws InputError otherwise.
  explicit MixingMatrix(Matrix d);

  Index p() const noexcept { return d_.rows(); }
  Index k() const noexcept { return d_.cols(); }
  const Matrix& matrix() const noexcept { return d_; }
  Vector component(Index i) const { return d_.col(i); }
  /// d_i d_i^T
  SymMatrix atom(Index i) const { return SymMatrix::outer(d_.col(i)); }

 private:
  struct Trusted {};
  MixingMatrix(Matrix d, Trusted) : d_(std::move(d)) {}

  Matrix d_;
};

}  // namespace oica
