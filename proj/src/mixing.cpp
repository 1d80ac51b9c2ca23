#include "oica/mixing.hpp"

#include "oica/errors.hpp"

#include <cmath>
#include <sstream>

namespace oica {

MixingMatrix MixingMatrix::normalized(const Matrix& d) {
  Matrix out = d;
  for (Index j = 0; j < out.cols(); ++j) {
    const double n = out.col(j).norm();
    if (!std::isfinite(n) || n == 0.0) {
      std::ostringstream os;
      os << "MixingMatrix: column " << j << " is zero or non-finite";
      throw InputError(os.str());
    }
    out.col(j) /= n;
  }
  return MixingMatrix(std::move(out), Trusted{});
}

MixingMatrix::MixingMatrix(Matrix d) : d_(std::move(d)) {
  for (Index j = 0; j < d_.cols(); ++j) {
    const double n = d_.col(j).norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "MixingMatrix: column " << j << " has norm " << n << ", expected 1";
      throw InputError(os.str());
    }
  }
}

}  // namespace oica
