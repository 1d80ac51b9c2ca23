#include "oica/subspace.hpp"

#include "oica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace oica {

namespace {

constexpr double kGapThreshold = 2.0;

Matrix thin_left_singular(const Matrix& a, Index k, Vector* spectrum) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  if (spectrum) *spectrum = svd.singularValues();
  return svd.matrixU().leftCols(k);
}

}  // namespace

const char* to_string(SubspaceSource s) noexcept {
  switch (s) {
    case SubspaceSource::gencov: return "gencov";
    case SubspaceSource::cum4: return "cum4";
    case SubspaceSource::population: return "population";
  }
  return "unknown";
}

SubspaceBasis::SubspaceBasis(Index p, Matrix basis, SubspaceSource source)
    : p_(p), basis_(std::move(basis)), source_(source) {
  if (basis_.rows() != sym_dim(p_)) throw DimensionError("SubspaceBasis: basis rows must equal p(p+1)/2");
  null_ = orthonormal_complement(basis_);
  gap_ratio_ = std::numeric_limits<double>::infinity();
}

Vector SubspaceBasis::project_w(const Vector& coords) const {
  if (coords.size() != m()) throw DimensionError("SubspaceBasis::project_w: coordinate length mismatch");
  if (basis_.cols() <= null_.cols()) return basis_ * (basis_.transpose() * coords);
  return coords - null_ * (null_.transpose() * coords);
}

Vector SubspaceBasis::project_null(const Vector& coords) const {
  if (coords.size() != m()) throw DimensionError("SubspaceBasis::project_null: coordinate length mismatch");
  if (null_.cols() <= basis_.cols()) return null_ * (null_.transpose() * coords);
  return coords - basis_ * (basis_.transpose() * coords);
}

SymMatrix SubspaceBasis::project_w(const SymMatrix& b) const {
  return sym_from_coords(project_w(sym_coords(b)), p_);
}

double SubspaceBasis::residual(const SymMatrix& a) const {
  if (a.dim() != p_) throw DimensionError("SubspaceBasis::residual: dimension mismatch");
  return project_null(sym_coords(a)).norm();
}

void SubspaceBasis::set_spectrum(Vector spectrum, Index k) {
  spectrum_ = std::move(spectrum);
  const double sk = spectrum_[k - 1];
  const double next = k < spectrum_.size() ? spectrum_[k] : 0.0;
  gap_ratio_ = next > 0.0 ? sk / next : std::numeric_limits<double>::infinity();
  const bool collapsed = !(sk > 1e-12 * spectrum_[0]);
  if (collapsed || gap_ratio_ < kGapThreshold) {
    rank_deficient_ = true;
    std::ostringstream os;
    os << "rank deficiency: sigma_k/sigma_{k+1} = " << gap_ratio_ << " (sigma_k = " << sk << ")";
    warnings_.push_back(os.str());
  }
}

double SubspaceBasis::orthonormality_error() const {
  Matrix all(m(), basis_.cols() + null_.cols());
  all << basis_, null_;
  return (all.transpose() * all - Matrix::Identity(all.cols(), all.cols())).cwiseAbs().maxCoeff();
}

SubspaceBasis basis_from_stack(const Matrix& stack, Index p, Index k, SubspaceSource source) {
  const Index m = sym_dim(p);
  if (stack.rows() != m) throw DimensionError("basis_from_stack: stack rows must equal p(p+1)/2");
  if (k < 1 || k > m) {
    std::ostringstream os;
    os << "basis_from_stack: k=" << k << " outside [1, " << m << "]";
    throw InputError(os.str());
  }
  if (stack.cols() < k) {
    std::ostringstream os;
    os << "basis_from_stack: need at least k=" << k << " stacked matrices, got " << stack.cols();
    throw InputError(os.str());
  }
  if (!stack.allFinite()) throw NumericalError("basis_from_stack: non-finite entries in stack");

  Vector spectrum;
  Matrix u = thin_left_singular(stack, k, &spectrum);
  SubspaceBasis out(p, std::move(u), source);
  out.set_spectrum(std::move(spectrum), k);
  return out;
}

SubspaceBasis basis_from_gencovs(std::span<const SymMatrix> hessians, Index k) {
  if (hessians.empty()) throw InputError("basis_from_gencovs: no matrices given");
  const Index p = hessians.front().dim();
  Matrix stack(sym_dim(p), static_cast<Index>(hessians.size()));
  for (std::size_t j = 0; j < hessians.size(); ++j) {
    if (hessians[j].dim() != p) throw DimensionError("basis_from_gencovs: matrices differ in dimension");
    stack.col(static_cast<Index>(j)) = sym_coords(hessians[j]);
  }
  return basis_from_stack(stack, p, k, SubspaceSource::gencov);
}

SubspaceBasis basis_from_gencovs(const GenCovBatch& batch, Index k) {
  const Index p = batch.means.rows();
  std::vector<Index> keep;
  for (Index j = 0; j < batch.size(); ++j)
    if (!batch.degenerate[static_cast<std::size_t>(j)]) keep.push_back(j);
  Matrix stack(sym_dim(p), static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) stack.col(static_cast<Index>(j)) = batch.coords.col(keep[j]);
  SubspaceBasis out = basis_from_stack(stack, p, k, SubspaceSource::gencov);
  const auto dropped = batch.size() - static_cast<Index>(keep.size());
  if (dropped > 0) {
    std::ostringstream os;
    os << dropped << " degenerate probe(s) excluded";
    out.add_warning(os.str());
  }
  return out;
}

SubspaceBasis basis_from_cum4(const Cum4Flattening& c, Index k) {
  const Index p = c.p, m = sym_dim(p);
  if (c.c.rows() != p * p || c.c.cols() != p * p) throw DimensionError("basis_from_cum4: flattening must be p^2 x p^2");
  if (k < 1 || k > m) {
    std::ostringstream os;
    os << "basis_from_cum4: k=" << k << " outside [1, " << m << "]";
    throw InputError(os.str());
  }
  const SymEigen e = sym_eig(SymMatrix(c.c));
  const Index q = p * p;
  std::vector<Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(e.values[a]) > std::abs(e.values[b]); });

  // The eigenvectors with nonzero eigenvalue are vec of symmetric matrices;
  // keep the leading ones in symmetric coordinates and re-orthonormalize.
  Matrix coords(m, k);
  Index filled = 0;
  for (Index r = 0; r < q && filled < k; ++r) {
    Vector v = sym_coords(mat(e.vectors.col(order[static_cast<std::size_t>(r)]), p, p));
    if (v.norm() < 0.5) continue;  // antisymmetric direction
    coords.col(filled++) = v;
  }
  if (filled < k) throw NumericalError("basis_from_cum4: not enough symmetric eigenvectors");

  Vector spectrum(q);
  for (Index r = 0; r < q; ++r) spectrum[r] = std::abs(e.values[order[static_cast<std::size_t>(r)]]);

  Vector ignored;
  SubspaceBasis out(p, thin_left_singular(coords, k, &ignored), SubspaceSource::cum4);
  out.set_spectrum(spectrum, k);
  return out;
}

SubspaceBasis population_basis(const MixingMatrix& d) {
  const Index p = d.p(), k = d.k(), m = sym_dim(p);
  if (k < 1) throw InputError("population_basis: need at least one atom");
  if (k > m) {
    std::ostringstream os;
    os << "population_basis: k=" << k << " exceeds p(p+1)/2=" << m;
    throw AssumptionError(os.str());
  }
  Matrix a(m, k);
  for (Index i = 0; i < k; ++i) a.col(i) = sym_coords(d.atom(i));
  Vector spectrum;
  Matrix u = thin_left_singular(a, k, &spectrum);
  const double ratio = (spectrum[k - 1] * spectrum[k - 1]) / (spectrum[0] * spectrum[0]);
  if (!(ratio >= 1e-10)) {
    std::ostringstream os;
    os << "population_basis: atoms are linearly dependent (Gram eigenvalue ratio " << ratio << ")";
    throw AssumptionError(os.str());
  }
  return SubspaceBasis(p, std::move(u), SubspaceSource::population);
}

SubspaceBasis augment_null(const SubspaceBasis& w, std::span<const SymMatrix> atoms, double tol) {
  SubspaceBasis out = w;
  for (std::size_t t = 0; t < atoms.size(); ++t) {
    const SymMatrix& atom = atoms[t];
    if (atom.dim() != w.p()) throw DimensionError("augment_null: atom dimension mismatch");
    const double norm = atom.norm();
    if (!(norm > 0.0)) throw InputError("augment_null: zero atom");
    if (out.exhausted()) {
      out.add_warning("augment_null: subspace already exhausted");
      break;
    }
    const Vector c = sym_coords(atom) / norm;
    // Distance to the original W: directions deflated earlier still count.
    const Index original_null = out.null_.cols() - out.deflated_;
    const double rel = (out.null_.leftCols(original_null).transpose() * c).norm();
    Vector y = out.basis_.transpose() * c;
    if (rel > tol) {
      std::ostringstream os;
      os << "augment_null: atom " << t << " lies outside W (relative residual " << rel << " > " << tol << ")";
      throw DeflationError(os.str());
    }
    const double ny = y.norm();
    if (ny < 1e-14) continue;
    y /= ny;
    // Rotate the basis so that its first direction is y, then move it.
    const Matrix rest = out.basis_ * orthonormal_complement(y);
    const Vector moved = out.basis_ * y;
    Matrix null(out.m(), out.null_.cols() + 1);
    null << out.null_, moved;
    out.basis_ = rest;
    out.null_ = std::move(null);
    ++out.deflated_;
  }
  if (out.exhausted() && !atoms.empty()) out.add_warning("augment_null: effective dimension is 0");
  return out;
}

}  // namespace oica
