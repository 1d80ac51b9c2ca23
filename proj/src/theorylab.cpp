#include "oica/theorylab.hpp"

#include "oica/errors.hpp"
#include "oica/parallel.hpp"
#include "oica/random.hpp"
#include "oica/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace oica {

namespace {

using nlohmann::json;

struct SquareSolve {
  Eigen::JacobiSVD<Matrix> svd;
  double condition = std::numeric_limits<double>::infinity();
};

SquareSolve factor(const Matrix& v) {
  SquareSolve s{Eigen::JacobiSVD<Matrix>(v, Eigen::ComputeFullU | Eigen::ComputeFullV)};
  const Vector& sv = s.svd.singularValues();
  if (sv.size() > 0 && sv(sv.size() - 1) > 0.0) s.condition = sv(0) / sv(sv.size() - 1);
  return s;
}

// Element-wise square of a Gram matrix: <x_i, x_j>^2.
Matrix squared_gram(const Matrix& x) {
  const Matrix gram = x.transpose() * x;
  return gram.cwiseProduct(gram);
}

double lambda_min(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("theorylab: eigensolver failed");
  return es.eigenvalues()(0);
}

// Maximizes a concave function: expands a bracket from 0 by doubling, then
// golden-section search. Gains below `eps` do not extend the bracket, which
// keeps flat directions from drifting towards large |a|.
template <class F>
double maximize_concave(F f, double scale) {
  const double cap = scale * std::ldexp(1.0, 20), eps = 1e-12 * scale;
  double lo = -scale, mid = 0.0, hi = scale;
  double f_mid = f(mid);
  for (const double dir : {1.0, -1.0}) {
    double step = scale, x = dir * step, fx = f(x);
    if (!(fx > f_mid + eps)) continue;
    double prev = mid;
    while (fx > f_mid + eps && step < cap) {
      prev = mid;
      mid = x;
      f_mid = fx;
      step *= 2.0;
      x = mid + dir * step;
      fx = f(x);
    }
    lo = std::min(prev, x);
    hi = std::max(prev, x);
    break;
  }

  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 100 && hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    }
  }
  const double best = f1 >= f2 ? x1 : x2;
  return std::max(f1, f2) > f_mid + eps ? best : mid;
}

}  // namespace

EllipsoidFit fit_ellipsoid(const Matrix& points) {
  const Index p = points.rows(), k = points.cols();
  if (p < 1 || k < 1) throw InputError("fit_ellipsoid: need at least one point in R^p, p >= 1");
  if (!points.allFinite()) throw NumericalError("fit_ellipsoid: non-finite point");

  EllipsoidFit out;
  const Matrix v = squared_gram(points);
  const Vector h = Vector::Ones(k) - points.colwise().squaredNorm().transpose() / static_cast<double>(p);
  const SquareSolve s = factor(v);
  out.condition = s.condition;
  if (!(s.condition < kMaxCondition)) return out;

  out.solved = true;
  out.beta = s.svd.solve(h);
  const Matrix y = Matrix::Identity(p, p) / static_cast<double>(p) +
                   points * out.beta.asDiagonal() * points.transpose();
  out.y = SymMatrix(y);
  out.residuals.resize(k);
  for (Index i = 0; i < k; ++i) out.residuals(i) = std::abs(points.col(i).dot(out.y.matrix() * points.col(i)) - 1.0);
  out.min_eig = lambda_min(out.y.matrix());
  out.success = out.min_eig >= -kTheoryTol && out.residuals.maxCoeff() <= kTheoryTol;
  return out;
}

double ellipsoid_success_rate(Index p, Index k, int trials, std::uint64_t seed) {
  if (trials < 1) throw InputError("ellipsoid_success_rate: trials must be >= 1");
  std::vector<char> ok(static_cast<std::size_t>(trials), 0);
  parallel_for(ok.size(), [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    ok[t] = fit_ellipsoid(standard_normal(p, k, rng)).success;
  });
  return static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / trials;
}

DualCertificate dual_certificate(const MixingMatrix& d, const SymMatrix& g, Index j) {
  const Index p = d.p(), k = d.k();
  if (g.dim() != p) throw InputError("dual_certificate: G must be p x p");
  if (j < 0 || j >= k) throw InputError("dual_certificate: atom index out of range");

  const Matrix& dm = d.matrix();
  const Vector dj = dm.col(j);
  const Vector c = (dm.transpose() * g.matrix() * dm).diagonal();
  const Matrix proj = Matrix::Identity(p, p) - dj * dj.transpose();
  // Orthonormal basis of the complement of d_j; Z vanishes on d_j by
  // construction, so PSD is decided on this block.
  const Matrix q = orthonormal_complement(dj);

  Matrix dbar(p, k - 1);
  Vector h0(k - 1);
  for (Index i = 0, col = 0; i < k; ++i) {
    if (i == j) continue;
    dbar.col(col) = proj * dm.col(i);
    h0(col++) = c(j) - c(i);
  }
  const Vector n = dbar.colwise().squaredNorm().transpose();

  DualCertificate out;
  out.residuals = Vector::Zero(k);
  if (k == 1) {
    out.z = SymMatrix::zero(p);
    out.beta = Vector::Zero(1);
    out.condition = 1.0;
    out.solved = out.feasible = true;
    return out;
  }
  const SquareSolve s = factor(squared_gram(dbar));
  out.condition = s.condition;
  if (!(s.condition < kMaxCondition)) return out;
  const Vector beta0 = s.svd.solve(h0), beta1 = -s.svd.solve(n);
  out.solved = true;

  auto z_of = [&](double a) -> Matrix {
    return a * proj + dbar * (beta0 + a * beta1).asDiagonal() * dbar.transpose();
  };
  auto f = [&](double a) { return q.cols() > 0 ? lambda_min(q.transpose() * z_of(a) * q) : 0.0; };

  const double scale = std::max(1.0, h0.cwiseAbs().maxCoeff());
  out.a = maximize_concave(f, scale);
  out.beta.resize(k);
  out.beta.head(k - 1) = beta0 + out.a * beta1;
  out.beta(k - 1) = out.a;
  out.z = SymMatrix(z_of(out.a));

  for (Index i = 0; i < k; ++i) {
    if (i == j) continue;
    const Vector di = dm.col(i);
    out.residuals(i) = std::abs(di.dot(out.z.matrix() * di) - (c(j) - c(i)));
  }
  // Z d_j = 0 exactly, so the spectrum is {0} plus that of the block.
  out.min_eig = std::min(0.0, f(out.a));
  out.feasible = out.residuals.maxCoeff() <= kTheoryTol && out.min_eig >= -kTheoryTol;
  return out;
}

PhaseGrid phase_transition(const std::vector<Index>& p_values, const std::vector<Index>& k_values, int n_rep,
                           std::uint64_t seed) {
  if (p_values.empty() || k_values.empty()) throw InputError("phase_transition: empty grid");
  if (n_rep < 1) throw InputError("phase_transition: n_rep must be >= 1");
  for (Index p : p_values)
    if (p < 1) throw InputError("phase_transition: p values must be >= 1");
  for (Index k : k_values)
    if (k < 1) throw InputError("phase_transition: k values must be >= 1");

  const std::size_t np = p_values.size(), nk = k_values.size(), reps = static_cast<std::size_t>(n_rep);
  const std::size_t tasks = np * nk * reps;
  std::vector<char> ok(tasks, 0);
  std::vector<std::string> err(tasks);
  std::vector<int> hits(np * nk, 0);

  parallel_for(tasks, [&](std::size_t t) {
    const std::size_t cell = t / reps, rep = t % reps;
    const Index p = p_values[cell / nk], k = k_values[cell % nk];
    try {
      Rng rng(derive_seed(derive_seed(seed, cell), rep));
      const MixingMatrix d = MixingMatrix::normalized(standard_normal(p, k, rng));
      const Matrix a = standard_normal(p, p, rng);
      ok[t] = solve_exact_reference(d, SymMatrix(a)).success;
    } catch (const std::exception& e) {
      err[t] = e.what();
      if (err[t].empty()) err[t] = "unknown error";
    }
  });

  PhaseGrid grid;
  grid.p_values = p_values;
  grid.k_values = k_values;
  grid.n_rep = n_rep;
  grid.seed = seed;
  grid.success_fraction = Matrix::Zero(static_cast<Index>(np), static_cast<Index>(nk));
  grid.errors = Eigen::MatrixXi::Zero(static_cast<Index>(np), static_cast<Index>(nk));
  grid.error_messages.assign(np * nk, {});
  for (std::size_t t = 0; t < tasks; ++t) {
    const std::size_t cell = t / reps;
    const Index r = static_cast<Index>(cell / nk), col = static_cast<Index>(cell % nk);
    hits[cell] += ok[t];
    if (!err[t].empty()) {
      ++grid.errors(r, col);
      if (grid.error_messages[cell].empty()) grid.error_messages[cell] = err[t];
    }
  }
  for (std::size_t cell = 0; cell < np * nk; ++cell)
    grid.success_fraction(static_cast<Index>(cell / nk), static_cast<Index>(cell % nk)) =
        static_cast<double>(hits[cell]) / n_rep;
  return grid;
}

namespace {

json reference_curves(const PhaseGrid& grid) {
  const auto [lo, hi] = std::minmax_element(grid.p_values.begin(), grid.p_values.end());
  json quarter = {{"label", "k = p^2/4"}, {"color", "red"}, {"points", json::array()}};
  json full = {{"label", "k = p(p+1)/2"}, {"color", "blue"}, {"points", json::array()}};
  for (Index p = *lo; p <= *hi; ++p) {
    const double pd = static_cast<double>(p);
    quarter["points"].push_back({p, pd * pd / 4.0});
    full["points"].push_back({p, pd * (pd + 1.0) / 2.0});
  }
  return json::array({quarter, full});
}

json error_cells(const PhaseGrid& grid) {
  json cells = json::array();
  const std::size_t nk = grid.k_values.size();
  for (std::size_t cell = 0; cell < grid.error_messages.size(); ++cell) {
    const Index r = static_cast<Index>(cell / nk), c = static_cast<Index>(cell % nk);
    if (grid.errors(r, c) == 0) continue;
    cells.push_back({{"p", grid.p_values[cell / nk]},
                     {"k", grid.k_values[cell % nk]},
                     {"errors", grid.errors(r, c)},
                     {"message", grid.error_messages[cell]}});
  }
  return cells;
}

// Fractional position of x along sorted grid values, linear between and
// beyond the end points.
double grid_position(const std::vector<Index>& values, double x) {
  if (values.size() == 1) return x - static_cast<double>(values[0]);
  std::size_t i = 1;
  while (i + 1 < values.size() && static_cast<double>(values[i]) < x) ++i;
  const double a = static_cast<double>(values[i - 1]), b = static_cast<double>(values[i]);
  return static_cast<double>(i - 1) + (x - a) / (b - a);
}

}  // namespace

std::string phase_csv(const PhaseGrid& grid) {
  const json meta = {{"format", "oica-phase-grid"},
                     {"seed", grid.seed},
                     {"n_rep", grid.n_rep},
                     {"p_values", grid.p_values},
                     {"k_values", grid.k_values},
                     {"oracle", "solve_exact_reference"},
                     {"reference_curves", reference_curves(grid)},
                     {"error_cells", error_cells(grid)}};
  std::ostringstream os;
  os << "# " << meta.dump() << "\n";
  os << "p,k,n_rep,success_fraction\n";
  os << std::setprecision(17);
  for (std::size_t r = 0; r < grid.p_values.size(); ++r)
    for (std::size_t c = 0; c < grid.k_values.size(); ++c)
      os << grid.p_values[r] << ',' << grid.k_values[c] << ',' << grid.n_rep << ','
         << grid.success_fraction(static_cast<Index>(r), static_cast<Index>(c)) << "\n";
  return os.str();
}

std::string phase_plot_json(const PhaseGrid& grid) {
  json cells = json::array();
  for (std::size_t r = 0; r < grid.p_values.size(); ++r)
    for (std::size_t c = 0; c < grid.k_values.size(); ++c)
      cells.push_back({{"p", grid.p_values[r]},
                       {"k", grid.k_values[c]},
                       {"success_fraction", grid.success_fraction(static_cast<Index>(r), static_cast<Index>(c))},
                       {"errors", grid.errors(static_cast<Index>(r), static_cast<Index>(c))}});
  const json plot = {{"seed", grid.seed},
                     {"n_rep", grid.n_rep},
                     {"x", "p"},
                     {"y", "k"},
                     {"p_values", grid.p_values},
                     {"k_values", grid.k_values},
                     {"cells", cells},
                     {"reference_curves", reference_curves(grid)}};
  return plot.dump(2) + "\n";
}

std::string phase_svg(const PhaseGrid& grid) {
  constexpr double cw = 48.0, ch = 18.0, left = 50.0, top = 20.0, bottom = 40.0;
  const double np = static_cast<double>(grid.p_values.size()), nk = static_cast<double>(grid.k_values.size());
  const double width = left + cw * np + 20.0, height = top + ch * nk + bottom;
  // Cell (r, c) has its center at grid position (r, c); k grows upwards.
  auto px = [&](double pos) { return left + cw * (pos + 0.5); };
  auto py = [&](double pos) { return top + ch * (nk - 0.5 - pos); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<defs><clipPath id=\"grid\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << cw * np
     << "\" height=\"" << ch * nk << "\"/></clipPath></defs>\n";
  for (std::size_t r = 0; r < grid.p_values.size(); ++r)
    for (std::size_t c = 0; c < grid.k_values.size(); ++c) {
      const double f = grid.success_fraction(static_cast<Index>(r), static_cast<Index>(c));
      const int v = static_cast<int>(std::lround(255.0 * (1.0 - f)));
      os << "<rect x=\"" << left + cw * static_cast<double>(r) << "\" y=\""
         << top + ch * (nk - 1.0 - static_cast<double>(c)) << "\" width=\"" << cw << "\" height=\"" << ch
         << "\" fill=\"rgb(" << v << ',' << v << ',' << v << ")\"/>\n";
    }
  for (const auto& curve : reference_curves(grid)) {
    os << "<polyline clip-path=\"url(#grid)\" fill=\"none\" stroke-width=\"2\" stroke=\""
       << curve["color"].get<std::string>() << "\" points=\"";
    for (const auto& pt : curve["points"]) {
      const double p = pt[0].get<double>(), k = pt[1].get<double>();
      os << px(grid_position(grid.p_values, p)) << ',' << py(grid_position(grid.k_values, k)) << ' ';
    }
    os << "\"><title>" << curve["label"].get<std::string>() << "</title></polyline>\n";
  }
  for (std::size_t r = 0; r < grid.p_values.size(); ++r)
    os << "<text x=\"" << px(static_cast<double>(r)) << "\" y=\"" << top + ch * nk + 15.0
       << "\" font-size=\"11\" text-anchor=\"middle\">" << grid.p_values[r] << "</text>\n";
  for (std::size_t c = 0; c < grid.k_values.size(); ++c)
    os << "<text x=\"" << left - 6.0 << "\" y=\"" << py(static_cast<double>(c)) + 4.0
       << "\" font-size=\"11\" text-anchor=\"end\">" << grid.k_values[c] << "</text>\n";
  os << "<text x=\"" << left + cw * np / 2.0 << "\" y=\"" << height - 6.0
     << "\" font-size=\"12\" text-anchor=\"middle\">p</text>\n";
  os << "<text x=\"14\" y=\"" << top + ch * nk / 2.0 << "\" font-size=\"12\">k</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace oica
