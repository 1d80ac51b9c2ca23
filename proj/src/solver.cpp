#include "oica/solver.hpp"

#include "oica/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace oica {

namespace {

constexpr double kStepTol = 1e-11;
constexpr double kTieTol = 1e-12;

double penalized_value(const Vector& gc, const Vector& bc, const SubspaceBasis& w, double mu) {
  const double pen = mu == 0.0 ? 0.0 : w.project_null(bc).squaredNorm();
  return -gc.dot(bc) + 0.5 * mu * pen;
}

void finalize(SolverResult& r, const SubspaceBasis& w) {
  const SymEigen e = sym_eig(r.b_star);
  const Index p = r.b_star.dim();
  r.top_eigvec = e.vectors.col(p - 1);
  r.top_eigval = e.values[p - 1];
  r.certificate_gap = p > 1 ? e.values[p - 1] - e.values[p - 2] : e.values[0];
  r.subspace_residual = w.project_null(sym_coords(r.b_star)).norm();
}

double default_mu(const SymMatrix& g) {
  const double n = g.norm();
  return n > 0.0 ? 1e3 * n : 1e3;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InputError("SolverConfig: mu must be finite and >= 0");
  if (max_iter < 1) throw InputError("SolverConfig: max_iter must be >= 1");
  if (mm_rounds < 1) throw InputError("SolverConfig: mm_rounds must be >= 1");
  if (!(tol >= 0.0)) throw InputError("SolverConfig: tol must be >= 0");
}

Objective relax_objective(const SymMatrix& b, const SymMatrix& g, const SubspaceBasis& w, double mu) {
  if (b.dim() != w.p() || g.dim() != w.p()) throw DimensionError("relax_objective: dimension mismatch");
  const Vector bc = sym_coords(b);
  const Vector null_part = w.project_null(bc);
  Objective out;
  out.value = -g.dot(b) + 0.5 * mu * null_part.squaredNorm();
  out.gradient = sym_from_coords(mu * null_part, w.p()) - g;
  return out;
}

SolverResult fista_run(const SymMatrix& g, const SubspaceBasis& w, double mu, const SymMatrix& b0,
                       const SolverConfig& config) {
  config.validate();
  const Index p = w.p();
  if (g.dim() != p || b0.dim() != p) throw DimensionError("fista_run: dimension mismatch");
  if (!(mu > 0.0)) throw InputError("fista_run: mu must be positive");

  const Vector step = sym_coords(g) / mu;  // -(1/L) * (-G)
  const Vector gc = sym_coords(g);
  Vector b_prev = sym_coords(b0), y = b_prev;
  double z = 1.0;

  SolverResult r;
  r.mu = mu;
  r.objective_trace.reserve(static_cast<std::size_t>(config.max_iter));
  SymMatrix b = b0;
  for (int it = 0; it < config.max_iter; ++it) {
    // Y - (1/L) grad f(Y) = P_W(Y) + G / mu
    b = project_psd_trace1(sym_from_coords(w.project_w(y) + step, p));
    if (config.on_iterate) config.on_iterate(b);
    const Vector bc = sym_coords(b);
    const double value = penalized_value(gc, bc, w, mu);
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "fista_run: non-finite objective at iteration " << it << " (mu=" << mu << ")";
      throw NumericalError(os.str());
    }
    r.objective_trace.push_back(value);
    const double z_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * z * z));
    const double moved = (bc - b_prev).norm();
    y = bc + ((z - 1.0) / z_next) * (bc - b_prev);
    b_prev = bc;
    z = z_next;
    r.iterations = it + 1;
    if (moved <= kStepTol) {
      r.converged = true;
      break;
    }
  }
  r.b_star = b;
  r.objective = r.objective_trace.back();
  r.rounds = 1;
  r.round_objectives.push_back(r.objective);
  finalize(r, w);
  return r;
}

Restart mm_restart(const SolverResult& prev) {
  const SymEigen e = sym_eig(prev.b_star);
  const Index p = prev.b_star.dim();
  Restart out;
  const Vector v = e.vectors.col(p - 1);
  out.b0 = SymMatrix::outer(v);
  out.degenerate = p > 1 && e.values[p - 1] - e.values[p - 2] <= kTieTol;
  return out;
}

namespace {

// Augmented-Lagrangian rounds for the hard constraint B in W: every round is a
// warm-started FISTA run on the shifted objective -<G - Lambda, B> + penalty,
// followed by Lambda += mu * P_null(B). Carries b and lambda across calls so a
// mu-continuation can reuse them.
struct MultiplierState {
  SymMatrix b;
  Vector lambda;
  std::vector<double> trace;
  int iterations = 0;
  int rounds = 0;
};

SolverResult multiplier_rounds(const SymMatrix& g, const SubspaceBasis& w, double mu, MultiplierState& st,
                               const SolverConfig& inner, int max_rounds) {
  SolverResult last;
  for (int round = 0; round < max_rounds; ++round) {
    last = fista_run(g - sym_from_coords(st.lambda, w.p()), w, mu, st.b, inner);
    st.iterations += last.iterations;
    ++st.rounds;
    st.trace.insert(st.trace.end(), last.objective_trace.begin(), last.objective_trace.end());
    const Vector r = w.project_null(sym_coords(last.b_star));
    st.lambda += mu * r;
    const double moved = (last.b_star - st.b).norm();
    st.b = last.b_star;
    if (r.norm() < 1e-9 && moved < 1e-9) break;
  }
  return last;
}

}  // namespace

SolverResult fista(const SymMatrix& g, const SubspaceBasis& w, const SolverConfig& config) {
  config.validate();
  const Index p = w.p();
  if (g.dim() != p) throw DimensionError("fista: G dimension differs from the subspace");
  if (!g.matrix().allFinite()) throw NumericalError("fista: G has non-finite entries");
  const double mu = config.mu > 0.0 ? config.mu : default_mu(g);
  const SymMatrix barycenter = SymMatrix::identity(p) * (1.0 / static_cast<double>(p));

  if (config.augmented) {
    MultiplierState st{barycenter, Vector::Zero(w.m()), {}, 0, 0};
    SolverResult out = multiplier_rounds(g, w, mu, st, config, config.mm_rounds);
    out.objective = -g.dot(out.b_star);
    out.objective_trace = std::move(st.trace);
    out.round_objectives = {out.objective};
    out.iterations = st.iterations;
    out.rounds = st.rounds;
    out.converged = out.subspace_residual < 1e-8;
    out.mu = mu;
    return out;
  }

  SymMatrix b0 = barycenter;
  SolverResult best;
  std::vector<double> trace, rounds;
  int iterations = 0;
  bool converged = false;
  double previous = std::numeric_limits<double>::infinity();
  for (int round = 0; round < config.mm_rounds; ++round) {
    SolverResult run = fista_run(g, w, mu, b0, config);
    trace.insert(trace.end(), run.objective_trace.begin(), run.objective_trace.end());
    iterations += run.iterations;
    const double change = std::abs(previous - run.objective);
    previous = run.objective;
    b0 = mm_restart(run).b0;
    // Keep the best iterate: a rank-one restart can land on a worse objective.
    if (round == 0 || run.objective <= best.objective) best = std::move(run);
    rounds.push_back(best.objective);
    if (change <= config.tol * std::max(1.0, std::abs(previous))) {
      converged = true;
      break;
    }
  }
  best.objective_trace = std::move(trace);
  best.round_objectives = std::move(rounds);
  best.iterations = iterations;
  best.rounds = static_cast<int>(best.round_objectives.size());
  best.converged = converged;
  best.mu = mu;
  return best;
}

SymMatrix choose_g(const SubspaceBasis& w, GMode mode, Rng& rng) {
  if (w.exhausted()) throw DeflationError("choose_g: subspace is exhausted");
  if (mode == GMode::deterministic) {
    // Sign fixed so that Tr G >= 0, the side the atoms live on.
    SymMatrix g = sym_from_coords(w.basis().col(0), w.p());
    return g.trace() < 0.0 ? g * -1.0 : g;
  }
  Vector c = standard_normal(w.k(), 1, rng);
  c /= c.norm();
  return sym_from_coords(w.basis() * c, w.p());
}

ReferenceResult solve_exact_reference(const MixingMatrix& d, const SymMatrix& g) {
  const Index p = d.p(), m = sym_dim(p);
  if (g.dim() != p) throw DimensionError("solve_exact_reference: G dimension mismatch");
  const SubspaceBasis w =
      d.k() >= m ? SubspaceBasis(p, Matrix::Identity(m, m), SubspaceSource::population) : population_basis(d);

  double scale = w.project_w(g).norm();
  if (!(scale > 0.0)) scale = 1.0;

  SolverConfig inner;
  inner.max_iter = 400;
  MultiplierState st{SymMatrix::identity(p) * (1.0 / static_cast<double>(p)), Vector::Zero(m), {}, 0, 0};
  SolverResult last;
  for (double factor : {1e2, 1e3, 1e4}) last = multiplier_rounds(g, w, factor * scale, st, inner, 60);

  ReferenceResult out;
  out.solve = std::move(last);
  out.solve.objective = -g.dot(out.solve.b_star);
  out.solve.objective_trace = std::move(st.trace);
  out.solve.iterations = st.iterations;
  out.solve.rounds = st.rounds;
  out.solve.converged = out.solve.subspace_residual < 1e-6;
  out.distance = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < d.k(); ++i) {
    const double dist = (out.solve.b_star - d.atom(i)).norm();
    if (dist < out.distance) {
      out.distance = dist;
      out.atom = i;
    }
  }
  out.success = out.solve.converged && out.distance < 1e-3;
  return out;
}

}  // namespace oica
