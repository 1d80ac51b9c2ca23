#include "oica/deflation.hpp"

#include "oica/errors.hpp"
#include "oica/parallel.hpp"
#include "oica/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace oica {

namespace {

// Streams for the adaptive phase live far above the clustering solve indices.
constexpr std::uint64_t kAdaptiveStream = 1ull << 40;
constexpr std::uint64_t kProbeStream = 1ull << 41;
constexpr int kLloydIterations = 100;
constexpr double kLooseTol = 1.0 - 1e-6;

double similarity(const Vector& u, const Vector& v) { return std::abs(u.dot(v)); }

// Sign convention: the entry of largest magnitude is positive.
Vector canonical_sign(Vector v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
  return v;
}

Vector centroid_of(const std::vector<Vector>& dirs, const std::vector<Index>& members) {
  const Index p = dirs.front().size();
  Matrix s = Matrix::Zero(p, p);
  for (Index i : members) {
    const Vector& u = dirs[static_cast<std::size_t>(i)];
    s.noalias() += u * u.transpose();
  }
  const SymEigen e = sym_eig(SymMatrix(s));
  return canonical_sign(e.vectors.col(p - 1));
}

// Root-mean-square of the normalized atom distance ||u u^T - c c^T||_F / sqrt 2
// = sqrt(1 - <u, c>^2), so the threshold is in distance units.
double variance_of(const std::vector<Vector>& dirs, const std::vector<Index>& members, const Vector& c) {
  double total = 0.0;
  for (Index i : members) {
    const double cs = dirs[static_cast<std::size_t>(i)].dot(c);
    total += 1.0 - cs * cs;
  }
  return std::sqrt(std::max(0.0, total / static_cast<double>(members.size())));
}

void check_k(const SubspaceBasis& w, Index k, const char* who) {
  if (k < 1) throw InputError(std::string(who) + ": k must be >= 1");
  if (w.p() < 1) throw InputError(std::string(who) + ": empty subspace");
}

}  // namespace

const char* to_string(DeflationStrategy s) noexcept {
  switch (s) {
    case DeflationStrategy::clustering: return "clustering";
    case DeflationStrategy::adaptive: return "adaptive";
    case DeflationStrategy::semi_adaptive: return "semi_adaptive";
  }
  return "unknown";
}

DeflationStrategy parse_deflation_strategy(const std::string& s) {
  if (s == "clustering") return DeflationStrategy::clustering;
  if (s == "adaptive") return DeflationStrategy::adaptive;
  if (s == "semi_adaptive" || s == "semi-adaptive") return DeflationStrategy::semi_adaptive;
  throw InputError("unknown deflation strategy '" + s + "'");
}

const char* to_string(Step1 s) noexcept {
  switch (s) {
    case Step1::gencov: return "gencov";
    case Step1::cum4: return "cum4";
  }
  return "unknown";
}

Step1 parse_step1(const std::string& s) {
  if (s == "gencov") return Step1::gencov;
  if (s == "cum4") return Step1::cum4;
  throw InputError("unknown step-1 estimator '" + s + "'");
}

void DeflationConfig::validate() const {
  if (oversample_factor < 1) throw InputError("DeflationConfig: oversample_factor must be >= 1");
  if (!(cluster_var_threshold >= 0.0 && cluster_var_threshold <= 1.0))
    throw InputError("DeflationConfig: cluster_var_threshold must lie in [0, 1]");
  if (!(distinct_threshold > 0.0 && distinct_threshold < 1.0))
    throw InputError("DeflationConfig: distinct_threshold must lie in (0, 1)");
  if (!(null_tol > 0.0)) throw InputError("DeflationConfig: null_tol must be positive");
  if (!(residual_warn >= 0.0)) throw InputError("DeflationConfig: residual_warn must be >= 0");
  if (retries < 1) throw InputError("DeflationConfig: retries must be >= 1");
}

std::vector<ClusterInfo> cluster_directions(const std::vector<Vector>& dirs, Index k, double merge_cos) {
  if (k < 1) throw InputError("cluster_directions: k must be >= 1");
  const auto n = static_cast<Index>(dirs.size());
  if (n == 0) return {};

  // Farthest-point seeding; stops early when every point coincides with a seed.
  std::vector<Vector> centers{canonical_sign(dirs.front())};
  std::vector<double> nearest(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) nearest[static_cast<std::size_t>(i)] = 1.0 - similarity(dirs[static_cast<std::size_t>(i)], centers[0]);
  while (static_cast<Index>(centers.size()) < k) {
    const auto it = std::max_element(nearest.begin(), nearest.end());
    if (*it <= 1e-12) break;
    const Vector& c = dirs[static_cast<std::size_t>(it - nearest.begin())];
    centers.push_back(canonical_sign(c));
    for (Index i = 0; i < n; ++i) {
      auto& d = nearest[static_cast<std::size_t>(i)];
      d = std::min(d, 1.0 - similarity(dirs[static_cast<std::size_t>(i)], c));
    }
  }

  // Lloyd refinement under 1 - |<u, v>|.
  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> members;
  for (int iter = 0; iter < kLloydIterations; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_sim = -1.0;
      for (Index c = 0; c < static_cast<Index>(centers.size()); ++c) {
        const double s = similarity(dirs[static_cast<std::size_t>(i)], centers[static_cast<std::size_t>(c)]);
        if (s > best_sim) {
          best_sim = s;
          best = c;
        }
      }
      if (label[static_cast<std::size_t>(i)] != best) {
        label[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    members.assign(centers.size(), {});
    for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])].push_back(i);
    // Empty clusters are dropped; relabel the survivors.
    std::vector<Vector> kept;
    std::vector<std::vector<Index>> kept_members;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (members[c].empty()) continue;
      kept.push_back(centroid_of(dirs, members[c]));
      kept_members.push_back(std::move(members[c]));
    }
    if (kept.size() != centers.size()) changed = true;
    centers = std::move(kept);
    members = std::move(kept_members);
    for (std::size_t c = 0; c < members.size(); ++c)
      for (Index i : members[c]) label[static_cast<std::size_t>(i)] = static_cast<Index>(c);
    if (!changed) break;
  }

  // Merge clusters whose centroids describe the same direction.
  for (;;) {
    double best = merge_cos;
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < centers.size(); ++i)
      for (std::size_t j = i + 1; j < centers.size(); ++j) {
        const double s = similarity(centers[i], centers[j]);
        if (s > best) {
          best = s;
          a = i;
          b = j;
        }
      }
    if (a == b) break;
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    std::sort(members[a].begin(), members[a].end());
    centers[a] = centroid_of(dirs, members[a]);
    centers.erase(centers.begin() + static_cast<std::ptrdiff_t>(b));
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(b));
  }

  std::vector<ClusterInfo> out;
  out.reserve(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    ClusterInfo info;
    info.centroid = centers[c];
    info.size = static_cast<Index>(members[c].size());
    info.variance = variance_of(dirs, members[c], centers[c]);
    out.push_back(std::move(info));
  }
  // Tightest clusters first, so callers that take a prefix keep the best ones.
  std::stable_sort(out.begin(), out.end(), [](const ClusterInfo& x, const ClusterInfo& y) {
    if (x.size != y.size) return x.size > y.size;
    return x.variance < y.variance;
  });
  return out;
}

ClusterResult cluster_deflation(const SubspaceBasis& w, Index k, const SolverConfig& solver,
                                const DeflationConfig& config) {
  check_k(w, k, "cluster_deflation");
  config.validate();
  solver.validate();
  if (w.exhausted()) throw DeflationError("cluster_deflation: subspace is exhausted");

  const auto n = static_cast<std::size_t>(k) * static_cast<std::size_t>(config.oversample_factor);
  std::vector<Vector> dirs(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(config.seed, i));
    const SymMatrix g = choose_g(w, GMode::random, rng);
    SolverConfig local = solver;
    local.seed = derive_seed(config.seed, i);
    local.on_iterate = nullptr;
    dirs[i] = fista(g, w, local).top_eigvec;
  });

  ClusterResult out;
  out.solves = static_cast<Index>(n);
  out.clusters = cluster_directions(dirs, k, config.distinct_threshold);
  for (auto& c : out.clusters) {
    c.accepted = config.cluster_var_threshold >= 1.0 ||
                 (c.variance <= config.cluster_var_threshold && c.size >= 2);
    out.atoms.push_back(c.centroid);
  }
  if (static_cast<Index>(out.clusters.size()) < k) {
    out.partial = true;
    std::ostringstream os;
    os << "clustering found " << out.clusters.size() << " distinct clusters for k=" << k;
    out.warnings.push_back(os.str());
  }
  return out;
}

AdaptiveResult adaptive_deflation(const SubspaceBasis& w, Index k, const SolverConfig& solver,
                                  const DeflationConfig& config, const std::vector<Vector>& seed_atoms) {
  check_k(w, k, "adaptive_deflation");
  config.validate();
  solver.validate();
  if (static_cast<Index>(seed_atoms.size()) > k) throw InputError("adaptive_deflation: more seed atoms than k");

  AdaptiveResult out;
  SubspaceBasis current = w;
  auto fail = [&](Index step, const std::string& why) {
    out.failed_step = step;
    out.partial = true;
    std::ostringstream os;
    os << "step " << step << ": " << why;
    out.warnings.push_back(os.str());
  };
  auto add = [&](const Vector& v, Index step) -> bool {
    const double res = w.residual(SymMatrix::outer(v));
    if (res > config.residual_warn) {
      std::ostringstream os;
      os << "atom " << step << " lies " << res << " away from W; later atoms may inherit the error";
      out.warnings.push_back(os.str());
    }
    const SymMatrix atom = SymMatrix::outer(v);
    try {
      current = augment_null(current, std::span<const SymMatrix>(&atom, 1), config.null_tol);
    } catch (const DeflationError& e) {
      // With an estimated W no rank-one matrix need lie within null_tol; the
      // atom is still the best available, so its W-component is deflated
      // anyway. Only an atom with no component in W stops the run.
      std::ostringstream os;
      os << "atom " << step << " fails the consistency check, deflated anyway (" << e.what() << ")";
      out.warnings.push_back(os.str());
      try {
        current = augment_null(current, std::span<const SymMatrix>(&atom, 1), kLooseTol);
      } catch (const DeflationError& e2) {
        fail(step, e2.what());
        return false;
      }
    }
    out.atoms.push_back(v);
    out.residuals.push_back(res);
    return true;
  };

  for (const Vector& v : seed_atoms) {
    if (v.size() != w.p()) throw DimensionError("adaptive_deflation: seed atom dimension mismatch");
    if (!(v.norm() > 0.0)) throw InputError("adaptive_deflation: zero seed atom");
    if (!add(canonical_sign(v.normalized()), static_cast<Index>(out.atoms.size()))) return out;
  }

  Rng rng(derive_seed(config.seed, kAdaptiveStream));
  for (Index step = static_cast<Index>(out.atoms.size()); step < k; ++step) {
    if (current.exhausted()) {
      fail(step, "subspace exhausted");
      return out;
    }
    // Keep the candidate closest to W; stop as soon as one is clean.
    std::optional<Vector> found;
    double found_res = std::numeric_limits<double>::infinity();
    std::string last_issue;
    for (int attempt = 0; attempt < config.retries; ++attempt) {
      const SymMatrix g = choose_g(current, config.g_mode, rng);
      SolverConfig local = solver;
      local.seed = rng();
      local.on_iterate = nullptr;
      const SolverResult r = fista(g, config.constrain_deflated ? current : w, local);
      ++out.solves;
      if (!r.converged) {
        last_issue = "solver did not converge";
      } else {
        const Vector v = canonical_sign(r.top_eigvec);
        bool distinct = true;
        for (const Vector& u : out.atoms)
          if (similarity(u, v) > config.distinct_threshold) distinct = false;
        const double res = w.residual(SymMatrix::outer(v));
        if (!distinct) {
          last_issue = "solution repeats an earlier atom";
        } else if (res < found_res) {
          found = v;
          found_res = res;
        }
      }
      if (found && found_res <= config.residual_warn) break;
      // Deterministic G cannot change between attempts.
      if (config.g_mode == GMode::deterministic) break;
    }
    if (!found) {
      fail(step, "no distinct atom in " + std::to_string(config.retries) + " attempts (" + last_issue + ")");
      return out;
    }
    if (!add(*found, step)) return out;
  }
  return out;
}

DeflationResult semi_adaptive_deflation(const SubspaceBasis& w, Index k, const SolverConfig& solver,
                                        const DeflationConfig& config) {
  check_k(w, k, "semi_adaptive_deflation");
  config.validate();
  DeflationResult out;

  std::vector<Vector> accepted;
  if (config.cluster_var_threshold > 0.0) {
    ClusterResult cr = cluster_deflation(w, k, solver, config);
    out.solves += cr.solves;
    out.warnings = cr.warnings;
    out.clusters = cr.clusters;
    if (config.cluster_var_threshold >= 1.0) {
      out.atoms = std::move(cr.atoms);
      out.from_clusters = static_cast<Index>(out.atoms.size());
      out.partial = cr.partial;
      return out;
    }
    // Keep an accepted atom only if W stays consistent after deflating it.
    SubspaceBasis probe = w;
    for (const ClusterInfo& c : out.clusters) {
      if (!c.accepted || static_cast<Index>(accepted.size()) == k) continue;
      try {
        const SymMatrix atom = SymMatrix::outer(c.centroid);
        probe = augment_null(probe, std::span<const SymMatrix>(&atom, 1), config.null_tol);
        accepted.push_back(c.centroid);
      } catch (const DeflationError& e) {
        out.warnings.push_back(std::string("dropped an accepted cluster: ") + e.what());
      }
    }
  }
  out.from_clusters = static_cast<Index>(accepted.size());

  AdaptiveResult ar = adaptive_deflation(w, k, solver, config, accepted);
  out.solves += ar.solves;
  out.atoms = std::move(ar.atoms);
  out.partial = ar.partial || static_cast<Index>(out.atoms.size()) < k;
  out.warnings.insert(out.warnings.end(), ar.warnings.begin(), ar.warnings.end());
  return out;
}

DeflationResult deflate(const SubspaceBasis& w, Index k, const SolverConfig& solver, const DeflationConfig& config) {
  switch (config.strategy) {
    case DeflationStrategy::clustering: {
      ClusterResult cr = cluster_deflation(w, k, solver, config);
      DeflationResult out;
      out.atoms = std::move(cr.atoms);
      if (static_cast<Index>(out.atoms.size()) > k) out.atoms.resize(static_cast<std::size_t>(k));
      out.from_clusters = static_cast<Index>(out.atoms.size());
      out.solves = cr.solves;
      out.partial = cr.partial;
      out.clusters = std::move(cr.clusters);
      out.warnings = std::move(cr.warnings);
      return out;
    }
    case DeflationStrategy::adaptive: {
      AdaptiveResult ar = adaptive_deflation(w, k, solver, config);
      DeflationResult out;
      out.atoms = std::move(ar.atoms);
      out.solves = ar.solves;
      out.partial = ar.partial;
      out.warnings = std::move(ar.warnings);
      return out;
    }
    case DeflationStrategy::semi_adaptive: return semi_adaptive_deflation(w, k, solver, config);
  }
  throw InputError("deflate: unknown strategy");
}

SubspaceBasis estimate_subspace(const SampleMatrix& x, Index k, const OverIcaConfig& config) {
  if (k < 1 || k > sym_dim(x.p())) {
    std::ostringstream os;
    os << "overica: k=" << k << " must lie in [1, p(p+1)/2=" << sym_dim(x.p()) << "]";
    throw InputError(os.str());
  }
  try {
    const SampleMatrix xc = x.centered() ? x : center(x);
    if (config.step1 == Step1::cum4) return basis_from_cum4(cum4_flattening(xc), k);
    const Index s = config.probes > 0 ? config.probes : 10 * k;
    const double scale = config.probe_scale > 0.0 ? config.probe_scale : default_probe_scale(xc);
    Rng rng(derive_seed(config.seed, kProbeStream));
    const Matrix probes = sample_probes(xc.p(), s, scale, rng);
    return basis_from_gencovs(gencov_batch(xc, probes), k);
  } catch (const Error& e) {
    rethrow_with_stage(e, std::string("step1/") + to_string(config.step1));
  }
}

OverIcaResult recover_mixing(const SubspaceBasis& w, Index k, const OverIcaConfig& config) {
  DeflationResult dr;
  try {
    DeflationConfig dc = config.deflation;
    if (dc.seed == 0) dc.seed = config.seed;
    dr = deflate(w, k, config.solver, dc);
  } catch (const Error& e) {
    rethrow_with_stage(e, std::string("step2/") + to_string(config.deflation.strategy));
  }
  Matrix d(w.p(), static_cast<Index>(dr.atoms.size()));
  for (std::size_t i = 0; i < dr.atoms.size(); ++i) d.col(static_cast<Index>(i)) = dr.atoms[i].normalized();
  OverIcaResult out{MixingMatrix::normalized(d), w, dr.partial, dr.solves, w.warnings()};
  out.warnings.insert(out.warnings.end(), dr.warnings.begin(), dr.warnings.end());
  return out;
}

OverIcaResult overica(const SampleMatrix& x, Index k, const OverIcaConfig& config) {
  return recover_mixing(estimate_subspace(x, k, config), k, config);
}

}  // namespace oica
