#include "oica/synth.hpp"

#include "oica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace oica {

namespace {

constexpr int kCoherenceDraws = 10000;

Matrix normal_columns(Index p, Index k, Rng& rng) {
  Matrix d = standard_normal(p, k, rng);
  for (Index j = 0; j < k; ++j) {
    double n = d.col(j).norm();
    while (n == 0.0) {  // measure zero, but keep the invariant unconditional
      d.col(j) = standard_normal(p, 1, rng);
      n = d.col(j).norm();
    }
    d.col(j) /= n;
  }
  return d;
}

bool atoms_independent(const Matrix& d) {
  const Index p = d.rows(), k = d.cols();
  if (k > sym_dim(p)) return false;
  Matrix a(sym_dim(p), k);
  for (Index i = 0; i < k; ++i) a.col(i) = sym_coords(SymMatrix::outer(d.col(i)));
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return s[k - 1] * s[k - 1] >= 1e-10 * s[0] * s[0];
}

std::filesystem::path cache_dir() {
  if (const char* env = std::getenv("OICA_CACHE_DIR"); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home) return std::filesystem::path(home) / ".cache" / "oica";
  return {};
}

std::mutex g_cache_mutex;
std::map<std::pair<Index, Index>, double> g_cache;

}  // namespace

const char* to_string(MixingMode m) noexcept {
  switch (m) {
    case MixingMode::normal: return "normal";
    case MixingMode::prune: return "prune";
    case MixingMode::sparse: return "sparse";
  }
  return "unknown";
}

MixingMode parse_mixing_mode(const std::string& s) {
  if (s == "normal") return MixingMode::normal;
  if (s == "prune") return MixingMode::prune;
  if (s == "sparse") return MixingMode::sparse;
  throw InputError("unknown mixing mode '" + s + "' (expected normal, prune or sparse)");
}

const char* to_string(SourceKind s) noexcept {
  switch (s) {
    case SourceKind::uniform: return "uniform";
    case SourceKind::laplace: return "laplace";
    case SourceKind::gaussian: return "gaussian";
    case SourceKind::custom: return "custom";
  }
  return "unknown";
}

SourceKind parse_source_kind(const std::string& s) {
  if (s == "uniform") return SourceKind::uniform;
  if (s == "laplace") return SourceKind::laplace;
  if (s == "gaussian") return SourceKind::gaussian;
  throw InputError("unknown source law '" + s + "' (expected uniform or laplace)");
}

void SamplingSpec::validate() const {
  if (p < 1) throw InputError("SamplingSpec: p must be >= 1");
  if (k < 1 || k > sym_dim(p)) {
    std::ostringstream os;
    os << "SamplingSpec: k=" << k << " outside [1, p(p+1)/2=" << sym_dim(p) << "]";
    throw InputError(os.str());
  }
  if (coherence_cap && !(*coherence_cap >= 0.0 && *coherence_cap <= 1.0))
    throw InputError("SamplingSpec: coherence cap must lie in [0, 1]");
}

double coherence(const MixingMatrix& d) {
  if (d.k() < 2) return 0.0;
  Matrix gram = (d.matrix().transpose() * d.matrix()).cwiseAbs();
  gram.diagonal().setZero();
  return std::min(1.0, gram.maxCoeff());
}

double mean_coherence_uncached(Index p, Index k, int draws) {
  Rng rng(derive_seed(0x636f68ULL, static_cast<std::uint64_t>(p * 100003 + k)));
  double total = 0.0;
  for (int t = 0; t < draws; ++t) total += coherence(MixingMatrix(normal_columns(p, k, rng)));
  return total / draws;
}

double mean_coherence(Index p, Index k) {
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  if (auto it = g_cache.find({p, k}); it != g_cache.end()) return it->second;

  const std::filesystem::path dir = cache_dir();
  std::ostringstream name;
  name << "coherence_p" << p << "_k" << k << "_n" << kCoherenceDraws << ".txt";
  if (!dir.empty()) {
    std::ifstream in(dir / name.str());
    double v = 0.0;
    if (in >> v && v >= 0.0 && v <= 1.0) return g_cache[{p, k}] = v;
  }
  const double v = mean_coherence_uncached(p, k, kCoherenceDraws);
  g_cache[{p, k}] = v;
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream out(dir / name.str());
    out.precision(17);
    out << v << '\n';  // best effort; an unwritable cache is not an error
  }
  return v;
}

MixingMatrix sample_mixing(const SamplingSpec& spec) {
  Rng rng(spec.seed);
  return sample_mixing(spec, rng);
}

MixingMatrix sample_mixing(const SamplingSpec& spec, Rng& rng) {
  spec.validate();
  const Index p = spec.p, k = spec.k;
  switch (spec.mode) {
    case MixingMode::normal:
      return MixingMatrix(normal_columns(p, k, rng));
    case MixingMode::prune: {
      const double cap = spec.coherence_cap ? *spec.coherence_cap : mean_coherence(p, k);
      for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
        MixingMatrix d(normal_columns(p, k, rng));
        if (coherence(d) <= cap) return d;
      }
      std::ostringstream os;
      os << "sample_mixing: no draw with coherence <= " << cap << " in " << kRejectionBudget << " attempts (p=" << p
         << ", k=" << k << ")";
      throw SamplingError(os.str());
    }
    case MixingMode::sparse: {
      const Index total = p * k, zeros = total / 2;
      std::vector<Index> order(static_cast<std::size_t>(total));
      for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
        Matrix d = standard_normal(p, k, rng);
        const Matrix mask = standard_normal(p, k, rng);
        std::iota(order.begin(), order.end(), Index{0});
        // Zero the entries whose mask value falls below the median.
        std::nth_element(order.begin(), order.begin() + zeros, order.end(),
                         [&](Index a, Index b) { return mask.data()[a] < mask.data()[b]; });
        for (Index t = 0; t < zeros; ++t) d.data()[order[static_cast<std::size_t>(t)]] = 0.0;
        bool ok = true;
        for (Index j = 0; j < k && ok; ++j) {
          const double n = d.col(j).norm();
          if (n == 0.0)
            ok = false;
          else
            d.col(j) /= n;
        }
        if (ok && atoms_independent(d)) return MixingMatrix(d);
      }
      throw SamplingError("sample_mixing: sparse resampling budget exhausted");
    }
  }
  throw InputError("sample_mixing: unknown mode");
}

double draw_source(const SourceLaw& law, Rng& rng) {
  switch (law.kind) {
    case SourceKind::uniform: {
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      return u(rng);
    }
    case SourceKind::laplace: {
      // Inverse CDF with scale 1/sqrt(2), giving unit variance.
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      const double v = u(rng);
      const double mag = -std::log1p(-2.0 * std::abs(v)) / std::sqrt(2.0);
      return v < 0.0 ? -mag : mag;
    }
    case SourceKind::gaussian:
      throw AssumptionError("Gaussian sources are not identifiable in the ICA model");
    case SourceKind::custom:
      if (!law.custom) throw InputError("custom source law has no draw function");
      return law.custom(rng);
  }
  throw InputError("unknown source law");
}

IcaSample sample_ica_with_sources(const MixingMatrix& d, Index n, const SourceLaw& law, Rng& rng) {
  if (n < 1) throw InputError("sample_ica: n must be >= 1");
  if (law.kind == SourceKind::gaussian)
    throw AssumptionError("sample_ica: Gaussian sources are not identifiable in the ICA model");
  const Index k = d.k();
  Matrix a(k, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < k; ++i) a(i, j) = draw_source(law, rng);
  Matrix x = d.matrix() * a;
  return {SampleMatrix(std::move(x)), std::move(a)};
}

SampleMatrix sample_ica(const MixingMatrix& d, Index n, const SourceLaw& law, Rng& rng) {
  return sample_ica_with_sources(d, n, law, rng).x;
}

PopulationInstance population_instance(Index p, Index k, std::uint64_t seed) {
  SamplingSpec spec{p, k, MixingMode::normal, std::nullopt, seed};
  spec.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
    MixingMatrix d = sample_mixing(spec, rng);
    try {
      SubspaceBasis w = population_basis(d);
      return {std::move(d), std::move(w)};
    } catch (const AssumptionError&) {
      // dependent atoms: draw again
    }
  }
  throw SamplingError("population_instance: could not draw independent atoms");
}

}  // namespace oica
