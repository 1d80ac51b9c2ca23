#include "oica/cli.hpp"

#include "oica/cifar.hpp"
#include "oica/deflation.hpp"
#include "oica/io.hpp"
#include "oica/metrics.hpp"
#include "oica/subspace.hpp"
#include "oica/synth.hpp"
#include "oica/theorylab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

namespace oica {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::dimension: return 2;
    case ErrorKind::format: return 3;
    case ErrorKind::numerical:
    case ErrorKind::deflation: return 4;
    case ErrorKind::assumption: return 5;
    case ErrorKind::sampling: return 6;
  }
  return 1;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("spearman: need two equally long series of length >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = (static_cast<double>(i + j) / 2.0) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("loglog_slope: need two equally long series of length >= 2");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Effective option values of a subcommand (command line, config file or
// default), keyed by long name.
json effective_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      cfg[name] = res.size() == 1 ? json(res[0]) : json(res);
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

struct Context {
  std::string command;
  std::uint64_t seed = 0;
  fs::path out = ".";
  json config;
  std::vector<std::string> outputs;

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }

  void write_manifest() {
    json versions = {{"oica", kVersion},
                     {"container", kContainerVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"cli11", CLI11_VERSION},
                     {"compiler", __VERSION__}};
    const json manifest = {{"command", command},
                           {"seed", seed},
                           {"config", config},
                           {"config_hash", hex64(fnv1a64(config.dump()))},
                           {"versions", versions},
                           {"outputs", outputs}};
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
  }
};

json metrics_json(const Matrix& truth, const Matrix& estimate) {
  const AngleMatch match = angle_match(truth, estimate);
  const Index k = truth.cols();
  const Index perfect = perfect_count(truth, estimate);
  const std::vector<Index> counts{perfect};
  const RecoveryVector r = recovery_from_counts(k, counts);
  std::vector<double> degrees;
  for (double a : match.angle) degrees.push_back(a * 180.0 / M_PI);
  return {{"f_error", f_error(truth, estimate)},
          {"a_error", match.error},
          {"perfect_count", perfect},
          {"perfect_fraction", static_cast<double>(perfect) / static_cast<double>(k)},
          {"recovery_threshold_degrees", kRecoveryAngle * 180.0 / M_PI},
          {"recovery_vector", r.r},
          {"matched_angles_degrees", degrees},
          {"estimated_columns", estimate.cols()}};
}

struct PipelineOptions {
  std::string step1 = "gencov";
  std::string strategy = "semi_adaptive";
  std::string g_mode = "random";
  Index probes = 0;
  double probe_scale = 0.0;
  int oversample = 5;
  double cluster_threshold = 0.05;
  int retries = 10;
  double mu = 0.0;
  int max_iter = 100;
  int mm_rounds = 50;
  bool augmented = false;

  void attach(CLI::App* sub) {
    sub->add_option("--step1", step1, "Subspace estimator: gencov or cum4")->capture_default_str();
    sub->add_option("--probes", probes, "Generalized covariances (0 = 10 k)")->capture_default_str();
    sub->add_option("--probe-scale", probe_scale, "Probe standard deviation (0 = data-driven default)")
        ->capture_default_str();
    sub->add_option("--strategy", strategy, "Deflation: clustering, adaptive or semi_adaptive")->capture_default_str();
    sub->add_option("--oversample", oversample, "Solves per atom in the clustering pass")->capture_default_str();
    sub->add_option("--cluster-threshold", cluster_threshold, "Largest accepted cluster spread")->capture_default_str();
    sub->add_option("--retries", retries, "Objective draws per adaptive step")->capture_default_str();
    sub->add_option("--g-mode", g_mode, "Objective draw: random or deterministic")->capture_default_str();
    sub->add_option("--mu", mu, "Penalty weight (0 = 1e3 ||G||)")->capture_default_str();
    sub->add_option("--max-iter", max_iter, "FISTA iterations per MM round")->capture_default_str();
    sub->add_option("--mm-rounds", mm_rounds, "Majorization-minimization restarts")->capture_default_str();
    sub->add_flag("--augmented", augmented, "Multiplier updates for the subspace constraint");
  }

  OverIcaConfig build(std::uint64_t seed) const {
    OverIcaConfig c;
    c.step1 = parse_step1(step1);
    c.probes = probes;
    c.probe_scale = probe_scale;
    c.solver.mu = mu;
    c.solver.max_iter = max_iter;
    c.solver.mm_rounds = mm_rounds;
    c.solver.augmented = augmented;
    c.solver.seed = seed;
    c.solver.validate();
    c.deflation.strategy = parse_deflation_strategy(strategy);
    c.deflation.oversample_factor = oversample;
    c.deflation.cluster_var_threshold = cluster_threshold;
    c.deflation.retries = retries;
    if (g_mode == "random") {
      c.deflation.g_mode = GMode::random;
    } else if (g_mode == "deterministic") {
      c.deflation.g_mode = GMode::deterministic;
    } else {
      throw InputError("unknown --g-mode '" + g_mode + "'");
    }
    c.deflation.seed = seed;
    c.deflation.validate();
    c.seed = seed;
    return c;
  }
};

json run_json(const OverIcaResult& r) {
  return {{"partial", r.partial},
          {"solves", r.solves},
          {"estimated_columns", r.d.k()},
          {"subspace", {{"source", to_string(r.w.source())}, {"gap_ratio", r.w.gap_ratio()}}},
          {"warnings", r.warnings}};
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw InputError(std::string(what) + " not found: " + p.string());
}

// ---------------------------------------------------------------------------

struct SampleCmd {
  Index p = 0, k = 0, n = 0;
  std::string mode = "normal", source = "uniform";
  std::optional<double> cap;
  bool csv = false;

  void attach(CLI::App* sub) {
    sub->add_option("--p", p, "Observed dimension")->required();
    sub->add_option("--k", k, "Number of sources")->required();
    sub->add_option("--n", n, "Sample size")->required();
    sub->add_option("--mode", mode, "Mixing matrix: normal, prune or sparse")->capture_default_str();
    sub->add_option("--coherence-cap", cap, "Prune threshold (default: median coherence)");
    sub->add_option("--source", source, "Source law: uniform or laplace")->capture_default_str();
    sub->add_flag("--csv", csv, "Also write CSV exports");
  }

  void run(Context& ctx) const {
    SamplingSpec spec;
    spec.p = p;
    spec.k = k;
    spec.mode = parse_mixing_mode(mode);
    spec.coherence_cap = cap;
    spec.seed = derive_seed(ctx.seed, 0);
    if (n < 1) throw InputError("--n must be >= 1");
    const MixingMatrix d = sample_mixing(spec);
    const SourceKind kind = parse_source_kind(source);
    if (kind == SourceKind::custom) throw InputError("--source custom is only available through the library");
    Rng rng(derive_seed(ctx.seed, 1));
    const SampleMatrix x = sample_ica(d, n, SourceLaw{kind, {}}, rng);
    write_container(ctx.file("mixing.oica"), d.matrix());
    write_container(ctx.file("sample.oica"), x.data());
    if (csv) {
      write_csv(ctx.file("mixing.csv"), d.matrix());
      write_csv(ctx.file("sample.csv"), x.data());
    }
    std::cout << "mixing " << d.p() << " x " << d.k() << ", sample " << x.p() << " x " << x.n() << " -> "
              << ctx.out.string() << "\n";
  }
};

struct EstimateCmd {
  std::string input, mixing, truth;
  bool population = false, csv = false;
  Index k = 0;
  PipelineOptions pipe;

  void attach(CLI::App* sub) {
    sub->add_option("--input", input, "Observations (p x n container or CSV)");
    sub->add_flag("--population", population, "Use the exact subspace of --mixing instead of data");
    sub->add_option("--mixing", mixing, "Mixing matrix for --population");
    sub->add_option("--truth", truth, "Reference mixing matrix for the metrics report");
    sub->add_option("--k", k, "Number of components (default: columns of --mixing)");
    sub->add_flag("--csv", csv, "Also write a CSV export of the estimate");
    pipe.attach(sub);
  }

  void run(Context& ctx) const {
    const OverIcaConfig cfg = pipe.build(ctx.seed);
    json report = {{"command", "estimate"}, {"seed", ctx.seed}};
    OverIcaResult res;
    Matrix reference;
    const auto t0 = Clock::now();
    double step1 = 0.0;
    if (population) {
      if (mixing.empty()) throw InputError("--population needs --mixing");
      require_file(mixing, "mixing matrix");
      const MixingMatrix d = MixingMatrix::normalized(read_matrix(mixing));
      const Index kk = k > 0 ? k : d.k();
      if (kk != d.k()) throw InputError("--k must equal the number of columns of --mixing in population mode");
      const auto t1 = Clock::now();
      const SubspaceBasis w = population_basis(d);
      step1 = seconds_since(t1);
      res = recover_mixing(w, kk, cfg);
      reference = d.matrix();
      report["mode"] = "population";
      report["p"] = d.p();
      report["k"] = kk;
    } else {
      if (input.empty()) throw InputError("estimate needs --input (or --population --mixing)");
      require_file(input, "input file");
      if (k < 1) throw InputError("--k is required");
      const SampleMatrix x(read_matrix(input));
      const auto t1 = Clock::now();
      const SubspaceBasis w = estimate_subspace(x, k, cfg);
      step1 = seconds_since(t1);
      res = recover_mixing(w, k, cfg);
      report["mode"] = "sample";
      report["p"] = x.p();
      report["n"] = x.n();
      report["k"] = k;
    }
    const double total = seconds_since(t0);
    if (!truth.empty()) {
      require_file(truth, "truth matrix");
      reference = read_matrix(truth);
    }
    report["run"] = run_json(res);
    report["timing_seconds"] = {{"step1", step1}, {"total", total}};
    if (reference.size() > 0) report["metrics"] = metrics_json(reference, res.d.matrix());

    write_container(ctx.file("estimate.oica"), res.d.matrix());
    if (csv) write_csv(ctx.file("estimate.csv"), res.d.matrix());
    write_text(ctx.file("report.json"), report.dump(2) + "\n");
    std::cout << "estimated " << res.d.k() << " components" << (res.partial ? " (partial)" : "");
    if (report.contains("metrics"))
      std::cout << ", f-error " << report["metrics"]["f_error"].get<double>() << ", a-error "
                << report["metrics"]["a_error"].get<double>() << ", recovered "
                << report["metrics"]["perfect_count"].get<Index>();
    std::cout << "\n";
  }
};

std::vector<Index> parse_range(const std::string& spec) {
  // "a:b:step", inclusive
  std::vector<Index> out;
  long long a = 0, b = 0, s = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(spec);
  if (!(is >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || s <= 0 || b < a)
    throw InputError("range '" + spec + "' is not of the form start:stop:step");
  for (long long v = a; v <= b; v += s) out.push_back(static_cast<Index>(v));
  return out;
}

struct PhaseCmd {
  std::vector<Index> p_values, k_values;
  std::string k_range;
  int n_rep = 20;

  void attach(CLI::App* sub) {
    sub->add_option("--p", p_values, "Observed dimensions")->delimiter(',')->required();
    sub->add_option("--k", k_values, "Latent dimensions")->delimiter(',');
    sub->add_option("--k-range", k_range, "Latent dimensions as start:stop:step");
    sub->add_option("--n-rep", n_rep, "Replicates per cell")->capture_default_str();
  }

  void run(Context& ctx) const {
    std::vector<Index> ks = k_values;
    if (!k_range.empty()) {
      const auto r = parse_range(k_range);
      ks.insert(ks.end(), r.begin(), r.end());
    }
    if (ks.empty()) throw InputError("phase needs --k or --k-range");
    const auto t0 = Clock::now();
    const PhaseGrid grid = phase_transition(p_values, ks, n_rep, ctx.seed);
    write_text(ctx.file("phase.csv"), phase_csv(grid));
    write_text(ctx.file("phase_plot.json"), phase_plot_json(grid));
    write_text(ctx.file("phase.svg"), phase_svg(grid));
    std::cout << "phase grid " << grid.p_values.size() << " x " << grid.k_values.size() << " (" << n_rep
              << " replicates) in " << seconds_since(t0) << " s\n";
  }
};

struct BenchCmd {
  std::string sweep = "n";
  std::vector<Index> values;
  Index p = 15, k = 30, n = 10000;
  int trials = 3;
  std::string source = "uniform";
  PipelineOptions pipe;

  void attach(CLI::App* sub) {
    sub->add_option("--sweep", sweep, "Swept parameter: n or k")->capture_default_str();
    sub->add_option("--values", values, "Sweep values")->delimiter(',');
    sub->add_option("--p", p, "Observed dimension")->capture_default_str();
    sub->add_option("--k", k, "Latent dimension (n sweeps)")->capture_default_str();
    sub->add_option("--n", n, "Sample size (k sweeps)")->capture_default_str();
    sub->add_option("--trials", trials, "Trials per value")->capture_default_str();
    sub->add_option("--source", source, "Source law: uniform or laplace")->capture_default_str();
    pipe.attach(sub);
  }

  void run(Context& ctx) const {
    if (values.empty()) throw InputError("bench: empty sweep (--values)");
    if (sweep != "n" && sweep != "k") throw InputError("bench: --sweep must be n or k");
    if (trials < 1) throw InputError("bench: --trials must be >= 1");
    const SourceKind kind = parse_source_kind(source);
    if (kind == SourceKind::custom) throw InputError("--source custom is only available through the library");
    for (Index v : values)
      if (v < 1) throw InputError("bench: sweep values must be positive");

    std::ostringstream csv;
    csv << "value,trial,seconds,step1_seconds,f_error,a_error,perfect_count,partial\n";
    json rows = json::array();
    std::vector<double> xs, med_a, med_s, med_s1;
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
      const Index kk = sweep == "k" ? values[vi] : k, nn = sweep == "n" ? values[vi] : n;
      std::vector<double> a_err, f_err, secs, secs1, perfect;
      for (int t = 0; t < trials; ++t) {
        // n sweeps reuse the mixing matrix and source stream of a trial, so
        // the sweep is paired across n.
        const std::uint64_t trial_seed =
            sweep == "n" ? derive_seed(ctx.seed, static_cast<std::uint64_t>(t))
                         : derive_seed(derive_seed(ctx.seed, static_cast<std::uint64_t>(t)), vi + 1);
        SamplingSpec spec;
        spec.p = p;
        spec.k = kk;
        spec.seed = derive_seed(trial_seed, 0);
        const MixingMatrix d = sample_mixing(spec);
        Rng rng(derive_seed(trial_seed, 1));
        const SampleMatrix x = sample_ica(d, nn, SourceLaw{kind, {}}, rng);
        const OverIcaConfig cfg = pipe.build(derive_seed(trial_seed, 2));
        const auto t0 = Clock::now();
        const SubspaceBasis w = estimate_subspace(x, kk, cfg);
        const double s1 = seconds_since(t0);
        const OverIcaResult r = recover_mixing(w, kk, cfg);
        const double s = seconds_since(t0);
        const double fe = f_error(d.matrix(), r.d.matrix()), ae = a_error(d.matrix(), r.d.matrix());
        const Index pc = perfect_count(d.matrix(), r.d.matrix());
        csv << values[vi] << ',' << t << ',' << s << ',' << s1 << ',' << fe << ',' << ae << ',' << pc << ','
            << (r.partial ? 1 : 0) << "\n";
        a_err.push_back(ae);
        f_err.push_back(fe);
        secs.push_back(s);
        secs1.push_back(s1);
        perfect.push_back(static_cast<double>(pc) / static_cast<double>(kk));
      }
      xs.push_back(static_cast<double>(values[vi]));
      med_a.push_back(median(a_err));
      med_s.push_back(median(secs));
      med_s1.push_back(median(secs1));
      rows.push_back({{"value", values[vi]},
                      {"median_a_error", med_a.back()},
                      {"median_f_error", median(f_err)},
                      {"median_seconds", med_s.back()},
                      {"median_step1_seconds", med_s1.back()},
                      {"mean_perfect_fraction", std::accumulate(perfect.begin(), perfect.end(), 0.0) / trials}});
      std::cout << sweep << "=" << values[vi] << ": median a-error " << med_a.back() << ", median " << med_s.back()
                << " s\n";
    }
    json summary = {{"sweep", sweep}, {"p", p}, {"trials", trials}, {"rows", rows}};
    if (sweep == "n") summary["k"] = k;
    if (sweep == "k") summary["n"] = n;
    if (xs.size() >= 2) {
      summary["spearman_a_error"] = spearman(xs, med_a);
      summary["loglog_slope_seconds"] = loglog_slope(xs, med_s);
      summary["loglog_slope_step1_seconds"] = loglog_slope(xs, med_s1);
    }
    write_text(ctx.file("bench.csv"), csv.str());
    write_text(ctx.file("bench.json"), summary.dump(2) + "\n");
  }
};

struct CifarPatchesCmd {
  std::string input, output;
  std::string gray = "luma";
  Index max_images = 0;

  void attach(CLI::App* sub) {
    sub->add_option("--input", input, "CIFAR-10 binary batch")->required();
    sub->add_option("--output", output, "Patch container (default: <out>/patches.oica)");
    sub->add_option("--gray", gray, "Grayscale conversion: luma or mean")->capture_default_str();
    sub->add_option("--max-images", max_images, "Read at most this many images (0 = all)")->capture_default_str();
  }

  void run(Context& ctx) const {
    const GrayMode g = parse_gray_mode(gray);
    const fs::path out = output.empty() ? ctx.file("patches.oica") : fs::path(output);
    if (!output.empty()) ctx.outputs.push_back(out.string());
    const Index n = write_batch_patches(input, out, g, max_images);
    std::cout << n << " patches of dimension " << kPatchDim << " -> " << out.string() << "\n";
  }
};

struct CifarEstimateCmd {
  std::string patches;
  Index k = 0, subsample = 0;
  bool no_center = false;
  PipelineOptions pipe;

  void attach(CLI::App* sub) {
    sub->add_option("--patches", patches, "Patch container from cifar-patches")->required();
    sub->add_option("--k", k, "Number of components")->required();
    sub->add_option("--subsample", subsample, "Random subset of patches (0 = all)")->capture_default_str();
    sub->add_flag("--no-center", no_center, "Skip centering (the pipeline centers internally anyway)");
    pipe.attach(sub);
  }

  void run(Context& ctx) const {
    require_file(patches, "patch file");
    const ContainerHeader h = read_container_header(patches);
    const Index side = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(h.rows))));
    if (side * side != h.rows) throw InputError("patch dimension " + std::to_string(h.rows) + " is not a square");
    if (k < 1 || k > sym_dim(h.rows))
      throw InputError("--k must lie in [1, p(p+1)/2 = " + std::to_string(sym_dim(h.rows)) + "]");

    Matrix data;
    if (subsample > 0 && subsample < h.cols) {
      std::vector<Index> all(static_cast<std::size_t>(h.cols)), pick;
      std::iota(all.begin(), all.end(), Index{0});
      Rng rng(derive_seed(ctx.seed, 3));
      std::sample(all.begin(), all.end(), std::back_inserter(pick), subsample, rng);
      data = read_container_columns(patches, pick);
    } else {
      data = read_container(patches);
    }
    if (!no_center) data.colwise() -= data.rowwise().mean();
    const SampleMatrix x(std::move(data), !no_center);

    const OverIcaConfig cfg = pipe.build(ctx.seed);
    const auto t0 = Clock::now();
    const OverIcaResult r = overica(x, k, cfg);
    const double secs = seconds_since(t0);
    const Matrix aligned = align_signs(r.d.matrix());

    write_container(ctx.file("mixing.oica"), aligned);
    for (Index i = 0; i < aligned.cols(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "components/component_%03lld.pgm", static_cast<long long>(i));
      write_text(ctx.file(name), component_pgm(aligned.col(i), side));
    }
    const Index per_row = std::max<Index>(1, static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(k)))));
    write_text(ctx.file("components_montage.pgm"), components_montage_pgm(aligned, side, per_row));
    json report = {{"command", "cifar-estimate"},
                   {"seed", ctx.seed},
                   {"p", x.p()},
                   {"n", x.n()},
                   {"k", k},
                   {"centered", !no_center},
                   {"run", run_json(r)},
                   {"timing_seconds", {{"total", secs}}}};
    write_text(ctx.file("report.json"), report.dump(2) + "\n");
    std::cout << "estimated " << r.d.k() << " components from " << x.n() << " patches in " << secs << " s\n";
  }
};

struct EvalCmd {
  std::string truth, estimate;

  void attach(CLI::App* sub) {
    sub->add_option("--truth", truth, "Reference mixing matrix")->required();
    sub->add_option("--estimate", estimate, "Estimated mixing matrix")->required();
  }

  void run(Context& ctx) const {
    require_file(truth, "truth matrix");
    require_file(estimate, "estimate");
    const json m = metrics_json(read_matrix(truth), read_matrix(estimate));
    write_text(ctx.file("eval.json"), m.dump(2) + "\n");
    std::cout << m.dump(2) << "\n";
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Overcomplete ICA by semidefinite programming"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML/INI file with option values ([subcommand] sections)");
  std::uint64_t seed = 0;
  std::string out = ".";
  app.add_option("--seed", seed, "Global seed")->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();

  SampleCmd sample;
  EstimateCmd estimate;
  PhaseCmd phase;
  BenchCmd bench;
  CifarPatchesCmd cifar_patches;
  CifarEstimateCmd cifar_estimate;
  EvalCmd eval;
  std::vector<std::pair<CLI::App*, std::function<void(Context&)>>> commands;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--seed", seed, "Global seed")->capture_default_str();
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    cmd.attach(sub);
    commands.emplace_back(sub, [&cmd](Context& c) { cmd.run(c); });
  };
  add("sample", "Draw a mixing matrix and ICA observations", sample);
  add("estimate", "Estimate a mixing matrix from observations or an exact subspace", estimate);
  add("phase", "Phase-transition grid of the exact program", phase);
  add("bench", "Error and runtime across a sweep of n or k", bench);
  add("cifar-patches", "Extract 7x7 grayscale patches from a CIFAR-10 batch", cifar_patches);
  add("cifar-estimate", "Estimate components from CIFAR patches", cifar_estimate);
  add("eval", "Compare an estimate with a reference mixing matrix", eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    Context ctx;
    ctx.command = sub->get_name();
    ctx.seed = seed;
    ctx.out = out;
    ctx.config = effective_config(*sub);
    ctx.config["seed"] = std::to_string(seed);
    ctx.config.erase("out");
    try {
      fs::create_directories(ctx.out);
      fn(ctx);
      ctx.write_manifest();
      return 0;
    } catch (const Error& e) {
      std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
      return exit_code(e.kind());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("oica");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace oica
