#pragma once

// Command-line front end: sample, estimate, phase, bench, cifar-patches,
// cifar-estimate and eval. Every flag can also be given in a TOML/INI file
// passed with --config (options of a subcommand live in its [section]).

#include "oica/errors.hpp"

#include <string>
#include <vector>

namespace oica {

inline constexpr const char* kVersion = "0.1.0";

/// 2 input and dimension, 3 format, 4 numerical and deflation, 5 assumption,
/// 6 sampling. Anything else that escapes a command exits with 1.
int exit_code(ErrorKind kind) noexcept;

/// Parses and runs one command; returns the process exit code. Errors are
/// reported on stderr, never thrown.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace oica
