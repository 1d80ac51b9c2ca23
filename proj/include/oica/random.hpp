#pragma once

#include "oica/corela.hpp"

#include <cstdint>
#include <random>

namespace oica {

using Rng = std::mt19937_64;

/// Seed for the i-th independent stream derived from a base seed
/// (splitmix64 finalizer, so nearby bases do not give correlated streams).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

Matrix standard_normal(Index rows, Index cols, Rng& rng);

/// Unit vector drawn uniformly from the sphere in R^p.
Vector random_unit_vector(Index p, Rng& rng);

}  // namespace oica
