#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace scls {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for replicate `stream` of a run seeded with `seed`.
/// Replicate r always sees the same stream, whichever thread executes it.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

std::vector<Eigen::Index> random_permutation(Eigen::Index n, Rng& gen);

/// n draws of {0..n-1} with replacement.
std::vector<Eigen::Index> resample_indices(Eigen::Index n, Rng& gen);

}  // namespace scls
