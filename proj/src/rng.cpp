#include "scls/rng.hpp"

#include <algorithm>
#include <numeric>

namespace scls {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(splitmix64(stream)),
                    static_cast<std::uint32_t>(splitmix64(stream) >> 32)};
  return Rng(seq);
}

std::vector<Eigen::Index> random_permutation(Eigen::Index n, Rng& gen) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), gen);
  return order;
}

std::vector<Eigen::Index> resample_indices(Eigen::Index n, Rng& gen) {
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = pick(gen);
  return idx;
}

}  // namespace scls
