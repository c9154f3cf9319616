#pragma once

#include <cstdint>
#include <random>

namespace crnsim {

// splitmix64 finalizer; good avalanche, cheap, stateless.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent substream identified by (master seed, tag, index). Streams do
// not interact, so adding consumers or reordering updates never perturbs the
// draws seen by existing ones.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t tag,
                                   std::uint64_t index = 0) {
  const std::uint64_t s = mix64(mix64(master_seed ^ mix64(tag)) ^ mix64(index));
  return std::mt19937_64(s);
}

// Stream tags used across the simulator.
namespace stream_tag {
constexpr std::uint64_t kPlacement = 1;
constexpr std::uint64_t kChannel = 2;
constexpr std::uint64_t kController = 3;
}  // namespace stream_tag

}  // namespace crnsim
