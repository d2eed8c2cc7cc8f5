#include "noisyal/random.h"

namespace noisyal {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t seed, StreamTag tag,
                std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  for (std::uint64_t k : keys) h = splitmix64(h ^ k);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

double uniform01(Rng& rng) {
  // 53 random mantissa bits; avoids the implementation-defined
  // std::generate_canonical rounding.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace noisyal
