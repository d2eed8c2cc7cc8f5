#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace noisyal {

using Rng = std::mt19937_64;

// Purpose tags for derived random streams. Every random decision of a run is
// drawn from a stream keyed by (seed, tag, indices), so no generator state
// has to be carried between cycles or persisted in checkpoints.
enum class StreamTag : std::uint64_t {
  kGenerate = 1,
  kNoise = 2,
  kInitialSet = 3,
  kPredictTrain = 4,
  kPredictTest = 5,
  kQuery = 6,
  kReview = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic generator for (seed, tag, keys...).
Rng make_stream(std::uint64_t seed, StreamTag tag,
                std::initializer_list<std::uint64_t> keys = {});

// Uniform double in [0, 1).
double uniform01(Rng& rng);

}  // namespace noisyal
