#pragma once
// Deterministic Monte Carlo plumbing: fixed-size chunks, one seeded stream
// per chunk, integer tallies merged by summation.

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

namespace conetest {

inline constexpr std::uint64_t kChunkSize = 4096;

/// Worker count: explicit value if > 0, else $CONETEST_THREADS, else
/// hardware concurrency (at least 1).
int resolve_threads(int requested);

/// Generator for the stream keyed by (seed, keys...). Same key, same draws.
std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// Runs body(chunk_index, draws_in_chunk, tally) for every chunk of nsim
/// draws and returns the elementwise sum of the tallies (each of length
/// width). The result is independent of the thread count.
std::vector<std::uint64_t> tally_chunks(
    std::uint64_t nsim, std::size_t width, int threads,
    const std::function<void(std::uint64_t chunk, std::uint64_t count, std::vector<std::uint64_t>& tally)>& body);

} // namespace conetest
