#include "conetest/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace conetest {

int resolve_threads(int requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CONETEST_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
            // fall through to the hardware default
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * keys.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : keys) push(k);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

std::vector<std::uint64_t> tally_chunks(
    std::uint64_t nsim, std::size_t width, int threads,
    const std::function<void(std::uint64_t, std::uint64_t, std::vector<std::uint64_t>&)>& body)
{
    const std::uint64_t chunks = (nsim + kChunkSize - 1) / kChunkSize;
    const int workers = static_cast<int>(std::min<std::uint64_t>(
        static_cast<std::uint64_t>(resolve_threads(threads)), std::max<std::uint64_t>(chunks, 1)));

    std::vector<std::uint64_t> total(width, 0);
    std::atomic<std::uint64_t> next{0};
    std::mutex merge;
    std::exception_ptr failure;

    auto work = [&] {
        std::vector<std::uint64_t> local(width, 0);
        try {
            for (std::uint64_t c = next++; c < chunks; c = next++) {
                const std::uint64_t count = std::min(kChunkSize, nsim - c * kChunkSize);
                body(c, count, local);
            }
        } catch (...) {
            const std::lock_guard lock(merge);
            if (!failure) failure = std::current_exception();
            next = chunks;
        }
        const std::lock_guard lock(merge);
        for (std::size_t i = 0; i < width; ++i) total[i] += local[i];
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return total;
}

} // namespace conetest
