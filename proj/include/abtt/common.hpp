// Shared basics: error types, deterministic RNG, thread-capped parallel loops.
#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace abtt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data or files. Maps to CLI exit code 2.
class ParseError : public Error {
public:
    using Error::Error;
};

// Non-convergence, undefined correlations, insufficient data. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Deterministic RNG. The variate transforms are hand-rolled so that identical
// seeds give bitwise-identical streams on every platform and standard library;
// std::*_distribution makes no such guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(state_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; one spare value cached per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n), rejection sampling (no modulo bias).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw Error("Rng::below: n must be positive");
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = state_();
        } while (x >= limit);
        return x % n;
    }

    // Independent child stream, splitmix64-style mixing.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Thread cap: ABTT_THREADS if set, else hardware concurrency.
inline unsigned max_threads() {
    if (const char* env = std::getenv("ABTT_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Fixed [begin, end) chunking, independent of the thread count, so that
// callers can merge per-chunk results in index order and stay deterministic.
inline std::vector<std::pair<Index, Index>> make_chunks(Index n, Index grain) {
    std::vector<std::pair<Index, Index>> chunks;
    if (grain < 1) grain = 1;
    for (Index b = 0; b < n; b += grain) chunks.emplace_back(b, std::min(n, b + grain));
    return chunks;
}

// Runs f(chunk_index, begin, end) over all chunks with at most max_threads()
// workers. f must only write to per-chunk storage. The first exception thrown
// by any worker is rethrown on the calling thread.
template <class F>
void parallel_chunks(const std::vector<std::pair<Index, Index>>& chunks, F&& f) {
    unsigned n_threads = std::min<unsigned>(max_threads(), static_cast<unsigned>(chunks.size()));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < chunks.size(); ++i) f(i, chunks[i].first, chunks[i].second);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= chunks.size()) return;
                try {
                    f(i, chunks[i].first, chunks[i].second);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace abtt
