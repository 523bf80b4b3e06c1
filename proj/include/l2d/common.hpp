#pragma once

// Shared plumbing: error types, deterministic RNG streams, stable numerics,
// and the fixed text formatting used by every artifact we write to disk.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace l2d {

struct invalid_input : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_parameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_config : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct training_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class E = invalid_input>
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw E(msg);
}

inline void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw invalid_input(std::string(what) + ": non-finite entry");
}

// --- deterministic randomness ------------------------------------------------
//
// All sampling is driven by explicit 64-bit seeds.  Independent work items get
// independent streams derived with splitmix64 so results do not depend on
// iteration or thread order.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x51ed270b7a646463ull));
}

using rng_t = std::mt19937_64;

inline rng_t make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return rng_t(derive_seed(seed, stream));
}

// Uniform in [0,1) with 53 random bits; avoids distribution objects so the
// byte stream of every artifact is a pure function of the seed.
inline double uniform01(rng_t& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_in(rng_t& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

inline int uniform_int(rng_t& g, int lo, int hi) {  // inclusive bounds
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(static_cast<std::uint64_t>(
               (static_cast<unsigned __int128>(g()) * span) >> 64));
}

inline double gaussian(rng_t& g) {  // Box-Muller, one value per call pair
    double u1 = uniform01(g);
    double u2 = uniform01(g);
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Inverse-CDF draw from a probability row (assumed to sum to 1).
inline int pick_from_probs(rng_t& g, std::span<const double> p) {
    double u = uniform01(g);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
}

// --- numerics ----------------------------------------------------------------

inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline void softmax_into(std::span<const double> v, std::vector<double>& out) {
    out.resize(v.size());
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        s += out[i];
    }
    for (double& x : out) x /= s;
}

inline std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out;
    softmax_into(v, out);
    return out;
}

// --- output formatting ---------------------------------------------------------
//
// One formatting routine for every number we emit, so identical runs produce
// byte-identical CSV/JSON artifacts.

inline std::string fmt_double(double x) {
    if (x == 0.0) x = 0.0;  // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

// --- deterministic parallelism ---------------------------------------------------
//
// Runs fn(i) for i in [0, count). Each index is processed exactly once and any
// result must be written to a slot owned by that index, so the outcome is
// identical for every thread count.

template <class Fn>
inline void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex err_mutex;
    std::exception_ptr first_error;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace l2d
