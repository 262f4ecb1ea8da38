#pragma once

// Shared numeric utilities: complex alias, error taxonomy, seeded RNG,
// and a small deterministic parallel loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace blenderlab {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr std::uint64_t kDefaultSeed = 0xB1E2DE5ull;
inline constexpr const char* kToolVersion = "blenderlab 1.0.0";

// Operations throw; certificate-producing checks report failure in the
// certificate instead of throwing.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonConvergence : Error { using Error::Error; };
struct DegreeCapExceeded : Error { using Error::Error; };
struct Collinear : Error { using Error::Error; };
struct SumNonzero : Error { using Error::Error; };
struct PostcriticalObstruction : Error { using Error::Error; };
struct ExpansionTooWeak : Error { using Error::Error; };
struct BranchJump : Error { using Error::Error; };
struct NoAdmissibleBlock : Error { using Error::Error; };
struct OrbitBroken : Error { using Error::Error; };
struct WrongRegime : Error { using Error::Error; };
struct NoneFound : Error { using Error::Error; };
struct IndeterminacyHit : Error { using Error::Error; };
struct IndeterminacyDetected : Error { using Error::Error; };
struct SearchFailed : Error { using Error::Error; };
struct BallsOverlap : Error { using Error::Error; };

// splitmix64. Every randomized sweep in the library takes an explicit seed
// so that runs are reproducible byte for byte.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed = kDefaultSeed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }  // [0,1)
    double uniform(double a, double b) { return a + (b - a) * next_double(); }
    cplx unit() {
        double t = uniform(0.0, 2.0 * kPi);
        return {std::cos(t), std::sin(t)};
    }
    cplx in_disc(double radius) { return radius * std::sqrt(next_double()) * unit(); }
};

inline int worker_count() {
    if (const char* env = std::getenv("BLENDERLAB_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

// Index-chunked parallel loop. Each index owns its output slot, so results
// are identical for any worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    int workers = worker_count();
    if (workers <= 1 || n < 256) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + workers - 1) / std::size_t(workers);
    for (int w = 0; w < workers; ++w) {
        std::size_t lo = std::size_t(w) * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline double sq(double x) { return x * x; }

inline bool close(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol; }

// Least-squares fit y ~ a + b x.
inline std::pair<double, double> linear_fit(const std::vector<double>& xs,
                                            const std::vector<double>& ys) {
    double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) return {sy / std::max(1.0, n), 0.0};
    double b = (n * sxy - sx * sy) / denom;
    double a = (sy - b * sx) / n;
    return {a, b};
}

}  // namespace blenderlab
