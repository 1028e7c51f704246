#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace memflow {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A tensor (or the Finger tensor derived from it) is numerically singular.
struct SingularTensor : Error { using Error::Error; };
/// Pointwise kernel evaluation requested at a point where the kernel is singular.
struct SingularPoint : Error { using Error::Error; };
/// Sample vector length does not match the age grid.
struct GridMismatch : Error { using Error::Error; };
/// Kernel tail cannot be truncated to the requested tolerance within the age cap.
struct NoDecay : Error { using Error::Error; };
/// Age grid cannot satisfy the requested quadrature tolerance.
struct AgeGridTolerance : Error { using Error::Error; };
/// Wagner-type radicand went negative beyond tolerance (non-physical input).
struct NegativeRadicand : Error { using Error::Error; };
/// A proven bound was violated: indicates an implementation bug in the caller's setup.
struct BoundViolated : Error { using Error::Error; };
/// Time step violates the configured CFL limit.
struct CflViolation : Error { using Error::Error; };
/// An inner linear solve hit its iteration cap or broke down.
struct LinearSolveFailure : Error { using Error::Error; };
/// Geometry incompatible with the requested operation.
struct GeometryUnsupported : Error { using Error::Error; };
/// Scenario configuration is invalid; message names the offending field/line.
struct ConfigError : Error { using Error::Error; };
/// Compared series do not share a schema (columns / lengths).
struct SchemaMismatch : Error { using Error::Error; };
/// Parameters outside the range supported by a solver.
struct InvalidParams : Error { using Error::Error; };

// ---------------------------------------------------------------------------

/// FNV-1a 64-bit hash, used for manifest checksums.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Deterministic chunked parallel loop. Chunk boundaries depend only on
/// (n, threads), so results are identical for any thread count as long as
/// the body writes disjoint indices. The first worker exception is rethrown
/// on the calling thread.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    if (threads <= 1 || n < 2048) {
        body(0, n);
        return;
    }
    const std::size_t nt = static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            try {
                body(b, e);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline bool nearly_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace memflow
