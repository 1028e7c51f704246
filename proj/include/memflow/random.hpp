#pragma once

#include <random>

#include "memflow/tensor.hpp"

namespace memflow {

using Rng = std::mt19937_64;

/// Random rotation: uniform angle for d = 2, axis-angle from a normalized
/// Gaussian quaternion for d = 3.
inline Tensor2 random_rotation(Rng& rng, int d) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Tensor2 q(d);
    if (d == 2) {
        std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
        const double th = uni(rng);
        q(0, 0) = std::cos(th);
        q(0, 1) = -std::sin(th);
        q(1, 0) = std::sin(th);
        q(1, 1) = std::cos(th);
        return q;
    }
    double w = gauss(rng), x = gauss(rng), y = gauss(rng), z = gauss(rng);
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    w /= n; x /= n; y /= n; z /= n;
    q(0, 0) = 1 - 2 * (y * y + z * z);
    q(0, 1) = 2 * (x * y - z * w);
    q(0, 2) = 2 * (x * z + y * w);
    q(1, 0) = 2 * (x * y + z * w);
    q(1, 1) = 1 - 2 * (x * x + z * z);
    q(1, 2) = 2 * (y * z - x * w);
    q(2, 0) = 2 * (x * z - y * w);
    q(2, 1) = 2 * (y * z + x * w);
    q(2, 2) = 1 - 2 * (x * x + y * y);
    return q;
}

/// Random tensor with det = 1: Gaussian entries rescaled by det^{1/d}
/// (d = 2 resamples until det > 0).
inline Tensor2 random_det1(Rng& rng, int d) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int attempt = 0; attempt < 256; ++attempt) {
        Tensor2 g(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) g(i, j) = gauss(rng);
        const double dt = g.det();
        if (std::abs(dt) < 1e-3) continue;
        if (d == 2 && dt < 0.0) {
            for (int j = 0; j < d; ++j) std::swap(g(0, j), g(1, j));
        }
        const double c = (d == 2) ? std::sqrt(std::abs(g.det()))
                                  : std::cbrt(g.det());
        return g * (1.0 / c);
    }
    throw Error("random_det1: resampling failed");
}

/// Random det-1 tensor with Frobenius norm close to `target` (target must
/// allow det = 1, i.e. target >= sqrt(d)): Q1 * diag * Q2 with a stretched
/// det-1 diagonal.
inline Tensor2 random_det1_with_norm(Rng& rng, int d, double target) {
    const double tmin = std::sqrt(static_cast<double>(d)) * (1.0 + 1e-9);
    target = std::max(target, tmin);
    Tensor2 diag(d);
    if (d == 2) {
        // a^2 + 1/a^2 = target^2
        const double t2 = target * target;
        const double a = std::sqrt(0.5 * (t2 + std::sqrt(t2 * t2 - 4.0)));
        diag(0, 0) = a;
        diag(1, 1) = 1.0 / a;
    } else {
        // diag(a, b, 1/(ab)) with random middle stretch; bisect a for the norm.
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        const double bexp = uni(rng);
        auto norm_of = [&](double a) {
            const double b = std::pow(a, 0.3 * bexp);
            const double c = 1.0 / (a * b);
            return std::sqrt(a * a + b * b + c * c);
        };
        double lo = 1.0, hi = 2.0;
        while (norm_of(hi) < target && hi < 1e12) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (norm_of(mid) < target ? lo : hi) = mid;
        }
        const double a = 0.5 * (lo + hi);
        const double b = std::pow(a, 0.3 * bexp);
        diag(0, 0) = a;
        diag(1, 1) = b;
        diag(2, 2) = 1.0 / (a * b);
    }
    return random_rotation(rng, d).mul(diag).mul(random_rotation(rng, d));
}

/// Random symmetric positive definite tensor with det = 1.
inline Tensor2 random_spd_det1(Rng& rng, int d) {
    const Tensor2 g = random_det1(rng, d);
    return finger(g);
}

}  // namespace memflow
