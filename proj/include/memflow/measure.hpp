#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "memflow/random.hpp"
#include "memflow/tensor.hpp"

namespace memflow {

/// Polynomial growth declaration |S(G)| <= c |G|^a, |S'(G)| <= c |G|^b.
struct GrowthBounds {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// Scalar coefficient of the strain invariants, used by the K-BKZ family.
using InvariantFn = std::function<double(double i1, double i2)>;

/// How finite-difference derivatives perturb G.
enum class FdMode {
    Unconstrained,   ///< plain central differences in every entry direction
    DetManifold,     ///< perturbations projected onto the det-preserving tangent
};

/// Catalog of strain measures S(G). All variants depend on G only through
/// the Finger tensor B = G^T G and the Cauchy-Green tensor C = B^{-1}:
///   UCM            S = B - I
///   LCM            S = I - C
///   KBKZ(f1,f2)    S = f1(I1,I2) (B - I) + f2(I1,I2) (I - C)
///   PSM(a,b)       S = a / (a + b I1 + (1-b) I2 - 3) * B
///   PSMNorm        S = B / (1 + Tr B)        (|S| <= 1, |G||S'| <= 2(1+sqrt d))
///   Wagner(a,b)    S = exp(-a sqrt(b I1 + (1-b) I2 - 3)) * B
///   Currie         S = 4/(3(J-1)) B - 4/(3(J-1) sqrt(I2+3.25)) C,
///                  J = I1 + 2 sqrt(I2 + 3.25)
class StrainMeasure {
  public:
    enum class Kind { UCM, LCM, KBKZ, PSM, PSMNorm, Wagner, Currie };

    static StrainMeasure ucm() {
        StrainMeasure m(Kind::UCM);
        m.growth_ = GrowthBounds{2.0, 1.0, 3.0};
        return m;
    }
    static StrainMeasure lcm() { return StrainMeasure(Kind::LCM); }
    static StrainMeasure kbkz(InvariantFn phi1, InvariantFn phi2, std::string label = "kbkz") {
        StrainMeasure m(Kind::KBKZ);
        m.phi1_ = std::move(phi1);
        m.phi2_ = std::move(phi2);
        m.label_ = std::move(label);
        return m;
    }
    static StrainMeasure psm(double alpha, double beta) {
        if (alpha <= 0.0 || beta < 0.0 || beta > 1.0)
            throw InvalidParams("PSM needs alpha > 0 and beta in [0,1]");
        StrainMeasure m(Kind::PSM);
        m.alpha_ = alpha;
        m.beta_ = beta;
        return m;
    }
    static StrainMeasure psm_norm(int d_hint = 3) {
        StrainMeasure m(Kind::PSMNorm);
        m.growth_ = GrowthBounds{0.0, -1.0, 2.0 * (1.0 + std::sqrt(static_cast<double>(d_hint)))};
        return m;
    }
    static StrainMeasure wagner(double alpha, double beta) {
        if (beta < 0.0 || beta > 1.0) throw InvalidParams("Wagner needs beta in [0,1]");
        StrainMeasure m(Kind::Wagner);
        m.alpha_ = alpha;
        m.beta_ = beta;
        return m;
    }
    static StrainMeasure currie() { return StrainMeasure(Kind::Currie); }

    Kind kind() const { return kind_; }
    const std::optional<GrowthBounds>& growth() const { return growth_; }
    void set_growth(GrowthBounds g) { growth_ = g; }
    const std::string& label() const { return label_; }

    /// Evaluate S(G).
    Tensor2 evaluate(const Tensor2& g) const {
        const int d = g.dim();
        if (d == 2) {
            // Unrolled planar fast paths for the measures driven per age node
            // inside the stress quadrature.
            const double g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
            const double b00 = g00 * g00 + g10 * g10;
            const double b01 = g00 * g01 + g10 * g11;
            const double b11 = g01 * g01 + g11 * g11;
            Tensor2 s(2);
            switch (kind_) {
                case Kind::UCM:
                    s(0, 0) = b00 - 1.0;
                    s(0, 1) = s(1, 0) = b01;
                    s(1, 1) = b11 - 1.0;
                    return s;
                case Kind::LCM: {
                    const double det = b00 * b11 - b01 * b01;
                    const double scale = b00 + b11;
                    if (std::abs(det) <= 1e-12 * scale * scale) break;  // generic error path
                    s(0, 0) = 1.0 - b11 / det;
                    s(0, 1) = s(1, 0) = b01 / det;
                    s(1, 1) = 1.0 - b00 / det;
                    return s;
                }
                case Kind::PSMNorm: {
                    const double inv = 1.0 / (1.0 + b00 + b11);
                    s(0, 0) = b00 * inv;
                    s(0, 1) = s(1, 0) = b01 * inv;
                    s(1, 1) = b11 * inv;
                    return s;
                }
                default:
                    break;
            }
        }
        const Tensor2 b = finger(g);
        switch (kind_) {
            case Kind::UCM:
                return b - Tensor2::identity(d);
            case Kind::LCM:
                return Tensor2::identity(d) - b.inverse();
            case Kind::KBKZ: {
                const Invariants inv = invariants(b);
                const Tensor2 id = Tensor2::identity(d);
                Tensor2 s = (b - id) * phi1_(inv.i1, inv.i2);
                s += (id - b.inverse()) * phi2_(inv.i1, inv.i2);
                return s;
            }
            case Kind::PSM: {
                const Invariants inv = invariants(b);
                const double h =
                    alpha_ / (alpha_ + beta_ * inv.i1 + (1.0 - beta_) * inv.i2 - 3.0);
                return b * h;
            }
            case Kind::PSMNorm:
                return b * (1.0 / (1.0 + b.trace()));
            case Kind::Wagner: {
                const Invariants inv = invariants(b);
                double radicand = beta_ * inv.i1 + (1.0 - beta_) * inv.i2 - 3.0;
                if (radicand < -kRadicandTol)
                    throw NegativeRadicand("Wagner radicand " + std::to_string(radicand) +
                                           " is negative (non-physical Finger tensor)");
                radicand = std::max(radicand, 0.0);
                return b * std::exp(-alpha_ * std::sqrt(radicand));
            }
            case Kind::Currie: {
                const Tensor2 c = b.inverse();
                const Invariants inv{b.trace(), c.trace(), b.det()};
                const double root = std::sqrt(inv.i2 + 3.25);
                const double j = inv.i1 + 2.0 * root;
                return b * (4.0 / (3.0 * (j - 1.0))) - c * (4.0 / (3.0 * (j - 1.0) * root));
            }
        }
        return Tensor2(d);
    }

    /// Differential S'(G): entry (i,j,k,l) = d S_kl / d G_ij.
    /// Closed form for UCM, LCM and the normalized PSM; central finite
    /// differences for the remaining variants.
    Tensor4 derivative(const Tensor2& g, FdMode fd_mode = FdMode::Unconstrained) const {
        const int d = g.dim();
        switch (kind_) {
            case Kind::UCM:
                return ucm_derivative(g);
            case Kind::LCM: {
                // dC_kl/dG_ij = -[C_kj (GC)_il + (GC)_ik C_jl]; S = I - C.
                const Tensor2 c = cauchy_green(g);
                const Tensor2 gc = g.mul(c);
                Tensor4 r(d);
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        for (int k = 0; k < d; ++k)
                            for (int l = 0; l < d; ++l)
                                r(i, j, k, l) = c(k, j) * gc(i, l) + gc(i, k) * c(j, l);
                return r;
            }
            case Kind::PSMNorm: {
                const Tensor2 b = finger(g);
                const double den = 1.0 + b.trace();
                Tensor4 r(d);
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        for (int k = 0; k < d; ++k)
                            for (int l = 0; l < d; ++l) {
                                const double dkj = (k == j) ? 1.0 : 0.0;
                                const double dlj = (l == j) ? 1.0 : 0.0;
                                r(i, j, k, l) = (dkj * g(i, l) + dlj * g(i, k)) / den -
                                                2.0 * g(i, j) * b(k, l) / (den * den);
                            }
                return r;
            }
            default:
                return fd_derivative(g, fd_mode);
        }
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::UCM: os << "ucm"; break;
            case Kind::LCM: os << "lcm"; break;
            case Kind::KBKZ: os << label_; break;
            case Kind::PSM: os << "psm(alpha=" << alpha_ << ",beta=" << beta_ << ")"; break;
            case Kind::PSMNorm: os << "psm-norm"; break;
            case Kind::Wagner: os << "wagner(alpha=" << alpha_ << ",beta=" << beta_ << ")"; break;
            case Kind::Currie: os << "currie"; break;
        }
        return os.str();
    }

    /// True when evaluation needs the inverse Finger tensor.
    bool needs_inverse() const {
        return kind_ == Kind::LCM || kind_ == Kind::KBKZ || kind_ == Kind::Currie;
    }

    static constexpr double kRadicandTol = 1e-9;
    static constexpr double kFdStep = 1e-5;

  private:
    explicit StrainMeasure(Kind k) : kind_(k) {}

    static Tensor4 ucm_derivative(const Tensor2& g) {
        // dB_kl/dG_ij = delta_kj G_il + delta_lj G_ik.
        const int d = g.dim();
        Tensor4 r(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l) {
                        const double dkj = (k == j) ? 1.0 : 0.0;
                        const double dlj = (l == j) ? 1.0 : 0.0;
                        r(i, j, k, l) = dkj * g(i, l) + dlj * g(i, k);
                    }
        return r;
    }

    Tensor4 fd_derivative(const Tensor2& g, FdMode mode) const {
        const int d = g.dim();
        const double h = kFdStep * std::max(1.0, g.norm());
        Tensor4 r(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Tensor2 dir = Tensor2::unit(d, i, j);
                if (mode == FdMode::DetManifold) {
                    // Project onto the tangent of {det = const}: remove the
                    // component along the cofactor direction d(det)/dG.
                    const Tensor2 cof = g.inverse().transpose() * g.det();
                    double dot = 0.0, nn = 0.0;
                    for (int p = 0; p < d; ++p)
                        for (int q = 0; q < d; ++q) {
                            dot += dir(p, q) * cof(p, q);
                            nn += cof(p, q) * cof(p, q);
                        }
                    if (nn > 0.0) dir = dir - cof * (dot / nn);
                    const double dn = dir.norm();
                    if (dn < 1e-14) continue;  // direction entirely normal to the manifold
                }
                const Tensor2 sp = evaluate(g + dir * h);
                const Tensor2 sm = evaluate(g - dir * h);
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l)
                        r(i, j, k, l) = (sp(k, l) - sm(k, l)) / (2.0 * h);
            }
        return r;
    }

    Kind kind_;
    double alpha_ = 0.0;
    double beta_ = 0.0;
    InvariantFn phi1_, phi2_;
    std::optional<GrowthBounds> growth_;
    std::string label_;
};

/// Outcome of a growth-bound sampling run.
struct GrowthReport {
    bool passed = true;
    double worst_value_ratio = 0.0;       ///< max |S| / (c |G|^a)
    double worst_derivative_ratio = 0.0;  ///< max |S'| / (c |G|^b)
    Tensor2 witness;
    std::size_t samples = 0;
};

/// Sample random det-1 tensors with log-spaced norms in [lo, hi] (clamped to
/// the det-1 floor sqrt(d)) and check the declared polynomial growth bounds.
/// Throws BoundViolated with the witnessing tensor on failure.
inline GrowthReport growth_bounds_check(const StrainMeasure& measure, std::size_t samples,
                                        int d, std::uint64_t seed = 1234,
                                        double lo = 1e-2, double hi = 1e3,
                                        FdMode fd_mode = FdMode::Unconstrained) {
    if (!measure.growth())
        throw InvalidParams("growth_bounds_check: measure has no declared growth bounds");
    const GrowthBounds gb = *measure.growth();
    Rng rng(seed);
    GrowthReport rep;
    rep.witness = Tensor2::identity(d);
    for (std::size_t n = 0; n < samples; ++n) {
        const double t = static_cast<double>(n) / std::max<std::size_t>(1, samples - 1);
        const double target = lo * std::pow(hi / lo, t);
        const Tensor2 g = random_det1_with_norm(rng, d, target);
        const double gn = g.norm();
        const double vr = measure.evaluate(g).norm() / (gb.c * std::pow(gn, gb.a));
        const double dr = norm4(measure.derivative(g, fd_mode)) / (gb.c * std::pow(gn, gb.b));
        if (vr > rep.worst_value_ratio) {
            rep.worst_value_ratio = vr;
            if (vr > 1.0) rep.witness = g;
        }
        if (dr > rep.worst_derivative_ratio) {
            rep.worst_derivative_ratio = dr;
            if (dr > 1.0) rep.witness = g;
        }
    }
    rep.samples = samples;
    rep.passed = rep.worst_value_ratio <= 1.0 && rep.worst_derivative_ratio <= 1.0;
    if (!rep.passed)
        throw BoundViolated("growth bound violated: value ratio " +
                            std::to_string(rep.worst_value_ratio) + ", derivative ratio " +
                            std::to_string(rep.worst_derivative_ratio));
    return rep;
}

/// Named scalar coefficient functions admissible in scenario configs:
///   "const:<c>"                         constant
///   "rational:n0,n1,n2/d0,d1,d2"        (n0 + n1 I1 + n2 I2) / (d0 + d1 I1 + d2 I2)
inline InvariantFn make_invariant_fn(const std::string& spec) {
    if (spec.rfind("const:", 0) == 0) {
        const double c = std::stod(spec.substr(6));
        return [c](double, double) { return c; };
    }
    if (spec.rfind("rational:", 0) == 0) {
        const std::string body = spec.substr(9);
        const auto slash = body.find('/');
        if (slash == std::string::npos)
            throw ConfigError("rational coefficient needs 'num/den': " + spec);
        auto parse3 = [&](const std::string& s) {
            std::array<double, 3> c{};
            std::istringstream is(s);
            std::string tok;
            for (int i = 0; i < 3; ++i) {
                if (!std::getline(is, tok, ','))
                    throw ConfigError("rational coefficient needs 3 numbers: " + spec);
                c[static_cast<std::size_t>(i)] = std::stod(tok);
            }
            return c;
        };
        const auto n = parse3(body.substr(0, slash));
        const auto d = parse3(body.substr(slash + 1));
        return [n, d](double i1, double i2) {
            return (n[0] + n[1] * i1 + n[2] * i2) / (d[0] + d[1] * i1 + d[2] * i2);
        };
    }
    throw ConfigError("unknown invariant coefficient spec: " + spec);
}

}  // namespace memflow
