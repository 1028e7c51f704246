#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "memflow/common.hpp"

namespace memflow {

/// Exponential decay envelope m(s) <= c * exp(-alpha * s).
struct DecayEnvelope {
    double c = 0.0;
    double alpha = 0.0;
};

/// Catalog of memory functions m(s). Every kernel is renormalized at
/// construction so that its total mass int_0^inf m = 1; the pre-normalization
/// mass is kept for reporting. All parameters are dimensionless.
///
/// Variants:
///   SingleExponential            m(s) = e^{-s}
///   MultiModeMaxwell(eta,lambda) m(s) = sum_k eta_k / lambda_k^2 e^{-s/lambda_k}
///   DoiEdwards(lambda, K)        m(s) = 8/(pi^2 lambda) sum_{k<K} e^{-(2k+1)^2 s/lambda}
///   PowerLaw(eta,beta,lambda)    m(s) = sum_k eta_k beta_k/lambda_k (s/lambda_k)^{-(beta_k+1)},
///                                defined on s >= s_min (the algebraic form is
///                                not integrable at 0; a positive lower cutoff
///                                is part of the model specification).
class MemoryKernel {
  public:
    enum class Kind { SingleExponential, MultiModeMaxwell, DoiEdwards, PowerLaw };

    static MemoryKernel single_exponential() {
        MemoryKernel k;
        k.kind_ = Kind::SingleExponential;
        k.finish_normalization();
        return k;
    }

    static MemoryKernel multi_mode_maxwell(std::vector<double> eta,
                                           std::vector<double> lambda) {
        if (eta.empty() || eta.size() != lambda.size())
            throw InvalidParams("multi-mode Maxwell kernel needs matching, non-empty eta/lambda");
        for (std::size_t i = 0; i < eta.size(); ++i)
            if (eta[i] <= 0.0 || lambda[i] <= 0.0)
                throw InvalidParams("multi-mode Maxwell kernel needs positive eta, lambda");
        MemoryKernel k;
        k.kind_ = Kind::MultiModeMaxwell;
        k.eta_ = std::move(eta);
        k.lambda_ = std::move(lambda);
        k.finish_normalization();
        return k;
    }

    static MemoryKernel doi_edwards(double lambda, int truncation = 10000) {
        if (lambda <= 0.0 || truncation < 1)
            throw InvalidParams("Doi-Edwards kernel needs lambda > 0, truncation >= 1");
        MemoryKernel k;
        k.kind_ = Kind::DoiEdwards;
        k.lambda_ = {lambda};
        k.truncation_ = truncation;
        k.finish_normalization();
        return k;
    }

    static MemoryKernel power_law(std::vector<double> eta, std::vector<double> beta,
                                  std::vector<double> lambda, double s_min) {
        if (eta.empty() || eta.size() != beta.size() || eta.size() != lambda.size())
            throw InvalidParams("power-law kernel needs matching, non-empty eta/beta/lambda");
        for (std::size_t i = 0; i < eta.size(); ++i) {
            if (eta[i] <= 0.0 || lambda[i] <= 0.0)
                throw InvalidParams("power-law kernel needs positive eta, lambda");
            if (beta[i] <= 0.0 || beta[i] >= 1.0)
                throw InvalidParams("power-law kernel needs beta in (0,1)");
        }
        if (s_min <= 0.0)
            throw InvalidParams("power-law kernel needs a positive lower cutoff s_min");
        MemoryKernel k;
        k.kind_ = Kind::PowerLaw;
        k.eta_ = std::move(eta);
        k.beta_ = std::move(beta);
        k.lambda_ = std::move(lambda);
        k.s_min_ = s_min;
        k.finish_normalization();
        return k;
    }

    Kind kind() const { return kind_; }
    /// Mass of the raw parameterization before the unit-mass rescale.
    double pre_normalization_mass() const { return pre_mass_; }
    bool singular_at_zero() const {
        return kind_ == Kind::DoiEdwards || kind_ == Kind::PowerLaw;
    }
    /// Lowest admissible evaluation point (0 except for the power-law cutoff).
    double support_start() const { return kind_ == Kind::PowerLaw ? s_min_ : 0.0; }

    /// Pointwise value m(s). Throws SingularPoint at s = 0 for kernels that
    /// are singular there (quadrature handles that cell analytically).
    double evaluate(double s) const {
        if (s < 0.0) throw InvalidParams("memory kernel: age must be >= 0");
        if (kind_ == Kind::DoiEdwards && s == 0.0)
            throw SingularPoint("memory kernel singular at the origin; use quadrature weights");
        if (kind_ == Kind::PowerLaw && s < s_min_ * (1.0 - 1e-12))
            throw SingularPoint("power-law kernel undefined below its cutoff s_min");
        return raw(std::max(s, support_start())) / pre_mass_;
    }

    /// Tail mass int_s^inf m (normalized), in closed form.
    double tail_mass(double s) const { return raw_tail(s) / pre_mass_; }

    /// Head mass int_0^s m (normalized), in closed form; used to assign the
    /// first-cell weight of graded grids for singular kernels.
    double head_mass(double s) const { return (pre_mass_ - raw_tail(s)) / pre_mass_; }

    /// Tightest exponential envelope (c, alpha), or nullopt for kernels with
    /// only algebraic decay.
    std::optional<DecayEnvelope> decay_envelope() const {
        switch (kind_) {
            case Kind::SingleExponential:
                return DecayEnvelope{1.0, 1.0};
            case Kind::MultiModeMaxwell: {
                const double lmax = *std::max_element(lambda_.begin(), lambda_.end());
                // m(s) e^{s/lmax} is non-increasing, so c = m(0).
                return DecayEnvelope{raw(0.0) / pre_mass_, 1.0 / lmax};
            }
            case Kind::DoiEdwards: {
                // Valid for the truncated series: m(s) e^{s/lambda} peaks at 0.
                const double l = lambda_[0];
                return DecayEnvelope{raw_de_value_at_zero() / pre_mass_, 1.0 / l};
            }
            case Kind::PowerLaw:
                return std::nullopt;
        }
        return std::nullopt;
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::SingleExponential: os << "single-exponential"; break;
            case Kind::MultiModeMaxwell: os << "multi-mode-maxwell(" << eta_.size() << ")"; break;
            case Kind::DoiEdwards:
                os << "doi-edwards(lambda=" << lambda_[0] << ",K=" << truncation_ << ")";
                break;
            case Kind::PowerLaw: os << "power-law(s_min=" << s_min_ << ")"; break;
        }
        return os.str();
    }

  private:
    double raw(double s) const {
        switch (kind_) {
            case Kind::SingleExponential:
                return std::exp(-s);
            case Kind::MultiModeMaxwell: {
                double v = 0.0;
                for (std::size_t i = 0; i < eta_.size(); ++i)
                    v += eta_[i] / (lambda_[i] * lambda_[i]) * std::exp(-s / lambda_[i]);
                return v;
            }
            case Kind::DoiEdwards: {
                const double l = lambda_[0];
                double v = 0.0;
                for (int k = 0; k < truncation_; ++k) {
                    const double q = 2.0 * k + 1.0;
                    const double term = std::exp(-q * q * s / l);
                    v += term;
                    if (term < 1e-18 * v) break;  // monotone in k for s > 0
                }
                return 8.0 / (M_PI * M_PI * l) * v;
            }
            case Kind::PowerLaw: {
                double v = 0.0;
                for (std::size_t i = 0; i < eta_.size(); ++i)
                    v += eta_[i] * beta_[i] / lambda_[i] *
                         std::pow(s / lambda_[i], -(beta_[i] + 1.0));
                return v;
            }
        }
        return 0.0;
    }

    double raw_tail(double s) const {
        switch (kind_) {
            case Kind::SingleExponential:
                return std::exp(-s);
            case Kind::MultiModeMaxwell: {
                double v = 0.0;
                for (std::size_t i = 0; i < eta_.size(); ++i)
                    v += eta_[i] / lambda_[i] * std::exp(-s / lambda_[i]);
                return v;
            }
            case Kind::DoiEdwards: {
                const double l = lambda_[0];
                double v = 0.0;
                for (int k = 0; k < truncation_; ++k) {
                    const double q = 2.0 * k + 1.0;
                    const double term = std::exp(-q * q * s / l) / (q * q);
                    v += term;
                    if (term < 1e-18 * v) break;
                }
                return 8.0 / (M_PI * M_PI) * v;
            }
            case Kind::PowerLaw: {
                const double s0 = std::max(s, s_min_);
                double v = 0.0;
                for (std::size_t i = 0; i < eta_.size(); ++i)
                    v += eta_[i] * std::pow(s0 / lambda_[i], -beta_[i]);
                return v;
            }
        }
        return 0.0;
    }

    double raw_de_value_at_zero() const {
        return 8.0 / (M_PI * M_PI * lambda_[0]) * static_cast<double>(truncation_);
    }

    void finish_normalization() {
        pre_mass_ = raw_tail(support_start());
        if (!(pre_mass_ > 0.0) || !std::isfinite(pre_mass_))
            throw InvalidParams("memory kernel has non-positive or non-finite mass");
    }

    Kind kind_ = Kind::SingleExponential;
    std::vector<double> eta_, beta_, lambda_;
    int truncation_ = 0;
    double s_min_ = 0.0;
    double pre_mass_ = 1.0;
};

}  // namespace memflow
