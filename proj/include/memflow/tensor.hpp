#pragma once

#include <array>
#include <cmath>
#include <cstring>

#include "memflow/common.hpp"

namespace memflow {

/// Dense d x d real tensor, d in {2, 3}, row-major storage.
///
/// Velocity-gradient convention used throughout the library:
///     (grad_u)(i,j) = d u_j / d x_i
/// With this convention the deformation tensor G evolves by right
/// multiplication, dG/dt = G * grad_u along characteristics, and the Finger
/// tensor B = G^T * G is the frame-indifferent strain carrier.
class Tensor2 {
  public:
    Tensor2() : d_(2) { a_.fill(0.0); }
    explicit Tensor2(int d) : d_(d) {
        check_dim(d);
        a_.fill(0.0);
    }

    static Tensor2 identity(int d) {
        Tensor2 t(d);
        for (int i = 0; i < d; ++i) t(i, i) = 1.0;
        return t;
    }
    /// Single-entry basis tensor E_ij.
    static Tensor2 unit(int d, int i, int j) {
        Tensor2 t(d);
        t(i, j) = 1.0;
        return t;
    }

    int dim() const { return d_; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * d_ + j)]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * d_ + j)]; }
    const double* data() const { return a_.data(); }
    double* data() { return a_.data(); }

    Tensor2 operator+(const Tensor2& o) const {
        Tensor2 r(d_);
        for (int k = 0; k < d_ * d_; ++k) r.a_[k] = a_[k] + o.a_[k];
        return r;
    }
    Tensor2 operator-(const Tensor2& o) const {
        Tensor2 r(d_);
        for (int k = 0; k < d_ * d_; ++k) r.a_[k] = a_[k] - o.a_[k];
        return r;
    }
    Tensor2 operator*(double s) const {
        Tensor2 r(d_);
        for (int k = 0; k < d_ * d_; ++k) r.a_[k] = a_[k] * s;
        return r;
    }
    Tensor2& operator+=(const Tensor2& o) {
        for (int k = 0; k < d_ * d_; ++k) a_[k] += o.a_[k];
        return *this;
    }
    Tensor2& operator*=(double s) {
        for (int k = 0; k < d_ * d_; ++k) a_[k] *= s;
        return *this;
    }

    /// Matrix product this * o.
    Tensor2 mul(const Tensor2& o) const {
        Tensor2 r(d_);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) {
                double s = 0.0;
                for (int k = 0; k < d_; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Tensor2 transpose() const {
        Tensor2 r(d_);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    double trace() const {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += (*this)(i, i);
        return s;
    }

    double det() const {
        if (d_ == 2) return a_[0] * a_[3] - a_[1] * a_[2];
        return a_[0] * (a_[4] * a_[8] - a_[5] * a_[7]) -
               a_[1] * (a_[3] * a_[8] - a_[5] * a_[6]) +
               a_[2] * (a_[3] * a_[7] - a_[4] * a_[6]);
    }

    /// Frobenius norm |A| = sqrt(Tr(A^T A)).
    double norm() const {
        double s = 0.0;
        for (int k = 0; k < d_ * d_; ++k) s += a_[k] * a_[k];
        return std::sqrt(s);
    }

    bool finite() const {
        for (int k = 0; k < d_ * d_; ++k)
            if (!std::isfinite(a_[k])) return false;
        return true;
    }

    bool symmetric(double tol = 1e-12) const {
        for (int i = 0; i < d_; ++i)
            for (int j = i + 1; j < d_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) >
                    tol * std::max(1.0, norm()))
                    return false;
        return true;
    }

    /// Inverse via adjugate. Throws SingularTensor on |det| below a
    /// scale-aware threshold (1e-12 * |A|^d).
    Tensor2 inverse() const {
        const double dt = det();
        const double scale = std::pow(norm(), d_);
        if (std::abs(dt) <= 1e-12 * std::max(scale, 1e-300))
            throw SingularTensor("tensor inverse: determinant " + std::to_string(dt) +
                                 " below singular tolerance");
        Tensor2 r(d_);
        if (d_ == 2) {
            r.a_[0] = a_[3] / dt;
            r.a_[1] = -a_[1] / dt;
            r.a_[2] = -a_[2] / dt;
            r.a_[3] = a_[0] / dt;
        } else {
            r(0, 0) = (a_[4] * a_[8] - a_[5] * a_[7]) / dt;
            r(0, 1) = (a_[2] * a_[7] - a_[1] * a_[8]) / dt;
            r(0, 2) = (a_[1] * a_[5] - a_[2] * a_[4]) / dt;
            r(1, 0) = (a_[5] * a_[6] - a_[3] * a_[8]) / dt;
            r(1, 1) = (a_[0] * a_[8] - a_[2] * a_[6]) / dt;
            r(1, 2) = (a_[2] * a_[3] - a_[0] * a_[5]) / dt;
            r(2, 0) = (a_[3] * a_[7] - a_[4] * a_[6]) / dt;
            r(2, 1) = (a_[1] * a_[6] - a_[0] * a_[7]) / dt;
            r(2, 2) = (a_[0] * a_[4] - a_[1] * a_[3]) / dt;
        }
        return r;
    }

    static void check_dim(int d) {
        if (d != 2 && d != 3) throw InvalidParams("tensor dimension must be 2 or 3");
    }

  private:
    int d_;
    std::array<double, 9> a_;
};

inline Tensor2 operator*(double s, const Tensor2& t) { return t * s; }

/// Dense d x d x d tensor (e.g. the spatial gradient of a 2-tensor field),
/// indexed (i, j, k) with i the derivative direction.
class Tensor3 {
  public:
    explicit Tensor3(int d = 2) : d_(d) { a_.fill(0.0); }
    int dim() const { return d_; }
    double& operator()(int i, int j, int k) {
        return a_[static_cast<std::size_t>((i * d_ + j) * d_ + k)];
    }
    double operator()(int i, int j, int k) const {
        return a_[static_cast<std::size_t>((i * d_ + j) * d_ + k)];
    }
    double norm() const {
        double s = 0.0;
        for (int k = 0; k < d_ * d_ * d_; ++k) s += a_[k] * a_[k];
        return std::sqrt(s);
    }
    /// Slice along the first (derivative) index.
    Tensor2 slice(int i) const {
        Tensor2 t(d_);
        for (int j = 0; j < d_; ++j)
            for (int k = 0; k < d_; ++k) t(j, k) = (*this)(i, j, k);
        return t;
    }
    void set_slice(int i, const Tensor2& t) {
        for (int j = 0; j < d_; ++j)
            for (int k = 0; k < d_; ++k) (*this)(i, j, k) = t(j, k);
    }

  private:
    int d_;
    std::array<double, 27> a_;
};

/// Dense d x d x d x d tensor indexed (i, j, k, l). Houses strain-measure
/// differentials: entry (i,j,k,l) = d S_kl / d G_ij.
class Tensor4 {
  public:
    explicit Tensor4(int d = 2) : d_(d) { a_.fill(0.0); }
    int dim() const { return d_; }
    double& operator()(int i, int j, int k, int l) {
        return a_[static_cast<std::size_t>(((i * d_ + j) * d_ + k) * d_ + l)];
    }
    double operator()(int i, int j, int k, int l) const {
        return a_[static_cast<std::size_t>(((i * d_ + j) * d_ + k) * d_ + l)];
    }

    /// Outer product (a x b)_{ijkl} = a_ij * b_kl.
    static Tensor4 outer(const Tensor2& a, const Tensor2& b) {
        Tensor4 r(a.dim());
        const int d = a.dim();
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l) r(i, j, k, l) = a(i, j) * b(k, l);
        return r;
    }

    /// Contraction over the leading pair: (A : T)_{kl} = sum_ij A_ij T_ijkl.
    Tensor2 contract_left(const Tensor2& a) const {
        Tensor2 r(d_);
        for (int k = 0; k < d_; ++k)
            for (int l = 0; l < d_; ++l) {
                double s = 0.0;
                for (int i = 0; i < d_; ++i)
                    for (int j = 0; j < d_; ++j) s += a(i, j) * (*this)(i, j, k, l);
                r(k, l) = s;
            }
        return r;
    }

  private:
    int d_;
    std::array<double, 81> a_;
};

/// Euclidean norm of a 4-tensor, |H|^2 = sum H_ijkl^2. Satisfies
/// |a x b| = |a| |b| for outer products of 2-tensors.
inline double norm4(const Tensor4& h) {
    const int d = h.dim();
    double s = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) s += h(i, j, k, l) * h(i, j, k, l);
    return std::sqrt(s);
}

/// Finger tensor B = G^T * G. Total on finite inputs; result is symmetric
/// positive semi-definite and det(B) = det(G)^2.
inline Tensor2 finger(const Tensor2& g) {
    const int d = g.dim();
    Tensor2 b(d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += g(k, i) * g(k, j);
            b(i, j) = s;
            b(j, i) = s;
        }
    return b;
}

/// Cauchy-Green tensor C = (G^T G)^{-1}. Throws SingularTensor for
/// degenerate deformations.
inline Tensor2 cauchy_green(const Tensor2& g) { return finger(g).inverse(); }

/// Strain invariants of a symmetric positive definite tensor B:
/// i1 = Tr(B), i2 = Tr(B^{-1}), det_b = det(B).
/// For det_b = 1 both invariants are >= d (AM-GM on the eigenvalues).
struct Invariants {
    double i1 = 0.0;
    double i2 = 0.0;
    double det_b = 0.0;
};

inline Invariants invariants(const Tensor2& b) {
    Invariants inv;
    inv.i1 = b.trace();
    inv.i2 = b.inverse().trace();
    inv.det_b = b.det();
    return inv;
}

/// Matrix exponential exp(t*a) by scaling-and-squaring with a Taylor series
/// on the scaled argument; relative accuracy ~1e-15 for d <= 3. Nilpotent
/// shear arguments truncate exactly; diagonal and nilpotent inputs take
/// closed-form fast paths.
inline Tensor2 tensor_exp(const Tensor2& a, double t) {
    const int d = a.dim();
    {
        bool diagonal = true, nilpotent = true;
        const Tensor2 a2 = a.mul(a);
        for (int i = 0; i < d && (diagonal || nilpotent); ++i)
            for (int j = 0; j < d; ++j) {
                if (i != j && a(i, j) != 0.0) diagonal = false;
                if (a2(i, j) != 0.0) nilpotent = false;
            }
        if (diagonal) {
            Tensor2 e(d);
            for (int i = 0; i < d; ++i) e(i, i) = std::exp(t * a(i, i));
            return e;
        }
        if (nilpotent) return Tensor2::identity(d) + a * t;
    }
    Tensor2 x = a * t;
    const double nrm = x.norm();
    if (!std::isfinite(nrm)) throw InvalidParams("tensor_exp: non-finite argument");
    int squarings = 0;
    if (nrm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
        x *= std::ldexp(1.0, -squarings);
    }
    // Taylor on |x| <= 0.5: 18 terms reach below double epsilon.
    Tensor2 result = Tensor2::identity(d);
    Tensor2 term = Tensor2::identity(d);
    for (int k = 1; k <= 18; ++k) {
        term = term.mul(x) * (1.0 / k);
        result += term;
        if (term.norm() < 1e-18 * result.norm()) break;
    }
    for (int s = 0; s < squarings; ++s) result = result.mul(result);
    return result;
}

/// Symmetrized gradient D(u) = (grad_u + grad_u^T) / 2.
inline Tensor2 sym(const Tensor2& a) { return (a + a.transpose()) * 0.5; }

}  // namespace memflow
