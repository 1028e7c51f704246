#pragma once

#include <memory>
#include <vector>

#include "memflow/age_grid.hpp"
#include "memflow/tensor.hpp"

namespace memflow {

/// Spatial support of a deformation field: either a single homogeneous cell
/// (0-dimensional kinematics) or a 2D channel of cell centers, periodic in x
/// with walls at y = 0 and y = ly.
struct SpatialLayout {
    enum class Kind { Homogeneous, Channel2D } kind = Kind::Homogeneous;
    int nx = 1, ny = 1;
    double lx = 1.0, ly = 1.0;

    static SpatialLayout homogeneous() { return {}; }
    static SpatialLayout channel(int nx, int ny, double lx, double ly) {
        if (nx < 1 || ny < 1 || lx <= 0.0 || ly <= 0.0)
            throw InvalidParams("channel layout needs positive extents");
        SpatialLayout l;
        l.kind = Kind::Channel2D;
        l.nx = nx;
        l.ny = ny;
        l.lx = lx;
        l.ly = ly;
        return l;
    }

    std::size_t cells() const {
        return kind == Kind::Homogeneous ? 1u
                                         : static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    }
    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    double cell_x(int i) const { return (i + 0.5) * hx(); }
    double cell_y(int j) const { return (j + 0.5) * hy(); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(i);
    }
    double area() const { return kind == Kind::Homogeneous ? 1.0 : lx * ly; }
};

/// The discretized two-time deformation field G(s_i, x_j) together with its
/// age grid and Weissenberg number.
///
/// Invariants maintained by the transport step:
///   - G at age node 0 is the identity at every cell (boundary condition),
///     reset bit-exactly after every step;
///   - det G stays within det_drift_tol of 1 under divergence-free transport
///     (monitored, optionally renormalized).
class DeformationField {
  public:
    DeformationField(SpatialLayout layout, std::shared_ptr<const AgeGrid> grid, double we,
                     int d = 2)
        : layout_(layout), grid_(std::move(grid)), we_(we), d_(d) {
        if (we_ <= 0.0) throw InvalidParams("Weissenberg number must be positive");
        Tensor2::check_dim(d);
        values_.assign(grid_->size() * layout_.cells(), Tensor2::identity(d));
    }

    const SpatialLayout& layout() const { return layout_; }
    const AgeGrid& grid() const { return *grid_; }
    std::shared_ptr<const AgeGrid> grid_ptr() const { return grid_; }
    double we() const { return we_; }
    int dim() const { return d_; }
    std::size_t ages() const { return grid_->size(); }
    std::size_t cells() const { return layout_.cells(); }

    Tensor2& at(std::size_t age, std::size_t cell) {
        return values_[age * cells() + cell];
    }
    const Tensor2& at(std::size_t age, std::size_t cell) const {
        return values_[age * cells() + cell];
    }
    std::vector<Tensor2>& raw() { return values_; }
    const std::vector<Tensor2>& raw() const { return values_; }

    /// Populate every (age, cell) from a function of the age only.
    void fill_from_age(const std::function<Tensor2(double s)>& g_old) {
        for (std::size_t a = 0; a < ages(); ++a) {
            const Tensor2 g = g_old(grid_->nodes[a]);
            for (std::size_t c = 0; c < cells(); ++c) at(a, c) = g;
        }
        reset_boundary();
    }

    /// Enforce G = identity at age node 0, bit-exactly.
    void reset_boundary() {
        const Tensor2 id = Tensor2::identity(d_);
        for (std::size_t c = 0; c < cells(); ++c) at(0, c) = id;
    }

    double max_det_drift() const {
        double m = 0.0;
        for (const auto& g : values_) m = std::max(m, std::abs(g.det() - 1.0));
        return m;
    }

    /// Project every tensor back onto det = 1 (optional drift control).
    void renormalize_det() {
        for (auto& g : values_) {
            const double dt = g.det();
            if (dt > 0.0) g *= std::pow(dt, -1.0 / d_);
        }
    }

  private:
    SpatialLayout layout_;
    std::shared_ptr<const AgeGrid> grid_;
    double we_;
    int d_;
    std::vector<Tensor2> values_;
};

}  // namespace memflow
