#pragma once

#include <map>
#include <string>

namespace memflow {

struct BundledScenario {
    std::string description;
    std::string text;
};

/// Built-in scenario configurations (also shipped as files under configs/).
inline const std::map<std::string, BundledScenario>& bundled_scenarios() {
    static const std::map<std::string, BundledScenario> table = {
        {"quiescent_box",
         {"homogeneous box at rest; all-zero stress trajectory",
          R"cfg([run]
scenario = quiescent_box
mode = unsteady

[fluid]
re = 0
we = 1
omega = 0.5

[kernel]
variant = single_exponential

[measure]
variant = ucm

[age_grid]
tail_tol = 1e-8
quad_tol = 5e-4
spacing = uniform
ds = 0.05

[geometry]
kind = homogeneous

[kinematics]
type = shear
rate = 0

[time]
dt = 0.05
t_end = 2
cfl = 1.0
)cfg"}},
        {"startup_shear_ucm",
         {"homogeneous startup shear, UCM + exponential kernel; matches "
          "omega*gd*(1-exp(-t/We))",
          R"cfg([run]
scenario = startup_shear_ucm
mode = unsteady

[fluid]
re = 0
we = 1
omega = 0.5

[kernel]
variant = single_exponential

[measure]
variant = ucm

[age_grid]
tail_tol = 1e-8
quad_tol = 1e-6
spacing = uniform
ds = 0.001

[geometry]
kind = homogeneous

[kinematics]
type = shear
rate = 1

[time]
dt = 0.001
t_end = 2
cfl = 1.0
)cfg"}},
        {"startup_shear_lcm",
         {"homogeneous startup shear, LCM + exponential kernel",
          R"cfg([run]
scenario = startup_shear_lcm
mode = unsteady

[fluid]
re = 0
we = 1
omega = 0.5

[kernel]
variant = single_exponential

[measure]
variant = lcm

[age_grid]
tail_tol = 1e-8
quad_tol = 1e-6
spacing = uniform
ds = 0.001

[geometry]
kind = homogeneous

[kinematics]
type = shear
rate = 1

[time]
dt = 0.001
t_end = 2
cfl = 1.0
)cfg"}},
        {"couette_startup_ucm",
         {"wall-driven Couette startup at Re = 0 on the MAC grid; wall stress "
          "follows the startup-shear curve",
          R"cfg([run]
scenario = couette_startup_ucm
mode = unsteady

[fluid]
re = 0
we = 1
omega = 0.5

[kernel]
variant = single_exponential

[measure]
variant = ucm

[age_grid]
tail_tol = 1e-8
quad_tol = 1e-4
spacing = uniform
ds = 0.01

[geometry]
kind = couette
nx = 3
ny = 12

[forcing]
wall_speed = 1

[time]
dt = 0.01
t_end = 2
cfl = 1.0
)cfg"}},
        {"poiseuille_newtonian",
         {"Newtonian-limit channel startup (omega = 0)",
          R"cfg([run]
scenario = poiseuille_newtonian
mode = unsteady

[fluid]
re = 1
we = 1
omega = 0

[kernel]
variant = single_exponential

[measure]
variant = ucm

[age_grid]
tail_tol = 1e-6
quad_tol = 1e-3
spacing = uniform
ds = 0.02

[geometry]
kind = poiseuille
nx = 8
ny = 16

[forcing]
fx = 1

[time]
dt = 0.02
t_end = 1
cfl = 1.0
)cfg"}},
        {"channel_det_transport",
         {"perturbed 2D channel run probing determinant transport over 1000 steps",
          R"cfg([run]
scenario = channel_det_transport
mode = unsteady
seed = 3

[fluid]
re = 1
we = 1
omega = 0.2

[kernel]
variant = single_exponential

[measure]
variant = ucm

[age_grid]
tail_tol = 1e-6
quad_tol = 1e-3
spacing = uniform
ds = 0.06

[geometry]
kind = poiseuille
nx = 12
ny = 18

[forcing]
fx = 0.2
perturb_amp = 0.02
perturb_kx = 1

[time]
dt = 0.06
t_end = 60
cfl = 1.0
)cfg"}},
        {"doi_edwards_shear",
         {"homogeneous startup shear with the Doi-Edwards kernel and Currie measure",
          R"cfg([run]
scenario = doi_edwards_shear
mode = unsteady

[fluid]
re = 0
we = 1
omega = 0.5

[kernel]
variant = doi_edwards
lambda = 1
truncation = 10000

[measure]
variant = currie

[geometry]
kind = homogeneous
d = 3

[kinematics]
type = shear
rate = 1

[age_grid]
tail_tol = 1e-8
quad_tol = 1e-6
spacing = graded

[time]
dt = 0.01
t_end = 2
cfl = 1.0
)cfg"}},
        {"stationary_poiseuille_ucm",
         {"stationary Poiseuille fixed point, UCM + exponential kernel, small forcing",
          R"cfg([run]
scenario = stationary_poiseuille_ucm
mode = stationary

[fluid]
re = 1
we = 1
omega = 0.1

[kernel]
variant = single_exponential

[measure]
variant = ucm

[age_grid]
tail_tol = 1e-10
quad_tol = 1e-6

[geometry]
kind = poiseuille

[stationary]
ny = 64
height = 1
fx = 0.1
tol = 1e-8
max_iters = 30
)cfg"}},
    };
    return table;
}

}  // namespace memflow
