#pragma once

#include <Eigen/Dense>

#include "oscloc/powersim/reduction.hpp"

namespace oscloc::powersim {

// Sinusoidal mechanical-power injection k sin(2 pi f t) on one generator.
struct DisturbanceSpec {
    int target_generator = -1;   // index into the reduced system; -1 = none
    double amplitude_k = 0.0;    // pu on system base
    double frequency_f = 0.0;    // Hz
    double start_time = 0.0;     // s

    void validate(Eigen::Index n_generators) const;
};

struct SimOptions {
    double internal_step = 0.005;        // RK4 step, s; shrunk to divide the sample interval
    Eigen::VectorXd initial_angle_offset;  // added to the equilibrium angles (empty = none)
    Eigen::VectorXd initial_speed;         // initial speed deviations, rad/s (empty = zero)
};

struct SimulationTrace {
    Eigen::VectorXd time;        // sample instants, s
    Eigen::MatrixXd delta_coi;   // samples x G rotor angles, center-of-inertia frame, rad
    Eigen::MatrixXd pe;          // samples x G electrical power, pu
    bool stable = true;          // false: state diverged, scenario should be redrawn
};

// Integrates the classical swing equations
//   d delta_i/dt = w_i
//   (2 H_i / w_s) dw_i/dt = Pm_i + dP_i(t) - Pe_i(delta) - D_i w_i / w_s
// with fixed-step RK4, starting from the reduced-system equilibrium (plus the
// optional test offsets). Output is resampled to `sample_rate` over
// [0, duration) and angles are re-referenced to the center of inertia.
// `damping` is per generator on each machine's rated base.
SimulationTrace integrate(const ReducedSystem& system, const DisturbanceSpec& disturbance,
                          const Eigen::VectorXd& damping, double duration, double sample_rate,
                          const SimOptions& options = {});

} // namespace oscloc::powersim
