#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "oscloc/powersim/grid.hpp"
#include "oscloc/powersim/powerflow.hpp"

namespace oscloc::powersim {

// Classical-model equivalent: constant EMFs behind transient reactance with
// every physical bus Kron-eliminated. All quantities on the system base.
struct ReducedSystem {
    Eigen::MatrixXcd y_red;          // G x G admittance among internal nodes
    Eigen::VectorXd emf_mag;         // internal EMF magnitudes
    Eigen::VectorXd delta0;          // equilibrium internal angles, rad
    Eigen::VectorXd p_mech;          // mechanical power = Pe(delta0)
    Eigen::VectorXd gen_p_pf;        // power-flow generator outputs (consistency check)
    Eigen::VectorXd h_sys;           // inertia constants on system base, s
    Eigen::VectorXd rated_over_base; // per-unit conversion factor for damping draws
    double omega_s = 0.0;            // synchronous speed, rad/s
    std::vector<std::string> gen_names;

    Eigen::Index size() const { return emf_mag.size(); }

    // Electrical power of every machine at internal angles `delta`.
    Eigen::VectorXd electrical_power(const Eigen::VectorXd& delta) const;
};

// Converts loads to constant shunt admittances at the solved voltages, adds
// internal nodes behind x'd, eliminates all physical buses, and computes the
// internal EMFs matching the power-flow injections.
ReducedSystem reduce_network(const GridModel& grid, const PowerFlowSolution& pf);

} // namespace oscloc::powersim
