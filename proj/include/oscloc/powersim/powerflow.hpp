#pragma once

#include <Eigen/Dense>

#include "oscloc/powersim/grid.hpp"

namespace oscloc::powersim {

struct PowerFlowSolution {
    bool converged = false;            // false = infeasible load condition (redraw)
    int iterations = 0;
    double max_mismatch = 0.0;         // pu, at exit
    Eigen::VectorXd v_mag;             // per bus, grid order
    Eigen::VectorXd v_ang;             // rad
    Eigen::VectorXd p_injection;       // solved net active injection per bus, pu
    Eigen::VectorXd q_injection;       // solved net reactive injection per bus, pu
    Eigen::VectorXd gen_p;             // per generator, pu on system base
    Eigen::VectorXd gen_q;
};

// Bus admittance matrix including line charging and bus shunts.
Eigen::MatrixXcd build_ybus(const GridModel& grid);

// Full Newton-Raphson AC power flow from flat start. Converged when the
// largest P/Q mismatch is <= 1e-8 pu; failure to get there in 50 iterations
// (or a non-finite state) reports converged = false rather than throwing, so
// callers can reject the load condition and redraw.
PowerFlowSolution solve_powerflow(const GridModel& grid);

} // namespace oscloc::powersim
