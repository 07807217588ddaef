#include "oscloc/powersim/reduction.hpp"

#include <cmath>
#include <complex>

namespace oscloc::powersim {

Eigen::VectorXd ReducedSystem::electrical_power(const Eigen::VectorXd& delta) const {
    const Eigen::Index ng = size();
    Eigen::VectorXcd emf(ng);
    for (Eigen::Index i = 0; i < ng; ++i)
        emf[i] = std::polar(emf_mag[i], delta[i]);
    const Eigen::VectorXcd current = y_red * emf;
    Eigen::VectorXd pe(ng);
    for (Eigen::Index i = 0; i < ng; ++i)
        pe[i] = (emf[i] * std::conj(current[i])).real();
    return pe;
}

ReducedSystem reduce_network(const GridModel& grid, const PowerFlowSolution& pf) {
    if (!pf.converged)
        throw InvalidInputError("reduce_network requires a converged power flow");
    const auto n = static_cast<Eigen::Index>(grid.buses.size());
    const auto ng = static_cast<Eigen::Index>(grid.generators.size());
    if (ng == 0) throw InvalidInputError("reduce_network: grid has no generators");

    // Bus admittances plus constant-impedance loads at the solved voltages.
    Eigen::MatrixXcd y_bus = build_ybus(grid);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& bus = grid.buses[i];
        if (bus.p_load != 0.0 || bus.q_load != 0.0) {
            const double v2 = pf.v_mag[i] * pf.v_mag[i];
            y_bus(i, i) += std::complex<double>(bus.p_load, -bus.q_load) / v2;
        }
    }

    // Generator branches between internal nodes and terminal buses.
    Eigen::MatrixXcd y_gg = Eigen::MatrixXcd::Zero(ng, ng);  // internal-internal
    Eigen::MatrixXcd y_gb = Eigen::MatrixXcd::Zero(ng, n);   // internal-bus
    ReducedSystem red;
    red.emf_mag.resize(ng);
    red.delta0.resize(ng);
    red.h_sys.resize(ng);
    red.rated_over_base.resize(ng);
    red.gen_p_pf = pf.gen_p;
    red.omega_s = 2.0 * M_PI * grid.frequency_hz;

    for (Eigen::Index k = 0; k < ng; ++k) {
        const auto& gen = grid.generators[k];
        const auto bi = static_cast<Eigen::Index>(grid.bus_index(gen.bus));
        const double ratio = gen.rated_mva / grid.mva_base;
        const double xdp_sys = gen.xd_prime / ratio;  // rated base -> system base
        const std::complex<double> y_g = 1.0 / std::complex<double>(0.0, xdp_sys);

        y_gg(k, k) += y_g;
        y_gb(k, bi) -= y_g;
        y_bus(bi, bi) += y_g;

        // Internal EMF from the terminal conditions: E = V + j x'd I.
        const std::complex<double> v_t = std::polar(pf.v_mag[bi], pf.v_ang[bi]);
        const std::complex<double> s_g(pf.gen_p[k], pf.gen_q[k]);
        const std::complex<double> i_g = std::conj(s_g / v_t);
        const std::complex<double> emf = v_t + std::complex<double>(0.0, xdp_sys) * i_g;
        red.emf_mag[k] = std::abs(emf);
        red.delta0[k] = std::arg(emf);

        red.h_sys[k] = gen.inertia_h * ratio;
        red.rated_over_base[k] = ratio;
        red.gen_names.push_back(gen.name);
    }

    // Kron reduction: eliminate every physical bus. Y_bg is the plain
    // transpose of Y_gb (reciprocal network, no conjugation).
    const Eigen::MatrixXcd y_bg = y_gb.transpose();
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(y_bus);
    const Eigen::MatrixXcd solved = lu.solve(y_bg);  // Ybb^{-1} Ybg
    const double residual = (y_bus * solved - y_bg).norm();
    if (!solved.allFinite() || residual > 1e-6 * std::max(1.0, y_bg.norm()))
        throw NumericalError("reduce_network: bus admittance matrix is singular");
    red.y_red = y_gg - y_gb * solved;

    red.p_mech = red.electrical_power(red.delta0);
    return red;
}

} // namespace oscloc::powersim
