#include "oscloc/powersim/powerflow.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace oscloc::powersim {

namespace {
constexpr double kTolerance = 1e-8;
constexpr int kMaxIterations = 50;
} // namespace

Eigen::MatrixXcd build_ybus(const GridModel& grid) {
    const auto n = static_cast<Eigen::Index>(grid.buses.size());
    Eigen::MatrixXcd ybus = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& br : grid.branches) {
        const auto i = static_cast<Eigen::Index>(grid.bus_index(br.from));
        const auto j = static_cast<Eigen::Index>(grid.bus_index(br.to));
        const std::complex<double> series = 1.0 / std::complex<double>(br.r, br.x);
        const std::complex<double> half_charging(0.0, br.b / 2.0);
        ybus(i, i) += series + half_charging;
        ybus(j, j) += series + half_charging;
        ybus(i, j) -= series;
        ybus(j, i) -= series;
    }
    for (std::size_t b = 0; b < grid.buses.size(); ++b)
        ybus(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)) +=
            std::complex<double>(0.0, grid.buses[b].b_shunt);
    return ybus;
}

PowerFlowSolution solve_powerflow(const GridModel& grid) {
    grid.validate();
    const auto n = static_cast<Eigen::Index>(grid.buses.size());
    const Eigen::MatrixXcd ybus = build_ybus(grid);
    const Eigen::MatrixXd g = ybus.real();
    const Eigen::MatrixXd b = ybus.imag();

    // Scheduled injections: generator schedules minus loads.
    Eigen::VectorXd p_sched = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_sched = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p_sched[i] -= grid.buses[i].p_load;
        q_sched[i] -= grid.buses[i].q_load;
    }
    for (const auto& gen : grid.generators)
        p_sched[static_cast<Eigen::Index>(grid.bus_index(gen.bus))] += gen.p_gen;

    std::vector<Eigen::Index> non_slack, pq;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (grid.buses[i].type != BusType::Slack) non_slack.push_back(i);
        if (grid.buses[i].type == BusType::PQ) pq.push_back(i);
    }
    const auto n_ang = static_cast<Eigen::Index>(non_slack.size());
    const auto n_mag = static_cast<Eigen::Index>(pq.size());

    PowerFlowSolution sol;
    sol.v_mag = Eigen::VectorXd::Ones(n);
    sol.v_ang = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (grid.buses[i].type != BusType::PQ) sol.v_mag[i] = grid.buses[i].v_set;

    Eigen::VectorXd p_calc(n), q_calc(n);
    const auto compute_injections = [&]() {
        for (Eigen::Index i = 0; i < n; ++i) {
            double pi = 0.0, qi = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double th = sol.v_ang[i] - sol.v_ang[j];
                const double ct = std::cos(th), st = std::sin(th);
                pi += sol.v_mag[j] * (g(i, j) * ct + b(i, j) * st);
                qi += sol.v_mag[j] * (g(i, j) * st - b(i, j) * ct);
            }
            p_calc[i] = sol.v_mag[i] * pi;
            q_calc[i] = sol.v_mag[i] * qi;
        }
    };

    Eigen::VectorXd mismatch(n_ang + n_mag);
    const auto fill_mismatch = [&]() {
        for (Eigen::Index a = 0; a < n_ang; ++a)
            mismatch[a] = p_sched[non_slack[a]] - p_calc[non_slack[a]];
        for (Eigen::Index m = 0; m < n_mag; ++m)
            mismatch[n_ang + m] = q_sched[pq[m]] - q_calc[pq[m]];
    };

    for (int iter = 0; iter <= kMaxIterations; ++iter) {
        compute_injections();
        fill_mismatch();
        sol.iterations = iter;
        sol.max_mismatch = mismatch.size() == 0 ? 0.0 : mismatch.cwiseAbs().maxCoeff();
        if (!std::isfinite(sol.max_mismatch)) return sol;  // diverged: infeasible
        if (sol.max_mismatch <= kTolerance) {
            sol.converged = true;
            break;
        }
        if (iter == kMaxIterations) return sol;  // not converged: infeasible

        // Polar Jacobian in [d(theta non-slack), d(V pq)] ordering.
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_ang + n_mag, n_ang + n_mag);
        for (Eigen::Index a = 0; a < n_ang; ++a) {
            const Eigen::Index i = non_slack[a];
            for (Eigen::Index c = 0; c < n_ang; ++c) {
                const Eigen::Index j = non_slack[c];
                if (i == j) {
                    jac(a, c) = -q_calc[i] - b(i, i) * sol.v_mag[i] * sol.v_mag[i];
                } else {
                    const double th = sol.v_ang[i] - sol.v_ang[j];
                    jac(a, c) = sol.v_mag[i] * sol.v_mag[j] *
                                (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
                }
            }
            for (Eigen::Index c = 0; c < n_mag; ++c) {
                const Eigen::Index j = pq[c];
                if (i == j) {
                    jac(a, n_ang + c) = p_calc[i] / sol.v_mag[i] + g(i, i) * sol.v_mag[i];
                } else {
                    const double th = sol.v_ang[i] - sol.v_ang[j];
                    jac(a, n_ang + c) =
                        sol.v_mag[i] * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
                }
            }
        }
        for (Eigen::Index r = 0; r < n_mag; ++r) {
            const Eigen::Index i = pq[r];
            for (Eigen::Index c = 0; c < n_ang; ++c) {
                const Eigen::Index j = non_slack[c];
                if (i == j) {
                    jac(n_ang + r, c) = p_calc[i] - g(i, i) * sol.v_mag[i] * sol.v_mag[i];
                } else {
                    const double th = sol.v_ang[i] - sol.v_ang[j];
                    jac(n_ang + r, c) = -sol.v_mag[i] * sol.v_mag[j] *
                                        (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
                }
            }
            for (Eigen::Index c = 0; c < n_mag; ++c) {
                const Eigen::Index j = pq[c];
                if (i == j) {
                    jac(n_ang + r, n_ang + c) = q_calc[i] / sol.v_mag[i] - b(i, i) * sol.v_mag[i];
                } else {
                    const double th = sol.v_ang[i] - sol.v_ang[j];
                    jac(n_ang + r, n_ang + c) =
                        sol.v_mag[i] * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
                }
            }
        }

        const Eigen::VectorXd step = jac.partialPivLu().solve(mismatch);
        if (!step.allFinite()) return sol;  // singular Jacobian: infeasible
        for (Eigen::Index a = 0; a < n_ang; ++a) sol.v_ang[non_slack[a]] += step[a];
        for (Eigen::Index m = 0; m < n_mag; ++m) sol.v_mag[pq[m]] += step[n_ang + m];
        if (sol.v_mag.minCoeff() <= 0.0) return sol;  // collapsed voltage: infeasible
    }

    sol.p_injection = p_calc;
    sol.q_injection = q_calc;

    // Generator outputs from the solved injections; co-located units split the
    // bus total evenly (the bundled model has one unit per bus).
    const auto ng = static_cast<Eigen::Index>(grid.generators.size());
    sol.gen_p.resize(ng);
    sol.gen_q.resize(ng);
    std::vector<int> units_at_bus(grid.buses.size(), 0);
    for (const auto& gen : grid.generators) ++units_at_bus[grid.bus_index(gen.bus)];
    for (Eigen::Index k = 0; k < ng; ++k) {
        const std::size_t bi = grid.bus_index(grid.generators[k].bus);
        const auto i = static_cast<Eigen::Index>(bi);
        const double share = 1.0 / units_at_bus[bi];
        sol.gen_p[k] = (p_calc[i] + grid.buses[bi].p_load) * share;
        sol.gen_q[k] = (q_calc[i] + grid.buses[bi].q_load) * share;
    }
    return sol;
}

} // namespace oscloc::powersim
