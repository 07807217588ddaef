#include "oscloc/powersim/swing.hpp"

#include <cmath>

namespace oscloc::powersim {

void DisturbanceSpec::validate(Eigen::Index n_generators) const {
    if (target_generator >= 0) {
        if (target_generator >= n_generators)
            throw InvalidInputError("disturbance target generator index out of range");
        if (!(amplitude_k > 0.0)) throw InvalidInputError("disturbance amplitude must be > 0");
        if (!(frequency_f > 0.0)) throw InvalidInputError("disturbance frequency must be > 0");
    }
}

SimulationTrace integrate(const ReducedSystem& system, const DisturbanceSpec& disturbance,
                          const Eigen::VectorXd& damping, double duration, double sample_rate,
                          const SimOptions& options) {
    const Eigen::Index ng = system.size();
    disturbance.validate(ng);
    if (damping.size() != ng)
        throw InvalidInputError("integrate: damping vector size must match generator count");
    if (!(duration > 0.0) || !(sample_rate > 0.0))
        throw InvalidInputError("integrate: duration and sample rate must be positive");
    if (!(options.internal_step > 0.0))
        throw InvalidInputError("integrate: internal step must be positive");

    const double interval = 1.0 / sample_rate;
    const auto steps_per_sample =
        static_cast<Eigen::Index>(std::ceil(interval / options.internal_step - 1e-9));
    const double step = interval / static_cast<double>(steps_per_sample);
    const auto n_samples = static_cast<Eigen::Index>(std::llround(duration * sample_rate));

    const double omega_s = system.omega_s;
    const Eigen::VectorXd d_sys = damping.cwiseProduct(system.rated_over_base);
    const Eigen::VectorXd accel_gain = (omega_s / 2.0) * system.h_sys.cwiseInverse();

    Eigen::VectorXd delta = system.delta0;
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(ng);  // speed deviation, rad/s
    if (options.initial_angle_offset.size() > 0) {
        if (options.initial_angle_offset.size() != ng)
            throw InvalidInputError("integrate: initial angle offset size mismatch");
        delta += options.initial_angle_offset;
    }
    if (options.initial_speed.size() > 0) {
        if (options.initial_speed.size() != ng)
            throw InvalidInputError("integrate: initial speed size mismatch");
        omega = options.initial_speed;
    }

    const auto accel = [&](double t, const Eigen::VectorXd& d, const Eigen::VectorXd& w) {
        Eigen::VectorXd p_net = system.p_mech - system.electrical_power(d);
        if (disturbance.target_generator >= 0 && t >= disturbance.start_time)
            p_net[disturbance.target_generator] +=
                disturbance.amplitude_k *
                std::sin(2.0 * M_PI * disturbance.frequency_f * (t - disturbance.start_time));
        p_net -= d_sys.cwiseProduct(w) / omega_s;
        return Eigen::VectorXd(accel_gain.cwiseProduct(p_net));
    };

    SimulationTrace trace;
    trace.time.resize(n_samples);
    trace.delta_coi.resize(n_samples, ng);
    trace.pe.resize(n_samples, ng);
    const double h_total = system.h_sys.sum();

    const auto record = [&](Eigen::Index sample, double t) {
        trace.time[sample] = t;
        const double coi = system.h_sys.dot(delta) / h_total;
        trace.delta_coi.row(sample) = (delta.array() - coi).matrix().transpose();
        trace.pe.row(sample) = system.electrical_power(delta).transpose();
    };

    double t = 0.0;
    for (Eigen::Index sample = 0; sample < n_samples; ++sample) {
        record(sample, t);
        for (Eigen::Index s = 0; s < steps_per_sample; ++s) {
            const Eigen::VectorXd k1d = omega;
            const Eigen::VectorXd k1w = accel(t, delta, omega);
            const Eigen::VectorXd k2d = omega + 0.5 * step * k1w;
            const Eigen::VectorXd k2w =
                accel(t + 0.5 * step, delta + 0.5 * step * k1d, omega + 0.5 * step * k1w);
            const Eigen::VectorXd k3d = omega + 0.5 * step * k2w;
            const Eigen::VectorXd k3w =
                accel(t + 0.5 * step, delta + 0.5 * step * k2d, omega + 0.5 * step * k2w);
            const Eigen::VectorXd k4d = omega + step * k3w;
            const Eigen::VectorXd k4w = accel(t + step, delta + step * k3d, omega + step * k3w);
            delta += (step / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            omega += (step / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            t += step;
        }
        // Times accumulate exactly on the sample grid.
        t = (static_cast<double>(sample) + 1.0) * interval;
        if (!delta.allFinite() || delta.cwiseAbs().maxCoeff() > 10.0 * M_PI) {
            trace.stable = false;
            trace.time.conservativeResize(sample + 1);
            trace.delta_coi.conservativeResize(sample + 1, ng);
            trace.pe.conservativeResize(sample + 1, ng);
            return trace;
        }
    }
    return trace;
}

} // namespace oscloc::powersim
