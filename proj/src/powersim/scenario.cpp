#include "oscloc/powersim/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "oscloc/parallel.hpp"
#include "oscloc/powersim/powerflow.hpp"
#include "oscloc/powersim/reduction.hpp"
#include "oscloc/rng.hpp"

namespace oscloc::powersim {

namespace {

constexpr std::uint64_t kAttemptStream = 0xA77E;
constexpr int kMaxAttemptsPerScenario = 1000;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double window_variance(const Eigen::MatrixXd& values, Eigen::Index first, Eigen::Index count,
                       Eigen::Index channel) {
    const auto block = values.col(channel).segment(first, count);
    const double mean = block.mean();
    return (block.array() - mean).square().sum() / static_cast<double>(count);
}

} // namespace

void ScenarioConfig::validate() const {
    if (!(load_scale_min > 0.0) || load_scale_max < load_scale_min)
        throw InvalidInputError("invalid load scale range");
    if (damping_min < 0.0 || damping_max < damping_min)
        throw InvalidInputError("invalid damping range");
    if (!(freq_band_min > 0.0) || freq_band_max < freq_band_min)
        throw InvalidInputError("invalid frequency band");
    if (!(base_mode_freq_f0 > 0.0)) throw InvalidInputError("base mode frequency must be > 0");
    if (!(amplitude_k > 0.0)) throw InvalidInputError("disturbance amplitude must be > 0");
    if (disturbance_start < 0.0) throw InvalidInputError("disturbance start must be >= 0");
    if (!(sim_duration > 0.0) || !(sample_rate > 0.0))
        throw InvalidInputError("duration and sample rate must be positive");
    if (test_delay_d < 0.0 || !(test_window > 0.0))
        throw InvalidInputError("invalid test delay/window");
    if (sim_duration < test_delay_d + test_window)
        throw InvalidInputError("sim_duration must cover test_delay_d + test_window");
    if (sample_rate <= 2.0 * freq_band_max * base_mode_freq_f0)
        throw InvalidInputError("sample_rate must exceed twice the max disturbance frequency");
    if (samples_per_class < 1) throw InvalidInputError("samples_per_class must be >= 1");
}

GeneratedData generate_dataset(const GridModel& grid, const ScenarioConfig& config) {
    config.validate();
    grid.validate();
    const auto n_gens = static_cast<int>(grid.generators.size());
    if (n_gens < 1) throw InvalidInputError("generate_dataset: grid has no generators");

    std::vector<std::string> channel_names;
    for (const auto& gen : grid.generators) channel_names.push_back("delta_" + gen.name);
    for (const auto& gen : grid.generators) channel_names.push_back("pe_" + gen.name);

    std::vector<std::string> class_set;
    for (const auto& gen : grid.generators) class_set.push_back(gen.name);

    const auto n_full = static_cast<Eigen::Index>(
        std::llround(config.sim_duration * config.sample_rate));
    const auto test_first = static_cast<Eigen::Index>(
        std::llround(config.test_delay_d * config.sample_rate));
    const auto test_rows = static_cast<Eigen::Index>(
        std::llround(config.test_window * config.sample_rate));

    const int per_class = config.samples_per_class;
    const int train_per_class = (per_class + 1) / 2;
    const int test_per_class = per_class - train_per_class;
    const std::size_t total = static_cast<std::size_t>(n_gens) * per_class;

    GeneratedData out;
    out.training.class_set = class_set;
    out.testing.class_set = class_set;
    out.training.samples.resize(static_cast<std::size_t>(n_gens) * train_per_class);
    out.testing.samples.resize(static_cast<std::size_t>(n_gens) * test_per_class);
    out.testing_full.resize(out.testing.samples.size());

    std::atomic<std::size_t> rejected_pf{0}, rejected_unstable{0};
    const bool noisy = std::isfinite(config.noise_snr_db);
    const double snr_linear = noisy ? std::pow(10.0, config.noise_snr_db / 10.0) : 0.0;

    parallel_for(total, [&](std::size_t task) {
        const int cls = static_cast<int>(task) / per_class;
        const int idx = static_cast<int>(task) % per_class;
        const bool is_training = idx < train_per_class;
        const std::uint64_t scenario_seed =
            derive_seed(config.rng_seed, static_cast<std::uint64_t>(cls),
                        static_cast<std::uint64_t>(idx));

        for (int attempt = 0;; ++attempt) {
            if (attempt >= kMaxAttemptsPerScenario ||
                rejected_pf.load() + rejected_unstable.load() > 10 * total) {
                std::ostringstream msg;
                msg << "generate_dataset: too many rejected scenarios (power flow "
                    << rejected_pf.load() << ", unstable " << rejected_unstable.load() << ")";
                throw NumericalError(msg.str());
            }
            const std::uint64_t seed = derive_seed(scenario_seed, kAttemptStream,
                                                   static_cast<std::uint64_t>(attempt));
            Rng rng(seed);

            // Fixed draw order: load scale, per-generator damping, frequency,
            // noise seed.
            const double load_scale = rng.uniform(config.load_scale_min, config.load_scale_max);
            Eigen::VectorXd damping(n_gens);
            for (int g = 0; g < n_gens; ++g)
                damping[g] = rng.uniform(config.damping_min, config.damping_max);
            const double freq = config.base_mode_freq_f0 *
                                rng.uniform(config.freq_band_min, config.freq_band_max);
            const std::uint64_t noise_seed = rng.next_u64();

            const GridModel scaled = scale_operating_point(grid, load_scale);
            const PowerFlowSolution pf = solve_powerflow(scaled);
            if (!pf.converged) {
                ++rejected_pf;
                continue;
            }
            const ReducedSystem reduced = reduce_network(scaled, pf);

            DisturbanceSpec disturbance;
            disturbance.target_generator = cls;
            // amplitude_k is on the disturbed machine's rated base, mirroring a
            // reference-signal disturbance scaled to the machine's own controls.
            disturbance.amplitude_k =
                config.amplitude_k * grid.generators[cls].rated_mva / grid.mva_base;
            disturbance.frequency_f = freq;
            disturbance.start_time = config.disturbance_start;

            const SimulationTrace trace =
                integrate(reduced, disturbance, damping, config.sim_duration, config.sample_rate);
            if (!trace.stable) {
                ++rejected_unstable;
                continue;
            }

            Eigen::MatrixXd full(n_full, 2 * n_gens);
            full.leftCols(n_gens) = trace.delta_coi;
            full.rightCols(n_gens) = trace.pe;

            // Calibrate noise on the window this sample will be classified
            // from, apply it to the whole trace.
            const Eigen::Index win_first = is_training ? 0 : test_first;
            const Eigen::Index win_rows = is_training ? n_full : test_rows;
            if (noisy) {
                Rng noise_rng(noise_seed);
                for (Eigen::Index c = 0; c < full.cols(); ++c) {
                    const double sigma =
                        std::sqrt(window_variance(full, win_first, win_rows, c) / snr_linear);
                    for (Eigen::Index r = 0; r < n_full; ++r)
                        full(r, c) += sigma * noise_rng.gaussian();
                }
            }

            LabeledSample sample;
            sample.label = class_set[cls];
            sample.series.sample_rate = config.sample_rate;
            sample.series.channel_names = channel_names;
            sample.scenario_meta["load_scale"] = format_double(load_scale);
            for (int g = 0; g < n_gens; ++g)
                sample.scenario_meta["damping_" + class_set[g]] = format_double(damping[g]);
            sample.scenario_meta["disturbance_freq_hz"] = format_double(freq);
            sample.scenario_meta["noise_seed"] = std::to_string(noise_seed);
            sample.scenario_meta["scenario_seed"] = std::to_string(seed);
            sample.scenario_meta["attempts"] = std::to_string(attempt + 1);

            if (is_training) {
                sample.series.start_time = 0.0;
                sample.series.values = full;
                out.training.samples[static_cast<std::size_t>(cls) * train_per_class + idx] =
                    std::move(sample);
            } else {
                const std::size_t slot = static_cast<std::size_t>(cls) * test_per_class +
                                         (idx - train_per_class);
                MTSeries full_series;
                full_series.sample_rate = config.sample_rate;
                full_series.channel_names = channel_names;
                full_series.start_time = 0.0;
                full_series.values = full;
                out.testing_full[slot] = std::move(full_series);

                sample.series.start_time = config.test_delay_d;
                sample.series.values = full.middleRows(test_first, test_rows);
                out.testing.samples[slot] = std::move(sample);
            }
            break;
        }
    });

    out.rejected_powerflow = rejected_pf.load();
    out.rejected_unstable = rejected_unstable.load();
    return out;
}

} // namespace oscloc::powersim
