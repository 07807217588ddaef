#pragma once

#include <cstdint>
#include <vector>

#include "oscloc/mts.hpp"
#include "oscloc/powersim/grid.hpp"
#include "oscloc/powersim/swing.hpp"

namespace oscloc::powersim {

// Randomized dataset-generation protocol: per-scenario draws of load level,
// generator damping, disturbance frequency, and measurement noise.
struct ScenarioConfig {
    double load_scale_min = 0.9;
    double load_scale_max = 1.1;
    double damping_min = 0.0;       // pu on each machine's rated base
    double damping_max = 4.0;
    double freq_band_min = 0.9;     // fraction of base_mode_freq_f0
    double freq_band_max = 1.1;
    double base_mode_freq_f0 = 0.6208;  // Hz
    double amplitude_k = 0.03;      // pu on the disturbed machine's rated base
    double disturbance_start = 0.0; // s
    double noise_snr_db = 13.0;     // +inf disables noise
    double sim_duration = 15.0;     // s
    double sample_rate = 25.0;      // Hz
    double test_delay_d = 3.0;      // s
    double test_window = 5.0;       // s
    int samples_per_class = 200;    // scenarios per source generator, split 1:1
    std::uint64_t rng_seed = 1;

    void validate() const;
};

struct GeneratedData {
    Dataset training;                    // full-duration windows, start_time 0
    Dataset testing;                     // delayed windows, start_time = test_delay_d
    std::vector<MTSeries> testing_full;  // full noisy traces backing the testing
                                         // samples (same order), for delay re-windowing
    std::size_t rejected_powerflow = 0;
    std::size_t rejected_unstable = 0;
};

// Runs the whole protocol: one class per generator, samples_per_class
// scenarios each (first half training, second half testing), channels ordered
// [delta_1..delta_G, pe_1..pe_G]. Scenario seeds derive from
// (rng_seed, class index, scenario index, attempt) so parallel generation is
// schedule-independent; rejected draws (infeasible power flow, unstable
// integration) are redrawn with the attempt counter bumped.
GeneratedData generate_dataset(const GridModel& grid, const ScenarioConfig& config);

} // namespace oscloc::powersim
