#pragma once

#include <string>
#include <vector>

#include "oscloc/errors.hpp"

namespace oscloc::powersim {

enum class BusType { Slack, PV, PQ };

struct Bus {
    int id = 0;
    BusType type = BusType::PQ;
    double v_set = 1.0;     // voltage magnitude setpoint (slack/PV), pu
    double p_load = 0.0;    // pu on system base
    double q_load = 0.0;    // pu on system base
    double b_shunt = 0.0;   // shunt susceptance, pu (capacitor positive)
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;         // series resistance, pu
    double x = 0.0;         // series reactance, pu
    double b = 0.0;         // total line-charging susceptance, pu
};

struct Generator {
    std::string name;
    int bus = 0;
    double inertia_h = 0.0;   // s, on the machine's rated base
    double damping_d = 0.0;   // pu on rated base (scenario draws override this)
    double xd_prime = 0.0;    // transient reactance, pu on rated base
    double rated_mva = 0.0;   // MVA
    double p_gen = 0.0;       // scheduled active power, pu on system base (slack: initial guess)
};

struct GridModel {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    double frequency_hz = 60.0;
    double mva_base = 100.0;

    std::size_t bus_index(int id) const;        // throws on unknown id
    // Connectivity, exactly one slack, nonzero impedances, generator buses exist.
    void validate() const;

    // Parses the sectioned text format (SYSTEM / BUS / BRANCH / GEN); see
    // the bundled model file for the column layout.
    static GridModel load(const std::string& path);
    static GridModel parse(const std::string& text, const std::string& origin = "<string>");
};

// Returns a copy with every bus load (P and Q) multiplied by `scale`.
// Shunt devices and generation schedules are left untouched.
GridModel scale_loads(const GridModel& grid, double scale);

// Load-following variant: loads and non-slack generation schedules both scale,
// so the slack unit only absorbs the change in losses. This is the scaling the
// dataset protocol uses for its load randomization.
GridModel scale_operating_point(const GridModel& grid, double scale);

} // namespace oscloc::powersim
