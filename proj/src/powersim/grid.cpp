#include "oscloc/powersim/grid.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

namespace oscloc::powersim {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

double to_double(const std::string& tok, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InvalidInputError("grid file: bad number '" + tok + "' in " + context);
    }
}

int to_int(const std::string& tok, const std::string& context) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InvalidInputError("grid file: bad integer '" + tok + "' in " + context);
    }
}

BusType parse_bus_type(const std::string& tok) {
    if (tok == "slack" || tok == "SLACK") return BusType::Slack;
    if (tok == "pv" || tok == "PV") return BusType::PV;
    if (tok == "pq" || tok == "PQ") return BusType::PQ;
    throw InvalidInputError("grid file: unknown bus type '" + tok + "'");
}

} // namespace

std::size_t GridModel::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    throw InvalidInputError("unknown bus id " + std::to_string(id));
}

void GridModel::validate() const {
    if (buses.empty()) throw InvalidInputError("grid has no buses");
    if (!(mva_base > 0.0) || !(frequency_hz > 0.0))
        throw InvalidInputError("grid system base and frequency must be positive");

    std::size_t slack_count = 0;
    for (const auto& bus : buses)
        if (bus.type == BusType::Slack) ++slack_count;
    if (slack_count != 1)
        throw InvalidInputError("grid must have exactly one slack bus, found " +
                                std::to_string(slack_count));

    for (const auto& br : branches) {
        bus_index(br.from);
        bus_index(br.to);
        if (br.r == 0.0 && br.x == 0.0)
            throw InvalidInputError("branch " + std::to_string(br.from) + "-" +
                                    std::to_string(br.to) + " has zero impedance");
    }
    for (const auto& gen : generators) {
        bus_index(gen.bus);
        if (!(gen.inertia_h > 0.0) || !(gen.rated_mva > 0.0) || gen.xd_prime == 0.0)
            throw InvalidInputError("generator " + gen.name + " has invalid H/base/x'd");
    }

    // Connectivity by breadth-first search over branches.
    std::vector<std::vector<std::size_t>> adjacency(buses.size());
    for (const auto& br : branches) {
        const std::size_t a = bus_index(br.from);
        const std::size_t b = bus_index(br.to);
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    std::vector<char> seen(buses.size(), 0);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = 1;
    while (!frontier.empty()) {
        const std::size_t at = frontier.front();
        frontier.pop();
        for (const std::size_t next : adjacency[at]) {
            if (!seen[next]) {
                seen[next] = 1;
                frontier.push(next);
            }
        }
    }
    if (!std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }))
        throw InvalidInputError("grid network is not connected");
}

GridModel GridModel::parse(const std::string& text, const std::string& origin) {
    GridModel grid;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);

        if (tokens[0] == "SYSTEM") {
            for (std::size_t t = 1; t < tokens.size(); ++t) {
                const std::size_t eq = tokens[t].find('=');
                if (eq == std::string::npos)
                    throw InvalidInputError("grid file: expected key=value in " + where);
                const std::string key = tokens[t].substr(0, eq);
                const std::string val = tokens[t].substr(eq + 1);
                if (key == "mva_base")
                    grid.mva_base = to_double(val, where);
                else if (key == "freq_hz")
                    grid.frequency_hz = to_double(val, where);
                else
                    throw InvalidInputError("grid file: unknown SYSTEM key '" + key + "' in " +
                                            where);
            }
            continue;
        }
        if (tokens[0] == "BUS" || tokens[0] == "BRANCH" || tokens[0] == "GEN") {
            section = tokens[0];
            continue;
        }

        if (section == "BUS") {
            if (tokens.size() != 6)
                throw InvalidInputError("grid file: BUS row needs 6 columns in " + where);
            Bus bus;
            bus.id = to_int(tokens[0], where);
            bus.type = parse_bus_type(tokens[1]);
            bus.v_set = to_double(tokens[2], where);
            bus.p_load = to_double(tokens[3], where);
            bus.q_load = to_double(tokens[4], where);
            bus.b_shunt = to_double(tokens[5], where);
            grid.buses.push_back(bus);
        } else if (section == "BRANCH") {
            if (tokens.size() != 5)
                throw InvalidInputError("grid file: BRANCH row needs 5 columns in " + where);
            Branch br;
            br.from = to_int(tokens[0], where);
            br.to = to_int(tokens[1], where);
            br.r = to_double(tokens[2], where);
            br.x = to_double(tokens[3], where);
            br.b = to_double(tokens[4], where);
            grid.branches.push_back(br);
        } else if (section == "GEN") {
            if (tokens.size() != 7)
                throw InvalidInputError("grid file: GEN row needs 7 columns in " + where);
            Generator gen;
            gen.name = tokens[0];
            gen.bus = to_int(tokens[1], where);
            gen.inertia_h = to_double(tokens[2], where);
            gen.damping_d = to_double(tokens[3], where);
            gen.xd_prime = to_double(tokens[4], where);
            gen.rated_mva = to_double(tokens[5], where);
            gen.p_gen = to_double(tokens[6], where);
            grid.generators.push_back(gen);
        } else {
            throw InvalidInputError("grid file: data before any section header in " + where);
        }
    }
    grid.validate();
    return grid;
}

GridModel GridModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open grid file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
}

GridModel scale_loads(const GridModel& grid, double scale) {
    GridModel scaled = grid;
    for (auto& bus : scaled.buses) {
        bus.p_load *= scale;
        bus.q_load *= scale;
    }
    return scaled;
}

GridModel scale_operating_point(const GridModel& grid, double scale) {
    GridModel scaled = scale_loads(grid, scale);
    for (auto& gen : scaled.generators)
        if (scaled.buses[scaled.bus_index(gen.bus)].type != BusType::Slack) gen.p_gen *= scale;
    return scaled;
}

} // namespace oscloc::powersim
