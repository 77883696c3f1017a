#include "gridmomentum/case_model.hpp"

#include "gridmomentum/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace gridmomentum {

using nlohmann::json;

double PowerSystemCase::base_omega() const { return 2.0 * std::numbers::pi * frequency_hz; }

std::size_t PowerSystemCase::bus_index(BusId id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    throw ValidationError("bus " + std::to_string(id), "", "unknown bus");
}

const MachineParams* PowerSystemCase::find_machine(std::string_view id) const {
    for (const auto& m : machines)
        if (m.id == id) return &m;
    return nullptr;
}

const CigParams* PowerSystemCase::find_cig(std::string_view id) const {
    for (const auto& c : cigs)
        if (c.id == id) return &c;
    return nullptr;
}

std::size_t PowerSystemCase::cig_index(std::string_view id) const {
    for (std::size_t i = 0; i < cigs.size(); ++i)
        if (cigs[i].id == id) return i;
    throw ValidationError(std::string(id), "", "no CIG with this id");
}

double machine_momentum(const MachineParams& m) { return 2.0 * m.H * m.S_B; }

double cig_momentum(const CigParams& c) { return c.T_a * c.P_ref; }

double global_momentum_true(const PowerSystemCase& c) {
    double total = 0.0;
    for (const auto& m : c.machines) total += machine_momentum(m);
    for (const auto& g : c.cigs) total += cig_momentum(g);
    return total;
}

namespace {

std::string element_label(const json& obj, const std::string& kind, std::size_t index) {
    if (obj.is_object() && obj.contains("id")) {
        const auto& id = obj.at("id");
        return id.is_string() ? id.get<std::string>() : id.dump();
    }
    return kind + "[" + std::to_string(index) + "]";
}

double req_number(const json& obj, const std::string& elem, const char* field) {
    if (!obj.contains(field)) throw ValidationError(elem, field, "missing required field");
    const auto& v = obj.at(field);
    if (!v.is_number()) throw ValidationError(elem, field, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(elem, field, "not finite");
    return d;
}

double opt_number(const json& obj, const std::string& elem, const char* field, double fallback) {
    if (!obj.contains(field)) return fallback;
    return req_number(obj, elem, field);
}

std::string req_string(const json& obj, const std::string& elem, const char* field) {
    if (!obj.contains(field)) throw ValidationError(elem, field, "missing required field");
    const auto& v = obj.at(field);
    if (!v.is_string()) throw ValidationError(elem, field, "expected a string");
    return v.get<std::string>();
}

BusId req_bus(const json& obj, const std::string& elem, const char* field) {
    if (!obj.contains(field)) throw ValidationError(elem, field, "missing required field");
    const auto& v = obj.at(field);
    if (!v.is_number_integer()) throw ValidationError(elem, field, "expected an integer bus id");
    return v.get<BusId>();
}

const json& req_array(const json& root, const char* field, bool required) {
    static const json empty = json::array();
    if (!root.contains(field)) {
        if (required) throw ValidationError("case", field, "missing required array");
        return empty;
    }
    const auto& v = root.at(field);
    if (!v.is_array()) throw ValidationError("case", field, "expected an array");
    return v;
}

void check_unit(const std::string& elem, const char* field, const std::string& unit,
                std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (unit == a) return;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw ValidationError(elem, field, "unit '" + unit + "' not one of {" + list + "}");
}

// Converts a reactance tagged "pu" (system base), "pu_machine" (rating base)
// or "ohm" (bus voltage base) to system per-unit.
double reactance_to_pu(const json& obj, const std::string& elem, const char* field,
                       const char* unit_field, double rating_mva, double base_mva,
                       double base_kv) {
    const double value = opt_number(obj, elem, field, 0.0);
    const std::string unit = obj.contains(unit_field) ? req_string(obj, elem, unit_field) : "pu";
    check_unit(elem, unit_field, unit, {"pu", "pu_machine", "ohm"});
    if (unit == "pu_machine") return value * base_mva / rating_mva;
    if (unit == "ohm") return value / (base_kv * base_kv / base_mva);
    return value;
}

Branch parse_branch(const json& obj, const std::string& elem, const PowerSystemCase& c,
                    bool transformer) {
    Branch br;
    br.id = elem;
    br.from = req_bus(obj, elem, "from");
    br.to = req_bus(obj, elem, "to");
    const std::string unit = obj.contains("unit") ? req_string(obj, elem, "unit") : "pu";
    check_unit(elem, "unit", unit, {"pu", "ohm"});
    br.r = opt_number(obj, elem, "r", 0.0);
    br.x = opt_number(obj, elem, "x", 0.0);
    br.b = opt_number(obj, elem, "b", 0.0);
    br.tap = transformer ? opt_number(obj, elem, "tap", 1.0) : 1.0;
    if (obj.contains("in_service")) {
        if (!obj.at("in_service").is_boolean())
            throw ValidationError(elem, "in_service", "expected a boolean");
        br.in_service = obj.at("in_service").get<bool>();
    }
    if (unit == "ohm") {
        const auto it = std::find_if(c.buses.begin(), c.buses.end(),
                                     [&](const Bus& b) { return b.id == br.from; });
        if (it == c.buses.end())
            throw ValidationError(elem, "from", "references unknown bus " + std::to_string(br.from));
        const double z_base = it->base_kv * it->base_kv / c.base_mva;
        br.r /= z_base;
        br.x /= z_base;
        br.b *= z_base;
    }
    return br;
}

json branch_to_json(const Branch& br, bool transformer) {
    json j = {{"id", br.id}, {"from", br.from}, {"to", br.to}, {"unit", "pu"},
              {"r", br.r},   {"x", br.x},       {"b", br.b}};
    if (transformer) j["tap"] = br.tap;
    if (!br.in_service) j["in_service"] = false;
    return j;
}

}  // namespace

PowerSystemCase load_case(std::string_view source) {
    json root;
    try {
        root = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ValidationError("case", "", std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw ValidationError("case", "", "top level must be an object");

    PowerSystemCase c;
    if (root.contains("name")) c.name = req_string(root, "case", "name");
    c.base_mva = opt_number(root, "case", "base_mva", 100.0);
    c.frequency_hz = opt_number(root, "case", "frequency_hz", 50.0);
    c.omega0 = opt_number(root, "case", "omega0", 1.0);
    if (root.contains("slack")) c.slack = req_string(root, "case", "slack");
    if (c.base_mva <= 0) throw ValidationError("case", "base_mva", "must be positive");
    if (c.frequency_hz <= 0) throw ValidationError("case", "frequency_hz", "must be positive");

    const auto& buses = req_array(root, "buses", true);
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto& b = buses[i];
        const std::string elem = "bus[" + std::to_string(i) + "]";
        Bus bus;
        bus.id = req_bus(b, elem, "id");
        if (b.contains("name")) bus.name = req_string(b, elem, "name");
        bus.base_kv = req_number(b, elem, "base_kv");
        c.buses.push_back(bus);
    }

    const auto& lines = req_array(root, "lines", false);
    for (std::size_t i = 0; i < lines.size(); ++i)
        c.lines.push_back(parse_branch(lines[i], element_label(lines[i], "line", i), c, false));
    const auto& trafos = req_array(root, "transformers", false);
    for (std::size_t i = 0; i < trafos.size(); ++i)
        c.transformers.push_back(
            parse_branch(trafos[i], element_label(trafos[i], "transformer", i), c, true));

    auto bus_kv = [&](BusId id) {
        for (const auto& b : c.buses)
            if (b.id == id) return b.base_kv;
        return 1.0;  // dangling; reported by validate_case
    };

    const auto& machines = req_array(root, "machines", false);
    for (std::size_t i = 0; i < machines.size(); ++i) {
        const auto& m = machines[i];
        const std::string elem = element_label(m, "machine", i);
        MachineParams mp;
        mp.id = req_string(m, elem, "id");
        mp.bus = req_bus(m, elem, "bus");
        mp.H = req_number(m, elem, "H");
        mp.S_B = req_number(m, elem, "S_B");
        mp.D = opt_number(m, elem, "D", 0.0);
        mp.p_mw = opt_number(m, elem, "p_mw", 0.0);
        mp.v_set = opt_number(m, elem, "v_set", 1.0);
        mp.x_d_prime = reactance_to_pu(m, elem, "x_d_prime", "x_d_prime_unit", mp.S_B,
                                       c.base_mva, bus_kv(mp.bus));
        if (m.contains("governor") && !m.at("governor").is_null()) {
            const auto& g = m.at("governor");
            const std::string gelem = elem + ".governor";
            if (!g.is_object()) throw ValidationError(elem, "governor", "expected an object");
            mp.governor = GovernorParams{req_number(g, gelem, "T_g"), req_number(g, gelem, "k_g"),
                                         req_number(g, gelem, "R")};
        }
        c.machines.push_back(mp);
    }

    const auto& cigs = req_array(root, "cigs", false);
    for (std::size_t i = 0; i < cigs.size(); ++i) {
        const auto& g = cigs[i];
        const std::string elem = element_label(g, "cig", i);
        CigParams cp;
        cp.id = req_string(g, elem, "id");
        cp.bus = req_bus(g, elem, "bus");
        cp.T_a = req_number(g, elem, "T_a");
        cp.P_ref = req_number(g, elem, "P_ref");
        cp.P_g = opt_number(g, elem, "P_g", 0.0);
        cp.K_w = opt_number(g, elem, "K_w", 0.0);
        cp.K_d = opt_number(g, elem, "K_d", 0.0);
        cp.v_set = opt_number(g, elem, "v_set", 1.0);
        cp.x_s = reactance_to_pu(g, elem, "x_s", "x_s_unit", cp.P_ref, c.base_mva, bus_kv(cp.bus));
        c.cigs.push_back(cp);
    }

    const auto& loads = req_array(root, "loads", false);
    for (std::size_t i = 0; i < loads.size(); ++i) {
        const auto& l = loads[i];
        const std::string elem = element_label(l, "load", i);
        LoadParams lp;
        lp.id = req_string(l, elem, "id");
        lp.bus = req_bus(l, elem, "bus");
        lp.P_L0 = req_number(l, elem, "P_L0");
        lp.Q_L0 = opt_number(l, elem, "Q_L0", 0.0);
        lp.V_0 = opt_number(l, elem, "V_0", bus_kv(lp.bus));
        lp.gamma = opt_number(l, elem, "gamma", 0.0);
        if (l.contains("noise") && !l.at("noise").is_null()) {
            const auto& n = l.at("noise");
            const std::string nelem = elem + ".noise";
            if (!n.is_object()) throw ValidationError(elem, "noise", "expected an object");
            OUParams ou;
            ou.tau = req_number(n, nelem, "tau");
            ou.sigma = req_number(n, nelem, "sigma");
            if (n.contains("seed")) {
                if (!n.at("seed").is_number_unsigned())
                    throw ValidationError(nelem, "seed", "expected a non-negative integer");
                ou.seed = n.at("seed").get<unsigned long long>();
            }
            lp.noise = ou;
        }
        c.loads.push_back(lp);
    }

    if (c.slack.empty()) {
        // Reference defaults to the machine with the largest momentum.
        const MachineParams* best = nullptr;
        for (const auto& m : c.machines)
            if (!best || machine_momentum(m) > machine_momentum(*best)) best = &m;
        if (best) c.slack = best->id;
        else if (!c.cigs.empty()) c.slack = c.cigs.front().id;
    }

    validate_case(c);
    return c;
}

PowerSystemCase load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path, "", "cannot open case file");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_case(ss.str());
}

void validate_case(const PowerSystemCase& c) {
    std::set<BusId> bus_ids;
    for (const auto& b : c.buses) {
        const std::string elem = "bus " + std::to_string(b.id);
        if (!bus_ids.insert(b.id).second) throw ValidationError(elem, "id", "duplicate bus id");
        if (!(b.base_kv > 0)) throw ValidationError(elem, "base_kv", "must be positive");
    }
    auto check_bus = [&](const std::string& elem, const char* field, BusId id) {
        if (!bus_ids.count(id))
            throw ValidationError(elem, field, "references unknown bus " + std::to_string(id));
    };

    std::set<std::string> ids;
    auto check_id = [&](const std::string& id) {
        if (id.empty()) throw ValidationError("element", "id", "empty id");
        if (!ids.insert(id).second) throw ValidationError(id, "id", "duplicate element id");
    };

    for (const auto* group : {&c.lines, &c.transformers}) {
        for (const auto& br : *group) {
            check_id(br.id);
            check_bus(br.id, "from", br.from);
            check_bus(br.id, "to", br.to);
            if (br.from == br.to) throw ValidationError(br.id, "to", "branch connects a bus to itself");
            if (br.r == 0.0 && br.x == 0.0) throw ValidationError(br.id, "x", "zero series impedance");
            if (br.r < 0) throw ValidationError(br.id, "r", "must be non-negative");
            if (!(br.tap > 0)) throw ValidationError(br.id, "tap", "must be positive");
        }
    }

    std::set<BusId> stiff_buses;  // buses held by a zero-impedance source
    for (const auto& m : c.machines) {
        check_id(m.id);
        check_bus(m.id, "bus", m.bus);
        if (!(m.H > 0)) throw ValidationError(m.id, "H", "must be positive");
        if (!(m.S_B > 0)) throw ValidationError(m.id, "S_B", "must be positive");
        if (m.D < 0) throw ValidationError(m.id, "D", "must be non-negative");
        if (!(m.v_set > 0)) throw ValidationError(m.id, "v_set", "must be positive");
        if (m.x_d_prime < 0) throw ValidationError(m.id, "x_d_prime", "must be non-negative");
        if (m.governor) {
            if (!(m.governor->T_g > 0)) throw ValidationError(m.id, "governor.T_g", "must be positive");
            if (m.governor->k_g < 0) throw ValidationError(m.id, "governor.k_g", "must be non-negative");
            if (!(m.governor->R > 0)) throw ValidationError(m.id, "governor.R", "must be positive");
        }
        if (m.x_d_prime == 0.0 && !stiff_buses.insert(m.bus).second)
            throw ValidationError(m.id, "x_d_prime",
                                  "two zero-impedance sources on bus " + std::to_string(m.bus));
    }
    for (const auto& g : c.cigs) {
        check_id(g.id);
        check_bus(g.id, "bus", g.bus);
        if (!(g.T_a > 0)) throw ValidationError(g.id, "T_a", "must be positive");
        if (!(g.P_ref > 0)) throw ValidationError(g.id, "P_ref", "must be positive");
        if (g.K_w < 0) throw ValidationError(g.id, "K_w", "must be non-negative");
        if (!(g.v_set > 0)) throw ValidationError(g.id, "v_set", "must be positive");
        if (g.x_s < 0) throw ValidationError(g.id, "x_s", "must be non-negative");
        if (g.x_s == 0.0 && !stiff_buses.insert(g.bus).second)
            throw ValidationError(g.id, "x_s", "two zero-impedance sources on bus " + std::to_string(g.bus));
    }
    for (const auto& l : c.loads) {
        check_id(l.id);
        check_bus(l.id, "bus", l.bus);
        if (l.P_L0 < 0) throw ValidationError(l.id, "P_L0", "must be non-negative");
        if (!(l.V_0 > 0)) throw ValidationError(l.id, "V_0", "must be positive");
        if (l.noise) {
            if (!(l.noise->tau > 0)) throw ValidationError(l.id, "noise.tau", "must be positive");
            if (l.noise->sigma < 0) throw ValidationError(l.id, "noise.sigma", "must be non-negative");
        }
    }

    if (c.machines.empty() && c.cigs.empty())
        throw ValidationError("case", "machines", "at least one machine or CIG is required");
    if (!c.find_machine(c.slack) && !c.find_cig(c.slack))
        throw ValidationError("case", "slack", "slack '" + c.slack + "' is not a machine or CIG");

    // Connectivity over in-service branches (union-find over bus positions).
    std::vector<std::size_t> parent(c.buses.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (const auto* group : {&c.lines, &c.transformers})
        for (const auto& br : *group)
            if (br.in_service) parent[find(c.bus_index(br.from))] = find(c.bus_index(br.to));
    for (std::size_t i = 1; i < parent.size(); ++i)
        if (find(i) != find(0))
            throw ValidationError("bus " + std::to_string(c.buses[i].id), "",
                                  "not connected to bus " + std::to_string(c.buses[0].id));
}

std::string serialize_case(const PowerSystemCase& c) {
    json root;
    root["name"] = c.name;
    root["base_mva"] = c.base_mva;
    root["frequency_hz"] = c.frequency_hz;
    root["omega0"] = c.omega0;
    root["slack"] = c.slack;
    root["buses"] = json::array();
    for (const auto& b : c.buses)
        root["buses"].push_back({{"id", b.id}, {"name", b.name}, {"base_kv", b.base_kv}});
    root["lines"] = json::array();
    for (const auto& br : c.lines) root["lines"].push_back(branch_to_json(br, false));
    root["transformers"] = json::array();
    for (const auto& br : c.transformers) root["transformers"].push_back(branch_to_json(br, true));
    root["machines"] = json::array();
    for (const auto& m : c.machines) {
        json j = {{"id", m.id},       {"bus", m.bus},     {"H", m.H},
                  {"S_B", m.S_B},     {"D", m.D},         {"p_mw", m.p_mw},
                  {"v_set", m.v_set}, {"x_d_prime", m.x_d_prime}, {"x_d_prime_unit", "pu"}};
        if (m.governor)
            j["governor"] = {{"T_g", m.governor->T_g}, {"k_g", m.governor->k_g}, {"R", m.governor->R}};
        root["machines"].push_back(j);
    }
    root["cigs"] = json::array();
    for (const auto& g : c.cigs)
        root["cigs"].push_back({{"id", g.id},     {"bus", g.bus},   {"T_a", g.T_a},
                                {"P_ref", g.P_ref}, {"P_g", g.P_g}, {"K_w", g.K_w},
                                {"K_d", g.K_d},   {"v_set", g.v_set}, {"x_s", g.x_s},
                                {"x_s_unit", "pu"}});
    root["loads"] = json::array();
    for (const auto& l : c.loads) {
        json j = {{"id", l.id},     {"bus", l.bus}, {"P_L0", l.P_L0}, {"Q_L0", l.Q_L0},
                  {"V_0", l.V_0},   {"gamma", l.gamma}};
        if (l.noise) j["noise"] = {{"tau", l.noise->tau}, {"sigma", l.noise->sigma}, {"seed", l.noise->seed}};
        root["loads"].push_back(j);
    }
    return root.dump(2);
}

}  // namespace gridmomentum
