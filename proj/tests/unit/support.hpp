#pragma once

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/power_flow.hpp"

#include <string>

namespace testsupport {

inline std::string data_path(const std::string& name) { return std::string(GRIDMOMENTUM_DATA_DIR) + "/" + name; }

inline const gridmomentum::PowerSystemCase& two_machine() {
    static const auto c = gridmomentum::load_case_file(data_path("two_machine.json"));
    return c;
}
inline const gridmomentum::PowerSystemCase& two_machine_cig() {
    static const auto c = gridmomentum::load_case_file(data_path("two_machine_cig.json"));
    return c;
}
inline const gridmomentum::PowerSystemCase& ieee39() {
    static const auto c = gridmomentum::load_case_file(data_path("ieee39_classical.json"));
    return c;
}

inline gridmomentum::EquilibriumPoint equilibrium(const gridmomentum::PowerSystemCase& c) {
    return gridmomentum::build_equilibrium(c, gridmomentum::solve_power_flow(c));
}

}  // namespace testsupport
