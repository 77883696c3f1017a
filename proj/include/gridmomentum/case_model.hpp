#pragma once

// Grid case description: buses, branches, synchronous machines with optional
// first-order governors, grid-forming converters (CIGs) and loads.
//
// Units after loading: powers in MW/Mvar, ratings in MVA, branch and
// reactance data in per-unit on the system base, momentum in MJ (MW*s).
// Momentum follows the per-unit-speed convention: M = 2*H*S_B for a machine
// and M = T_a*P_ref for a CIG. The physical angular momentum differs from
// this by the constant 2*pi/Omega, which cancels everywhere it is used.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridmomentum {

using BusId = int;

struct GovernorParams {
    double T_g = 0.0;  ///< time constant [s]
    double k_g = 0.0;  ///< gain [pu]
    double R = 0.0;    ///< droop [pu]

    bool operator==(const GovernorParams&) const = default;
};

struct MachineParams {
    std::string id;
    BusId bus = 0;
    double H = 0.0;    ///< inertia constant [s]
    double S_B = 0.0;  ///< rating [MVA]
    double D = 0.0;    ///< load-damping factor [pu on S_B]
    std::optional<GovernorParams> governor;
    double p_mw = 0.0;       ///< dispatch used by the power flow (ignored for the slack)
    double v_set = 1.0;      ///< terminal voltage setpoint [pu]
    double x_d_prime = 0.0;  ///< internal reactance [pu, system base]

    /// Primary-control gain k_g/R expressed in MW per pu speed.
    double governor_gain_mw() const {
        return governor ? governor->k_g / governor->R * S_B : 0.0;
    }

    bool operator==(const MachineParams&) const = default;
};

struct CigParams {
    std::string id;
    BusId bus = 0;
    double T_a = 0.0;    ///< virtual inertia constant [s]
    double P_ref = 0.0;  ///< rating [MVA]
    double P_g = 0.0;    ///< power setpoint [pu of P_ref]
    double K_w = 0.0;    ///< load damping [pu]
    double K_d = 0.0;    ///< slip gain [pu]; only 0 is supported by the dynamics
    double v_set = 1.0;
    double x_s = 0.0;    ///< replicated stator reactance [pu, system base]

    bool operator==(const CigParams&) const = default;
};

struct OUParams {
    double tau = 2.0;    ///< reversion time 1/Upsilon [s]
    double sigma = 0.0;  ///< stationary standard deviation [fraction of P_L0]
    unsigned long long seed = 0;

    bool operator==(const OUParams&) const = default;
};

struct LoadParams {
    std::string id;
    BusId bus = 0;
    double P_L0 = 0.0;  ///< [MW]
    double Q_L0 = 0.0;  ///< [Mvar]
    double V_0 = 0.0;   ///< voltage rating [kV]
    double gamma = 0.0;
    std::optional<OUParams> noise;

    bool operator==(const LoadParams&) const = default;
};

struct Bus {
    BusId id = 0;
    std::string name;
    double base_kv = 0.0;

    bool operator==(const Bus&) const = default;
};

/// Pi-model branch. Transformers carry an off-nominal tap on the from side.
struct Branch {
    std::string id;
    BusId from = 0;
    BusId to = 0;
    double r = 0.0;    ///< [pu]
    double x = 0.0;    ///< [pu]
    double b = 0.0;    ///< total line charging [pu]
    double tap = 1.0;
    bool in_service = true;

    bool operator==(const Branch&) const = default;
};

struct PowerSystemCase {
    std::string name;
    double base_mva = 100.0;
    double frequency_hz = 50.0;
    double omega0 = 1.0;
    std::string slack;  ///< element id (machine or CIG) acting as angle/power reference
    std::vector<Bus> buses;
    std::vector<Branch> lines;
    std::vector<Branch> transformers;
    std::vector<MachineParams> machines;
    std::vector<CigParams> cigs;
    std::vector<LoadParams> loads;

    /// Base synchronous frequency Omega [rad/s].
    double base_omega() const;

    /// Position of a bus in `buses`; throws ValidationError when unknown.
    std::size_t bus_index(BusId id) const;

    const MachineParams* find_machine(std::string_view id) const;
    const CigParams* find_cig(std::string_view id) const;
    std::size_t cig_index(std::string_view id) const;

    bool operator==(const PowerSystemCase&) const = default;
};

double machine_momentum(const MachineParams& m);
double cig_momentum(const CigParams& c);

/// Sum of machine and CIG momenta [MJ]; the ground truth for estimates.
double global_momentum_true(const PowerSystemCase& c);

/// Parses and validates a JSON case file. Unit-tagged values are resolved
/// onto the system base.
PowerSystemCase load_case(std::string_view source);
PowerSystemCase load_case_file(const std::string& path);

/// Canonical JSON form (per-unit, explicit unit tags); parses back to an equal case.
std::string serialize_case(const PowerSystemCase& c);

/// Checks every invariant of a case; throws ValidationError on the first violation.
void validate_case(const PowerSystemCase& c);

}  // namespace gridmomentum
