#pragma once

#include "gridmomentum/case_model.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace gridmomentum {

struct PowerFlowOptions {
    double tolerance = 1e-8;  ///< max |mismatch| [pu]
    int max_iterations = 50;
};

struct ElementFlow {
    std::string id;
    double p_mw = 0.0;
    double q_mvar = 0.0;
};

struct PowerFlowSolution {
    Eigen::VectorXd v;      ///< |V| per bus [pu], order of PowerSystemCase::buses
    Eigen::VectorXd theta;  ///< angle per bus [rad]; slack bus is 0
    std::vector<ElementFlow> generators;  ///< machines, then CIGs
    std::vector<ElementFlow> loads;
    double mismatch = 0.0;  ///< max |mismatch| at the returned point [pu]
    int iterations = 0;
    double losses_mw = 0.0;
};

/// Bus admittance matrix [pu] of the branches only (no loads, no sources).
Eigen::MatrixXcd bus_admittance(const PowerSystemCase& c);

/// Newton-Raphson AC power flow from a flat start.
PowerFlowSolution solve_power_flow(const PowerSystemCase& c, const PowerFlowOptions& opts = {});

/// Network reduced onto the internal nodes of all machines and CIGs
/// (machines first, then CIGs). Loads enter as shunt admittances fixed at the
/// power-flow voltage; their conductance can be modulated as (1+eta_l)*G_l0.
struct ReducedNetwork {
    Eigen::MatrixXcd Y;   ///< reduced admittance [pu]
    Eigen::VectorXd E;    ///< internal EMF magnitudes [pu]
    double base_mva = 100.0;

    // Load conductance modulation. Loads sitting on a retained node act on
    // the diagonal directly; the rest enter through a low-rank update
    // Y(eta) = Y + A*D*(I + W*D)^{-1}*B, D = diag(eta*G) over those loads.
    Eigen::VectorXd load_g;                ///< G_l0 per load [pu]
    std::vector<int> load_retained_node;   ///< per load: retained node or -1
    std::vector<int> load_update_slot;     ///< per load: column in A/W or -1
    Eigen::MatrixXcd A;
    Eigen::MatrixXcd B;
    Eigen::MatrixXcd W;

    std::size_t size() const { return static_cast<std::size_t>(Y.rows()); }

    /// Exact admittance with modulated load conductances; eta has one entry per load.
    Eigen::MatrixXcd modulated(std::span<const double> eta) const;

    /// d Y / d eta_l evaluated at eta = 0.
    Eigen::MatrixXcd load_sensitivity(std::size_t load) const;
};

/// Electrical power P_e [MW] of every internal node for rotor angles delta.
Eigen::VectorXd electrical_power(const Eigen::MatrixXcd& Y, const Eigen::VectorXd& E,
                                 const Eigen::VectorXd& delta, double base_mva);

/// P_e and the analytic Jacobian dP_e/d delta [MW/rad].
void electrical_power_jacobian(const Eigen::MatrixXcd& Y, const Eigen::VectorXd& E,
                               const Eigen::VectorXd& delta, double base_mva,
                               Eigen::VectorXd& p_e, Eigen::MatrixXd& jac);

struct EquilibriumPoint {
    std::vector<std::string> element_ids;  ///< machines, then CIGs
    Eigen::VectorXd delta;                 ///< [rad]
    double omega = 1.0;                    ///< [pu]
    Eigen::VectorXd p_set;                 ///< mechanical / converter setpoint per element [MW]
    ReducedNetwork network;

    std::size_t num_machines = 0;
    std::size_t num_cigs = 0;
};

/// Internal EMFs, rotor angles, setpoints and the Kron-reduced network.
EquilibriumPoint build_equilibrium(const PowerSystemCase& c, const PowerFlowSolution& pf);

/// Kron reduction keeping `retained` nodes of Y in the given order.
Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& Y, const std::vector<int>& retained);

}  // namespace gridmomentum
