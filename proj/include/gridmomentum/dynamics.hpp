#pragma once

// Large-signal model: classical machines with first-order governors,
// grid-forming CIGs with a virtual swing equation, algebraic network.
//
// State layout: [delta (machines, then CIGs); omega (same order);
// P_m (governed machines only, in machine order)].

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/power_flow.hpp"
#include "gridmomentum/stochastic.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace gridmomentum {

struct StateLayout {
    std::size_t num_machines = 0;
    std::size_t num_cigs = 0;
    std::vector<int> governor_slot;  ///< per element: index into the P_m block or -1

    std::size_t num_elements() const { return num_machines + num_cigs; }
    std::size_t num_governors() const;
    std::size_t size() const { return 2 * num_elements() + num_governors(); }
    std::size_t delta(std::size_t k) const { return k; }
    std::size_t omega(std::size_t k) const { return num_elements() + k; }
    std::size_t pm(std::size_t slot) const { return 2 * num_elements() + slot; }
};

/// Time-varying inputs. Callbacks may be empty.
struct ExogenousInputs {
    /// Fills eta_gf per CIG at time t; smooth in t.
    std::function<void(double t, std::span<double> eta_gf)> eta_gf;
    /// Overwrites the momentum [MJ] per CIG at time t (prefilled with nominal);
    /// treated as piecewise constant and sampled once per step.
    std::function<void(double t, std::span<double> momentum)> inertia_override;
};

/// Per-step inputs resolved to numbers.
struct StepInputs {
    Eigen::VectorXd eta_gf;        ///< per CIG
    Eigen::VectorXd momentum;      ///< per element [MJ]
    const Eigen::MatrixXcd* Y = nullptr;  ///< network admittance; nominal when null
};

class DynamicModel {
public:
    DynamicModel(const PowerSystemCase& c, const EquilibriumPoint& eq);

    const StateLayout& layout() const { return layout_; }
    const EquilibriumPoint& equilibrium() const { return eq_; }
    double base_omega() const { return Omega_; }
    double omega0() const { return omega0_; }

    const Eigen::VectorXd& momentum() const { return M_; }     ///< nominal [MJ]
    const Eigen::VectorXd& damping() const { return D_; }      ///< [MW/pu]
    const Eigen::VectorXd& governor_gain() const { return K_; }  ///< [MW/pu], 0 if none
    const Eigen::VectorXd& governor_tau() const { return Tg_; }  ///< [s], 0 if none

    Eigen::VectorXd equilibrium_state() const;
    StepInputs nominal_inputs() const;

    /// dx/dt; the Jacobian d(dx/dt)/dx is written when `jac` is non-null.
    void rhs(const Eigen::VectorXd& x, const StepInputs& u, Eigen::VectorXd& dx,
             Eigen::MatrixXd* jac = nullptr) const;

    /// Electrical power [MW] per element at state x.
    Eigen::VectorXd electrical_power(const Eigen::VectorXd& x, const Eigen::MatrixXcd* Y = nullptr) const;

private:
    EquilibriumPoint eq_;
    StateLayout layout_;
    double Omega_ = 0.0;
    double omega0_ = 1.0;
    Eigen::VectorXd M_, D_, K_, Tg_;
};

/// Derivative of the full model at state x (convenience wrapper).
Eigen::VectorXd rhs(const PowerSystemCase& c, const EquilibriumPoint& eq, const Eigen::VectorXd& x,
                    const ExogenousInputs& inputs, double t);

struct IntegrationOptions {
    double step = 0.01;         ///< [s]
    int record_every = 1;       ///< keep every n-th step
    double tolerance = 1e-10;   ///< corrector: |dx| <= tol*max(1,|x|) componentwise
    int max_corrector_iterations = 25;
    bool store = true;          ///< keep samples in the returned Trajectory
    /// Called at every recorded sample (t, x) whether or not it is stored.
    std::function<void(double t, const Eigen::VectorXd& x)> observer;
};

struct Trajectory {
    std::vector<double> t;            ///< uniform grid [s]
    Eigen::MatrixXd x;                ///< row per sample, StateLayout columns
    Eigen::MatrixXd p_e_cig;          ///< [MW], row per sample, column per CIG
    // CIG internal-node voltage and injected current, network frame [pu].
    Eigen::MatrixXd v_d, v_q, i_d, i_q;

    std::size_t samples() const { return t.size(); }
    double step() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

/// Fixed-step trapezoidal integration with a Newton corrector. Load noise,
/// when given, is sampled once per step and held.
Trajectory integrate(const DynamicModel& model, const Eigen::VectorXd& x0, double t_end,
                     const IntegrationOptions& opts, const ExogenousInputs& inputs = {},
                     OUProcessSet* noise = nullptr);

}  // namespace gridmomentum
