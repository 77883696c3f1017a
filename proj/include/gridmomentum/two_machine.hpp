#pragma once

// Closed-form small-signal model of two machines joined by one line, with a
// resistive load at bus 1 and a governor on machine 1 only.
//
// Power inputs b1, b2 are the per-unit accelerations entering the swing
// equations, so M1*b1 and M2*b2 are the injected powers [MW].

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/power_flow.hpp"
#include "gridmomentum/vector_fitting.hpp"

#include <array>
#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace gridmomentum {

struct TwoMachineParams {
    double M1 = 0, M2 = 0;    ///< [MJ]
    double D1 = 0, D2 = 0;    ///< [MW/pu]
    double T_g1 = 0;          ///< [s]
    double K1 = 0;            ///< k_g1/R1 [MW/pu]
    double R1 = 1;            ///< droop [pu]; a common factor of every coefficient
    double R = 0, X = 0;      ///< line [Ohm]
    double R_L = 0;           ///< load at bus 1 [Ohm]
    double rho1 = 0, rho2 = 0;      ///< voltage magnitudes [kV]
    double delta1 = 0, delta2 = 0;  ///< [rad]
    double Omega = 0;               ///< [rad/s]

    /// dP_e1/d delta_1 [MW/rad]; the coupling used by reciprocal_coefficients().
    double xi() const;
    /// dP_e2/d delta_2 [MW/rad]; differs from xi() when R != 0.
    double xi2() const;

    double p_e1(double d1, double d2) const;  ///< [MW]
    double p_e2(double d1, double d2) const;  ///< [MW]
};

/// Reads the parameters off a two-machine case and its equilibrium.
TwoMachineParams two_machine_params(const PowerSystemCase& c, const EquilibriumPoint& eq);

struct TwoMachineCoefficients {
    std::array<double, 5> alpha{};               ///< alpha_0..alpha_4
    std::array<std::complex<double>, 4> beta1{};  ///< beta^1_0..beta^1_3
    std::array<std::complex<double>, 4> beta2{};
};

/// Coefficients assuming a reciprocal coupling xi, terms divided by xi*Omega kept.
TwoMachineCoefficients reciprocal_coefficients(const TwoMachineParams& p, std::complex<double> b1,
                                  std::complex<double> b2);

/// Coefficients of the exact transfer functions with separate couplings
/// xi() and xi2(); they reduce to reciprocal_coefficients() when the two are equal.
TwoMachineCoefficients exact_coefficients(const TwoMachineParams& p, std::complex<double> b1,
                                          std::complex<double> b2);

/// (d omega_1, d omega_2) at s from a coefficient set.
std::pair<std::complex<double>, std::complex<double>> evaluate_coefficients(const TwoMachineCoefficients& c,
                                                                            std::complex<double> s);

std::pair<std::complex<double>, std::complex<double>> exact_response(const TwoMachineParams& p,
                                                                     std::complex<double> b1,
                                                                     std::complex<double> b2,
                                                                     std::complex<double> s);

struct ApproxResponse {
    std::complex<double> value;
    RationalModel model;  ///< two poles a1, a2 and residues c1, c2
};

/// Low-frequency aggregate response and its partial-fraction form.
ApproxResponse approx_response(const TwoMachineParams& p, std::complex<double> b1,
                               std::complex<double> b2, std::complex<double> s);

/// CSV rows f, |dw1|, |dw2|, |dw_approx| for injected powers p1, p2 [MW].
std::string two_machine_curves_csv(const TwoMachineParams& p, double p1_mw, double p2_mw,
                                   const std::vector<double>& f_hz);

}  // namespace gridmomentum
