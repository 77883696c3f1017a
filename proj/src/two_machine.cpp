#include "gridmomentum/two_machine.hpp"

#include "gridmomentum/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gridmomentum {

using cd = std::complex<double>;

double TwoMachineParams::xi() const {
    const double z2 = R * R + X * X, d = delta1 - delta2;
    return rho1 * rho2 / z2 * (R * std::sin(d) + X * std::cos(d));
}

double TwoMachineParams::xi2() const {
    const double z2 = R * R + X * X, d = delta1 - delta2;
    return rho1 * rho2 / z2 * (X * std::cos(d) - R * std::sin(d));
}

double TwoMachineParams::p_e1(double d1, double d2) const {
    const double z2 = R * R + X * X, d = d1 - d2;
    return (R * rho1 * rho1 - R * rho1 * rho2 * std::cos(d) + X * rho1 * rho2 * std::sin(d)) / z2 +
           rho1 * rho1 / R_L;
}

double TwoMachineParams::p_e2(double d1, double d2) const {
    const double z2 = R * R + X * X, d = d2 - d1;
    return (R * rho2 * rho2 - R * rho1 * rho2 * std::cos(d) + X * rho1 * rho2 * std::sin(d)) / z2;
}

TwoMachineParams two_machine_params(const PowerSystemCase& c, const EquilibriumPoint& eq) {
    if (c.machines.size() != 2 || !c.cigs.empty() || c.lines.size() + c.transformers.size() != 1 ||
        c.loads.size() != 1 || c.buses.size() != 2)
        throw ValidationError(c.name, "", "not a two-machine case (2 machines, 1 line, 1 load at bus 1)");
    const auto& g1 = c.machines[0];
    const auto& g2 = c.machines[1];
    if (!g1.governor || g2.governor) throw ValidationError(c.name, "governor", "only machine 1 may have a governor");
    if (g1.x_d_prime != 0 || g2.x_d_prime != 0)
        throw ValidationError(c.name, "x_d_prime", "internal impedances must be zero");
    const auto& br = c.lines.empty() ? c.transformers[0] : c.lines[0];
    if (br.b != 0 || br.tap != 1) throw ValidationError(br.id, "", "line must have no charging and unit tap");
    const std::size_t b1 = c.bus_index(g1.bus), b2 = c.bus_index(g2.bus);
    if (c.bus_index(c.loads[0].bus) != b1) throw ValidationError(c.loads[0].id, "bus", "load must sit at machine 1");
    if (c.loads[0].Q_L0 != 0) throw ValidationError(c.loads[0].id, "Q_L0", "load must be resistive");

    const auto pf = solve_power_flow(c);
    const double kv = c.buses[b1].base_kv;
    const double z_base = kv * kv / c.base_mva;
    TwoMachineParams p;
    p.M1 = machine_momentum(g1);
    p.M2 = machine_momentum(g2);
    p.D1 = g1.D * g1.S_B;
    p.D2 = g2.D * g2.S_B;
    p.T_g1 = g1.governor->T_g;
    p.K1 = g1.governor_gain_mw();
    p.R1 = g1.governor->R;
    p.R = br.r * z_base;
    p.X = br.x * z_base;
    p.rho1 = pf.v[static_cast<Eigen::Index>(b1)] * kv;
    p.rho2 = pf.v[static_cast<Eigen::Index>(b2)] * c.buses[b2].base_kv;
    p.R_L = p.rho1 * p.rho1 / pf.loads[0].p_mw;
    p.delta1 = eq.delta[0];
    p.delta2 = eq.delta[1];
    p.Omega = c.base_omega();
    return p;
}

TwoMachineCoefficients reciprocal_coefficients(const TwoMachineParams& p, cd b1, cd b2) {
    const double M1 = p.M1, M2 = p.M2, D1 = p.D1, D2 = p.D2, Tg = p.T_g1, K = p.K1, R1 = p.R1;
    const double xo = p.xi() * p.Omega;
    const cd P = b1 * M1 + b2 * M2;
    TwoMachineCoefficients c;
    c.alpha[4] = M1 * M2 * R1 * Tg;
    c.alpha[3] = R1 * (Tg * (D2 * M1 + D1 * M2) + M1 * M2);
    c.alpha[2] = ((D2 * (D1 * Tg + M1) + D1 * M2) / xo + (M1 + M2) * Tg + K * M2 / xo) * xo * R1;
    c.alpha[1] = ((D1 + D2) * Tg + M1 + M2 + D2 * (D1 + K) / xo) * xo * R1;
    c.alpha[0] = (D1 + D2 + K) * xo * R1;
    c.beta1[3] = M1 * M2 * R1 * Tg * b1;
    c.beta1[2] = M1 * (D2 * Tg + M2) * R1 * b1;
    c.beta1[1] = (P * Tg + b1 * M1 * D2 / xo) * xo * R1;
    c.beta1[0] = P * xo * R1;
    c.beta2[3] = M1 * M2 * R1 * Tg * b2;
    c.beta2[2] = M2 * (D1 * Tg + M1) * R1 * b2;
    c.beta2[1] = (P * Tg + b2 * M2 * (D1 + K) / xo) * xo * R1;
    c.beta2[0] = c.beta1[0];
    return c;
}

TwoMachineCoefficients exact_coefficients(const TwoMachineParams& p, cd b1, cd b2) {
    const double M1 = p.M1, M2 = p.M2, D1 = p.D1, D2 = p.D2, Tg = p.T_g1, K = p.K1, R1 = p.R1;
    const double x1 = p.xi() * p.Omega, x2 = p.xi2() * p.Omega;
    const cd P1 = M1 * b1, P2 = M2 * b2;
    const cd cross = x2 * P1 + x1 * P2;
    TwoMachineCoefficients c;
    c.alpha[4] = R1 * M1 * M2 * Tg;
    c.alpha[3] = R1 * (M1 * Tg * D2 + (M1 + D1 * Tg) * M2);
    c.alpha[2] = R1 * ((M1 + D1 * Tg) * D2 + (D1 + K) * M2 + x1 * M2 * Tg + x2 * M1 * Tg);
    c.alpha[1] = R1 * ((D1 + K) * D2 + x1 * (M2 + D2 * Tg) + x2 * (M1 + D1 * Tg));
    c.alpha[0] = R1 * (x1 * D2 + x2 * (D1 + K));
    c.beta1[3] = R1 * P1 * M2 * Tg;
    c.beta1[2] = R1 * P1 * (M2 + D2 * Tg);
    c.beta1[1] = R1 * (P1 * D2 + Tg * cross);
    c.beta1[0] = R1 * cross;
    c.beta2[3] = R1 * P2 * M1 * Tg;
    c.beta2[2] = R1 * P2 * (M1 + D1 * Tg);
    c.beta2[1] = R1 * (P2 * (D1 + K) + Tg * cross);
    c.beta2[0] = c.beta1[0];
    return c;
}

std::pair<cd, cd> evaluate_coefficients(const TwoMachineCoefficients& c, cd s) {
    cd den = 0.0, n1 = 0.0, n2 = 0.0;
    for (int k = 4; k >= 0; --k) den = den * s + c.alpha[static_cast<std::size_t>(k)];
    for (int k = 3; k >= 0; --k) {
        n1 = n1 * s + c.beta1[static_cast<std::size_t>(k)];
        n2 = n2 * s + c.beta2[static_cast<std::size_t>(k)];
    }
    if (den == 0.0) throw NumericalError("two-machine response evaluated at a pole");
    return {n1 / den, n2 / den};
}

std::pair<cd, cd> exact_response(const TwoMachineParams& p, cd b1, cd b2, cd s) {
    return evaluate_coefficients(exact_coefficients(p, b1, b2), s);
}

ApproxResponse approx_response(const TwoMachineParams& p, cd b1, cd b2, cd s) {
    const double G = p.M1 + p.M2, Tg = p.T_g1;
    const cd P = p.M1 * b1 + p.M2 * b2;
    const double a2 = G * Tg, a1 = (p.D1 + p.D2) * Tg + G, a0 = p.D1 + p.D2 + p.K1;
    ApproxResponse out;
    const cd den = (s * a2 + a1) * s + a0;
    if (den == 0.0) throw NumericalError("low-frequency response evaluated at a pole");
    out.value = (s * Tg + 1.0) * P / den;
    const cd disc = std::sqrt(cd(a1 * a1 - 4.0 * a2 * a0, 0.0));
    if (std::abs(disc) <= 1e-14 * a1) throw NumericalError("low-frequency model has a repeated pole");
    cd r1 = (-a1 + disc) / (2.0 * a2), r2 = (-a1 - disc) / (2.0 * a2);
    if (r1.imag() < r2.imag()) std::swap(r1, r2);
    out.model.order = 2;
    out.model.poles = {r1, r2};
    out.model.residues = {(r1 * Tg + 1.0) * P / (a2 * (r1 - r2)), (r2 * Tg + 1.0) * P / (a2 * (r2 - r1))};
    return out;
}

std::string two_machine_curves_csv(const TwoMachineParams& p, double p1_mw, double p2_mw,
                                   const std::vector<double>& f_hz) {
    std::ostringstream os;
    os.precision(12);
    os << "# gridmomentum two-machine curves v1\n";
    os << "f_Hz,abs_dw1,abs_dw2,abs_dw_approx,phase_dw1_rad,phase_dw2_rad,phase_dw_approx_rad\n";
    const cd b1 = p1_mw / p.M1, b2 = p2_mw / p.M2;
    const auto coeff = exact_coefficients(p, b1, b2);
    for (double f : f_hz) {
        const cd s(0.0, 2.0 * std::numbers::pi * f);
        const auto [w1, w2] = evaluate_coefficients(coeff, s);
        const cd wa = approx_response(p, b1, b2, s).value;
        os << f << ',' << std::abs(w1) << ',' << std::abs(w2) << ',' << std::abs(wa) << ',' << std::arg(w1)
           << ',' << std::arg(w2) << ',' << std::arg(wa) << '\n';
    }
    return os.str();
}

}  // namespace gridmomentum
