#include "support.hpp"

#include "gridmomentum/dynamics.hpp"
#include "gridmomentum/errors.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <random>

using namespace gridmomentum;
using Catch::Approx;
using cd = std::complex<double>;

namespace {

// Two-bus system with zero internal impedances: P injected at bus 2 through
// the line for a given angle difference, in MW with kV and Ohm data.
double p_into_line_from_bus2(double rho1, double rho2, double R, double X, double d21) {
    const cd V1 = rho1, V2 = std::polar(rho2, d21), Z(R, X);
    return (V2 * std::conj((V2 - V1) / Z)).real();
}

double bisect(const std::function<double(double)>& g, double lo, double hi) {
    double glo = g(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi), gm = g(mid);
        if ((gm < 0) == (glo < 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("two-machine dispatch") {
    const auto& c = testsupport::two_machine();
    const auto pf = solve_power_flow(c);
    CHECK(pf.mismatch <= 1e-8);
    REQUIRE(pf.generators.size() == 2);
    CHECK(pf.generators[0].p_mw == Approx(40.0).margin(0.05));
    CHECK(pf.generators[1].p_mw == Approx(50.0).margin(1e-9));
    CHECK(pf.v[0] == Approx(1.0));
    CHECK(pf.v[1] == Approx(1.0));
}

TEST_CASE("two-machine angle agrees with a bisection solve") {
    const auto& c = testsupport::two_machine();
    const auto pf = solve_power_flow(c);
    const double d21 = bisect([](double d) { return p_into_line_from_bus2(100, 100, 0.1, 0.1, d) - 50.0; }, 0.0, 0.7);
    CHECK(pf.theta[1] - pf.theta[0] == Approx(d21).epsilon(1e-9));
    const auto eq = testsupport::equilibrium(c);
    CHECK(eq.delta[1] - eq.delta[0] == Approx(d21).epsilon(1e-9));
}

TEST_CASE("single machine without load") {
    const auto c = load_case(R"({"name":"one","slack":"G","buses":[{"id":1,"base_kv":20}],
        "machines":[{"id":"G","bus":1,"H":3,"S_B":50,"D":1}]})");
    const auto pf = solve_power_flow(c);
    CHECK(pf.theta[0] == 0.0);
    CHECK(std::abs(pf.generators[0].p_mw) <= 1e-9);
    CHECK(std::abs(pf.losses_mw) <= 1e-9);
}

TEST_CASE("power balance closes on the 39-bus case") {
    const auto& c = testsupport::ieee39();
    const auto pf = solve_power_flow(c);
    CHECK(pf.mismatch <= 1e-8);
    double gen = 0, load = 0;
    for (const auto& g : pf.generators) gen += g.p_mw;
    for (const auto& l : pf.loads) load += l.p_mw;
    CHECK(gen - load - pf.losses_mw == Approx(0.0).margin(1e-6 * c.base_mva));

    const auto Y = bus_admittance(c);
    Eigen::VectorXcd V(pf.v.size());
    for (Eigen::Index i = 0; i < V.size(); ++i) V[i] = std::polar(pf.v[i], pf.theta[i]);
    const Eigen::VectorXcd S = V.array() * (Y * V).conjugate().array();
    CHECK(S.real().sum() * c.base_mva == Approx(pf.losses_mw).margin(1e-6));
}

TEST_CASE("Kron reduction preserves retained currents") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = 9;
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const cd y(std::abs(u(rng)), -5.0 - 5.0 * std::abs(u(rng)));
            Y(i, j) = Y(j, i) = -y;
            Y(i, i) += y;
            Y(j, j) += y;
        }
    for (int i = 0; i < n; ++i) Y(i, i) += cd(0.2, 0.1);
    const std::vector<int> kept{6, 1, 4};
    const std::vector<int> gone{0, 2, 3, 5, 7, 8};
    const auto Yr = kron_reduce(Y, kept);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXcd Vk(3);
        for (auto& v : Vk) v = cd(u(rng), u(rng));
        Eigen::MatrixXcd Ygg(6, 6), Ygk(6, 3), Ykk(3, 3), Ykg(3, 6);
        for (int a = 0; a < 6; ++a) {
            for (int b = 0; b < 6; ++b) Ygg(a, b) = Y(gone[a], gone[b]);
            for (int b = 0; b < 3; ++b) Ygk(a, b) = Y(gone[a], kept[b]);
        }
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) Ykk(a, b) = Y(kept[a], kept[b]);
            for (int b = 0; b < 6; ++b) Ykg(a, b) = Y(kept[a], gone[b]);
        }
        const Eigen::VectorXcd Vg = Ygg.partialPivLu().solve(-Ygk * Vk);
        const Eigen::VectorXcd I = Ykk * Vk + Ykg * Vg;
        CHECK((Yr * Vk - I).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("reduced two-machine network reproduces the closed-form powers") {
    const auto& c = testsupport::two_machine();
    const auto eq = testsupport::equilibrium(c);
    REQUIRE(eq.network.size() == 2);
    const double R = 0.1, X = 0.1, Z2 = R * R + X * X, RL = 100.0 * 100.0 / 90.0;
    const double r1 = 100.0 * eq.network.E[0], r2 = 100.0 * eq.network.E[1];
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd d(2);
        d << u(rng), u(rng);
        const double d12 = d[0] - d[1];
        const double pe1 = r1 * r1 / RL + r1 * r1 * R / Z2 - r1 * r2 / Z2 * (R * std::cos(d12) - X * std::sin(d12));
        const double pe2 = r2 * r2 * R / Z2 - r1 * r2 / Z2 * (R * std::cos(d12) + X * std::sin(d12));
        const auto pe = electrical_power(eq.network.Y, eq.network.E, d, c.base_mva);
        CHECK(pe[0] == Approx(pe1).epsilon(1e-10).margin(1e-10));
        CHECK(pe[1] == Approx(pe2).epsilon(1e-10).margin(1e-10));
    }
}

TEST_CASE("equilibrium is a fixed point of the dynamics") {
    for (const auto* c : {&testsupport::two_machine(), &testsupport::two_machine_cig(), &testsupport::ieee39()}) {
        const auto eq = testsupport::equilibrium(*c);
        const DynamicModel model(*c, eq);
        Eigen::VectorXd dx;
        model.rhs(model.equilibrium_state(), model.nominal_inputs(), dx);
        CHECK(dx.cwiseAbs().maxCoeff() <= 1e-9);
    }
    CHECK(testsupport::equilibrium(testsupport::ieee39()).network.size() == 13);
}

TEST_CASE("power flow reports divergence") {
    auto c = testsupport::ieee39();
    c.loads[0].P_L0 = 1e5;
    CHECK_THROWS_AS(solve_power_flow(c), NumericalError);
}
