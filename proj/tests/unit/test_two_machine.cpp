#include "support.hpp"

#include "gridmomentum/estimator.hpp"
#include "gridmomentum/linear_analysis.hpp"
#include "gridmomentum/two_machine.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace gridmomentum;
using Catch::Approx;
using cd = std::complex<double>;

namespace {

TwoMachineParams params() {
    const auto& c = testsupport::two_machine();
    return two_machine_params(c, testsupport::equilibrium(c));
}

cd jw(double f) { return {0.0, 2 * std::numbers::pi * f}; }

}  // namespace

TEST_CASE("parameters read off the two-machine case") {
    const auto p = params();
    CHECK(p.M1 == Approx(800.0));
    CHECK(p.M2 == Approx(500.0));
    CHECK(p.K1 == Approx(5000.0));
    CHECK(p.T_g1 == Approx(50.0));
    CHECK(p.R == Approx(0.1));
    CHECK(p.X == Approx(0.1));
    CHECK(p.R_L == Approx(100.0 * 100.0 / 90.0).epsilon(1e-6));
    CHECK(p.Omega == Approx(2 * std::numbers::pi * 50));
    CHECK(p.xi() * p.Omega > 1e5);
}

TEST_CASE("reciprocal coefficients") {
    const auto p = params();
    const auto c = reciprocal_coefficients(p, 1.0, 0.0);
    CHECK(c.alpha[4] == Approx(p.M1 * p.M2 * p.R1 * p.T_g1));
    CHECK(c.alpha[0] == Approx((p.D1 + p.D2 + p.K1) * p.xi() * p.Omega * p.R1));
    const auto zero = reciprocal_coefficients(p, 0.0, 0.0);
    for (const auto& b : zero.beta1) CHECK(b == cd(0.0));
    for (const auto& b : zero.beta2) CHECK(b == cd(0.0));
}

TEST_CASE("exact coefficients reduce to the reciprocal ones for equal couplings") {
    auto p = params();
    p.R = 0.0;
    const auto a = reciprocal_coefficients(p, 0.3, 0.7), b = exact_coefficients(p, 0.3, 0.7);
    for (std::size_t k = 0; k < 5; ++k) CHECK(a.alpha[k] == Approx(b.alpha[k]).epsilon(1e-12));
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(a.beta1[k] - b.beta1[k]) <= 1e-12 * std::abs(b.beta1[k]) + 1e-300);
        CHECK(std::abs(a.beta2[k] - b.beta2[k]) <= 1e-12 * std::abs(b.beta2[k]) + 1e-300);
    }
}

TEST_CASE("denominator matches the characteristic polynomial of the state matrix") {
    const auto& c = testsupport::two_machine();
    const auto eq = testsupport::equilibrium(c);
    const auto m = linearize(c, eq);
    const auto p = two_machine_params(c, eq);
    const auto ev = eigen_report(m).eigenvalues;
    std::vector<cd> poly{1.0};
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev[i]) <= 1e-8) continue;
        std::vector<cd> next(poly.size() + 1, 0.0);
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k + 1] += poly[k];
            next[k] -= ev[i] * poly[k];
        }
        poly = next;
    }
    REQUIRE(poly.size() == 5);
    const auto coeff = exact_coefficients(p, 1.0, 0.0);
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(poly[k].real() == Approx(coeff.alpha[k] / coeff.alpha[4]).epsilon(1e-8));
}

TEST_CASE("both speeds share the low-frequency limit") {
    const auto p = params();
    const auto [w1, w2] = exact_response(p, 1e-3, 2e-3, jw(1e-7));
    CHECK(std::abs(w1 - w2) <= 1e-6 * std::abs(w1));
}

TEST_CASE("aggregate approximation") {
    const auto p = params();
    const auto a = approx_response(p, 1.0 / p.M1, 0.0, jw(0.01));
    REQUIRE(a.model.poles.size() == 2);
    CHECK(residue_sum(a.model) == Approx(1.0 / 1300.0).epsilon(1e-12));
    const double den0 = (a.model.poles[0] * a.model.poles[1]).real();
    CHECK(den0 == Approx((p.D1 + p.D2 + p.K1) / ((p.M1 + p.M2) * p.T_g1)).epsilon(1e-12));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const cd s(u(rng), u(rng));
        const auto r = approx_response(p, 1.0 / p.M1, 0.0, s);
        CHECK(std::abs(r.model.evaluate(s) - r.value) <= 1e-12 * std::abs(r.value));
    }

    double worst = 0;
    for (double f : log_space(1e-3, 1.0, 200)) {
        const auto exact = exact_response(p, 1.0 / p.M1, 0.0, jw(f)).first;
        worst = std::max(worst, std::abs(approx_response(p, 1.0 / p.M1, 0.0, jw(f)).value - exact) / std::abs(exact));
    }
    CHECK(worst <= 0.05);
}

TEST_CASE("momentum from exact residue sums") {
    const auto p = params();
    auto q = p;
    q.M2 += 100.0;
    const double S = residue_sum(approx_response(p, 1.0, 0.0, jw(0.01)).model);
    const double S_hat = residue_sum(approx_response(q, 1.0, 0.0, jw(0.01)).model);
    CHECK(estimate_from_sums(S, S_hat, 100.0) == Approx(1300.0).epsilon(1e-12));
}

TEST_CASE("curve export") {
    const auto csv = two_machine_curves_csv(params(), 0.1, 0.5, log_space(1e-3, 1e1, 5));
    CHECK(csv.rfind("# gridmomentum two-machine curves v1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}
