#include "gridmomentum/errors.hpp"
#include "gridmomentum/linear_analysis.hpp"
#include "gridmomentum/vector_fitting.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace gridmomentum;
using Catch::Approx;

namespace {

cplx jw(double f) { return {0.0, 2 * std::numbers::pi * f}; }

RationalModel three_pole() {
    RationalModel m;
    m.order = 3;
    m.poles = {cplx(-0.2, 0.9), cplx(-0.2, -0.9), cplx(-0.05, 0.0)};
    m.residues = {cplx(0.3, -0.4), cplx(0.3, 0.4), cplx(0.7, 0.0)};
    return m;
}

std::vector<cplx> sample(const RationalModel& m, const std::vector<double>& f) {
    std::vector<cplx> H;
    for (double x : f) H.push_back(m.evaluate(jw(x)));
    return H;
}

void check_recovered(const RationalModel& fit, const RationalModel& ref, double tol) {
    REQUIRE(fit.poles.size() == ref.poles.size());
    for (const auto& p : ref.poles) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < fit.poles.size(); ++i)
            if (std::abs(fit.poles[i] - p) < std::abs(fit.poles[best] - p)) best = i;
        CHECK(std::abs(fit.poles[best] - p) <= tol * std::abs(p));
        const auto& r = ref.residues[static_cast<std::size_t>(&p - ref.poles.data())];
        CHECK(std::abs(fit.residues[best] - r) <= tol * std::abs(r));
    }
}

}  // namespace

TEST_CASE("starting poles") {
    const auto two = initial_poles(0.006, 0.030, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == std::conj(two[1]));
    const auto three = initial_poles(0.006, 0.030, 3);
    REQUIRE(three.size() == 3);
    int real = 0;
    for (const auto& p : three) {
        CHECK(p.real() < 0);
        if (p.imag() == 0) ++real;
    }
    CHECK(real == 1);
}

TEST_CASE("recovers a known three-pole model") {
    const auto ref = three_pole();
    const auto f = log_space(0.002, 1.0, 40);
    const auto fit = vf_fit(f, sample(ref, f), 3);
    CHECK(fit.converged);
    CHECK(fit.iterations <= 20);
    check_recovered(fit, ref, 1e-6);
    CHECK(fit.rms <= 1e-9);
}

TEST_CASE("relocation returns to the true poles from a perturbed start") {
    const auto ref = three_pole();
    const auto f = log_space(0.002, 1.0, 40);
    VFOptions o;
    for (const auto& p : ref.poles) o.start_poles.push_back(p * 1.01);
    const auto fit = vf_fit(f, sample(ref, f), 3, o);
    CHECK(fit.iterations <= 5);
    check_recovered(fit, ref, 1e-8);
}

TEST_CASE("fit error does not grow across iterations on exact data") {
    const auto ref = three_pole();
    const auto f = log_space(0.002, 1.0, 40);
    const auto fit = vf_fit(f, sample(ref, f), 3);
    for (std::size_t i = 1; i < fit.rms_history.size(); ++i)
        CHECK(fit.rms_history[i] <= fit.rms_history[i - 1] + 1e-12);
}

TEST_CASE("returned poles are stable") {
    RationalModel unstable;
    unstable.order = 2;
    unstable.poles = {cplx(0.05, 0.3), cplx(0.05, -0.3)};
    unstable.residues = {cplx(0.1, 0.2), cplx(0.1, -0.2)};
    const auto f = log_space(0.005, 0.5, 30);
    const auto fit = vf_fit(f, sample(unstable, f), 2);
    for (const auto& p : fit.poles) CHECK(p.real() <= 0);
}

TEST_CASE("aggregate two-pole samples give the inverse momentum") {
    // 1/(M1+M2) times (s*Tg+1)/(s^2*Tg + s*(1+D*Tg/M) + (D+K)/M) with M = 1300 MJ
    const double M = 1300, D = 200, K = 5000, Tg = 50;
    std::vector<cplx> H;
    const auto f = log_space(0.006, 0.030, 10);
    for (double x : f) {
        const cplx s = jw(x);
        H.push_back((s * Tg + 1.0) / (M * Tg * s * s + (M + D * Tg) * s + (D + K)));
    }
    const auto fit = vf_fit(f, H, 2);
    CHECK(residue_sum(fit) == Approx(1.0 / 1300.0).epsilon(1e-3));
}

TEST_CASE("pure gain with one pole") {
    const auto f = log_space(0.01, 0.1, 8);
    const std::vector<cplx> H(f.size(), cplx(2.0, 0.0));
    const auto fit = vf_fit(f, H, 1);
    REQUIRE(fit.poles.size() == 1);
    CHECK(fit.poles[0].real() < -2 * std::numbers::pi * 0.1 * 10);
    CHECK(std::abs(fit.residues[0] / fit.poles[0]) == Approx(2.0).epsilon(1e-2));
}

TEST_CASE("residue sum") {
    RationalModel m;
    m.poles = {cplx(-1, 2), cplx(-1, -2)};
    m.residues = {cplx(0.25, 3), cplx(0.25, -3)};
    double imag = 1;
    CHECK(residue_sum(m, &imag) == 0.5);
    CHECK(imag == 0.0);
    const auto fit = three_pole();
    const cplx s(0.0, 1e6);
    CHECK((s * fit.evaluate(s)).real() == Approx(residue_sum(fit)).epsilon(1e-6));
}

TEST_CASE("evaluation") {
    RationalModel m;
    m.poles = {cplx(-0.5, 0)};
    m.residues = {cplx(2.0, 0)};
    CHECK(m.evaluate(0.0) == cplx(4.0, 0));
    CHECK_THROWS_AS(m.evaluate(cplx(-0.5, 0)), NumericalError);
    const auto ref = three_pole();
    const cplx s(0.3, 0.7);
    CHECK(std::abs(ref.evaluate(std::conj(s)) - std::conj(ref.evaluate(s))) <= 1e-15);
}

TEST_CASE("reported rms is the reconstruction error") {
    const auto ref = three_pole();
    const auto f = log_space(0.002, 1.0, 30);
    auto H = sample(ref, f);
    for (std::size_t i = 0; i < H.size(); ++i) H[i] *= 1.0 + 0.01 * std::sin(3.0 * i);
    const auto fit = vf_fit(f, H, 3);
    double acc = 0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += std::norm((fit.evaluate(jw(f[i])) - H[i]) / H[i]);
    CHECK(fit.rms == Approx(std::sqrt(acc / f.size())).epsilon(1e-9));
}

TEST_CASE("order sweep stops when the next order stops paying off") {
    const auto ref = three_pole();
    const auto f = log_space(0.002, 1.0, 40);
    const std::vector<int> orders{2, 3, 4, 5};
    const auto sw = vf_order_sweep(f, sample(ref, f), orders);
    CHECK(sw.fits[sw.chosen].order == 3);
}

TEST_CASE("fit input validation") {
    const std::vector<double> f{0.01, 0.02, 0.03};
    const std::vector<cplx> H(3, cplx(1, 0));
    CHECK_THROWS_AS(vf_fit(f, H, 3), ValidationError);
    const std::vector<double> down{0.03, 0.02, 0.01, 0.005};
    CHECK_THROWS_AS(vf_fit(down, std::vector<cplx>(4, cplx(1, 0)), 1), ValidationError);
}
