#include "support.hpp"

#include "gridmomentum/dynamics.hpp"
#include "gridmomentum/stochastic.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>

using namespace gridmomentum;
using Catch::Approx;

namespace {

OUProcessSet single(double tau, double sigma, std::uint64_t seed) {
    OUProcessSet s;
    OUParams p;
    p.tau = tau;
    p.sigma = sigma;
    s.add(p, seed);
    return s;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("zero sigma decays deterministically") {
    OUParams p;
    p.tau = 2.0;
    p.sigma = 0.0;
    OUProcessSet s;
    s.add(p, 1);
    CHECK(s.eta()[0] == 0.0);
    s.step(0.1);
    CHECK(s.eta()[0] == 0.0);
}

TEST_CASE("stationary statistics over a long run") {
    const double tau = 2.0, sigma = 0.005, h = 0.1;
    auto s = single(tau, sigma, 42);
    const std::size_t n = 1000000, lag = 1;
    std::vector<double> x(n);
    for (auto& v : x) v = s.step(h)[0];
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0, cov = 0;
    for (std::size_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
    for (std::size_t i = 0; i + lag < n; ++i) cov += (x[i] - mean) * (x[i + lag] - mean);
    var /= n;
    cov /= (n - lag);
    CHECK(std::sqrt(var) == Approx(sigma).epsilon(0.02));
    CHECK(cov / var == Approx(std::exp(-static_cast<double>(lag) * h / tau)).epsilon(0.02));
    // effective sample count of a correlated series
    const double n_eff = n * h / (2 * tau);
    CHECK(std::abs(mean) <= 3 * sigma / std::sqrt(n_eff));
}

TEST_CASE("one step equals two half steps in distribution") {
    const double tau = 2.0, sigma = 1.0, h = 0.5, a = std::exp(-h / tau);
    const double scale = sigma * std::sqrt(1 - a * a);
    auto one = single(tau, sigma, 5), two = single(tau, sigma, 6);
    const std::size_t n = 100000;
    std::vector<double> r1(n), r2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double prev = one.eta()[0];
        r1[i] = (one.step(h)[0] - a * prev) / scale;
        prev = two.eta()[0];
        two.step(h / 2);
        r2[i] = (two.step(h / 2)[0] - a * prev) / scale;
    }
    const double crit = 1.628 * std::sqrt(2.0 / n);
    CHECK(ks_statistic(r1, r2) < crit);
}

TEST_CASE("load noise per load with reproducible streams") {
    const auto& c = testsupport::ieee39();
    auto a = make_load_noise(c, 0.005, 2.0, 9), b = make_load_noise(c, 0.005, 2.0, 9);
    CHECK(a.size() == 19);
    for (int i = 0; i < 500; ++i) CHECK(a.step(0.01) == b.step(0.01));
    auto other = make_load_noise(c, 0.005, 2.0, 10);
    CHECK(other.eta() != make_load_noise(c, 0.005, 2.0, 9).eta());
    CHECK(make_load_noise(c, 0.005, 2.0, 9).params(3).sigma == 0.005);
}

TEST_CASE("streams differ between loads") {
    CHECK(stream_seed(1, 0) != stream_seed(1, 1));
    CHECK(stream_seed(1, 0) != stream_seed(2, 0));
    CHECK(stream_seed(1, 0) == stream_seed(1, 0));
}

TEST_CASE("no loads gives an empty set and a noiseless run") {
    const auto c = load_case(R"({"name":"one","slack":"G","buses":[{"id":1,"base_kv":20}],
        "machines":[{"id":"G","bus":1,"H":3,"S_B":50,"D":1}]})");
    auto noise = make_load_noise(c, 0.005, 2.0, 1);
    CHECK(noise.empty());
    const DynamicModel model(c, testsupport::equilibrium(c));
    IntegrationOptions o;
    const auto tr = integrate(model, model.equilibrium_state(), 1.0, o, {}, &noise);
    CHECK(tr.samples() == 101);
}

TEST_CASE("environment seed overrides the fallback") {
    ::unsetenv(kSeedEnvVar);
    CHECK(resolve_seed(17) == 17);
    ::setenv(kSeedEnvVar, "123", 1);
    CHECK(resolve_seed(17) == 123);
    ::unsetenv(kSeedEnvVar);
}
