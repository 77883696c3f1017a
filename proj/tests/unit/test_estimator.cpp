#include "support.hpp"

#include "gridmomentum/errors.hpp"
#include "gridmomentum/estimator.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace gridmomentum;
using Catch::Approx;

namespace {

FreqScanConfig scan_config(const PowerSystemCase& c, double dm_fraction = 0.1) {
    FreqScanConfig s;
    s.cig = c.cigs[0].id;
    s.delta_m = dm_fraction * global_momentum_true(c);
    return s;
}

ExperimentConfig probe_config(const PowerSystemCase& c) {
    ExperimentConfig e;
    e.cig = c.cigs[0].id;
    e.delta_m = 0.1 * global_momentum_true(c);
    return e;
}

}  // namespace

TEST_CASE("momentum from residue sums") {
    CHECK(estimate_from_sums(2.0, 1.0, 100.0) == Approx(100.0));
    CHECK(estimate_from_sums(1.0 / 1300, 1.0 / 1400, 100.0) == Approx(1300.0).epsilon(1e-12));
    CHECK_THROWS_AS(estimate_from_sums(1.0, 1.0, 100.0), NumericalError);
    CHECK_THROWS_AS(estimate_from_sums(2.0, 1.0, 0.0), ValidationError);
}

TEST_CASE("added momentum goes to one CIG") {
    const auto& c = testsupport::two_machine_cig();
    const auto more = with_added_momentum(c, c.cigs[0].id, 150.0);
    CHECK(global_momentum_true(more) == Approx(global_momentum_true(c) + 150.0));
    CHECK_THROWS_AS(with_added_momentum(c, c.cigs[0].id, -1e6), ValidationError);
    CHECK_THROWS_AS(with_added_momentum(c, "nope", 1.0), ValidationError);
}

TEST_CASE("frequency-scan estimate on the small case") {
    const auto& c = testsupport::two_machine_cig();
    for (double frac : {0.05, 0.10, 0.15}) {
        const auto e = freq_scan_estimate(c, scan_config(c, frac));
        REQUIRE(e.eps_pct.has_value());
        CHECK(std::abs(*e.eps_pct) <= 0.1);
        CHECK(e.S_after < e.S_before);
        CHECK_FALSE(e.low_confidence);
    }
}

TEST_CASE("probing estimate on the small case") {
    const auto& c = testsupport::two_machine_cig();
    const auto cfg = probe_config(c);
    const auto e = probe_estimate(c, cfg);
    CHECK(std::abs(*e.eps_pct) <= 0.5);
    CHECK(e.S_after < e.S_before);

    auto louder = cfg;
    louder.tones.peak_fraction *= 2;
    const auto e2 = probe_estimate(c, louder);
    CHECK(std::abs(e2.G_hat - e.G_hat) <= 0.002 * e.G_hat);
}

TEST_CASE("zero momentum step is caught") {
    const auto& c = testsupport::two_machine_cig();
    auto cfg = probe_config(c);
    cfg.delta_m = 0;
    CHECK_THROWS_AS(probe_estimate(c, cfg), ValidationError);
}

TEST_CASE("box-plot statistics") {
    const auto s = compute_stats({1, 2, 3, 4, 5, 6, 7, 8, 100});
    CHECK(s.n_ok == 9);
    CHECK(s.median == 5.0);
    CHECK(s.p25 == 3.0);
    CHECK(s.p75 == 7.0);
    CHECK(s.iqr == 4.0);
    CHECK(s.mean == Approx(136.0 / 9));
    CHECK(s.lower_adjacent == 1.0);
    CHECK(s.upper_adjacent == 8.0);
    CHECK(s.median_abs == 5.0);
    const auto even = compute_stats({4, 1, 3, 2});
    CHECK(even.median == 2.5);
    CHECK(even.p25 == 1.75);
}

TEST_CASE("batch runs are reproducible and independent of worker count") {
    const auto& c = testsupport::two_machine_cig();
    BatchConfig b;
    b.scan = scan_config(c);
    b.n_runs = 6;
    b.seed = 21;
    const auto one = batch_randomized(c, b);
    b.workers = 3;
    const auto three = batch_randomized(c, b);
    REQUIRE(one.runs.size() == 6);
    for (std::size_t i = 0; i < one.runs.size(); ++i) {
        CHECK(one.runs[i].G_hat == three.runs[i].G_hat);
        CHECK(one.runs[i].H == three.runs[i].H);
        CHECK(one.runs[i].ok);
        for (std::size_t k = 0; k < c.machines.size(); ++k) {
            CHECK(one.runs[i].H[k] >= 0.7 * c.machines[k].H);
            CHECK(one.runs[i].H[k] <= 1.3 * c.machines[k].H);
        }
    }
    CHECK(one.stats.mean == three.stats.mean);
    CHECK(one.runs[0].G_true != one.runs[1].G_true);
}

TEST_CASE("zero spread keeps the ground truth fixed") {
    const auto& c = testsupport::two_machine_cig();
    BatchConfig b;
    b.scan = scan_config(c);
    b.n_runs = 3;
    b.spread = 0.0;
    const auto r = batch_randomized(c, b);
    for (const auto& run : r.runs) CHECK(run.G_true == global_momentum_true(c));
    CHECK(r.stats.iqr <= 1e-9);
}
