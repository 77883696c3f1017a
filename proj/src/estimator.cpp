#include "gridmomentum/estimator.hpp"

#include "gridmomentum/dynamics.hpp"
#include "gridmomentum/errors.hpp"
#include "gridmomentum/linear_analysis.hpp"
#include "gridmomentum/power_flow.hpp"
#include "gridmomentum/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace gridmomentum {

double estimate_from_sums(double S, double S_hat, double delta_m) {
    if (delta_m == 0.0) throw ValidationError("estimator", "delta_m", "must be nonzero");
    if (S == S_hat) throw NumericalError("estimator: residue sums are equal (no sensitivity to dM)");
    return S_hat / (S - S_hat) * delta_m;
}

PowerSystemCase with_added_momentum(const PowerSystemCase& c, const std::string& cig, double delta_m) {
    PowerSystemCase out = c;
    auto& g = out.cigs[c.cig_index(cig)];
    g.T_a += delta_m / g.P_ref;
    if (!(g.T_a > 0)) throw ValidationError(cig, "T_a", "momentum change leaves a non-positive T_a");
    return out;
}

namespace {

std::vector<int> sweep_orders() { return {2, 3, 4, 5}; }

RationalModel fit(std::span<const double> f, std::span<const cplx> H, int order) {
    if (order > 0) return vf_fit(f, H, order);
    const auto orders = sweep_orders();
    auto sw = vf_order_sweep(f, H, orders);
    return sw.fits[sw.chosen];
}

void finish(MomentumEstimate& e, const PowerSystemCase& c, double delta_m, double rms_threshold) {
    double imag_b = 0, imag_a = 0;
    e.S_before = residue_sum(e.fit_before, &imag_b);
    e.S_after = residue_sum(e.fit_after, &imag_a);
    if (imag_b > 1e-6 || imag_a > 1e-6) e.warnings.push_back("residue sum has a non-negligible imaginary part");
    e.G_hat = estimate_from_sums(e.S_before, e.S_after, delta_m);
    e.G_true = global_momentum_true(c);
    if (*e.G_true > 0) e.eps_pct = 100.0 * (e.G_hat - *e.G_true) / *e.G_true;
    if (!(e.G_hat > 0)) {
        e.low_confidence = true;
        e.warnings.push_back("non-positive momentum estimate");
    }
    if (e.fit_before.rms > rms_threshold || e.fit_after.rms > rms_threshold) {
        e.low_confidence = true;
        e.warnings.push_back("fit rms error above threshold");
    }
    if (delta_m > 0 && !(e.S_after < e.S_before)) e.warnings.push_back("residue sum did not decrease with dM > 0");
}

}  // namespace

MomentumEstimate freq_scan_estimate(const PowerSystemCase& c, const FreqScanConfig& cfg) {
    const std::size_t j = c.cig_index(cfg.cig);
    const auto pf = solve_power_flow(c);
    const auto eq = build_equilibrium(c, pf);
    const auto f = log_space(cfg.f_lo, cfg.f_hi, static_cast<std::size_t>(cfg.n_freqs));
    const std::string input = "eta_gf:" + cfg.cig;
    const std::size_t out_k = c.machines.size() + j;

    const auto before = frequency_response(linearize(c, eq), input, f);
    const auto augmented = with_added_momentum(c, cfg.cig, cfg.delta_m);
    const auto after = frequency_response(linearize(augmented, eq), input, f);

    MomentumEstimate e;
    e.fit_before = fit(f, before.response[out_k], cfg.order);
    e.fit_after = fit(f, after.response[out_k], cfg.order);
    finish(e, c, cfg.delta_m, cfg.rms_threshold);
    return e;
}

ProbingPlan resolve_plan(const PowerSystemCase& c, const ExperimentConfig& cfg) {
    const auto& g = c.cigs[c.cig_index(cfg.cig)];
    ToneDesign d = cfg.tones;
    if (d.nominal_mw == 0.0) d.nominal_mw = nominal_power(c);
    if (d.setpoint_mw == 0.0) d.setpoint_mw = g.P_g * g.P_ref;
    return design_tones(d);
}

InertiaSchedule resolve_schedule(const ProbingPlan& plan, const ExperimentConfig& cfg) {
    InertiaSchedule s;
    s.delta_m = cfg.delta_m;
    const double W = plan.window();
    if (cfg.period > 0) {
        s.period = cfg.period;
        s.settle = cfg.settle > 0 ? cfg.settle : s.period / 2 - W - 1.0;
    } else {
        const double settle_min = cfg.settle > 0 ? cfg.settle : 1.0;
        const double n = std::floor(cfg.duration / (2.0 * (W + settle_min)) + 1e-9);
        if (n < 1)
            throw ValidationError("experiment", "duration",
                                  "too short for one inertia period (need " +
                                      std::to_string(2.0 * (W + settle_min)) + " s)");
        s.period = cfg.duration / n;
        s.settle = cfg.settle > 0 ? cfg.settle : s.period / 2 - W - 1.0;
    }
    check_schedule(plan, s);
    return s;
}

MomentumEstimate probe_estimate(const PowerSystemCase& c, const ExperimentConfig& cfg, ProbeDiagnostics* diag) {
    const std::size_t j = c.cig_index(cfg.cig);
    if (cfg.delta_m == 0.0) throw ValidationError("experiment", "delta_m", "must be nonzero");
    const auto plan = resolve_plan(c, cfg);
    const auto sched = resolve_schedule(plan, cfg);
    if (cfg.duration < sched.period) throw ValidationError("experiment", "duration", "shorter than one period");

    const auto pf = solve_power_flow(c);
    const auto eq = build_equilibrium(c, pf);
    const DynamicModel model(c, eq);
    const auto inputs = inertia_schedule_apply(c, plan, sched, cfg.cig);

    std::optional<OUProcessSet> noise;
    if (cfg.noise) noise = make_load_noise(c, cfg.noise_sigma, cfg.noise_tau, cfg.seed);

    std::vector<double> t, w;
    const auto iw = static_cast<Eigen::Index>(model.layout().omega(c.machines.size() + j));
    const auto n_samples = static_cast<std::size_t>(std::llround(cfg.duration / cfg.step)) + 1;
    t.reserve(n_samples);
    w.reserve(n_samples);
    IntegrationOptions io;
    io.step = cfg.step;
    io.store = false;
    io.observer = [&](double tt, const Eigen::VectorXd& x) {
        t.push_back(tt);
        w.push_back(x[iw]);
    };
    integrate(model, model.equilibrium_state(), cfg.duration, io, inputs, noise ? &*noise : nullptr);

    std::vector<FourierSampleSet> nominal, augmented, all;
    for (const auto& win : extraction_windows(plan, sched, cfg.duration)) {
        auto fs = fourier_extract(t, w, plan, win.t0, win.state);
        (win.state == "nominal" ? nominal : augmented).push_back(fs);
        all.push_back(std::move(fs));
    }
    if (nominal.empty() || augmented.empty())
        throw ValidationError("experiment", "duration", "no complete extraction window for one of the states");
    const auto before = average_sample_sets(nominal);
    const auto after = average_sample_sets(augmented);

    MomentumEstimate e;
    e.fit_before = fit(before.f_hz, before.H, cfg.order);
    e.fit_after = fit(after.f_hz, after.H, cfg.order);
    finish(e, c, cfg.delta_m, cfg.rms_threshold);
    if (diag) {
        diag->plan = plan;
        diag->schedule = sched;
        diag->windows = std::move(all);
        diag->nominal = before;
        diag->augmented = after;
    }
    return e;
}

BatchStats compute_stats(std::vector<double> v) {
    BatchStats s;
    s.n_ok = static_cast<int>(v.size());
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    auto pct = [&](double p) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const double a = pos - static_cast<double>(i);
        return i + 1 < v.size() ? v[i] * (1 - a) + v[i + 1] * a : v[i];
    };
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.median = pct(0.5);
    s.p25 = pct(0.25);
    s.p75 = pct(0.75);
    s.iqr = s.p75 - s.p25;
    const double lo = s.p25 - 1.5 * s.iqr, hi = s.p75 + 1.5 * s.iqr;
    s.lower_adjacent = v.back();
    s.upper_adjacent = v.front();
    for (double x : v) {
        if (x >= lo) s.lower_adjacent = std::min(s.lower_adjacent, x);
        if (x <= hi) s.upper_adjacent = std::max(s.upper_adjacent, x);
    }
    std::vector<double> a;
    for (double x : v) a.push_back(std::abs(x));
    std::sort(a.begin(), a.end());
    const double pos = 0.5 * static_cast<double>(a.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    s.median_abs = i + 1 < a.size() ? a[i] + (pos - static_cast<double>(i)) * (a[i + 1] - a[i]) : a[i];
    return s;
}

BatchResult batch_randomized(const PowerSystemCase& c, const BatchConfig& cfg) {
    if (cfg.n_runs < 2) throw ValidationError("batch", "n_runs", "must be >= 2");
    if (!(cfg.spread >= 0 && cfg.spread < 1)) throw ValidationError("batch", "spread", "must be in [0, 1)");
    BatchResult res;
    res.runs.resize(static_cast<std::size_t>(cfg.n_runs));

    auto run_one = [&](int i) {
        BatchRun& r = res.runs[static_cast<std::size_t>(i)];
        r.index = i;
        r.seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(i));
        std::mt19937_64 rng(r.seed);
        std::uniform_real_distribution<double> u(1.0 - cfg.spread, 1.0 + cfg.spread);
        PowerSystemCase ci = c;
        for (auto& m : ci.machines) {
            if (cfg.spread > 0) m.H *= u(rng);
            r.H.push_back(m.H);
        }
        for (auto& g : ci.cigs) {
            if (cfg.perturb_cigs && cfg.spread > 0) g.T_a *= u(rng);
            r.T_a.push_back(g.T_a);
        }
        r.G_true = global_momentum_true(ci);
        try {
            MomentumEstimate e;
            if (cfg.variant == EstimatorVariant::FreqScan) {
                e = freq_scan_estimate(ci, cfg.scan);
            } else {
                ExperimentConfig pc = cfg.probe;
                pc.seed = r.seed;
                pc.tones.seed = stream_seed(r.seed, 0xF00D);
                e = probe_estimate(ci, pc);
            }
            r.G_hat = e.G_hat;
            r.eps_pct = e.eps_pct.value_or(0.0);
            r.rms_before = e.fit_before.rms;
            r.rms_after = e.fit_after.rms;
            r.low_confidence = e.low_confidence;
            r.ok = true;
        } catch (const std::exception& ex) {
            r.error = ex.what();
        }
    };

    const int workers = std::max(1, std::min(cfg.workers, cfg.n_runs));
    if (workers == 1) {
        for (int i = 0; i < cfg.n_runs; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int k = 0; k < workers; ++k)
            pool.emplace_back([&] {
                for (int i = next++; i < cfg.n_runs; i = next++) run_one(i);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<double> eps;
    for (const auto& r : res.runs) {
        if (r.ok) eps.push_back(r.eps_pct);
    }
    res.stats = compute_stats(eps);
    res.stats.n_failed = cfg.n_runs - res.stats.n_ok;
    return res;
}

}  // namespace gridmomentum
