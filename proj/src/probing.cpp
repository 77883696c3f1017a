#include "gridmomentum/probing.hpp"

#include "gridmomentum/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace gridmomentum {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double ProbingPlan::signal(double t) const {
    double acc = 0.0;
    for (const auto& w : tones) acc += w.amplitude * std::cos(kTwoPi * w.f_hz * t + w.phase);
    return acc;
}

double nominal_power(const PowerSystemCase& c) {
    double p = 0.0;
    for (const auto& m : c.machines) p += m.S_B;
    for (const auto& g : c.cigs) p += g.P_ref;
    return p;
}

ProbingPlan design_tones(const ToneDesign& d) {
    if (!(d.f_lo > 0) || !(d.f_hi > d.f_lo)) throw ValidationError("tones", "band", "need 0 < f_lo < f_hi");
    if (d.n_tones < 4) throw ValidationError("tones", "n_tones", "at least 4 tones are required");
    if (d.mu < 1) throw ValidationError("tones", "mu", "must be >= 1");
    if (!(d.peak_fraction > 0)) throw ValidationError("tones", "peak_fraction", "must be > 0");
    if (!(d.nominal_mw > 0) || !(d.setpoint_mw > 0))
        throw ValidationError("tones", "setpoint", "nominal power and CIG setpoint must be > 0");

    // Lowest harmonic k0 such that k0..k0+N-1 times f_hi/(k0+N-1) stays >= f_lo.
    const int n = d.n_tones;
    const double need = d.f_lo * (n - 1) / (d.f_hi - d.f_lo);
    int k0 = std::max(1, static_cast<int>(std::ceil(need - 1e-9)));
    double f1 = d.f_hi / (k0 + n - 1);
    while (k0 * f1 < d.f_lo * (1 - 1e-12)) {
        ++k0;
        f1 = d.f_hi / (k0 + n - 1);
    }

    ProbingPlan plan;
    plan.f1 = f1;
    plan.mu = d.mu;
    std::mt19937_64 rng(d.seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    const double amp = d.peak_fraction * d.nominal_mw / (n * d.setpoint_mw);
    for (int k = k0; k < k0 + n; ++k) plan.tones.push_back({k * f1, amp, phase(rng), k});
    return plan;
}

FourierSampleSet fourier_extract(std::span<const double> t, std::span<const double> y, const ProbingPlan& plan,
                                 double t0, const std::string& state) {
    if (t.size() != y.size() || t.size() < 2) throw ValidationError("fourier", "samples", "need matching t and y");
    if (plan.tones.empty()) throw ValidationError("fourier", "plan", "no tones");
    const double h = t[1] - t[0];
    const double W = plan.window();
    const double t1 = t0 + W;
    const double eps = 1e-9 * std::max(1.0, std::abs(t1));
    if (t0 < t.front() - eps || t1 > t.back() + eps)
        throw ValidationError("fourier", "window", "window exceeds the trajectory");
    const double nyquist = 0.5 / h;
    for (const auto& w : plan.tones)
        if (!(w.f_hz < nyquist / 10.0))
            throw ValidationError("fourier", "f", "tone above a tenth of the Nyquist frequency");

    // Quadrature nodes: window ends (interpolated) plus the grid points inside.
    std::vector<double> tt, yy;
    auto interp = [&](double x) {
        double pos = (x - t.front()) / h;
        auto i = static_cast<std::size_t>(std::floor(pos));
        if (i >= t.size() - 1) i = t.size() - 2;
        const double a = pos - static_cast<double>(i);
        return y[i] * (1 - a) + y[i + 1] * a;
    };
    tt.push_back(t0);
    yy.push_back(interp(t0));
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] > t0 + eps && t[i] < t1 - eps) {
            tt.push_back(t[i]);
            yy.push_back(y[i]);
        }
    }
    tt.push_back(t1);
    yy.push_back(interp(t1));

    auto integrate = [&](auto&& g) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < tt.size(); ++i)
            acc += 0.5 * (tt[i + 1] - tt[i]) * (g(i) + g(i + 1));
        return acc / W;
    };
    const double mean = integrate([&](std::size_t i) { return yy[i]; });

    FourierSampleSet out;
    out.t0 = t0;
    out.window = W;
    out.state = state;
    for (const auto& w : plan.tones) {
        const double om = kTwoPi * w.f_hz;
        const double gc = integrate([&](std::size_t i) { return (yy[i] - mean) * std::cos(om * tt[i]); });
        const double gs = integrate([&](std::size_t i) { return (yy[i] - mean) * std::sin(om * tt[i]); });
        out.f_hz.push_back(w.f_hz);
        out.gamma_c.push_back(gc);
        out.gamma_s.push_back(gs);
        out.H.push_back(2.0 * std::complex<double>(gc, -gs) * std::polar(1.0, -w.phase) / w.amplitude);
    }
    return out;
}

FourierSampleSet average_sample_sets(std::span<const FourierSampleSet> sets) {
    if (sets.empty()) throw ValidationError("fourier", "sets", "nothing to average");
    FourierSampleSet out = sets.front();
    for (std::size_t k = 1; k < sets.size(); ++k) {
        if (sets[k].f_hz != out.f_hz) throw ValidationError("fourier", "sets", "tone sets differ");
        for (std::size_t i = 0; i < out.H.size(); ++i) {
            out.H[i] += sets[k].H[i];
            out.gamma_c[i] += sets[k].gamma_c[i];
            out.gamma_s[i] += sets[k].gamma_s[i];
        }
    }
    const double n = static_cast<double>(sets.size());
    for (std::size_t i = 0; i < out.H.size(); ++i) {
        out.H[i] /= n;
        out.gamma_c[i] /= n;
        out.gamma_s[i] /= n;
    }
    return out;
}

double min_period(const ProbingPlan& plan, double settle) { return 2.0 * (plan.window() + settle); }

void check_schedule(const ProbingPlan& plan, const InertiaSchedule& s) {
    if (s.duty != 0.5) throw ValidationError("schedule", "duty", "only a 50% duty cycle is supported");
    if (!(s.settle >= 0)) throw ValidationError("schedule", "settle", "must be >= 0");
    if (!(s.period / 2 > plan.window() + s.settle))
        throw ValidationError("schedule", "period",
                              "half period must exceed window + settle (minimum period " +
                                  std::to_string(min_period(plan, s.settle)) + " s)");
}

std::vector<ExtractionWindow> extraction_windows(const ProbingPlan& plan, const InertiaSchedule& s,
                                                 double duration) {
    check_schedule(plan, s);
    std::vector<ExtractionWindow> out;
    const double W = plan.window();
    for (int k = 0;; ++k) {
        const double a = k * s.period + s.settle;
        const double b = k * s.period + s.period / 2 + s.settle;
        bool any = false;
        if (a + W <= duration + 1e-9) {
            out.push_back({a, "nominal"});
            any = true;
        }
        if (b + W <= duration + 1e-9) {
            out.push_back({b, "augmented"});
            any = true;
        }
        if (!any) break;
    }
    return out;
}

ExogenousInputs inertia_schedule_apply(const PowerSystemCase& c, const ProbingPlan& plan,
                                       const InertiaSchedule& s, const std::string& cig) {
    check_schedule(plan, s);
    const std::size_t j = c.cig_index(cig);
    const double nominal = cig_momentum(c.cigs[j]);
    ExogenousInputs in;
    in.eta_gf = [plan, j](double t, std::span<double> eta) { eta[j] = plan.signal(t); };
    in.inertia_override = [s, j, nominal](double t, std::span<double> m) {
        const double phase = std::fmod(t, s.period);
        m[j] = phase < s.period / 2 ? nominal : nominal + s.delta_m;
    };
    return in;
}

}  // namespace gridmomentum
