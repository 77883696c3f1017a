#pragma once

// Momentum estimation from the residue sums of two fitted responses, one at
// nominal CIG momentum and one with the momentum raised by dM.

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/probing.hpp"
#include "gridmomentum/vector_fitting.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridmomentum {

/// G = S_hat/(S - S_hat) * dM. Throws when S == S_hat or dM == 0.
double estimate_from_sums(double S, double S_hat, double delta_m);

struct MomentumEstimate {
    double G_hat = 0.0;        ///< [MJ]
    double S_before = 0.0;     ///< residue sum at nominal momentum
    double S_after = 0.0;      ///< residue sum with dM added
    RationalModel fit_before, fit_after;
    std::optional<double> G_true;   ///< [MJ]
    std::optional<double> eps_pct;  ///< signed 100*(G_hat - G_true)/G_true
    bool low_confidence = false;    ///< fit rms above threshold or non-positive estimate
    std::vector<std::string> warnings;
};

struct FreqScanConfig {
    std::string cig;
    double delta_m = 0.0;  ///< [MJ]
    double f_lo = 0.006, f_hi = 0.030;
    int n_freqs = 10;
    int order = 3;         ///< 0 selects the order by sweep
    double rms_threshold = 0.05;
};

MomentumEstimate freq_scan_estimate(const PowerSystemCase& c, const FreqScanConfig& cfg);

struct ExperimentConfig {
    std::string cig;
    ToneDesign tones;       ///< nominal_mw / setpoint_mw filled from the case when 0
    double delta_m = 0.0;   ///< [MJ]
    double duration = 900.0;
    double period = 0.0;    ///< 0: duration split into the most periods that fit
    double settle = 0.0;    ///< 0: all of the half-period not covered by the window, minus 1 s
    int order = 3;          ///< 0 selects the order by sweep
    bool noise = false;
    double noise_sigma = 0.005;
    double noise_tau = 2.0;
    double step = 0.01;
    std::uint64_t seed = 0;  ///< load-noise seed
    double rms_threshold = 0.05;
};

/// Period and settle actually used for a configuration.
InertiaSchedule resolve_schedule(const ProbingPlan& plan, const ExperimentConfig& cfg);
ProbingPlan resolve_plan(const PowerSystemCase& c, const ExperimentConfig& cfg);

struct ProbeDiagnostics {
    ProbingPlan plan;
    InertiaSchedule schedule;
    std::vector<FourierSampleSet> windows;
    FourierSampleSet nominal, augmented;
};

MomentumEstimate probe_estimate(const PowerSystemCase& c, const ExperimentConfig& cfg,
                                ProbeDiagnostics* diag = nullptr);

enum class EstimatorVariant { FreqScan, Probe };

struct BatchConfig {
    EstimatorVariant variant = EstimatorVariant::FreqScan;
    FreqScanConfig scan;
    ExperimentConfig probe;
    int n_runs = 50;
    double spread = 0.30;       ///< machine H drawn uniformly in [(1-s)H, (1+s)H]
    bool perturb_cigs = false;  ///< draw CIG T_a the same way
    std::uint64_t seed = 0;
    int workers = 1;
};

struct BatchRun {
    int index = 0;
    std::uint64_t seed = 0;
    std::vector<double> H;    ///< drawn machine inertia constants
    std::vector<double> T_a;  ///< CIG virtual inertia constants used
    double G_true = 0.0;
    double G_hat = 0.0;
    double eps_pct = 0.0;
    double rms_before = 0.0, rms_after = 0.0;
    bool ok = false;
    bool low_confidence = false;
    std::string error;
};

struct BatchStats {
    int n_ok = 0;
    int n_failed = 0;
    double mean = 0, median = 0, p25 = 0, p75 = 0, iqr = 0;
    double lower_adjacent = 0, upper_adjacent = 0;
    double median_abs = 0;
};

/// Box-plot statistics of a sample (percentiles by linear interpolation).
BatchStats compute_stats(std::vector<double> values);

struct BatchResult {
    std::vector<BatchRun> runs;
    BatchStats stats;  ///< over eps_pct of successful runs
};

/// Randomized study; run i uses stream_seed(seed, i) for its draws and noise.
BatchResult batch_randomized(const PowerSystemCase& c, const BatchConfig& cfg);

/// Copy of the case with one CIG's momentum raised by delta_m [MJ].
PowerSystemCase with_added_momentum(const PowerSystemCase& c, const std::string& cig, double delta_m);

}  // namespace gridmomentum
