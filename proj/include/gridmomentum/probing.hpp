#pragma once

// Coherent multi-tone probing through a CIG setpoint, the square-wave
// virtual-inertia schedule, and Fourier extraction of complex samples.

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/dynamics.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gridmomentum {

struct Tone {
    double f_hz = 0.0;
    double amplitude = 0.0;  ///< per unit of the CIG setpoint
    double phase = 0.0;      ///< [rad]; the tone is A*cos(2*pi*f*t + phase)
    int harmonic = 0;        ///< f_hz = harmonic * f1
};

struct ProbingPlan {
    std::vector<Tone> tones;
    double f1 = 0.0;  ///< tone grid spacing [Hz]; every tone is a multiple of it
    int mu = 1;       ///< grid periods per integration window

    double window() const { return mu / f1; }
    std::size_t size() const { return tones.size(); }
    /// sum_w A_w cos(2*pi*f_w*t + phi_w)
    double signal(double t) const;
};

struct ToneDesign {
    double f_lo = 0.006, f_hi = 0.030;  ///< band [Hz]
    int n_tones = 10;
    double peak_fraction = 0.025;  ///< worst-case summed tone power / nominal power
    double nominal_mw = 0.0;       ///< system nominal power the fraction refers to
    double setpoint_mw = 0.0;      ///< CIG setpoint P_g*P_ref converting MW to per unit
    int mu = 1;
    std::uint64_t seed = 0;        ///< phase seed
};

/// Picks the coarsest grid f1 holding n_tones consecutive multiples inside the
/// band (so the window mu/f1 is as short as coherence allows), equal
/// amplitudes meeting the peak bound, and seeded random phases.
ProbingPlan design_tones(const ToneDesign& d);

/// System nominal power used for the peak bound: machine ratings plus CIG ratings [MW].
double nominal_power(const PowerSystemCase& c);

struct FourierSampleSet {
    std::vector<double> f_hz;
    std::vector<double> gamma_c, gamma_s;
    std::vector<std::complex<double>> H;  ///< response per unit of tone amplitude
    double t0 = 0.0;
    double window = 0.0;
    std::string state;  ///< "nominal" or "augmented"
};

/// Fourier integrals over [t0, t0 + plan.window()] of a uniformly sampled
/// signal, after removing its window mean.
FourierSampleSet fourier_extract(std::span<const double> t, std::span<const double> y,
                                 const ProbingPlan& plan, double t0, const std::string& state = "");

/// Element-wise mean of H over sets that share the same tones.
FourierSampleSet average_sample_sets(std::span<const FourierSampleSet> sets);

struct InertiaSchedule {
    double delta_m = 0.0;  ///< [MJ]
    double period = 0.0;   ///< T_dM [s]
    double settle = 30.0;  ///< discarded after each edge [s]
    double duty = 0.5;
};

/// Smallest admissible period 2*(window + settle).
double min_period(const ProbingPlan& plan, double settle);

/// Throws ValidationError unless period/2 > window + settle.
void check_schedule(const ProbingPlan& plan, const InertiaSchedule& s);

struct ExtractionWindow {
    double t0 = 0.0;
    std::string state;
};

/// Windows starting `settle` after each edge that end inside [0, duration].
/// The first half of each period holds nominal momentum.
std::vector<ExtractionWindow> extraction_windows(const ProbingPlan& plan, const InertiaSchedule& s,
                                                 double duration);

/// Tone injection on one CIG plus the square-wave momentum on the same CIG.
ExogenousInputs inertia_schedule_apply(const PowerSystemCase& c, const ProbingPlan& plan,
                                       const InertiaSchedule& s, const std::string& cig);

}  // namespace gridmomentum
