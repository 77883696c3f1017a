#pragma once

// CSV/JSON writers. Every CSV starts with a "# gridmomentum <kind> v<N>"
// line followed by a header row; numbers use the shortest round-trip form.

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/dynamics.hpp"
#include "gridmomentum/estimator.hpp"
#include "gridmomentum/linear_analysis.hpp"
#include "gridmomentum/power_flow.hpp"
#include "gridmomentum/probing.hpp"

#include <complex>
#include <string>
#include <vector>

namespace gridmomentum {

inline constexpr int kCsvVersion = 1;

/// Shortest decimal string that parses back to the same double.
std::string format_number(double v);

std::string power_flow_csv(const PowerSystemCase& c, const PowerFlowSolution& pf);

/// Columns: t, delta_<id>..., omega_<id>..., pm_<id>... (governed machines), pe_<cig>...
std::string trajectory_csv(const Trajectory& tr, const PowerSystemCase& c, const StateLayout& layout);

/// Long format: output, f_Hz, re, im, abs2, phase_rad.
std::string frequency_samples_csv(const std::vector<FrequencySamples>& sets);

/// Columns: f_Hz, re, im, state, t0, window_s, gamma_c, gamma_s.
std::string fourier_samples_csv(const std::vector<FourierSampleSet>& sets);

std::string noise_csv(const std::vector<double>& t, const std::vector<std::vector<double>>& eta,
                      const PowerSystemCase& c);

std::string batch_runs_csv(const BatchResult& r, const PowerSystemCase& c);
std::string batch_summary_json(const BatchResult& r, const std::string& variant);

std::string estimate_json(const MomentumEstimate& e);

struct ParsedSamples {
    std::vector<double> f_hz;
    std::vector<std::complex<double>> H;
};

/// Reads f_Hz/re/im columns of a samples CSV, optionally keeping only rows
/// whose `output` or `state` column equals `filter`.
ParsedSamples read_samples_csv(const std::string& text, const std::string& filter = "");

void write_file(const std::string& path, const std::string& content);

}  // namespace gridmomentum
