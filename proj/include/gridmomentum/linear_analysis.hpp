#pragma once

// Small-signal model around an equilibrium, its null-space structure,
// AC frequency scans and the aggregate (principal) frequency response.

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/dynamics.hpp"
#include "gridmomentum/power_flow.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace gridmomentum {

struct LinearModel {
    StateLayout layout;
    std::vector<std::string> element_ids;  ///< machines, then CIGs
    double Omega = 0.0;                    ///< [rad/s]

    Eigen::MatrixXd A;   ///< state matrix
    Eigen::MatrixXd Pi;  ///< dP_e/d delta [MW/rad]
    Eigen::VectorXd M, D, K, Tg;  ///< per element: [MJ], [MW/pu], [MW/pu], [s]

    /// Input columns. Labels: "eta_gf:<cig>" (per unit of setpoint),
    /// "power:<element>" (1 MW injected at the rotor), "eta_l:<load>"
    /// (per unit of load conductance).
    Eigen::MatrixXd B;
    std::vector<std::string> input_labels;

    Eigen::Index input_index(const std::string& label) const;
    std::size_t num_elements() const { return element_ids.size(); }
};

LinearModel linearize(const PowerSystemCase& c, const EquilibriumPoint& eq);

struct NullSpaceData {
    Eigen::VectorXd u1;     ///< right null vector [1..1, 0..0]
    Eigen::VectorXd v1;     ///< left null vector, v1'u1 = 1
    Eigen::VectorXd Theta;  ///< D + k_g/R per element [MW/pu]
    Eigen::VectorXd w;      ///< left kernel of Pi scaled to sum N; all ones for a symmetric Pi
};

/// Left null vector built from the left kernel w of Pi:
/// v1 = Omega/(1'Theta w) [Theta w/Omega; M w; T_g w].
NullSpaceData null_space(const LinearModel& m);

/// The same formula with w = 1, which is exact only when Pi is symmetric.
Eigen::VectorXd null_space_closed_form(const LinearModel& m);

/// Left null vector of A by SVD, normalized so v1'u1 = 1.
Eigen::VectorXd null_space_svd(const LinearModel& m);

/// max |Pi - Pi'| / max |Pi|.
double laplacian_asymmetry(const LinearModel& m);

struct DisturbanceProjection {
    double b_delta = 0.0;        ///< common-mode coefficient along u1 [rad/s]
    Eigen::VectorXd b_residual;  ///< state-space remainder, v1' b_residual = 0
    double alpha_rate = 0.0;     ///< rate of the common angle shift [rad/s]
};

/// Splits a power disturbance b [MW per element] into the common-mode part
/// along u1 and the remainder.
DisturbanceProjection project_disturbance(const NullSpaceData& nsd, const LinearModel& m,
                                          const Eigen::VectorXd& b);

struct EigenReport {
    Eigen::VectorXcd eigenvalues;
    int near_zero = 0;             ///< count with |lambda| <= tol
    double max_real_nonzero = 0;   ///< largest real part among the others
};

EigenReport eigen_report(const LinearModel& m, double zero_tol = 1e-8);

struct FrequencySamples {
    std::vector<double> f_hz;
    std::vector<std::string> outputs;
    std::vector<std::vector<std::complex<double>>> response;  ///< [output][frequency]
    std::string input;
    std::string normalization;
    std::vector<double> rcond;  ///< reciprocal condition estimate per frequency (AC scans)
};

inline constexpr double kMinScanFrequencyHz = 1e-5;

/// Exact AC scan of every rotor-speed output for one input.
FrequencySamples frequency_response(const LinearModel& m, const std::string& input,
                                    std::span<const double> f_hz);

/// Aggregate response probe/(s*G_M + sum(D + K/(s*T_g+1))) for a probe of
/// `probe_mw` MW entering the summed swing equations.
FrequencySamples principal_response(const PowerSystemCase& c, std::span<const double> f_hz,
                                    double probe_mw = 1.0);

/// Momentum-weighted average of the speed deviations per sample.
Eigen::VectorXd coi_deviation(const Trajectory& tr, const DynamicModel& model);
std::vector<std::complex<double>> coi_deviation(const FrequencySamples& fs, const Eigen::VectorXd& M);

/// Log-spaced grid of n points over [f_lo, f_hi].
std::vector<double> log_space(double f_lo, double f_hi, std::size_t n);

}  // namespace gridmomentum
