#pragma once

// Vector fitting of scalar frequency responses by iterative pole relocation
// (real-coefficient formulation, strictly proper by default).

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace gridmomentum {

using cplx = std::complex<double>;

struct RationalModel {
    std::vector<cplx> poles;     ///< [rad/s]; conjugate pairs adjacent, positive imag first
    std::vector<cplx> residues;  ///< same order as poles
    cplx d = 0.0;
    double rms = 0.0;            ///< sqrt(mean |(fit - H)/H|^2) over the samples
    int order = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> rms_history;  ///< fit error after each relocation

    cplx evaluate(cplx s) const;
};

/// Sum of c_k/(s - a_k) + d; throws NumericalError when s hits a pole.
cplx evaluate(const RationalModel& m, cplx s);

/// Starting poles: conjugate pairs with imaginary parts log-spaced over the
/// band and real parts -imag/100, plus one real pole at -2*pi*f_lo when n is odd.
std::vector<cplx> initial_poles(double f_lo_hz, double f_hi_hz, int n);

enum class VFWeighting { InverseMagnitude, Uniform };

struct VFOptions {
    int max_iters = 20;
    double tolerance = 1e-6;  ///< relative pole movement
    bool fit_direct_term = false;
    VFWeighting weighting = VFWeighting::InverseMagnitude;
    std::vector<cplx> start_poles;  ///< overrides initial_poles when non-empty
};

/// Fits an order-n model to samples H at frequencies f [Hz].
RationalModel vf_fit(std::span<const double> f_hz, std::span<const cplx> H, int order,
                     const VFOptions& opts = {});

struct OrderSweep {
    std::vector<RationalModel> fits;  ///< one per tried order
    std::size_t chosen = 0;           ///< index into fits
};

/// Fits every order in `orders` that the sample count admits and picks the
/// smallest one whose successor improves the rms error by less than 10%.
OrderSweep vf_order_sweep(std::span<const double> f_hz, std::span<const cplx> H,
                          std::span<const int> orders, const VFOptions& opts = {});

/// Re(sum c_k). `imag_ratio`, if given, receives |Im sum|/|sum|.
double residue_sum(const RationalModel& m, double* imag_ratio = nullptr);

/// JSON dump of poles/residues and diagnostics.
std::string model_to_json(const RationalModel& m);

}  // namespace gridmomentum
