#include "gridmomentum/vector_fitting.hpp"

#include "gridmomentum/errors.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gridmomentum {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 0 real, 1 first of a conjugate pair, 2 second of the pair.
std::vector<int> pole_kinds(const std::vector<cplx>& p) {
    std::vector<int> kind(p.size(), 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].imag() != 0.0) {
            if (i + 1 >= p.size() || p[i + 1] != std::conj(p[i]))
                throw NumericalError("vector fitting: complex poles must come in adjacent conjugate pairs");
            kind[i] = 1;
            kind[i + 1] = 2;
            ++i;
        }
    }
    return kind;
}

// Real basis functions of the current poles at s.
void basis(const std::vector<cplx>& p, const std::vector<int>& kind, cplx s, Eigen::VectorXcd& phi) {
    const auto n = static_cast<Eigen::Index>(p.size());
    phi.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (kind[ii] == 0) {
            phi[i] = 1.0 / (s - p[ii]);
        } else if (kind[ii] == 1) {
            const cplx a = 1.0 / (s - p[ii]), b = 1.0 / (s - std::conj(p[ii]));
            phi[i] = a + b;
            phi[i + 1] = cplx(0, 1) * a - cplx(0, 1) * b;
            ++i;
        }
    }
}

// Minimum-norm solution of min ||A x - b|| with column equilibration. Excess
// order shows up as rank deficiency and is absorbed here.
Eigen::VectorXd scaled_lstsq(Eigen::MatrixXd A, const Eigen::VectorXd& b) {
    Eigen::VectorXd scale(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        const double nrm = A.col(j).norm();
        scale[j] = nrm > 0 ? 1.0 / nrm : 1.0;
        A.col(j) *= scale[j];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    if (cod.rank() == 0) throw NumericalError("vector fitting: least-squares system is empty");
    return cod.solve(b).cwiseProduct(scale);
}

std::vector<double> weights(std::span<const cplx> H, VFWeighting w) {
    std::vector<double> out(H.size(), 1.0);
    if (w == VFWeighting::InverseMagnitude)
        for (std::size_t k = 0; k < H.size(); ++k) {
            const double m = std::abs(H[k]);
            if (!(m > 0)) throw NumericalError("vector fitting: zero sample with inverse-magnitude weighting");
            out[k] = 1.0 / m;
        }
    return out;
}

void fit_residues(std::span<const double> f, std::span<const cplx> H, const std::vector<double>& w,
                  bool direct, RationalModel& m) {
    const auto kind = pole_kinds(m.poles);
    const auto n = static_cast<Eigen::Index>(m.poles.size());
    const auto ncol = n + (direct ? 1 : 0);
    const auto K = static_cast<Eigen::Index>(f.size());
    Eigen::MatrixXd A(2 * K, ncol);
    Eigen::VectorXd b(2 * K);
    Eigen::VectorXcd phi;
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        basis(m.poles, kind, cplx(0, kTwoPi * f[kk]), phi);
        for (Eigen::Index i = 0; i < n; ++i) {
            A(2 * k, i) = w[kk] * phi[i].real();
            A(2 * k + 1, i) = w[kk] * phi[i].imag();
        }
        if (direct) {
            A(2 * k, n) = w[kk];
            A(2 * k + 1, n) = 0.0;
        }
        b[2 * k] = w[kk] * H[kk].real();
        b[2 * k + 1] = w[kk] * H[kk].imag();
    }
    const Eigen::VectorXd x = scaled_lstsq(A, b);
    m.residues.assign(m.poles.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (kind[ii] == 0) {
            m.residues[ii] = x[i];
        } else if (kind[ii] == 1) {
            m.residues[ii] = cplx(x[i], x[i + 1]);
            m.residues[ii + 1] = cplx(x[i], -x[i + 1]);
        }
    }
    m.d = direct ? x[n] : 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const cplx e = (m.evaluate(cplx(0, kTwoPi * f[k])) - H[k]) / H[k];
        acc += std::norm(e);
    }
    m.rms = std::sqrt(acc / static_cast<double>(f.size()));
}

// Normalizes a pole set: stable, real poles first (ascending), then pairs by
// ascending imaginary part with the positive member first.
std::vector<cplx> canonical_poles(const Eigen::VectorXcd& eig) {
    std::vector<double> reals;
    std::vector<cplx> upper;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        cplx z = eig[i];
        if (z.real() > 0) z = cplx(-z.real(), z.imag());
        if (std::abs(z.imag()) <= 1e-12 * std::abs(z)) {
            reals.push_back(z.real());
        } else if (z.imag() > 0) {
            upper.push_back(z);
        }
    }
    // Unpaired complex eigenvalues (numerical asymmetry) degrade to real poles.
    const std::size_t n_pairs_expected = (static_cast<std::size_t>(eig.size()) - reals.size()) / 2;
    while (upper.size() > n_pairs_expected) {
        reals.push_back(upper.back().real());
        upper.pop_back();
    }
    while (reals.size() + 2 * upper.size() < static_cast<std::size_t>(eig.size())) reals.push_back(-1.0);
    std::sort(reals.begin(), reals.end());
    std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); });
    std::vector<cplx> out;
    for (double r : reals) out.emplace_back(r, 0.0);
    for (cplx z : upper) {
        out.push_back(z);
        out.push_back(std::conj(z));
    }
    return out;
}

double pole_movement(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size() || pole_kinds(a) != pole_kinds(b)) return INFINITY;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(a[i]), 1e-300));
    return worst;
}

}  // namespace

cplx RationalModel::evaluate(cplx s) const { return gridmomentum::evaluate(*this, s); }

cplx evaluate(const RationalModel& m, cplx s) {
    cplx acc = m.d;
    for (std::size_t i = 0; i < m.poles.size(); ++i) {
        if (s == m.poles[i]) throw NumericalError("rational model evaluated at a pole");
        acc += m.residues[i] / (s - m.poles[i]);
    }
    return acc;
}

std::vector<cplx> initial_poles(double f_lo, double f_hi, int n) {
    if (n < 1) throw ValidationError("vf", "order", "must be >= 1");
    if (!(f_lo > 0) || !(f_hi > f_lo)) throw ValidationError("vf", "band", "need 0 < f_lo < f_hi");
    std::vector<cplx> p;
    if (n % 2 == 1) p.emplace_back(-kTwoPi * f_lo, 0.0);
    const int pairs = n / 2;
    for (int i = 0; i < pairs; ++i) {
        const double frac = pairs == 1 ? 0.5 : static_cast<double>(i) / (pairs - 1);
        const double beta = kTwoPi * f_lo * std::pow(f_hi / f_lo, frac);
        p.emplace_back(-beta / 100.0, beta);
        p.emplace_back(-beta / 100.0, -beta);
    }
    return p;
}

RationalModel vf_fit(std::span<const double> f, std::span<const cplx> H, int order, const VFOptions& opts) {
    if (f.size() != H.size()) throw ValidationError("vf", "samples", "frequency and response lengths differ");
    if (order < 1) throw ValidationError("vf", "order", "must be >= 1");
    if (f.size() < static_cast<std::size_t>(2 * (order + 1)))
        throw ValidationError("vf", "samples", "need at least 2*(order+1) samples");
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!(f[k] > 0)) throw ValidationError("vf", "frequency", "must be > 0");
        if (k && !(f[k] > f[k - 1])) throw ValidationError("vf", "frequency", "must be strictly increasing");
        if (!std::isfinite(H[k].real()) || !std::isfinite(H[k].imag()))
            throw ValidationError("vf", "samples", "non-finite response");
    }
    const auto w = weights(H, opts.weighting);

    RationalModel m;
    m.order = order;
    m.poles = opts.start_poles.empty() ? initial_poles(f.front(), f.back(), order) : opts.start_poles;
    if (static_cast<int>(m.poles.size()) != order)
        throw ValidationError("vf", "start_poles", "count must equal the order");

    const auto K = static_cast<Eigen::Index>(f.size());
    const auto n = static_cast<Eigen::Index>(order);
    const Eigen::Index n_res = n + (opts.fit_direct_term ? 1 : 0);
    Eigen::VectorXcd phi;
    for (int it = 0; it < opts.max_iters; ++it) {
        const auto kind = pole_kinds(m.poles);
        Eigen::MatrixXd A(2 * K, n_res + n);
        Eigen::VectorXd b(2 * K);
        for (Eigen::Index k = 0; k < K; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            basis(m.poles, kind, cplx(0, kTwoPi * f[kk]), phi);
            for (Eigen::Index i = 0; i < n; ++i) {
                const cplx lhs = w[kk] * phi[i];
                const cplx sig = -w[kk] * H[kk] * phi[i];
                A(2 * k, i) = lhs.real();
                A(2 * k + 1, i) = lhs.imag();
                A(2 * k, n_res + i) = sig.real();
                A(2 * k + 1, n_res + i) = sig.imag();
            }
            if (opts.fit_direct_term) {
                A(2 * k, n) = w[kk];
                A(2 * k + 1, n) = 0.0;
            }
            b[2 * k] = w[kk] * H[kk].real();
            b[2 * k + 1] = w[kk] * H[kk].imag();
        }
        const Eigen::VectorXd x = scaled_lstsq(A, b);
        const Eigen::VectorXd ct = x.tail(n);

        Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd bb = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            if (kind[ii] == 0) {
                Z(i, i) = m.poles[ii].real();
                bb[i] = 1.0;
            } else if (kind[ii] == 1) {
                const double re = m.poles[ii].real(), im = m.poles[ii].imag();
                Z(i, i) = re;
                Z(i, i + 1) = im;
                Z(i + 1, i) = -im;
                Z(i + 1, i + 1) = re;
                bb[i] = 2.0;
            }
        }
        Z -= bb * ct.transpose();
        Eigen::EigenSolver<Eigen::MatrixXd> es(Z, false);
        if (es.info() != Eigen::Success) throw NumericalError("vector fitting: eigenvalue solve failed");
        const auto next = canonical_poles(es.eigenvalues());
        const double moved = pole_movement(canonical_poles(Eigen::Map<const Eigen::VectorXcd>(
                                               m.poles.data(), static_cast<Eigen::Index>(m.poles.size()))),
                                           next);
        m.poles = next;
        m.iterations = it + 1;
        fit_residues(f, H, w, opts.fit_direct_term, m);
        m.rms_history.push_back(m.rms);
        if (moved < opts.tolerance) {
            m.converged = true;
            break;
        }
    }
    if (m.residues.empty()) fit_residues(f, H, w, opts.fit_direct_term, m);
    return m;
}

OrderSweep vf_order_sweep(std::span<const double> f, std::span<const cplx> H, std::span<const int> orders,
                          const VFOptions& opts) {
    OrderSweep out;
    for (int n : orders) {
        if (f.size() < static_cast<std::size_t>(2 * (n + 1))) continue;
        out.fits.push_back(vf_fit(f, H, n, opts));
    }
    if (out.fits.empty()) throw ValidationError("vf", "samples", "too few samples for any requested order");
    out.chosen = out.fits.size() - 1;
    for (std::size_t i = 0; i + 1 < out.fits.size(); ++i) {
        const double cur = out.fits[i].rms, nxt = out.fits[i + 1].rms;
        if (cur <= 0 || (cur - nxt) / cur < 0.1) {
            out.chosen = i;
            break;
        }
    }
    return out;
}

double residue_sum(const RationalModel& m, double* imag_ratio) {
    cplx s = 0.0;
    for (const auto& c : m.residues) s += c;
    if (imag_ratio) *imag_ratio = std::abs(s) > 0 ? std::abs(s.imag()) / std::abs(s) : 0.0;
    return s.real();
}

std::string model_to_json(const RationalModel& m) {
    nlohmann::ordered_json j;
    j["order"] = m.order;
    j["poles_rad_per_s"] = nlohmann::json::array();
    j["residues"] = nlohmann::json::array();
    for (std::size_t i = 0; i < m.poles.size(); ++i) {
        j["poles_rad_per_s"].push_back({m.poles[i].real(), m.poles[i].imag()});
        j["residues"].push_back({m.residues[i].real(), m.residues[i].imag()});
    }
    j["direct"] = {m.d.real(), m.d.imag()};
    j["residue_sum"] = residue_sum(m);
    j["rms_relative_error"] = m.rms;
    j["iterations"] = m.iterations;
    j["converged"] = m.converged;
    return j.dump(2);
}

}  // namespace gridmomentum
