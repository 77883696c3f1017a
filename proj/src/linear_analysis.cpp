#include "gridmomentum/linear_analysis.hpp"

#include "gridmomentum/errors.hpp"

#include <cmath>
#include <numbers>

namespace gridmomentum {

using cd = std::complex<double>;

Eigen::Index LinearModel::input_index(const std::string& label) const {
    for (std::size_t i = 0; i < input_labels.size(); ++i)
        if (input_labels[i] == label) return static_cast<Eigen::Index>(i);
    throw ValidationError("input", label, "no such input");
}

LinearModel linearize(const PowerSystemCase& c, const EquilibriumPoint& eq) {
    const DynamicModel dyn(c, eq);
    LinearModel m;
    m.layout = dyn.layout();
    m.element_ids = eq.element_ids;
    m.Omega = dyn.base_omega();
    m.M = dyn.momentum();
    m.D = dyn.damping();
    m.K = dyn.governor_gain();
    m.Tg = dyn.governor_tau();

    Eigen::VectorXd dx;
    dyn.rhs(dyn.equilibrium_state(), dyn.nominal_inputs(), dx, &m.A);
    Eigen::VectorXd pe;
    electrical_power_jacobian(eq.network.Y, eq.network.E, eq.delta, eq.network.base_mva, pe, m.Pi);

    const std::size_t n = m.layout.num_elements();
    const std::size_t nm = m.layout.num_machines;
    const auto dim = static_cast<Eigen::Index>(m.layout.size());
    const std::size_t n_in = c.cigs.size() + n + c.loads.size();
    m.B = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(n_in));
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < c.cigs.size(); ++j, ++col) {
        const auto k = static_cast<Eigen::Index>(nm + j);
        m.B(static_cast<Eigen::Index>(m.layout.omega(nm + j)), col) = eq.p_set[k] / m.M[k];
        m.input_labels.push_back("eta_gf:" + c.cigs[j].id);
    }
    for (std::size_t k = 0; k < n; ++k, ++col) {
        m.B(static_cast<Eigen::Index>(m.layout.omega(k)), col) = 1.0 / m.M[static_cast<Eigen::Index>(k)];
        m.input_labels.push_back("power:" + eq.element_ids[k]);
    }
    Eigen::VectorXcd V(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < V.size(); ++k) V[k] = std::polar(eq.network.E[k], eq.delta[k]);
    for (std::size_t l = 0; l < c.loads.size(); ++l, ++col) {
        const Eigen::VectorXcd dI = eq.network.load_sensitivity(l) * V;
        for (std::size_t k = 0; k < n; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const double dp = (V[kk] * std::conj(dI[kk])).real() * eq.network.base_mva;
            m.B(static_cast<Eigen::Index>(m.layout.omega(k)), col) = -dp / m.M[kk];
        }
        m.input_labels.push_back("eta_l:" + c.loads[l].id);
    }
    return m;
}

namespace {

Eigen::VectorXd right_null(const LinearModel& m) {
    Eigen::VectorXd u1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.layout.size()));
    u1.head(static_cast<Eigen::Index>(m.num_elements())).setOnes();
    return u1;
}

Eigen::VectorXd assemble_v1(const LinearModel& m, const Eigen::VectorXd& w) {
    const auto n = static_cast<Eigen::Index>(m.num_elements());
    const Eigen::VectorXd theta = m.D + m.K;
    const double denom = theta.dot(w);
    if (!(std::abs(denom) > 0))
        throw NumericalError("null space: 1'Theta 1 = 0 (no damping and no governors), v1 cannot be normalized");
    Eigen::VectorXd v(static_cast<Eigen::Index>(m.layout.size()));
    v.head(n) = theta.cwiseProduct(w) / m.Omega;
    v.segment(n, n) = m.M.cwiseProduct(w);
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
        const int slot = m.layout.governor_slot[k];
        if (slot >= 0)
            v[static_cast<Eigen::Index>(m.layout.pm(static_cast<std::size_t>(slot)))] =
                m.Tg[static_cast<Eigen::Index>(k)] * w[static_cast<Eigen::Index>(k)];
    }
    return v * (m.Omega / denom);
}

}  // namespace

NullSpaceData null_space(const LinearModel& m) {
    NullSpaceData out;
    out.u1 = right_null(m);
    out.Theta = m.D + m.K;
    const auto n = m.Pi.rows();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.Pi.transpose(), Eigen::ComputeFullV);
    Eigen::VectorXd w = svd.matrixV().col(n - 1);
    w *= static_cast<double>(n) / w.sum();
    out.w = w;
    out.v1 = assemble_v1(m, w);
    return out;
}

Eigen::VectorXd null_space_closed_form(const LinearModel& m) {
    return assemble_v1(m, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.num_elements())));
}

Eigen::VectorXd null_space_svd(const LinearModel& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.A.transpose(), Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(m.A.rows() - 1);
    const double s = v.dot(right_null(m));
    if (!(std::abs(s) > 0)) throw NumericalError("null space: SVD vector orthogonal to u1");
    return v / s;
}

double laplacian_asymmetry(const LinearModel& m) {
    const double scale = m.Pi.cwiseAbs().maxCoeff();
    return scale > 0 ? (m.Pi - m.Pi.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
}

DisturbanceProjection project_disturbance(const NullSpaceData& nsd, const LinearModel& m,
                                          const Eigen::VectorXd& b) {
    const auto n = static_cast<Eigen::Index>(m.num_elements());
    if (b.size() != n) throw ValidationError("disturbance", "b", "dimension must equal the element count");
    if (!(std::abs(nsd.Theta.dot(nsd.w)) > 0))
        throw NumericalError("disturbance projection: degenerate Theta");
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.layout.size()));
    full.segment(n, n) = b.cwiseQuotient(m.M);
    DisturbanceProjection p;
    p.b_delta = nsd.v1.dot(full);
    p.b_residual = full - p.b_delta * nsd.u1;
    p.alpha_rate = p.b_delta;
    return p;
}

EigenReport eigen_report(const LinearModel& m, double tol) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.A, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solve failed");
    EigenReport r;
    r.eigenvalues = es.eigenvalues();
    r.max_real_nonzero = -INFINITY;
    for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
        if (std::abs(r.eigenvalues[i]) <= tol) {
            ++r.near_zero;
        } else {
            r.max_real_nonzero = std::max(r.max_real_nonzero, r.eigenvalues[i].real());
        }
    }
    return r;
}

FrequencySamples frequency_response(const LinearModel& m, const std::string& input,
                                    std::span<const double> f_hz) {
    const Eigen::Index col = m.input_index(input);
    FrequencySamples fs;
    fs.input = input;
    fs.normalization = "rotor speed deviation [pu] per unit input";
    fs.outputs = m.element_ids;
    fs.response.assign(m.num_elements(), {});
    const Eigen::VectorXcd b = m.B.col(col).cast<cd>();
    const Eigen::MatrixXcd Ac = m.A.cast<cd>();
    for (std::size_t i = 0; i < f_hz.size(); ++i) {
        const double f = f_hz[i];
        if (!(f >= kMinScanFrequencyHz))
            throw ValidationError("frequency_response", "f", "frequencies must be >= 1e-5 Hz");
        if (i && !(f > f_hz[i - 1]))
            throw ValidationError("frequency_response", "f", "frequencies must be strictly increasing");
        Eigen::MatrixXcd S = -Ac;
        S.diagonal().array() += cd(0.0, 2.0 * std::numbers::pi * f);
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(S);
        const Eigen::VectorXcd x = lu.solve(b);
        if (!x.allFinite()) throw NumericalError("frequency_response: singular system at f = " + std::to_string(f));
        fs.f_hz.push_back(f);
        fs.rcond.push_back(lu.rcond());
        for (std::size_t k = 0; k < m.num_elements(); ++k)
            fs.response[k].push_back(x[static_cast<Eigen::Index>(m.layout.omega(k))]);
    }
    return fs;
}

FrequencySamples principal_response(const PowerSystemCase& c, std::span<const double> f_hz,
                                    double probe_mw) {
    FrequencySamples fs;
    fs.input = "principal";
    fs.normalization = "aggregate speed deviation [pu] for a " + std::to_string(probe_mw) + " MW probe";
    fs.outputs = {"principal"};
    fs.response.assign(1, {});
    const double G = global_momentum_true(c);
    for (double f : f_hz) {
        const cd s(0.0, 2.0 * std::numbers::pi * f);
        cd den = s * G;
        for (const auto& m : c.machines) {
            den += m.D * m.S_B;
            if (m.governor) den += m.governor_gain_mw() / (s * m.governor->T_g + 1.0);
        }
        for (const auto& g : c.cigs) den += g.K_w * g.P_ref;
        fs.f_hz.push_back(f);
        fs.response[0].push_back(probe_mw / den);
    }
    return fs;
}

Eigen::VectorXd coi_deviation(const Trajectory& tr, const DynamicModel& model) {
    const auto& L = model.layout();
    const auto n = static_cast<Eigen::Index>(L.num_elements());
    const Eigen::VectorXd& M = model.momentum();
    const double G = M.sum();
    Eigen::VectorXd out(static_cast<Eigen::Index>(tr.samples()));
    for (Eigen::Index r = 0; r < out.size(); ++r)
        out[r] = (tr.x.row(r).segment(n, n).transpose().array() - model.omega0()).matrix().dot(M) / G;
    return out;
}

std::vector<std::complex<double>> coi_deviation(const FrequencySamples& fs, const Eigen::VectorXd& M) {
    if (static_cast<Eigen::Index>(fs.response.size()) != M.size())
        throw ValidationError("coi", "M", "one momentum per output required");
    std::vector<cd> out(fs.f_hz.size(), 0.0);
    const double G = M.sum();
    for (std::size_t k = 0; k < fs.response.size(); ++k)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += M[static_cast<Eigen::Index>(k)] * fs.response[k][i] / G;
    return out;
}

std::vector<double> log_space(double f_lo, double f_hi, std::size_t n) {
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i)
        f[i] = n == 1 ? f_lo : f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return f;
}

}  // namespace gridmomentum
