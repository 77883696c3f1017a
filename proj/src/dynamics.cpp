#include "gridmomentum/dynamics.hpp"

#include "gridmomentum/errors.hpp"

#include <cmath>
#include <complex>
#include <sstream>

namespace gridmomentum {

std::size_t StateLayout::num_governors() const {
    std::size_t n = 0;
    for (int s : governor_slot)
        if (s >= 0) ++n;
    return n;
}

DynamicModel::DynamicModel(const PowerSystemCase& c, const EquilibriumPoint& eq)
    : eq_(eq), Omega_(c.base_omega()), omega0_(c.omega0) {
    const std::size_t nm = c.machines.size(), nc = c.cigs.size(), n = nm + nc;
    if (eq.delta.size() != static_cast<Eigen::Index>(n))
        throw ValidationError("equilibrium", "delta", "dimension does not match the case");
    layout_.num_machines = nm;
    layout_.num_cigs = nc;
    layout_.governor_slot.assign(n, -1);
    M_.resize(static_cast<Eigen::Index>(n));
    D_.resize(static_cast<Eigen::Index>(n));
    K_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Tg_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    int slot = 0;
    for (std::size_t k = 0; k < nm; ++k) {
        const auto& m = c.machines[k];
        const auto kk = static_cast<Eigen::Index>(k);
        M_[kk] = machine_momentum(m);
        D_[kk] = m.D * m.S_B;
        if (m.governor) {
            layout_.governor_slot[k] = slot++;
            K_[kk] = m.governor_gain_mw();
            Tg_[kk] = m.governor->T_g;
        }
    }
    for (std::size_t j = 0; j < nc; ++j) {
        const auto& g = c.cigs[j];
        if (g.K_d != 0.0) throw ValidationError(g.id, "K_d", "only K_d = 0 is supported");
        const auto kk = static_cast<Eigen::Index>(nm + j);
        M_[kk] = cig_momentum(g);
        D_[kk] = g.K_w * g.P_ref;
    }
}

Eigen::VectorXd DynamicModel::equilibrium_state() const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(layout_.size()));
    const std::size_t n = layout_.num_elements();
    for (std::size_t k = 0; k < n; ++k) {
        x[static_cast<Eigen::Index>(layout_.delta(k))] = eq_.delta[static_cast<Eigen::Index>(k)];
        x[static_cast<Eigen::Index>(layout_.omega(k))] = omega0_;
        if (layout_.governor_slot[k] >= 0)
            x[static_cast<Eigen::Index>(layout_.pm(static_cast<std::size_t>(layout_.governor_slot[k])))] =
                eq_.p_set[static_cast<Eigen::Index>(k)];
    }
    return x;
}

StepInputs DynamicModel::nominal_inputs() const {
    StepInputs u;
    u.eta_gf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.num_cigs));
    u.momentum = M_;
    return u;
}

Eigen::VectorXd DynamicModel::electrical_power(const Eigen::VectorXd& x, const Eigen::MatrixXcd* Y) const {
    const auto n = static_cast<Eigen::Index>(layout_.num_elements());
    return gridmomentum::electrical_power(Y ? *Y : eq_.network.Y, eq_.network.E, x.head(n),
                                          eq_.network.base_mva);
}

void DynamicModel::rhs(const Eigen::VectorXd& x, const StepInputs& u, Eigen::VectorXd& dx,
                       Eigen::MatrixXd* jac) const {
    const std::size_t n = layout_.num_elements();
    const auto ni = static_cast<Eigen::Index>(n);
    if (x.size() != static_cast<Eigen::Index>(layout_.size()))
        throw ValidationError("state", "", "dimension mismatch");
    const Eigen::MatrixXcd& Y = u.Y ? *u.Y : eq_.network.Y;
    Eigen::VectorXd pe;
    Eigen::MatrixXd dpe;
    electrical_power_jacobian(Y, eq_.network.E, x.head(ni), eq_.network.base_mva, pe, dpe);

    dx.resize(x.size());
    if (jac) jac->setZero(x.size(), x.size());
    for (std::size_t k = 0; k < n; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const auto id = static_cast<Eigen::Index>(layout_.delta(k));
        const auto iw = static_cast<Eigen::Index>(layout_.omega(k));
        const double dw = x[iw] - omega0_;
        const double m = u.momentum[kk];
        const int slot = layout_.governor_slot[k];
        double p_in = eq_.p_set[kk];
        if (k >= layout_.num_machines) p_in *= 1.0 + u.eta_gf[kk - static_cast<Eigen::Index>(layout_.num_machines)];
        Eigen::Index ip = -1;
        if (slot >= 0) {
            ip = static_cast<Eigen::Index>(layout_.pm(static_cast<std::size_t>(slot)));
            p_in = x[ip];
            dx[ip] = (eq_.p_set[kk] - x[ip] - K_[kk] * dw) / Tg_[kk];
        }
        dx[id] = Omega_ * dw;
        dx[iw] = (p_in - pe[kk] - D_[kk] * dw) / m;
        if (!jac) continue;
        auto& J = *jac;
        J(id, iw) = Omega_;
        for (Eigen::Index j = 0; j < ni; ++j) J(iw, j) = -dpe(kk, j) / m;
        J(iw, iw) = -D_[kk] / m;
        if (ip >= 0) {
            J(iw, ip) = 1.0 / m;
            J(ip, iw) = -K_[kk] / Tg_[kk];
            J(ip, ip) = -1.0 / Tg_[kk];
        }
    }
}

Eigen::VectorXd rhs(const PowerSystemCase& c, const EquilibriumPoint& eq, const Eigen::VectorXd& x,
                    const ExogenousInputs& inputs, double t) {
    DynamicModel model(c, eq);
    StepInputs u = model.nominal_inputs();
    if (inputs.eta_gf) inputs.eta_gf(t, {u.eta_gf.data(), static_cast<std::size_t>(u.eta_gf.size())});
    if (inputs.inertia_override) {
        const auto nm = static_cast<Eigen::Index>(model.layout().num_machines);
        Eigen::VectorXd mc = u.momentum.tail(u.momentum.size() - nm);
        inputs.inertia_override(t, {mc.data(), static_cast<std::size_t>(mc.size())});
        u.momentum.tail(mc.size()) = mc;
    }
    Eigen::VectorXd dx;
    model.rhs(x, u, dx);
    return dx;
}

namespace {

void resolve_smooth(const ExogenousInputs& in, double t, StepInputs& u) {
    if (in.eta_gf) in.eta_gf(t, {u.eta_gf.data(), static_cast<std::size_t>(u.eta_gf.size())});
}

void resolve_held(const ExogenousInputs& in, double t, const DynamicModel& model, StepInputs& u) {
    if (!in.inertia_override) return;
    const auto nm = static_cast<Eigen::Index>(model.layout().num_machines);
    const auto nc = static_cast<Eigen::Index>(model.layout().num_cigs);
    Eigen::VectorXd mc = model.momentum().tail(nc);
    in.inertia_override(t, {mc.data(), static_cast<std::size_t>(nc)});
    for (Eigen::Index j = 0; j < nc; ++j)
        if (!(mc[j] > 0)) throw ValidationError("inertia_override", "", "momentum must stay > 0");
    u.momentum.segment(nm, nc) = mc;
}

}  // namespace

Trajectory integrate(const DynamicModel& model, const Eigen::VectorXd& x0, double t_end,
                     const IntegrationOptions& opts, const ExogenousInputs& inputs,
                     OUProcessSet* noise) {
    const double h = opts.step;
    if (!(h > 0)) throw ValidationError("integrate", "step", "must be > 0");
    if (opts.record_every < 1) throw ValidationError("integrate", "record_every", "must be >= 1");
    const auto steps = static_cast<long>(std::llround(t_end / h));
    if (steps < 1 || std::abs(static_cast<double>(steps) * h - t_end) > 1e-9 * std::max(1.0, t_end))
        throw ValidationError("integrate", "t_span", "must be a positive multiple of the step");
    const auto& L = model.layout();
    const auto dim = static_cast<Eigen::Index>(L.size());
    if (x0.size() != dim) throw ValidationError("integrate", "x0", "dimension mismatch");
    const auto& net = model.equilibrium().network;
    if (noise && noise->size() != static_cast<std::size_t>(net.load_g.size()))
        throw ValidationError("integrate", "noise", "process count must equal the load count");

    const auto nc = static_cast<Eigen::Index>(L.num_cigs);
    const auto nm = static_cast<Eigen::Index>(L.num_machines);
    const auto n_rec = opts.store ? static_cast<Eigen::Index>(steps / opts.record_every + 1) : 0;
    Trajectory tr;
    tr.t.reserve(static_cast<std::size_t>(n_rec));
    tr.x.resize(n_rec, dim);
    tr.p_e_cig.resize(n_rec, nc);
    tr.v_d.resize(n_rec, nc);
    tr.v_q.resize(n_rec, nc);
    tr.i_d.resize(n_rec, nc);
    tr.i_q.resize(n_rec, nc);

    Eigen::MatrixXcd Y_held = net.Y;
    auto record = [&](double t, const Eigen::VectorXd& x) {
        if (opts.observer) opts.observer(t, x);
        if (!opts.store) return;
        const auto r = static_cast<Eigen::Index>(tr.t.size());
        tr.t.push_back(t);
        tr.x.row(r) = x.transpose();
        if (nc == 0) return;
        const auto n = nm + nc;
        Eigen::VectorXcd V(n);
        for (Eigen::Index k = 0; k < n; ++k) V[k] = std::polar(net.E[k], x[k]);
        const Eigen::VectorXcd I = Y_held * V;
        for (Eigen::Index j = 0; j < nc; ++j) {
            const auto k = nm + j;
            tr.p_e_cig(r, j) = (V[k] * std::conj(I[k])).real() * net.base_mva;
            tr.v_d(r, j) = V[k].real();
            tr.v_q(r, j) = V[k].imag();
            tr.i_d(r, j) = I[k].real();
            tr.i_q(r, j) = I[k].imag();
        }
    };

    StepInputs u0 = model.nominal_inputs(), u1 = model.nominal_inputs();
    Eigen::VectorXd x = x0, xn, f0, f1, G;
    Eigen::MatrixXd Jf, Jg;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);

    if (noise && !noise->empty()) Y_held = net.modulated(noise->eta());
    record(0.0, x);
    for (long s = 0; s < steps; ++s) {
        const double t0 = static_cast<double>(s) * h;
        const double t1 = static_cast<double>(s + 1) * h;
        if (noise && !noise->empty()) Y_held = net.modulated(noise->eta());
        u0.Y = u1.Y = &Y_held;
        resolve_held(inputs, 0.5 * (t0 + t1), model, u0);
        u1.momentum = u0.momentum;
        resolve_smooth(inputs, t0, u0);
        resolve_smooth(inputs, t1, u1);

        model.rhs(x, u0, f0, &Jf);
        xn = x + h * f0;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        bool have_lu = false, converged = false;
        for (int it = 0; it < opts.max_corrector_iterations; ++it) {
            const bool refresh = !have_lu || it % 6 == 5;
            model.rhs(xn, u1, f1, refresh ? &Jf : nullptr);
            G = xn - x - 0.5 * h * (f0 + f1);
            if (refresh) {
                Jg = I - 0.5 * h * Jf;
                lu.compute(Jg);
                have_lu = true;
            }
            const Eigen::VectorXd dx = lu.solve(G);
            xn -= dx;
            bool ok = true;
            for (Eigen::Index i = 0; i < dim; ++i) {
                if (std::abs(dx[i]) > opts.tolerance * std::max(1.0, std::abs(xn[i]))) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream os;
            os << "trapezoidal corrector did not converge at t = " << t1 << " s";
            throw NumericalError(os.str());
        }
        if (!xn.allFinite()) {
            std::ostringstream os;
            os << "non-finite state at t = " << t1 << " s";
            throw NumericalError(os.str());
        }
        x = xn;
        if (noise && !noise->empty()) noise->step(h);
        if ((s + 1) % opts.record_every == 0) record(t1, x);
    }
    return tr;
}

}  // namespace gridmomentum
