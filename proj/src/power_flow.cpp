#include "gridmomentum/power_flow.hpp"

#include "gridmomentum/errors.hpp"

#include <cmath>
#include <complex>

namespace gridmomentum {

using cd = std::complex<double>;

Eigen::MatrixXcd bus_admittance(const PowerSystemCase& c) {
    const auto n = static_cast<Eigen::Index>(c.buses.size());
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto* group : {&c.lines, &c.transformers}) {
        for (const auto& br : *group) {
            if (!br.in_service) continue;
            const auto f = static_cast<Eigen::Index>(c.bus_index(br.from));
            const auto t = static_cast<Eigen::Index>(c.bus_index(br.to));
            const cd ys = 1.0 / cd(br.r, br.x);
            const cd ysh(0.0, br.b / 2.0);
            Y(f, f) += (ys + ysh) / (br.tap * br.tap);
            Y(t, t) += ys + ysh;
            Y(f, t) -= ys / br.tap;
            Y(t, f) -= ys / br.tap;
        }
    }
    return Y;
}

namespace {

enum class BusKind { PQ, PV, Slack };

struct LoadDemand {
    double p = 0.0, q = 0.0;        // [pu] at the given voltage
    double dp_dv = 0.0, dq_dv = 0.0;
};

LoadDemand load_demand(const PowerSystemCase& c, const LoadParams& l, double v) {
    const double v0 = l.V_0 / c.buses[c.bus_index(l.bus)].base_kv;
    const double scale = std::pow(v / v0, l.gamma);
    LoadDemand d;
    d.p = l.P_L0 / c.base_mva * scale;
    d.q = l.Q_L0 / c.base_mva * scale;
    d.dp_dv = v > 0 ? l.gamma * d.p / v : 0.0;
    d.dq_dv = v > 0 ? l.gamma * d.q / v : 0.0;
    return d;
}

std::size_t slack_bus(const PowerSystemCase& c) {
    if (const auto* m = c.find_machine(c.slack)) return c.bus_index(m->bus);
    return c.bus_index(c.find_cig(c.slack)->bus);
}

}  // namespace

PowerFlowSolution solve_power_flow(const PowerSystemCase& c, const PowerFlowOptions& opts) {
    const std::size_t n = c.buses.size();
    const Eigen::MatrixXcd Y = bus_admittance(c);

    std::vector<BusKind> kind(n, BusKind::PQ);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd p_gen = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

    for (const auto& m : c.machines) {
        const auto b = c.bus_index(m.bus);
        kind[b] = BusKind::PV;
        v[static_cast<Eigen::Index>(b)] = m.v_set;
        p_gen[static_cast<Eigen::Index>(b)] += m.p_mw / c.base_mva;
    }
    for (const auto& g : c.cigs) {
        const auto b = c.bus_index(g.bus);
        kind[b] = BusKind::PV;
        v[static_cast<Eigen::Index>(b)] = g.v_set;
        p_gen[static_cast<Eigen::Index>(b)] += g.P_g * g.P_ref / c.base_mva;
    }
    const std::size_t slack = slack_bus(c);
    kind[slack] = BusKind::Slack;

    // Unknown ordering: theta of non-slack buses, then |V| of PQ buses.
    std::vector<Eigen::Index> theta_idx, v_idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (kind[i] != BusKind::Slack) theta_idx.push_back(static_cast<Eigen::Index>(i));
        if (kind[i] == BusKind::PQ) v_idx.push_back(static_cast<Eigen::Index>(i));
    }
    const auto n_th = static_cast<Eigen::Index>(theta_idx.size());
    const auto n_unk = n_th + static_cast<Eigen::Index>(v_idx.size());

    auto demand = [&](Eigen::VectorXd& pd, Eigen::VectorXd& qd, Eigen::VectorXd& dpd,
                      Eigen::VectorXd& dqd) {
        pd.setZero(static_cast<Eigen::Index>(n));
        qd.setZero(static_cast<Eigen::Index>(n));
        dpd.setZero(static_cast<Eigen::Index>(n));
        dqd.setZero(static_cast<Eigen::Index>(n));
        for (const auto& l : c.loads) {
            const auto b = static_cast<Eigen::Index>(c.bus_index(l.bus));
            const auto d = load_demand(c, l, v[b]);
            pd[b] += d.p;
            qd[b] += d.q;
            dpd[b] += d.dp_dv;
            dqd[b] += d.dq_dv;
        }
    };

    Eigen::VectorXcd V(static_cast<Eigen::Index>(n));
    Eigen::VectorXd pd, qd, dpd, dqd, mis(n_unk);
    Eigen::VectorXcd S;
    PowerFlowSolution sol;

    auto evaluate = [&]() {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) V[i] = std::polar(v[i], theta[i]);
        S = V.cwiseProduct((Y * V).conjugate());
        demand(pd, qd, dpd, dqd);
        for (Eigen::Index k = 0; k < n_th; ++k) {
            const auto i = theta_idx[static_cast<std::size_t>(k)];
            mis[k] = p_gen[i] - pd[i] - S[i].real();
        }
        for (std::size_t k = 0; k < v_idx.size(); ++k) {
            const auto i = v_idx[k];
            mis[n_th + static_cast<Eigen::Index>(k)] = -qd[i] - S[i].imag();
        }
        return n_unk ? mis.cwiseAbs().maxCoeff() : 0.0;
    };

    double norm = evaluate();
    int it = 0;
    while (norm > opts.tolerance) {
        if (it >= opts.max_iterations)
            throw NumericalError("power flow diverged: mismatch " + std::to_string(norm) +
                                 " pu after " + std::to_string(it) + " iterations");
        // dS/dtheta and dS/d|V| in the standard complex form.
        const Eigen::VectorXcd I = Y * V;
        Eigen::MatrixXcd dS_dth = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Eigen::MatrixXcd dS_dv = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            const cd vn = V[i] / v[i];
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
                dS_dth(i, k) = -cd(0, 1) * V[i] * std::conj(Y(i, k) * V[k]);
                dS_dv(i, k) = V[i] * std::conj(Y(i, k) * (V[k] / v[k]));
            }
            dS_dth(i, i) += cd(0, 1) * V[i] * std::conj(I[i]);
            dS_dv(i, i) += std::conj(I[i]) * vn;
        }
        Eigen::MatrixXd J(n_unk, n_unk);
        for (Eigen::Index r = 0; r < n_unk; ++r) {
            const bool p_row = r < n_th;
            const auto i = p_row ? theta_idx[static_cast<std::size_t>(r)]
                                 : v_idx[static_cast<std::size_t>(r - n_th)];
            for (Eigen::Index col = 0; col < n_unk; ++col) {
                const bool th_col = col < n_th;
                const auto k = th_col ? theta_idx[static_cast<std::size_t>(col)]
                                      : v_idx[static_cast<std::size_t>(col - n_th)];
                const cd d = th_col ? dS_dth(i, k) : dS_dv(i, k);
                double val = p_row ? d.real() : d.imag();
                if (!th_col && i == k) val += p_row ? dpd[i] : dqd[i];
                J(r, col) = val;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) throw NumericalError("power flow Jacobian is singular (isolated bus?)");
        const Eigen::VectorXd dx = lu.solve(mis);
        for (Eigen::Index k = 0; k < n_th; ++k) theta[theta_idx[static_cast<std::size_t>(k)]] += dx[k];
        for (std::size_t k = 0; k < v_idx.size(); ++k) v[v_idx[k]] += dx[n_th + static_cast<Eigen::Index>(k)];
        ++it;
        norm = evaluate();
        if (!std::isfinite(norm)) throw NumericalError("power flow produced non-finite values");
    }

    sol.v = v;
    sol.theta = theta;
    sol.mismatch = norm;
    sol.iterations = it;

    // Bus-level generation: what the network draws plus local demand.
    Eigen::VectorXd p_bus(static_cast<Eigen::Index>(n)), q_bus(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        p_bus[i] = (S[i].real() + pd[i]) * c.base_mva;
        q_bus[i] = (S[i].imag() + qd[i]) * c.base_mva;
    }

    // Split bus totals among the sources on that bus: P per dispatch (slack
    // takes the remainder), Q in proportion to rating.
    std::vector<double> rating_on_bus(n, 0.0), dispatched_on_bus(n, 0.0);
    for (const auto& m : c.machines) {
        const auto b = c.bus_index(m.bus);
        rating_on_bus[b] += m.S_B;
        if (m.id != c.slack) dispatched_on_bus[b] += m.p_mw;
    }
    for (const auto& g : c.cigs) {
        const auto b = c.bus_index(g.bus);
        rating_on_bus[b] += g.P_ref;
        if (g.id != c.slack) dispatched_on_bus[b] += g.P_g * g.P_ref;
    }
    auto add_flow = [&](const std::string& id, std::size_t b, double p_disp, double rating) {
        ElementFlow f;
        f.id = id;
        const auto bi = static_cast<Eigen::Index>(b);
        f.p_mw = id == c.slack ? p_bus[bi] - dispatched_on_bus[b] : p_disp;
        f.q_mvar = q_bus[bi] * rating / rating_on_bus[b];
        sol.generators.push_back(f);
    };
    for (const auto& m : c.machines) add_flow(m.id, c.bus_index(m.bus), m.p_mw, m.S_B);
    for (const auto& g : c.cigs) add_flow(g.id, c.bus_index(g.bus), g.P_g * g.P_ref, g.P_ref);

    double gen_total = 0.0, load_total = 0.0;
    for (const auto& g : sol.generators) gen_total += g.p_mw;
    for (const auto& l : c.loads) {
        const auto d = load_demand(c, l, v[static_cast<Eigen::Index>(c.bus_index(l.bus))]);
        sol.loads.push_back({l.id, d.p * c.base_mva, d.q * c.base_mva});
        load_total += d.p * c.base_mva;
    }
    sol.losses_mw = gen_total - load_total;
    return sol;
}

Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& Y, const std::vector<int>& retained) {
    const auto n = Y.rows();
    std::vector<char> keep(static_cast<std::size_t>(n), 0);
    for (int r : retained) keep[static_cast<std::size_t>(r)] = 1;
    std::vector<int> elim;
    for (int i = 0; i < n; ++i)
        if (!keep[static_cast<std::size_t>(i)]) elim.push_back(i);
    const auto nr = static_cast<Eigen::Index>(retained.size());
    const auto ne = static_cast<Eigen::Index>(elim.size());
    Eigen::MatrixXcd Yrr(nr, nr), Yre(nr, ne), Yer(ne, nr), Yee(ne, ne);
    for (Eigen::Index i = 0; i < nr; ++i) {
        for (Eigen::Index j = 0; j < nr; ++j) Yrr(i, j) = Y(retained[static_cast<std::size_t>(i)], retained[static_cast<std::size_t>(j)]);
        for (Eigen::Index j = 0; j < ne; ++j) {
            Yre(i, j) = Y(retained[static_cast<std::size_t>(i)], elim[static_cast<std::size_t>(j)]);
            Yer(j, i) = Y(elim[static_cast<std::size_t>(j)], retained[static_cast<std::size_t>(i)]);
        }
    }
    if (ne == 0) return Yrr;
    for (Eigen::Index i = 0; i < ne; ++i)
        for (Eigen::Index j = 0; j < ne; ++j) Yee(i, j) = Y(elim[static_cast<std::size_t>(i)], elim[static_cast<std::size_t>(j)]);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(Yee);
    if (!lu.isInvertible()) throw NumericalError("Kron reduction: eliminated block is singular");
    return Yrr - Yre * lu.solve(Yer);
}

Eigen::MatrixXcd ReducedNetwork::modulated(std::span<const double> eta) const {
    Eigen::MatrixXcd out = Y;
    const auto m = W.rows();
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(m);
    bool any_update = false;
    for (std::size_t l = 0; l < eta.size(); ++l) {
        const double dg = eta[l] * load_g[static_cast<Eigen::Index>(l)];
        if (load_retained_node[l] >= 0) {
            out(load_retained_node[l], load_retained_node[l]) += dg;
        } else if (load_update_slot[l] >= 0) {
            d[load_update_slot[l]] = dg;
            any_update = any_update || dg != 0.0;
        }
    }
    if (!any_update) return out;
    Eigen::MatrixXcd K = W * d.asDiagonal();
    K.diagonal().array() += 1.0;
    out += A * d.asDiagonal() * K.partialPivLu().solve(B);
    return out;
}

Eigen::MatrixXcd ReducedNetwork::load_sensitivity(std::size_t load) const {
    const auto n = Y.rows();
    Eigen::MatrixXcd dY = Eigen::MatrixXcd::Zero(n, n);
    const double g = load_g[static_cast<Eigen::Index>(load)];
    if (load_retained_node[load] >= 0) {
        dY(load_retained_node[load], load_retained_node[load]) = g;
    } else if (load_update_slot[load] >= 0) {
        const auto s = load_update_slot[load];
        dY = g * A.col(s) * B.row(s);
    }
    return dY;
}

Eigen::VectorXd electrical_power(const Eigen::MatrixXcd& Y, const Eigen::VectorXd& E,
                                 const Eigen::VectorXd& delta, double base_mva) {
    const auto n = E.size();
    Eigen::VectorXcd V(n);
    for (Eigen::Index k = 0; k < n; ++k) V[k] = std::polar(E[k], delta[k]);
    const Eigen::VectorXcd I = Y * V;
    Eigen::VectorXd p(n);
    for (Eigen::Index k = 0; k < n; ++k) p[k] = (V[k] * std::conj(I[k])).real() * base_mva;
    return p;
}

void electrical_power_jacobian(const Eigen::MatrixXcd& Y, const Eigen::VectorXd& E,
                               const Eigen::VectorXd& delta, double base_mva,
                               Eigen::VectorXd& p_e, Eigen::MatrixXd& jac) {
    const auto n = E.size();
    Eigen::VectorXcd V(n);
    for (Eigen::Index k = 0; k < n; ++k) V[k] = std::polar(E[k], delta[k]);
    p_e.resize(n);
    jac.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        cd ik = 0.0;
        double diag = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const cd yv = Y(k, j) * V[j];
            ik += yv;
            if (j == k) continue;
            // d/d delta_j of Re(V_k conj(Y_kj V_j)) = Im(V_k conj(Y_kj V_j))
            const double d = (V[k] * std::conj(yv)).imag() * base_mva;
            jac(k, j) = d;
            diag -= d;
        }
        jac(k, k) = diag;
        p_e[k] = (V[k] * std::conj(ik)).real() * base_mva;
    }
}

EquilibriumPoint build_equilibrium(const PowerSystemCase& c, const PowerFlowSolution& pf) {
    const auto nb = static_cast<Eigen::Index>(c.buses.size());
    const std::size_t ng = c.machines.size() + c.cigs.size();

    struct Source {
        std::string id;
        std::size_t bus;
        double x;
    };
    std::vector<Source> sources;
    for (const auto& m : c.machines) sources.push_back({m.id, c.bus_index(m.bus), m.x_d_prime});
    for (const auto& g : c.cigs) sources.push_back({g.id, c.bus_index(g.bus), g.x_s});

    // Node numbering: buses first, then one extra internal node per source
    // with a nonzero internal reactance.
    Eigen::Index extra = 0;
    for (const auto& s : sources)
        if (s.x > 0) ++extra;
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(nb + extra, nb + extra);
    Y.topLeftCorner(nb, nb) = bus_admittance(c);

    EquilibriumPoint eq;
    eq.num_machines = c.machines.size();
    eq.num_cigs = c.cigs.size();
    eq.omega = c.omega0;
    eq.delta.resize(static_cast<Eigen::Index>(ng));
    eq.p_set.resize(static_cast<Eigen::Index>(ng));
    eq.network.base_mva = c.base_mva;
    eq.network.E.resize(static_cast<Eigen::Index>(ng));

    std::vector<int> retained;
    Eigen::Index next = nb;
    for (std::size_t k = 0; k < ng; ++k) {
        const auto& s = sources[k];
        const auto b = static_cast<Eigen::Index>(s.bus);
        const cd vb = std::polar(pf.v[b], pf.theta[b]);
        const auto& flow = pf.generators[k];
        const cd sk(flow.p_mw / c.base_mva, flow.q_mvar / c.base_mva);
        const cd ik = std::conj(sk / vb);
        const cd e = vb + cd(0.0, s.x) * ik;
        eq.element_ids.push_back(s.id);
        eq.delta[static_cast<Eigen::Index>(k)] = std::arg(e);
        eq.network.E[static_cast<Eigen::Index>(k)] = std::abs(e);
        if (s.x > 0) {
            const cd y = 1.0 / cd(0.0, s.x);
            Y(next, next) += y;
            Y(b, b) += y;
            Y(next, b) -= y;
            Y(b, next) -= y;
            retained.push_back(static_cast<int>(next));
            ++next;
        } else {
            retained.push_back(static_cast<int>(b));
        }
    }

    // Loads as constant shunt admittances at the solved voltage.
    const auto nl = static_cast<Eigen::Index>(c.loads.size());
    eq.network.load_g.resize(nl);
    std::vector<int> load_nodes;
    for (Eigen::Index l = 0; l < nl; ++l) {
        const auto b = static_cast<Eigen::Index>(c.bus_index(c.loads[static_cast<std::size_t>(l)].bus));
        const auto& d = pf.loads[static_cast<std::size_t>(l)];
        const double v2 = pf.v[b] * pf.v[b];
        const cd y(d.p_mw / c.base_mva / v2, -d.q_mvar / c.base_mva / v2);
        Y(b, b) += y;
        eq.network.load_g[l] = y.real();
        load_nodes.push_back(static_cast<int>(b));
    }

    eq.network.Y = kron_reduce(Y, retained);

    // Low-rank modulation data for loads on eliminated nodes.
    std::vector<int> elim;
    {
        std::vector<char> keep(static_cast<std::size_t>(Y.rows()), 0);
        for (int r : retained) keep[static_cast<std::size_t>(r)] = 1;
        for (int i = 0; i < Y.rows(); ++i)
            if (!keep[static_cast<std::size_t>(i)]) elim.push_back(i);
    }
    auto elim_pos = [&](int node) {
        for (std::size_t i = 0; i < elim.size(); ++i)
            if (elim[i] == node) return static_cast<int>(i);
        return -1;
    };
    auto retained_pos = [&](int node) {
        for (std::size_t i = 0; i < retained.size(); ++i)
            if (retained[i] == node) return static_cast<int>(i);
        return -1;
    };
    int slots = 0;
    for (int node : load_nodes) {
        const int r = retained_pos(node);
        eq.network.load_retained_node.push_back(r);
        eq.network.load_update_slot.push_back(r >= 0 ? -1 : slots++);
    }
    const auto ne = static_cast<Eigen::Index>(elim.size());
    const auto nr = static_cast<Eigen::Index>(retained.size());
    if (slots > 0) {
        Eigen::MatrixXcd Yee(ne, ne), Yer(ne, nr), Yre(nr, ne);
        for (Eigen::Index i = 0; i < ne; ++i) {
            for (Eigen::Index j = 0; j < ne; ++j) Yee(i, j) = Y(elim[static_cast<std::size_t>(i)], elim[static_cast<std::size_t>(j)]);
            for (Eigen::Index j = 0; j < nr; ++j) {
                Yer(i, j) = Y(elim[static_cast<std::size_t>(i)], retained[static_cast<std::size_t>(j)]);
                Yre(j, i) = Y(retained[static_cast<std::size_t>(j)], elim[static_cast<std::size_t>(i)]);
            }
        }
        Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(ne, slots);
        for (std::size_t l = 0; l < load_nodes.size(); ++l)
            if (eq.network.load_update_slot[l] >= 0)
                P(elim_pos(load_nodes[l]), eq.network.load_update_slot[l]) = 1.0;
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(Yee);
        const Eigen::MatrixXcd YeeInvP = lu.solve(P);
        eq.network.A = Yre * YeeInvP;
        eq.network.W = P.transpose() * YeeInvP;
        eq.network.B = P.transpose() * lu.solve(Yer);
    }

    const Eigen::VectorXd pe = electrical_power(eq.network.Y, eq.network.E, eq.delta, c.base_mva);
    for (std::size_t k = 0; k < ng; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        // Machines: mechanical setpoint equals the reduced-network P_e so the
        // point is an exact equilibrium. CIGs keep their dispatched setpoint.
        eq.p_set[kk] = (k < c.machines.size() || sources[k].id == c.slack) ? pe[kk]
                                                                          : pf.generators[k].p_mw;
    }
    return eq;
}

}  // namespace gridmomentum
