#include "gridmomentum/csv_export.hpp"

#include "gridmomentum/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gridmomentum {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string header(const std::string& kind) {
    return "# gridmomentum " + kind + " v" + std::to_string(kCsvVersion) + "\n";
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

std::string power_flow_csv(const PowerSystemCase& c, const PowerFlowSolution& pf) {
    std::ostringstream os;
    os << header("powerflow");
    os << "bus,v_pu,theta_rad,p_gen_mw,q_gen_mvar,p_load_mw,q_load_mvar\n";
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
        double pg = 0, qg = 0, pl = 0, ql = 0;
        for (std::size_t k = 0; k < c.machines.size(); ++k)
            if (c.machines[k].bus == c.buses[i].id) {
                pg += pf.generators[k].p_mw;
                qg += pf.generators[k].q_mvar;
            }
        for (std::size_t k = 0; k < c.cigs.size(); ++k)
            if (c.cigs[k].bus == c.buses[i].id) {
                pg += pf.generators[c.machines.size() + k].p_mw;
                qg += pf.generators[c.machines.size() + k].q_mvar;
            }
        for (std::size_t k = 0; k < c.loads.size(); ++k)
            if (c.loads[k].bus == c.buses[i].id) {
                pl += pf.loads[k].p_mw;
                ql += pf.loads[k].q_mvar;
            }
        const auto ii = static_cast<Eigen::Index>(i);
        os << c.buses[i].id << ',' << format_number(pf.v[ii]) << ',' << format_number(pf.theta[ii]) << ','
           << format_number(pg) << ',' << format_number(qg) << ',' << format_number(pl) << ','
           << format_number(ql) << '\n';
    }
    return os.str();
}

std::string trajectory_csv(const Trajectory& tr, const PowerSystemCase& c, const StateLayout& L) {
    std::vector<std::string> ids;
    for (const auto& m : c.machines) ids.push_back(m.id);
    for (const auto& g : c.cigs) ids.push_back(g.id);
    std::ostringstream os;
    os << header("trajectory") << "t";
    for (const auto& id : ids) os << ",delta_" << id;
    for (const auto& id : ids) os << ",omega_" << id;
    for (std::size_t k = 0; k < ids.size(); ++k)
        if (L.governor_slot[k] >= 0) os << ",pm_" << ids[k];
    for (const auto& g : c.cigs) os << ",pe_" << g.id;
    os << '\n';
    for (std::size_t r = 0; r < tr.samples(); ++r) {
        const auto rr = static_cast<Eigen::Index>(r);
        os << format_number(tr.t[r]);
        for (Eigen::Index col = 0; col < tr.x.cols(); ++col) os << ',' << format_number(tr.x(rr, col));
        for (Eigen::Index j = 0; j < tr.p_e_cig.cols(); ++j) os << ',' << format_number(tr.p_e_cig(rr, j));
        os << '\n';
    }
    return os.str();
}

std::string frequency_samples_csv(const std::vector<FrequencySamples>& sets) {
    std::ostringstream os;
    os << header("freqscan") << "output,input,f_Hz,re,im,abs2,phase_rad\n";
    for (const auto& fs : sets)
        for (std::size_t k = 0; k < fs.outputs.size(); ++k)
            for (std::size_t i = 0; i < fs.f_hz.size(); ++i) {
                const auto h = fs.response[k][i];
                os << fs.outputs[k] << ',' << fs.input << ',' << format_number(fs.f_hz[i]) << ','
                   << format_number(h.real()) << ',' << format_number(h.imag()) << ','
                   << format_number(std::norm(h)) << ',' << format_number(std::arg(h)) << '\n';
            }
    return os.str();
}

std::string fourier_samples_csv(const std::vector<FourierSampleSet>& sets) {
    std::ostringstream os;
    os << header("fourier") << "f_Hz,re,im,state,t0,window_s,gamma_c,gamma_s\n";
    for (const auto& s : sets)
        for (std::size_t i = 0; i < s.f_hz.size(); ++i)
            os << format_number(s.f_hz[i]) << ',' << format_number(s.H[i].real()) << ','
               << format_number(s.H[i].imag()) << ',' << s.state << ',' << format_number(s.t0) << ','
               << format_number(s.window) << ',' << format_number(s.gamma_c[i]) << ','
               << format_number(s.gamma_s[i]) << '\n';
    return os.str();
}

std::string noise_csv(const std::vector<double>& t, const std::vector<std::vector<double>>& eta,
                      const PowerSystemCase& c) {
    std::ostringstream os;
    os << header("noise") << "t";
    for (const auto& l : c.loads) os << ",eta_" << l.id;
    os << '\n';
    for (std::size_t r = 0; r < t.size(); ++r) {
        os << format_number(t[r]);
        for (double v : eta[r]) os << ',' << format_number(v);
        os << '\n';
    }
    return os.str();
}

std::string batch_runs_csv(const BatchResult& r, const PowerSystemCase& c) {
    std::ostringstream os;
    os << header("batch") << "run,seed";
    for (const auto& m : c.machines) os << ",H_" << m.id;
    for (const auto& g : c.cigs) os << ",T_a_" << g.id;
    os << ",G_true_MJ,G_hat_MJ,eps_pct,rms_before,rms_after,ok,low_confidence,error\n";
    for (const auto& run : r.runs) {
        os << run.index << ',' << run.seed;
        for (double h : run.H) os << ',' << format_number(h);
        for (double t : run.T_a) os << ',' << format_number(t);
        os << ',' << format_number(run.G_true) << ',' << format_number(run.G_hat) << ','
           << format_number(run.eps_pct) << ',' << format_number(run.rms_before) << ','
           << format_number(run.rms_after) << ',' << (run.ok ? 1 : 0) << ',' << (run.low_confidence ? 1 : 0)
           << ',';
        std::string e = run.error;
        for (auto& ch : e)
            if (ch == ',' || ch == '\n') ch = ';';
        os << e << '\n';
    }
    return os.str();
}

std::string batch_summary_json(const BatchResult& r, const std::string& variant) {
    nlohmann::ordered_json j;
    j["variant"] = variant;
    j["runs"] = r.runs.size();
    j["ok"] = r.stats.n_ok;
    j["failed"] = r.stats.n_failed;
    j["eps_pct"] = {{"mean", r.stats.mean},
                    {"median", r.stats.median},
                    {"p25", r.stats.p25},
                    {"p75", r.stats.p75},
                    {"iqr", r.stats.iqr},
                    {"lower_adjacent", r.stats.lower_adjacent},
                    {"upper_adjacent", r.stats.upper_adjacent},
                    {"median_abs", r.stats.median_abs}};
    return j.dump(2) + "\n";
}

std::string estimate_json(const MomentumEstimate& e) {
    nlohmann::ordered_json j;
    j["G_hat_MJ"] = e.G_hat;
    j["S_before"] = e.S_before;
    j["S_after"] = e.S_after;
    if (e.G_true) j["G_true_MJ"] = *e.G_true;
    if (e.eps_pct) j["eps_pct"] = *e.eps_pct;
    j["low_confidence"] = e.low_confidence;
    j["warnings"] = e.warnings;
    j["fit_before"] = nlohmann::ordered_json::parse(model_to_json(e.fit_before));
    j["fit_after"] = nlohmann::ordered_json::parse(model_to_json(e.fit_after));
    return j.dump(2) + "\n";
}

ParsedSamples read_samples_csv(const std::string& text, const std::string& filter) {
    std::istringstream is(text);
    std::string line;
    std::vector<std::string> cols;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        cols = split(line, ',');
        break;
    }
    auto find = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int cf = find("f_Hz"), cr = find("re"), ci = find("im");
    const int co = find("output"), cs = find("state");
    if (cf < 0 || cr < 0 || ci < 0) throw ValidationError("samples", "header", "need f_Hz, re and im columns");
    ParsedSamples out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto v = split(line, ',');
        if (v.size() < cols.size())
            throw ValidationError("samples", "line " + std::to_string(lineno), "too few columns");
        if (!filter.empty()) {
            const bool match = (co >= 0 && v[static_cast<std::size_t>(co)] == filter) ||
                               (cs >= 0 && v[static_cast<std::size_t>(cs)] == filter);
            if (!match) continue;
        }
        try {
            out.f_hz.push_back(std::stod(v[static_cast<std::size_t>(cf)]));
            out.H.emplace_back(std::stod(v[static_cast<std::size_t>(cr)]), std::stod(v[static_cast<std::size_t>(ci)]));
        } catch (const std::exception&) {
            throw ValidationError("samples", "line " + std::to_string(lineno), "not a number");
        }
    }
    if (out.f_hz.empty()) throw ValidationError("samples", "", "no samples selected");
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(path, "", "cannot open for writing");
    f << content;
    if (!f) throw ValidationError(path, "", "write failed");
}

}  // namespace gridmomentum
