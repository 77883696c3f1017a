#include "gridmomentum/cli.hpp"

#include "gridmomentum/case_model.hpp"
#include "gridmomentum/csv_export.hpp"
#include "gridmomentum/dynamics.hpp"
#include "gridmomentum/errors.hpp"
#include "gridmomentum/estimator.hpp"
#include "gridmomentum/linear_analysis.hpp"
#include "gridmomentum/power_flow.hpp"
#include "gridmomentum/probing.hpp"
#include "gridmomentum/stochastic.hpp"
#include "gridmomentum/two_machine.hpp"
#include "gridmomentum/vector_fitting.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gridmomentum {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Common {
    std::string case_path;
    std::string out_dir = ".";
    std::string band = "0.006:0.030";
    int tones = 10;
    double dm = 0.0;
    double prior = 0.0;
    double duration = 900.0;
    std::uint64_t seed = 0;
    std::string noise = "off";
    int order = 3;
    std::string cig;
};

std::pair<double, double> parse_band(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ValidationError("--band", "", "expected lo:hi in Hz");
    try {
        const double lo = std::stod(s.substr(0, colon)), hi = std::stod(s.substr(colon + 1));
        if (!(lo > 0) || !(hi > lo)) throw ValidationError("--band", "", "need 0 < lo < hi");
        return {lo, hi};
    } catch (const std::invalid_argument&) {
        throw ValidationError("--band", "", "expected lo:hi in Hz");
    }
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError(path, "", "cannot open file");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::string default_cig(const PowerSystemCase& c, const std::string& requested) {
    if (!requested.empty()) {
        c.cig_index(requested);
        return requested;
    }
    if (c.cigs.empty()) throw ValidationError(c.name, "cigs", "this command needs a CIG");
    return c.cigs.front().id;
}

double resolve_dm(const PowerSystemCase& c, const Common& o) {
    if (o.dm != 0.0) return o.dm;
    const double prior = o.prior > 0 ? o.prior : global_momentum_true(c);
    return 0.1 * prior;
}

class Artifacts {
public:
    Artifacts(std::string dir, std::string command, std::vector<std::string> args)
        : dir_(std::move(dir)), command_(std::move(command)), args_(std::move(args)) {
        fs::create_directories(dir_);
    }
    void write(const std::string& name, const std::string& content) {
        write_file((fs::path(dir_) / name).string(), content);
        outputs_.push_back(name);
    }
    void finish(const ojson& inputs) {
        ojson m;
        m["tool"] = "gridmomentum";
        m["version"] = GRIDMOMENTUM_VERSION;
        m["command"] = command_;
        m["argv"] = args_;
        m["inputs"] = inputs;
        m["outputs"] = outputs_;
        m["csv_version"] = kCsvVersion;
        write_file((fs::path(dir_) / (command_ + "_manifest.json")).string(), m.dump(2) + "\n");
    }

private:
    std::string dir_, command_;
    std::vector<std::string> args_;
    std::vector<std::string> outputs_;
};

void add_case(CLI::App* sc, Common& o) { sc->add_option("--case", o.case_path, "Case file (JSON)")->required(); }
void add_out(CLI::App* sc, Common& o) { sc->add_option("--out", o.out_dir, "Output directory"); }
void add_seed(CLI::App* sc, Common& o) {
    sc->add_option("--seed", o.seed, std::string("Seed; ") + kSeedEnvVar + " overrides it");
}
void add_probe_flags(CLI::App* sc, Common& o) {
    sc->add_option("--band", o.band, "Probing band lo:hi [Hz]");
    sc->add_option("--tones", o.tones, "Number of tones / scan frequencies");
    sc->add_option("--dm", o.dm, "Momentum step dM [MJ]; default 10% of --prior");
    sc->add_option("--prior", o.prior, "Prior momentum guess [MJ]; default the case book value");
    sc->add_option("--duration", o.duration, "Simulated horizon [s]");
    sc->add_option("--noise", o.noise, "Load noise")->check(CLI::IsMember({"on", "off"}));
    sc->add_option("--order", o.order, "Fit order; 0 sweeps 2..5");
    sc->add_option("--cig", o.cig, "Probing CIG id; default the first CIG");
}

ojson case_inputs(const Common& o, const PowerSystemCase& c) {
    return ojson{{"case", o.case_path}, {"case_name", c.name}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Global momentum estimation for power-system cases"};
    app.require_subcommand(1);
    app.set_version_flag("--version", GRIDMOMENTUM_VERSION);
    Common o;
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

    auto* validate = app.add_subcommand("validate", "Check a case file");
    add_case(validate, o);

    auto* powerflow = app.add_subcommand("powerflow", "Solve the AC power flow");
    add_case(powerflow, o);
    add_out(powerflow, o);

    auto* linearize_cmd = app.add_subcommand("linearize", "Eigenvalues and null-space report");
    add_case(linearize_cmd, o);
    add_out(linearize_cmd, o);

    std::string input;
    double fmin = 1e-3, fmax = 10.0;
    int points = 200;
    auto* freqscan = app.add_subcommand("freqscan", "AC scan of every rotor speed for one input");
    add_case(freqscan, o);
    add_out(freqscan, o);
    freqscan->add_option("--input", input, "Input label, e.g. eta_gf:CIG1 or power:G1");
    freqscan->add_option("--fmin", fmin, "Lowest frequency [Hz]");
    freqscan->add_option("--fmax", fmax, "Highest frequency [Hz]");
    freqscan->add_option("--points", points, "Log-spaced points");

    double step = 0.01;
    int record_every = 1;
    bool probe = false;
    auto* simulate = app.add_subcommand("simulate", "Time-domain simulation to a trajectory CSV");
    add_case(simulate, o);
    add_out(simulate, o);
    add_seed(simulate, o);
    add_probe_flags(simulate, o);
    simulate->add_option("--step", step, "Integration step [s]");
    simulate->add_option("--record-every", record_every, "Keep every n-th step");
    simulate->add_flag("--probe", probe, "Inject tones and the inertia square wave on --cig");

    std::string samples_path, filter;
    auto* vffit = app.add_subcommand("vf-fit", "Fit a rational model to a samples CSV");
    vffit->add_option("--samples", samples_path, "Samples CSV (f_Hz, re, im columns)")->required();
    vffit->add_option("--select", filter, "Keep rows whose output or state column equals this");
    vffit->add_option("--order", o.order, "Fit order; 0 sweeps 2..5");
    add_out(vffit, o);

    std::string mode = "freq-scan";
    auto* estimate = app.add_subcommand("estimate", "Estimate the global momentum");
    add_case(estimate, o);
    add_out(estimate, o);
    add_seed(estimate, o);
    add_probe_flags(estimate, o);
    estimate->add_option("--mode", mode, "freq-scan or probe")->check(CLI::IsMember({"freq-scan", "probe"}));

    int runs = 50, workers = 1;
    double spread = 0.30;
    bool perturb_cigs = false;
    auto* batch = app.add_subcommand("batch", "Randomized-inertia study");
    add_case(batch, o);
    add_out(batch, o);
    add_seed(batch, o);
    add_probe_flags(batch, o);
    batch->add_option("--mode", mode, "freq-scan or probe")->check(CLI::IsMember({"freq-scan", "probe"}));
    batch->add_option("--runs", runs, "Number of runs");
    batch->add_option("--spread", spread, "Relative inertia spread");
    batch->add_option("--workers", workers, "Parallel workers");
    batch->add_flag("--perturb-cigs", perturb_cigs, "Also draw CIG virtual inertia");

    auto* twom = app.add_subcommand("two-machine", "Closed-form two-machine curves");
    add_case(twom, o);
    add_out(twom, o);
    double p1 = 0.1, p2 = 0.5;
    twom->add_option("--p1", p1, "Power injected at G1 [MW]");
    twom->add_option("--p2", p2, "Power injected at G2 [MW]");
    twom->add_option("--fmin", fmin, "Lowest frequency [Hz]");
    twom->add_option("--fmax", fmax, "Highest frequency [Hz]");
    twom->add_option("--points", points, "Log-spaced points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        o.seed = resolve_seed(o.seed);
        auto* cmd = app.get_subcommands().front();
        const std::string name = cmd->get_name();

        if (name == "vf-fit") {
            const auto s = read_samples_csv(read_text(samples_path), filter);
            RationalModel m;
            if (o.order > 0) {
                m = vf_fit(s.f_hz, s.H, o.order);
            } else {
                const std::vector<int> orders{2, 3, 4, 5};
                auto sw = vf_order_sweep(s.f_hz, s.H, orders);
                m = sw.fits[sw.chosen];
            }
            Artifacts art(o.out_dir, name, args);
            art.write("model.json", model_to_json(m) + "\n");
            art.finish(ojson{{"samples", samples_path}, {"select", filter}, {"order", o.order}});
            std::cout << "order " << m.order << ", residue sum " << format_number(residue_sum(m)) << ", rms "
                      << format_number(m.rms) << '\n';
            return 0;
        }

        const auto c = load_case_file(o.case_path);
        if (name == "validate") {
            std::cout << c.name << ": " << c.buses.size() << " buses, " << c.machines.size() << " machines, "
                      << c.cigs.size() << " CIGs, " << c.loads.size() << " loads; global momentum "
                      << format_number(global_momentum_true(c)) << " MJ\n";
            return 0;
        }

        Artifacts art(o.out_dir, name, args);
        ojson inputs = case_inputs(o, c);
        if (name == "powerflow") {
            const auto pf = solve_power_flow(c);
            art.write("powerflow.csv", power_flow_csv(c, pf));
            inputs["iterations"] = pf.iterations;
            std::cout << "converged in " << pf.iterations << " iterations, mismatch " << format_number(pf.mismatch)
                      << " pu, losses " << format_number(pf.losses_mw) << " MW\n";
        } else if (name == "linearize") {
            const auto pf = solve_power_flow(c);
            const auto eq = build_equilibrium(c, pf);
            const auto m = linearize(c, eq);
            const auto er = eigen_report(m);
            const auto ns = null_space(m);
            ojson j;
            j["state_dimension"] = m.A.rows();
            j["near_zero_eigenvalues"] = er.near_zero;
            j["max_real_part_nonzero"] = er.max_real_nonzero;
            j["laplacian_asymmetry"] = laplacian_asymmetry(m);
            j["A_u1_norm"] = (m.A * ns.u1).norm();
            j["v1T_A_norm"] = (m.A.transpose() * ns.v1).norm();
            j["v1_deviation_from_symmetric_form"] =
                (ns.v1 - null_space_closed_form(m)).cwiseAbs().maxCoeff() / ns.v1.cwiseAbs().maxCoeff();
            for (Eigen::Index i = 0; i < er.eigenvalues.size(); ++i)
                j["eigenvalues"].push_back({er.eigenvalues[i].real(), er.eigenvalues[i].imag()});
            j["v1"] = std::vector<double>(ns.v1.data(), ns.v1.data() + ns.v1.size());
            j["element_ids"] = m.element_ids;
            art.write("linearize.json", j.dump(2) + "\n");
            std::cout << "state dimension " << m.A.rows() << ", " << er.near_zero
                      << " eigenvalue(s) near zero, max real part of the rest "
                      << format_number(er.max_real_nonzero) << '\n';
        } else if (name == "freqscan") {
            const auto pf = solve_power_flow(c);
            const auto eq = build_equilibrium(c, pf);
            const auto m = linearize(c, eq);
            if (input.empty())
                input = c.cigs.empty() ? "power:" + m.element_ids.front() : "eta_gf:" + c.cigs.front().id;
            const auto f = log_space(fmin, fmax, static_cast<std::size_t>(points));
            auto scan = frequency_response(m, input, f);
            double probe_mw = 1.0;
            if (input.rfind("eta_gf:", 0) == 0) {
                const auto id = input.substr(7);
                probe_mw = eq.p_set[static_cast<Eigen::Index>(c.machines.size() + c.cig_index(id))];
            }
            auto principal = principal_response(c, f, probe_mw);
            principal.input = input;
            art.write("freqscan.csv", frequency_samples_csv({scan, principal}));
            inputs["input"] = input;
            inputs["fmin"] = fmin;
            inputs["fmax"] = fmax;
            inputs["points"] = points;
            std::cout << "scanned " << f.size() << " frequencies for " << scan.outputs.size() << " outputs\n";
        } else if (name == "simulate") {
            const auto pf = solve_power_flow(c);
            const auto eq = build_equilibrium(c, pf);
            const DynamicModel model(c, eq);
            ExogenousInputs in;
            if (probe) {
                ExperimentConfig cfg;
                cfg.cig = default_cig(c, o.cig);
                const auto [lo, hi] = parse_band(o.band);
                cfg.tones.f_lo = lo;
                cfg.tones.f_hi = hi;
                cfg.tones.n_tones = o.tones;
                cfg.tones.seed = o.seed;
                cfg.delta_m = resolve_dm(c, o);
                cfg.duration = o.duration;
                const auto plan = resolve_plan(c, cfg);
                in = inertia_schedule_apply(c, plan, resolve_schedule(plan, cfg), cfg.cig);
            }
            std::optional<OUProcessSet> noise;
            if (o.noise == "on") noise = make_load_noise(c, o.seed);
            IntegrationOptions io;
            io.step = step;
            io.record_every = record_every;
            const auto tr = integrate(model, model.equilibrium_state(), o.duration, io, in, noise ? &*noise : nullptr);
            art.write("trajectory.csv", trajectory_csv(tr, c, model.layout()));
            inputs["duration"] = o.duration;
            inputs["step"] = step;
            inputs["noise"] = o.noise;
            inputs["seed"] = o.seed;
            inputs["probe"] = probe;
            std::cout << "simulated " << o.duration << " s, " << tr.samples() << " samples\n";
        } else if (name == "estimate" || name == "batch") {
            const auto [lo, hi] = parse_band(o.band);
            const std::string cig = default_cig(c, o.cig);
            const double dm = resolve_dm(c, o);
            FreqScanConfig sc;
            sc.cig = cig;
            sc.delta_m = dm;
            sc.f_lo = lo;
            sc.f_hi = hi;
            sc.n_freqs = o.tones;
            sc.order = o.order;
            ExperimentConfig pc;
            pc.cig = cig;
            pc.tones.f_lo = lo;
            pc.tones.f_hi = hi;
            pc.tones.n_tones = o.tones;
            pc.tones.seed = o.seed;
            pc.delta_m = dm;
            pc.duration = o.duration;
            pc.order = o.order;
            pc.noise = o.noise == "on";
            pc.seed = o.seed;
            inputs["mode"] = mode;
            inputs["cig"] = cig;
            inputs["band_hz"] = {lo, hi};
            inputs["tones"] = o.tones;
            inputs["dm_MJ"] = dm;
            inputs["order"] = o.order;
            inputs["seed"] = o.seed;
            if (mode == "probe") {
                inputs["duration"] = o.duration;
                inputs["noise"] = o.noise;
            }
            if (name == "estimate") {
                ProbeDiagnostics diag;
                const auto e = mode == "probe" ? probe_estimate(c, pc, &diag) : freq_scan_estimate(c, sc);
                art.write("estimate.json", estimate_json(e));
                if (mode == "probe") art.write("fourier_samples.csv", fourier_samples_csv(diag.windows));
                std::cout << "G_hat = " << format_number(e.G_hat) << " MJ";
                if (e.eps_pct) std::cout << ", eps = " << format_number(*e.eps_pct) << " %";
                std::cout << (e.low_confidence ? " (low confidence)" : "") << '\n';
            } else {
                BatchConfig bc;
                bc.variant = mode == "probe" ? EstimatorVariant::Probe : EstimatorVariant::FreqScan;
                bc.scan = sc;
                bc.probe = pc;
                bc.n_runs = runs;
                bc.spread = spread;
                bc.perturb_cigs = perturb_cigs;
                bc.seed = o.seed;
                bc.workers = workers;
                const auto r = batch_randomized(c, bc);
                art.write("batch_runs.csv", batch_runs_csv(r, c));
                art.write("batch_summary.json", batch_summary_json(r, mode));
                inputs["runs"] = runs;
                inputs["spread"] = spread;
                inputs["perturb_cigs"] = perturb_cigs;
                std::cout << r.stats.n_ok << " runs ok, " << r.stats.n_failed << " failed; eps% mean "
                          << format_number(r.stats.mean) << ", median " << format_number(r.stats.median)
                          << ", IQR " << format_number(r.stats.iqr) << '\n';
            }
        } else if (name == "two-machine") {
            const auto pf = solve_power_flow(c);
            const auto eq = build_equilibrium(c, pf);
            const auto p = two_machine_params(c, eq);
            art.write("two_machine.csv",
                      two_machine_curves_csv(p, p1, p2, log_space(fmin, fmax, static_cast<std::size_t>(points))));
            inputs["p1_mw"] = p1;
            inputs["p2_mw"] = p2;
        }
        art.finish(inputs);
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace gridmomentum
