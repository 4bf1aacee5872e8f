#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vpstab/acceptance.hpp"
#include "vpstab/core/parallel.hpp"
#include "vpstab/core/version.hpp"
#include "vpstab/dynamics.hpp"
#include "vpstab/experiment.hpp"
#include "vpstab/functionals.hpp"
#include "vpstab/perturb.hpp"
#include "vpstab/sample.hpp"
#include "vpstab/shift.hpp"
#include "vpstab/steady.hpp"

namespace fs = std::filesystem;
using namespace vpstab;

namespace {

// Exit codes: 0 ok, 1 numeric failure, 2 usage/config error.
constexpr int exit_ok = 0;
constexpr int exit_numeric = 1;
constexpr int exit_usage = 2;

struct SteadyArgs {
    double k = 1.0;
    double mass = 1.0;
    double z0_seed = 1.0;
    double general_ka = 0, general_kb = 0, general_beta = -1;
    std::string steady_json, steady_csv;

    void attach(CLI::App* cmd, bool allow_files) {
        cmd->add_option("--k", k, "polytropic exponent, 0 < k < 3/2");
        cmd->add_option("--mass,-M", mass, "total mass M > 0");
        cmd->add_option("--z0-seed", z0_seed, "central value used to seed the shooter");
        cmd->add_option("--general-ka", general_ka, "general Q: first exponent of the two-term form");
        cmd->add_option("--general-kb", general_kb, "general Q: second exponent");
        cmd->add_option("--general-beta", general_beta, "general Q: weight of the second term");
        if (allow_files) {
            cmd->add_option("--steady-json", steady_json, "load the state header from this JSON");
            cmd->add_option("--steady-csv", steady_csv, "load the radial table from this CSV");
        }
    }

    SteadyState make() const {
        if (!steady_json.empty() || !steady_csv.empty()) {
            if (steady_json.empty() || steady_csv.empty())
                throw config_error("need both --steady-json and --steady-csv");
            return load_steady(steady_json, steady_csv);
        }
        BuildOptions opts;
        opts.z0_seed = z0_seed;
        if (general_beta >= 0) {
            // tabulated two-term Casimir; f_max sized from the polytropic guess
            const SteadyState probe =
                build_steady(CasimirFunction::polytropic(std::min(1.4, std::max(0.1, k))), mass);
            const double f_cap = 50.0 * probe.f0_max() + 10.0;
            return build_steady(CasimirFunction::two_term(general_ka, general_kb, general_beta,
                                                          f_cap),
                                mass, opts);
        }
        return build_steady(CasimirFunction::polytropic(k), mass, opts);
    }
};

void write_command_manifest(const fs::path& dir, const std::string& command,
                            const nlohmann::json& args, const std::vector<std::string>& outputs) {
    nlohmann::json m;
    m["code_version"] = version_string;
    m["command"] = command;
    m["config"] = args;
    m["thread_count"] = thread_count();
    m["outputs"] = outputs;
    std::ofstream f(dir / "manifest.json");
    f << m.dump(2) << '\n';
}

int cmd_build_steady(const SteadyArgs& sa, const std::string& out_dir) {
    const SteadyState st = sa.make();
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_steady(st, (dir / "steady.json").string(), (dir / "steady_profile.csv").string());
    write_command_manifest(dir, "build-steady",
                           {{"k", sa.k}, {"M", sa.mass}, {"z0_seed", sa.z0_seed}},
                           {"manifest.json", "steady.json", "steady_profile.csv"});
    std::printf("E0       = %.12g\n", st.e0());
    std::printf("R        = %.12g\n", st.radius());
    std::printf("M        = %.12g\n", st.mass());
    std::printf("h_M      = %.12g\n", st.h_m());
    std::printf("virial   = %.3e   (|2 E_kin + E_pot| / |E_pot|)\n", st.virial_residual());
    std::printf("T_dyn    = %.12g\n", st.t_dyn());
    std::printf("wrote %s and %s\n", (dir / "steady.json").c_str(),
                (dir / "steady_profile.csv").c_str());
    return exit_ok;
}

int cmd_sample(const SteadyArgs& sa, std::size_t n, std::uint64_t seed, bool antithetic,
               const std::string& out_file) {
    const SteadyState st = sa.make();
    SampleOptions so;
    so.antithetic = antithetic;
    const ParticleEnsemble ens = sample_f0(st, n, seed, so);
    save_snapshot(ens, out_file);
    std::printf("sampled %zu markers, total mass %.12g, wrote %s\n", ens.size(), ens.total_mass(),
                out_file.c_str());
    return exit_ok;
}

int cmd_evolve(const SteadyArgs& sa, const std::string& snapshot, std::size_t n,
               std::uint64_t seed, double t_tdyn, double dt_tdyn, double cadence_tdyn,
               const std::string& method, double theta, double softening,
               const std::string& out_dir) {
    const SteadyState st = sa.make();
    ParticleEnsemble ens;
    if (!snapshot.empty()) {
        ens = load_snapshot(snapshot);
    } else {
        SampleOptions so;
        so.antithetic = (n % 2 == 0);
        ens = sample_f0(st, n, seed, so);
    }
    ForceModel fm;
    if (method == "direct") fm.method = ForceModel::Method::direct;
    else if (method == "tree") fm.method = ForceModel::Method::tree;
    else if (method == "frozen") { fm.method = ForceModel::Method::frozen; fm.frozen = &st; }
    else throw config_error("evolve: method must be direct, tree or frozen");
    fm.theta = theta;
    fm.softening = (softening >= 0) ? softening : default_softening(st.radius(), ens.size());
    ens.softening = fm.softening;

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::vector<std::string> outputs = {"manifest.json", "metrics.csv", "snapshot_initial.csv",
                                        "snapshot_final.csv"};
    write_command_manifest(dir, "evolve",
                           {{"t_tdyn", t_tdyn},
                            {"dt_tdyn", dt_tdyn},
                            {"cadence_tdyn", cadence_tdyn},
                            {"method", method},
                            {"theta", theta},
                            {"softening", fm.softening},
                            {"seed", seed},
                            {"N", ens.size()}},
                           outputs);
    save_snapshot(ens, (dir / "snapshot_initial.csv").string());

    std::ofstream metrics(dir / "metrics.csv");
    metrics << functional_csv_header() << '\n';
    const auto monitor = [&](const ParticleEnsemble& e) {
        FunctionalReport rep = energy_casimir(e, st.casimir(), {fm.softening});
        rep.d_value = d_distance(e, st, {});
        // exact kernel: a softened pair sum biases the field distance low
        rep.field_distance = field_distance(e, st, {}, 0.0);
        metrics << functional_csv_row(e.time, {}, rep) << '\n';
        std::fprintf(stderr, "[vpstab] t=%.5g  H_C=%.10g\n", e.time, rep.h_c);
    };
    const EvolveResult res = evolve(ens, t_tdyn * st.t_dyn(), dt_tdyn * st.t_dyn(),
                                    cadence_tdyn * st.t_dyn(), fm, monitor);
    save_snapshot(ens, (dir / "snapshot_final.csv").string());
    if (!res.completed) {
        std::fprintf(stderr, "halted: %s (last good snapshot persisted)\n",
                     res.halt_reason.c_str());
        return exit_numeric;
    }
    std::printf("evolved %zu steps to t=%.6g; outputs in %s\n", res.steps, ens.time,
                out_dir.c_str());
    return exit_ok;
}

int cmd_stability(const std::string& config_path) {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const StabilityRunResult res = stability_experiment(cfg);
    std::printf("stability run complete: %zu records in %s\n", res.records.size(),
                cfg.output_dir.c_str());
    std::printf("  delta_initial        = %.6e\n", res.summary.delta_initial);
    std::printf("  sup shifted metric   = %.6e (factor %.2f of initial, threshold %.1f)\n",
                res.summary.sup_shifted_metric,
                res.summary.sup_shifted_metric / std::max(res.summary.delta_initial, 1e-300),
                cfg.shifted_metric_factor);
    std::printf("  sup unshifted metric = %.6e\n", res.summary.sup_unshifted_metric);
    std::printf("  H_C drift (relative) = %.3e\n", res.summary.hc_drift_rel);
    std::printf("  within threshold     = %s\n", res.summary.within_threshold ? "yes" : "no");
    if (!res.summary.completed) {
        std::fprintf(stderr, "halted: %s\n", res.summary.halt_reason.c_str());
        return exit_numeric;
    }
    return exit_ok;
}

int cmd_concentration(const std::string& snapshot, const std::string& radii_arg,
                      const std::string& out_file) {
    const ParticleEnsemble ens = load_snapshot(snapshot);
    std::vector<double> radii;
    {
        std::string tok;
        std::istringstream ss(radii_arg);
        while (std::getline(ss, tok, ',')) radii.push_back(std::stod(tok));
    }
    if (radii.empty()) throw config_error("concentration: need at least one radius");
    const auto prof = concentration_profile(ens, radii);
    std::ofstream out(out_file);
    out << "radius,mass\n";
    for (std::size_t i = 0; i < radii.size(); ++i) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", radii[i], prof[i]);
        out << buf;
    }
    std::printf("wrote %s (%zu radii)\n", out_file.c_str(), radii.size());
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_env();
    CLI::App app{"vpstab: steady states, functionals and dynamical stability experiments for "
                 "self-gravitating collisionless matter"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    // build-steady
    auto* bs = app.add_subcommand("build-steady", "construct a steady state and export it");
    SteadyArgs bs_args;
    bs_args.attach(bs, false);
    std::string bs_out = ".";
    bs->add_option("--out,-o", bs_out, "output directory");

    // sample
    auto* sm = app.add_subcommand("sample", "draw a phase-space realization of f0");
    SteadyArgs sm_args;
    sm_args.attach(sm, true);
    std::size_t sm_n = 10000;
    std::uint64_t sm_seed = 1;
    bool sm_antithetic = false;
    std::string sm_out = "snapshot.csv";
    sm->add_option("--n,-n", sm_n, "number of markers");
    sm->add_option("--seed", sm_seed, "random seed");
    sm->add_flag("--antithetic", sm_antithetic, "emit mirror pairs (exact zero momentum)");
    sm->add_option("--out,-o", sm_out, "output snapshot CSV");

    // evolve
    auto* ev = app.add_subcommand("evolve", "integrate an ensemble in its own field");
    SteadyArgs ev_args;
    ev_args.attach(ev, true);
    std::string ev_snapshot;
    std::size_t ev_n = 10000;
    std::uint64_t ev_seed = 1;
    double ev_t = 10, ev_dt = 0.005, ev_cad = 0.25;
    std::string ev_method = "direct";
    double ev_theta = 0.5, ev_soft = -1;
    std::string ev_out = "run";
    ev->add_option("--snapshot", ev_snapshot, "initial snapshot CSV (default: sample f0)");
    ev->add_option("--n,-n", ev_n, "markers to sample when no snapshot is given");
    ev->add_option("--seed", ev_seed, "sampling seed");
    ev->add_option("--t-tdyn", ev_t, "horizon in dynamical times");
    ev->add_option("--dt-tdyn", ev_dt, "time step in dynamical times");
    ev->add_option("--cadence-tdyn", ev_cad, "diagnostics cadence in dynamical times");
    ev->add_option("--method", ev_method, "direct | tree | frozen");
    ev->add_option("--theta", ev_theta, "tree opening angle");
    ev->add_option("--softening", ev_soft, "softening length (<0: auto)");
    ev->add_option("--out,-o", ev_out, "output directory");

    // stability
    auto* sb = app.add_subcommand("stability", "run a declarative stability experiment");
    std::string sb_config;
    sb->add_option("config", sb_config, "experiment config JSON")->required();

    // verify
    auto* vf = app.add_subcommand("verify", "run the acceptance suite");
    std::string vf_suite = "all";
    bool vf_list = false;
    vf->add_option("--suite", vf_suite, "all | steady | functionals | conservation | stability | concentration");
    vf->add_flag("--list", vf_list, "list the criteria and exit");

    // concentration
    auto* cc = app.add_subcommand("concentration", "best-ball mass profile of a snapshot");
    std::string cc_snapshot, cc_radii, cc_out = "concentration.csv";
    cc->add_option("--snapshot", cc_snapshot, "snapshot CSV")->required();
    cc->add_option("--radii", cc_radii, "comma-separated ball radii")->required();
    cc->add_option("--out,-o", cc_out, "output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return exit_usage;
    }

    try {
        if (bs->parsed()) return cmd_build_steady(bs_args, bs_out);
        if (sm->parsed()) return cmd_sample(sm_args, sm_n, sm_seed, sm_antithetic, sm_out);
        if (ev->parsed())
            return cmd_evolve(ev_args, ev_snapshot, ev_n, ev_seed, ev_t, ev_dt, ev_cad, ev_method,
                              ev_theta, ev_soft, ev_out);
        if (sb->parsed()) return cmd_stability(sb_config);
        if (vf->parsed()) {
            if (vf_list) {
                accept::list_criteria();
                return exit_ok;
            }
            return accept::run_suite(vf_suite) ? exit_ok : exit_numeric;
        }
        if (cc->parsed()) return cmd_concentration(cc_snapshot, cc_radii, cc_out);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_usage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_numeric;
    }
    return exit_usage;
}
