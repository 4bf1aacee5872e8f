#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpstab/core/parallel.hpp"
#include "vpstab/core/version.hpp"
#include "vpstab/dynamics.hpp"
#include "vpstab/functionals.hpp"
#include "vpstab/perturb.hpp"
#include "vpstab/shift.hpp"
#include "vpstab/steady.hpp"

namespace vpstab {

/// Declarative description of one stability run; parsed from JSON with
/// field-by-field validation.
struct ExperimentConfig {
    double k = 1.0;
    double mass = 1.0;
    Perturbation perturbation;
    double dt_tdyn = 0.005;
    double softening = -1;  ///< <0: auto
    ForceModel::Method method = ForceModel::Method::direct;
    double theta = 0.5;
    std::size_t n_particles = 10000;
    std::uint64_t seed = 1;
    double horizon_tdyn = 10;
    double cadence_tdyn = 0.25;
    ShiftOptions shift;
    double shifted_metric_factor = 3.0;  ///< documented acceptance threshold
    double snapshot_every_tdyn = 0;      ///< 0: initial and final snapshots only
    std::vector<double> concentration_radii_rel = {0.1, 0.25, 0.5, 0.75, 1.0,
                                                   1.25, 1.5, 2.0, 3.0, 4.0, 6.0};
    std::string output_dir = "run";
    std::string log_level = "info";

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["steady"] = {{"k", k}, {"M", mass}};
        j["perturbation"] = perturbation_json(perturbation);
        nlohmann::json integ;
        if (dt_tdyn > 0) integ["dt_tdyn"] = dt_tdyn;
        else integ["dt"] = -dt_tdyn;
        if (softening < 0) integ["softening"] = "auto";
        else integ["softening"] = softening;
        integ["method"] = (method == ForceModel::Method::tree) ? "tree" : "direct";
        integ["theta"] = theta;
        j["integrator"] = integ;
        j["N"] = n_particles;
        j["seed"] = seed;
        j["horizon_tdyn"] = horizon_tdyn;
        j["cadence_tdyn"] = cadence_tdyn;
        j["shift"] = {{"bulk_fraction", shift.bulk_fraction},
                      {"xtol_rel", shift.xtol_rel},
                      {"ftol_rel", shift.ftol_rel},
                      {"max_iter", shift.max_iter}};
        j["thresholds"] = {{"shifted_metric_factor", shifted_metric_factor}};
        if (snapshot_every_tdyn > 0) j["snapshot_every_tdyn"] = snapshot_every_tdyn;
        j["concentration_radii_rel"] = concentration_radii_rel;
        j["output_dir"] = output_dir;
        j["log_level"] = log_level;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        std::vector<std::string> errors;
        ExperimentConfig c;
        auto need = [&](const nlohmann::json& o, const char* key) -> const nlohmann::json* {
            if (!o.contains(key)) {
                errors.push_back(std::string("missing field '") + key + "'");
                return nullptr;
            }
            return &o.at(key);
        };
        try {
            if (auto* s = need(j, "steady")) {
                if (auto* v = need(*s, "k")) c.k = v->get<double>();
                if (auto* v = need(*s, "M")) c.mass = v->get<double>();
            }
            if (auto* p = need(j, "perturbation")) c.perturbation = perturbation_from_json(*p);
            if (auto* in = need(j, "integrator")) {
                if (in->contains("dt_tdyn")) {
                    c.dt_tdyn = in->at("dt_tdyn").get<double>();
                    if (!(c.dt_tdyn > 0)) errors.push_back("integrator.dt_tdyn: need > 0");
                } else if (in->contains("dt")) {
                    const double d = in->at("dt").get<double>();
                    if (!(d > 0)) errors.push_back("integrator.dt: need > 0");
                    c.dt_tdyn = -d;  // negative encodes an absolute step, resolved at run time
                } else {
                    errors.push_back("integrator: need 'dt_tdyn' or 'dt'");
                }
                if (in->contains("softening")) {
                    const auto& s = in->at("softening");
                    c.softening = s.is_string() ? -1 : s.get<double>();
                    if (s.is_string() && s.get<std::string>() != "auto")
                        errors.push_back("integrator.softening: number or \"auto\"");
                }
                const std::string m = in->value("method", "direct");
                if (m == "direct") c.method = ForceModel::Method::direct;
                else if (m == "tree") c.method = ForceModel::Method::tree;
                else errors.push_back("integrator.method: 'direct' or 'tree'");
                c.theta = in->value("theta", 0.5);
            }
            if (auto* v = need(j, "N")) c.n_particles = v->get<std::size_t>();
            if (auto* v = need(j, "seed")) c.seed = v->get<std::uint64_t>();
            if (auto* v = need(j, "horizon_tdyn")) c.horizon_tdyn = v->get<double>();
            if (auto* v = need(j, "cadence_tdyn")) c.cadence_tdyn = v->get<double>();
            if (j.contains("shift")) {
                const auto& s = j.at("shift");
                c.shift.bulk_fraction = s.value("bulk_fraction", 0.9);
                c.shift.xtol_rel = s.value("xtol_rel", 1e-5);
                c.shift.ftol_rel = s.value("ftol_rel", 1e-12);
                c.shift.max_iter = s.value("max_iter", 400);
            }
            if (j.contains("thresholds"))
                c.shifted_metric_factor = j.at("thresholds").value("shifted_metric_factor", 3.0);
            c.snapshot_every_tdyn = j.value("snapshot_every_tdyn", 0.0);
            if (j.contains("concentration_radii_rel"))
                c.concentration_radii_rel =
                    j.at("concentration_radii_rel").get<std::vector<double>>();
            if (auto* v = need(j, "output_dir")) c.output_dir = v->get<std::string>();
            c.log_level = j.value("log_level", "info");
        } catch (const nlohmann::json::exception& e) {
            errors.push_back(std::string("json: ") + e.what());
        }

        if (!(c.k > 0 && c.k < 1.5)) errors.push_back("steady.k: need 0 < k < 3/2");
        if (!(c.mass > 0)) errors.push_back("steady.M: need M > 0");
        if (c.n_particles < 100) errors.push_back("N: need N >= 100");
        if (!(c.horizon_tdyn > 0)) errors.push_back("horizon_tdyn: need > 0");
        if (!(c.cadence_tdyn > 0)) errors.push_back("cadence_tdyn: need > 0");
        if (!(c.theta > 0 && c.theta <= 1.2)) errors.push_back("integrator.theta: need 0 < theta <= 1.2");
        if (!(c.shift.bulk_fraction > 0 && c.shift.bulk_fraction < 1))
            errors.push_back("shift.bulk_fraction: need a fraction in (0,1)");
        for (double r : c.concentration_radii_rel)
            if (!(r > 0)) errors.push_back("concentration_radii_rel: radii must be positive");
        if (!errors.empty()) {
            std::string msg = "invalid experiment config:";
            for (const auto& e : errors) msg += "\n  - " + e;
            throw config_error(msg);
        }
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw config_error("cannot open config file " + path);
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw config_error(std::string("malformed JSON in ") + path + ": " + e.what());
        }
        return from_json(j);
    }
};

/// One time sample of the monitored scalars and the stability metric.
struct DiagnosticsRecord {
    double t = 0;
    Vec3 a_opt{};
    FunctionalReport report;  ///< d/field evaluated at a_opt
    double d0 = 0, field0 = 0, total0 = 0, total_opt = 0;
    double identity_residual = 0;  ///< energy-split identity residual at a_opt
    bool shift_converged = true;
};

struct StabilityRunSummary {
    double t_dyn = 0, softening = 0, dt = 0;
    double delta_initial = 0;        ///< d + field distance at t = 0
    double sup_shifted_metric = 0;   ///< running sup over cadences at a_opt
    double sup_unshifted_metric = 0;
    double hc_drift_rel = 0;
    double max_identity_residual = 0;
    bool within_threshold = true;
    bool completed = true;
    std::string halt_reason;
};

struct StabilityRunResult {
    StabilityRunSummary summary;
    std::vector<DiagnosticsRecord> records;
};

namespace detail {

inline void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                           const std::string& status, const std::vector<std::string>& outputs,
                           double wall_s, const StabilityRunSummary* summary) {
    nlohmann::json m;
    m["code_version"] = version_string;
    m["config"] = cfg.to_json();
    m["seeds"] = {{"main", cfg.seed}};
    m["thread_count"] = thread_count();
    m["status"] = status;
    m["wall_clock_s"] = wall_s;
    m["outputs"] = outputs;
    m["tolerances"] = {{"shifted_metric_factor", cfg.shifted_metric_factor},
                       {"shift_xtol_rel", cfg.shift.xtol_rel}};
    if (summary) {
        m["summary"] = {{"t_dyn", summary->t_dyn},
                        {"softening", summary->softening},
                        {"dt", summary->dt},
                        {"delta_initial", summary->delta_initial},
                        {"sup_shifted_metric", summary->sup_shifted_metric},
                        {"sup_unshifted_metric", summary->sup_unshifted_metric},
                        {"hc_drift_rel", summary->hc_drift_rel},
                        {"max_identity_residual", summary->max_identity_residual},
                        {"within_threshold", summary->within_threshold},
                        {"completed", summary->completed},
                        {"halt_reason", summary->halt_reason}};
    }
    std::ofstream f(dir / "manifest.json");
    if (!f) throw config_error("cannot write manifest in " + dir.string());
    f << m.dump(2) << '\n';
}

}  // namespace detail

/// Builds the steady state, applies the perturbation, evolves, and computes
/// the stability metric at zero shift and at the optimized shift every
/// cadence. Persists manifest.json (before the first and after the last
/// output), metrics.csv, concentration.csv and snapshots under output_dir.
inline StabilityRunResult stability_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const auto t_start = std::chrono::steady_clock::now();
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    const bool chatty = cfg.log_level != "quiet";
    const SteadyState st = build_steady(CasimirFunction::polytropic(cfg.k), cfg.mass);
    const double t_dyn = st.t_dyn();
    const double dt = (cfg.dt_tdyn > 0) ? cfg.dt_tdyn * t_dyn : -cfg.dt_tdyn;
    const double softening =
        (cfg.softening >= 0) ? cfg.softening : default_softening(st.radius(), cfg.n_particles);

    std::vector<std::string> outputs = {"manifest.json", "metrics.csv", "concentration.csv",
                                        "steady.json",   "steady_profile.csv",
                                        "snapshot_initial.csv", "snapshot_final.csv"};
    StabilityRunSummary summary;
    summary.t_dyn = t_dyn;
    summary.dt = dt;
    summary.softening = softening;
    detail::write_manifest(dir, cfg, "running", outputs, 0, &summary);

    save_steady(st, (dir / "steady.json").string(), (dir / "steady_profile.csv").string());

    ParticleEnsemble ens = perturb(st, cfg.perturbation, cfg.n_particles, cfg.seed);
    ens.softening = softening;
    save_snapshot(ens, (dir / "snapshot_initial.csv").string());

    ForceModel fm;
    fm.method = cfg.method;
    fm.softening = softening;
    fm.theta = cfg.theta;

    std::ofstream metrics(dir / "metrics.csv");
    metrics << functional_csv_header() << ",d0,field0,total0,total_opt\n";
    std::ofstream conc(dir / "concentration.csv");
    conc << "t,radius,mass\n";
    std::vector<double> radii;
    for (double rr : cfg.concentration_radii_rel) radii.push_back(rr * st.radius());

    StabilityRunResult result;
    double hc_initial = 0;
    Vec3 warm_start{};
    bool have_warm = false;
    double next_snapshot = (cfg.snapshot_every_tdyn > 0) ? cfg.snapshot_every_tdyn * t_dyn : -1;
    std::size_t snap_idx = 0;

    auto monitor = [&](const ParticleEnsemble& e) {
        DiagnosticsRecord rec;
        rec.t = e.time;
        // the metric uses the exact Newtonian kernel: a softened pair sum
        // would bias the field distance by O(eps^2 E_pot)
        const FieldDistance fd(e, st, 0.0);
        rec.d0 = d_distance(e, st, {});
        rec.field0 = fd({});
        rec.total0 = rec.d0 + rec.field0;

        const Vec3 guess = have_warm ? warm_start : bulk_centroid(e, cfg.shift.bulk_fraction);
        const ShiftOptions& so = cfg.shift;
        auto obj = [&](const std::vector<double>& p) { return fd({p[0], p[1], p[2]}); };
        const SimplexResult sr = nelder_mead(obj, {guess.x, guess.y, guess.z}, 0.25 * st.radius(),
                                             so.xtol_rel * st.radius(),
                                             so.ftol_rel * std::abs(st.e_pot0()), so.max_iter);
        rec.a_opt = {sr.x[0], sr.x[1], sr.x[2]};
        rec.shift_converged = sr.converged;

        FunctionalReport rep;
        rep.e_kin = kinetic_energy(e);
        rep.e_pot = -0.5 * fd.i_ff();
        rep.casimir_value = casimir_functional(e, st.casimir());
        rep.h_c = rep.casimir_value + rep.e_kin + rep.e_pot;
        rep.p_value = rep.casimir_value + rep.e_kin;
        rep.d_value = d_distance(e, st, rec.a_opt);
        rep.field_distance = sr.f;
        rec.total_opt = rep.d_value + rep.field_distance;
        // the zero shift is always an admissible candidate for the infimum
        if (rec.total0 < rec.total_opt) {
            rec.a_opt = {};
            rep.d_value = rec.d0;
            rep.field_distance = rec.field0;
            rec.total_opt = rec.total0;
        }
        rec.report = rep;
        warm_start = rec.a_opt;
        have_warm = true;
        rec.identity_residual = std::abs((rep.h_c - st.h_m()) -
                                         (rep.d_value - rep.field_distance)) /
                                std::max(1.0, std::abs(st.h_m()));

        metrics << functional_csv_row(rec.t, rec.a_opt, rep);
        char buf[160];
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g\n", rec.d0, rec.field0,
                      rec.total0, rec.total_opt);
        metrics << buf;
        const auto profile = concentration_profile(e, radii);
        for (std::size_t i = 0; i < radii.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", rec.t, radii[i], profile[i]);
            conc << buf;
        }
        if (next_snapshot > 0 && rec.t >= next_snapshot - 0.25 * dt && rec.t > 0) {
            char name[64];
            std::snprintf(name, sizeof name, "snapshot_%06zu.csv", ++snap_idx);
            save_snapshot(e, (dir / name).string());
            outputs.push_back(name);
            next_snapshot += cfg.snapshot_every_tdyn * t_dyn;
        }

        if (result.records.empty()) {
            summary.delta_initial = rec.total0;
            hc_initial = rep.h_c;
        }
        summary.sup_shifted_metric = std::max(summary.sup_shifted_metric, rec.total_opt);
        summary.sup_unshifted_metric = std::max(summary.sup_unshifted_metric, rec.total0);
        summary.hc_drift_rel =
            std::max(summary.hc_drift_rel,
                     std::abs(rep.h_c - hc_initial) / std::max(std::abs(hc_initial), 1e-300));
        summary.max_identity_residual =
            std::max(summary.max_identity_residual, rec.identity_residual);
        result.records.push_back(rec);
        if (chatty) {
            std::fprintf(stderr, "[vpstab] t=%8.4f (%.2f T_dyn) total0=%.4e total_opt=%.4e\n",
                         rec.t, rec.t / t_dyn, rec.total0, rec.total_opt);
        }
    };

    const EvolveResult ev =
        evolve(ens, cfg.horizon_tdyn * t_dyn, dt, cfg.cadence_tdyn * t_dyn, fm, monitor);
    save_snapshot(ens, (dir / "snapshot_final.csv").string());

    summary.completed = ev.completed;
    summary.halt_reason = ev.halt_reason;
    summary.within_threshold =
        summary.sup_shifted_metric <=
        cfg.shifted_metric_factor * std::max(summary.delta_initial, 1e-300);
    result.summary = summary;

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    detail::write_manifest(dir, cfg, ev.completed ? "completed" : ("halted: " + ev.halt_reason),
                           outputs, wall, &summary);
    return result;
}

}  // namespace vpstab
