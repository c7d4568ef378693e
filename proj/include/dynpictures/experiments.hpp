#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dynpictures/io.hpp"
#include "dynpictures/model_json.hpp"
#include "dynpictures/pictures.hpp"
#include "dynpictures/quantum.hpp"
#include "dynpictures/sensitivity.hpp"
#include "dynpictures/state.hpp"

namespace dynp {

struct ExperimentConfig {
    std::string experiment;
    Json model;
    Json state;
    Json numerics;
    std::string output;
    long long seed = 0;  // reserved; shipped experiments are deterministic
};

inline ExperimentConfig parse_config(const Json& j) {
    detail::check_keys(j, "config", {"experiment", "model", "state", "numerics", "output"},
                       {"seed"});
    ExperimentConfig cfg;
    if (!j.at("experiment").is_string())
        throw validation_error("config.experiment: expected a string");
    cfg.experiment = j.at("experiment").get<std::string>();
    cfg.model = j.at("model");
    cfg.state = j.at("state");
    cfg.numerics = j.at("numerics");
    if (!j.at("output").is_string())
        throw validation_error("config.output: expected a string path");
    cfg.output = j.at("output").get<std::string>();
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer())
            throw validation_error("config.seed: expected an integer");
        cfg.seed = j.at("seed").get<long long>();
    }
    return cfg;
}

struct RunResult {
    Json summary;
    std::vector<std::string> files;
};

/// Write one CSV per figure-worthy series into out_dir. An empty series map
/// is a no-op with a warning, matching the behavior on an empty results set.
inline std::vector<std::string> emit_plot_data(const std::filesystem::path& out_dir,
                                               const std::map<std::string, CsvWriter>& series) {
    std::vector<std::string> written;
    if (series.empty()) {
        std::cerr << "warning: no series to plot, nothing emitted\n";
        return written;
    }
    for (const auto& [name, csv] : series) {
        const auto path = out_dir / (name + ".csv");
        csv.write(path);
        written.push_back(path.string());
    }
    return written;
}

namespace detail {

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 2) throw validation_error("linspace: need at least 2 samples");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
    return out;
}

inline GaussianSpec gaussian_state_from_json(const Json& state) {
    check_keys(state, "state", {"kind", "params"});
    if (state.at("kind") != "gaussian")
        throw validation_error("state.kind: this experiment needs kind 'gaussian'");
    const Json& p = state.at("params");
    check_keys(p, "state.params", {"mean_q", "mean_p", "sigma_q", "sigma_p", "nodes_per_dim"});
    GaussianSpec gs;
    gs.mean_q = get_num(p, "state.params", "mean_q");
    gs.mean_p = get_num(p, "state.params", "mean_p");
    gs.sigma_q = get_num(p, "state.params", "sigma_q");
    gs.sigma_p = get_num(p, "state.params", "sigma_p");
    return gs;
}

inline std::filesystem::path prepare_output_dir(const ExperimentConfig& cfg) {
    const std::filesystem::path dir(cfg.output);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_resolved_config(const ExperimentConfig& cfg, const Json& resolved_numerics,
                                  const std::filesystem::path& dir, RunResult& result) {
    Json echo;
    echo["experiment"] = cfg.experiment;
    echo["model"] = cfg.model;
    echo["state"] = cfg.state;
    echo["numerics"] = resolved_numerics;
    echo["output"] = cfg.output;
    echo["seed"] = cfg.seed;
    const auto path = dir / "resolved_config.json";
    atomic_write_file(path, echo.dump(2) + "\n");
    result.files.push_back(path.string());
}

inline void write_summary(const Json& summary, const std::filesystem::path& dir,
                          RunResult& result) {
    const auto path = dir / "summary.json";
    atomic_write_file(path, summary.dump(2) + "\n");
    result.files.push_back(path.string());
}

// -- pictures-equivalence ---------------------------------------------------

inline RunResult run_pictures_equivalence(const ExperimentConfig& cfg) {
    const HamiltonianModel model = model_from_json(cfg.model);
    if (!model.split || model.time_dependent)
        throw validation_error("pictures-equivalence: model must be an autonomous 1D "
                               "kinetic-plus-potential system");
    const GaussianSpec gs = gaussian_state_from_json(cfg.state);
    const int nodes = get_int(cfg.state.at("params"), "state.params", "nodes_per_dim");

    check_keys(cfg.numerics, "numerics", {}, {"t_final", "samples", "dt", "rtol", "tolerance"});
    const double t_final = get_num_or(cfg.numerics, "numerics", "t_final", 10.0);
    const int samples = get_int_or(cfg.numerics, "numerics", "samples", 21);
    const double dt = get_num_or(cfg.numerics, "numerics", "dt", 0.005);
    const double rtol = get_num_or(cfg.numerics, "numerics", "rtol", 1e-11);
    const double tolerance = get_num_or(cfg.numerics, "numerics", "tolerance", 1e-6);

    IntegratorConfig icfg;
    icfg.dt = dt;
    icfg.rtol = rtol;
    icfg.atol = rtol * 1e-2;

    const PhaseSpaceDensity rho0 = gaussian_ensemble_density(gs, nodes);
    const std::vector<Observable> obs = {observables::position(), observables::momentum(),
                                         observables::position_squared(),
                                         observables::energy(model)};
    const auto times = linspace(0.0, t_final, samples);
    const auto rows = compare_pictures(model, rho0, obs, times, icfg);

    // per-observable scale: max magnitude over the run, floored at 1
    std::map<std::string, double> scale;
    for (const auto& r : rows) {
        double& s = scale[r.observable];
        s = std::max({s, std::abs(r.schrodinger), std::abs(r.heisenberg),
                      std::abs(r.interaction), 1.0});
    }
    double max_rel = 0.0;
    CsvWriter csv({"t", "observable", "schrodinger", "heisenberg", "interaction",
                   "max_pairwise_diff"});
    CsvWriter diff_series({"t", "observable", "rel_diff"});
    for (const auto& r : rows) {
        const double rel = r.max_pairwise_diff() / scale[r.observable];
        max_rel = std::max(max_rel, rel);
        csv.append_row({fmt_double(r.t), r.observable, fmt_double(r.schrodinger),
                        fmt_double(r.heisenberg), fmt_double(r.interaction),
                        fmt_double(r.max_pairwise_diff())});
        diff_series.append_row({fmt_double(r.t), r.observable, fmt_double(rel)});
    }

    RunResult result;
    const auto dir = prepare_output_dir(cfg);
    Json resolved = {{"t_final", t_final}, {"samples", samples},   {"dt", dt},
                     {"rtol", rtol},       {"tolerance", tolerance}};
    write_resolved_config(cfg, resolved, dir, result);
    csv.write(dir / "equivalence.csv");
    result.files.push_back((dir / "equivalence.csv").string());
    auto plots = emit_plot_data(dir, [&] {
        std::map<std::string, CsvWriter> m;
        m.emplace("pairwise_rel_diff_vs_t", std::move(diff_series));
        return m;
    }());
    result.files.insert(result.files.end(), plots.begin(), plots.end());

    Json summary;
    summary["experiment"] = cfg.experiment;
    summary["model"] = model.name;
    summary["max_rel_diff"] = max_rel;
    summary["tolerance"] = tolerance;
    summary["observable_scales"] = scale;
    summary["eq11_picture_equivalence"] = max_rel < tolerance;
    write_summary(summary, dir, result);
    result.summary = std::move(summary);
    return result;
}

// -- constant-force ----------------------------------------------------------

inline RunResult run_constant_force(const ExperimentConfig& cfg) {
    const HamiltonianModel model = model_from_json(cfg.model);
    if (model.name != "constant_force" && model.name != "free")
        throw validation_error("constant-force: model.kind must be constant_force");
    const double mass = model.mass;
    const double force = -model.split->potential_prime(0.0);

    check_keys(cfg.state, "state", {"kind", "params"});
    if (cfg.state.at("kind") != "gaussian_line")
        throw validation_error("state.kind: constant-force needs kind 'gaussian_line'");
    const Json& sp = cfg.state.at("params");
    check_keys(sp, "state.params", {"mean_q", "sigma_q", "p0", "nodes"});
    const double mean_q = get_num(sp, "state.params", "mean_q");
    const double sigma_q = get_num(sp, "state.params", "sigma_q");
    const double p0 = get_num(sp, "state.params", "p0");
    const int nodes = get_int(sp, "state.params", "nodes");
    if (sigma_q <= 0.0) throw validation_error("state.params.sigma_q: must be positive");

    check_keys(cfg.numerics, "numerics", {},
               {"t_final", "samples", "marginal_points", "marginal_halfwidth", "dt"});
    const double t_final = get_num_or(cfg.numerics, "numerics", "t_final", 3.0);
    const int samples = get_int_or(cfg.numerics, "numerics", "samples", 13);
    const int marg_points = get_int_or(cfg.numerics, "numerics", "marginal_points", 401);
    const double marg_hw = get_num_or(cfg.numerics, "numerics", "marginal_halfwidth", 8.0);
    const double dt = get_num_or(cfg.numerics, "numerics", "dt", 0.01);

    auto f = [mean_q, sigma_q](double q) {
        const double x = (q - mean_q) / sigma_q;
        return std::exp(-0.5 * x * x) / (sigma_q * std::sqrt(2.0 * M_PI));
    };
    LineQuadrature quad{mean_q - 8.0 * sigma_q, mean_q + 8.0 * sigma_q, nodes};
    IntegratorConfig icfg;
    icfg.dt = dt;

    const auto times = linspace(0.0, t_final, samples);
    const Observable oq = observables::position();
    const Observable op = observables::momentum();

    CsvWriter moments({"t", "mean_q", "mean_q_exact", "mean_p", "mean_p_exact", "abs_err_q",
                       "abs_err_p"});
    double max_err_q = 0.0, max_err_p = 0.0, sup_marginal = 0.0;
    bool support_exact = true;
    // initial mean from the same quadrature, so the comparison isolates the
    // time dependence
    const double q0_mean = constant_force_density(f, p0, force, mass, 0.0, quad).expectation(oq);

    for (double t : times) {
        const PhaseSpaceDensity rho_t = constant_force_density(f, p0, force, mass, t, quad);
        const double mq = rho_t.expectation(oq);
        const double mp = rho_t.expectation(op);
        const double mq_exact = q0_mean + p0 * t / mass + 0.5 * force * t * t / mass;
        const double mp_exact = p0 + force * t;
        max_err_q = std::max(max_err_q, std::abs(mq - mq_exact));
        max_err_p = std::max(max_err_p, std::abs(mp - mp_exact));
        for (const auto& z : rho_t.points)
            support_exact = support_exact && z.p(0) == mp_exact;
        moments.append_numeric({t, mq, mq_exact, mp, mp_exact, std::abs(mq - mq_exact),
                                std::abs(mp - mp_exact)});
    }

    // q marginal at t_final: closed form vs numeric trajectory pullback
    const auto closed = constant_force_q_marginal(f, p0, force, mass, t_final);
    const double center = mean_q + p0 * t_final / mass + 0.5 * force * t_final * t_final / mass;
    const double p_t = p0 + force * t_final;
    CsvWriter marginal({"q", "closed_form", "pullback_oracle", "abs_diff"});
    for (double q : linspace(center - marg_hw, center + marg_hw, marg_points)) {
        const PhasePoint z0 = inverse_flow(model, PhasePoint(q, p_t), t_final, icfg).point;
        const double oracle = f(z0.q(0));
        const double cf = closed(q);
        sup_marginal = std::max(sup_marginal, std::abs(cf - oracle));
        marginal.append_numeric({q, cf, oracle, std::abs(cf - oracle)});
    }

    RunResult result;
    const auto dir = prepare_output_dir(cfg);
    Json resolved = {{"t_final", t_final},
                     {"samples", samples},
                     {"marginal_points", marg_points},
                     {"marginal_halfwidth", marg_hw},
                     {"dt", dt}};
    write_resolved_config(cfg, resolved, dir, result);
    moments.write(dir / "moments.csv");
    result.files.push_back((dir / "moments.csv").string());
    auto plots = emit_plot_data(dir, [&] {
        std::map<std::string, CsvWriter> m;
        m.emplace("marginal_profile", std::move(marginal));
        return m;
    }());
    result.files.insert(result.files.end(), plots.begin(), plots.end());

    Json summary;
    summary["experiment"] = cfg.experiment;
    summary["sup_marginal_diff"] = sup_marginal;
    summary["max_moment_err_q"] = max_err_q;
    summary["max_moment_err_p"] = max_err_p;
    summary["momentum_support_exact"] = support_exact;
    summary["q_argument"] = "q - p*t/m + F*t^2/(2m)";
    summary["eq15_sign_note"] =
        "profile argument fixed by inverting the trajectories (the displaced-argument variant "
        "with +p*t/m does not invert the flow); on the momentum support the marginal shifts by "
        "+p0*t/m + F*t^2/(2m)";
    summary["eq14_15_closed_form"] =
        sup_marginal < 1e-8 && max_err_q < 1e-10 && max_err_p < 1e-10 && support_exact;
    write_summary(summary, dir, result);
    result.summary = std::move(summary);
    return result;
}

// -- lyapunov -----------------------------------------------------------------

inline RunResult run_lyapunov(const ExperimentConfig& cfg) {
    const HamiltonianModel model = model_from_json(cfg.model);
    check_keys(cfg.state, "state", {"kind", "params"});
    if (cfg.state.at("kind") != "point")
        throw validation_error("state.kind: lyapunov needs kind 'point'");
    const Json& sp = cfg.state.at("params");
    check_keys(sp, "state.params", {"q", "p"});
    const PhasePoint z0(get_num(sp, "state.params", "q"), get_num(sp, "state.params", "p"));

    check_keys(cfg.numerics, "numerics", {"t_total"},
               {"renorm_interval", "warmup", "dt", "checkpoint_stride", "noise_floor"});
    const double t_total = get_num(cfg.numerics, "numerics", "t_total");
    const double renorm = get_num_or(cfg.numerics, "numerics", "renorm_interval", 1.0);
    const double warmup = get_num_or(cfg.numerics, "numerics", "warmup", 0.0);
    const double dt = get_num_or(cfg.numerics, "numerics", "dt", 0.01);
    const int stride = get_int_or(cfg.numerics, "numerics", "checkpoint_stride", 16);
    const double floor = get_num_or(cfg.numerics, "numerics", "noise_floor", 1e-3);

    IntegratorConfig icfg;
    icfg.dt = dt;
    const auto spec = lyapunov_spectrum(model, z0, t_total, renorm, warmup, icfg, stride);

    std::vector<std::string> header = {"checkpoint_t"};
    for (Eigen::Index i = 0; i < spec.exponents.size(); ++i)
        header.push_back("lambda_" + std::to_string(i + 1));
    header.push_back("det_error");
    CsvWriter csv(header);
    for (const auto& cp : spec.checkpoints) {
        std::vector<double> row = {cp.t};
        for (Eigen::Index i = 0; i < cp.exponents.size(); ++i) row.push_back(cp.exponents(i));
        row.push_back(cp.det_error);
        csv.append_numeric(row);
    }

    RunResult result;
    const auto dir = prepare_output_dir(cfg);
    Json resolved = {{"t_total", t_total}, {"renorm_interval", renorm},
                     {"warmup", warmup},   {"dt", dt},
                     {"checkpoint_stride", stride}, {"noise_floor", floor}};
    write_resolved_config(cfg, resolved, dir, result);
    auto plots = emit_plot_data(dir, [&] {
        std::map<std::string, CsvWriter> m;
        m.emplace("lambda_vs_t", std::move(csv));
        return m;
    }());
    result.files.insert(result.files.end(), plots.begin(), plots.end());

    Json summary;
    summary["experiment"] = cfg.experiment;
    summary["model"] = model.name;
    summary["spectrum"] = std::vector<double>(spec.exponents.begin(), spec.exponents.end());
    summary["lambda1"] = spec.exponents(0);
    summary["ks_entropy"] = ks_entropy(spec, floor);
    summary["pairing_residual"] = spec.pairing_residual();
    summary["max_det_error"] = spec.max_det_error;
    summary["accumulation_time"] = spec.T;
    summary["eq16_unit_determinant"] = spec.max_det_error < 1e-8;
    summary["pairing_ok"] = spec.pairing_residual() < 5e-2;
    write_summary(summary, dir, result);
    result.summary = std::move(summary);
    return result;
}

// -- quantum helpers ----------------------------------------------------------

struct QuantumSetup {
    double hbar = 1.0;
    int dim = 128;
    int gate_dim = 0;  // 0 disables the truncation gate
    double omega_ref = 0.0;
    double mass = 1.0;
    double natural_omega = 1.0;   // oscillation/drive frequency of the model
    QuantumSystem system;         // at dim
    QuantumSystem gate_system;    // at gate_dim (valid when gate_dim > 0)
    CVec psi0;
    CVec gate_psi0;
    double drive_period = 0.0;
};

inline QuantumSystem build_quantum_system(const Json& model_json, int dim, double hbar,
                                          double omega_ref, double* mass_out,
                                          double* natural_omega_out = nullptr,
                                          bool undriven = false) {
    check_keys(model_json, "model", {"kind", "params"});
    const std::string kind = model_json.at("kind").get<std::string>();
    const Json& p = model_json.at("params");
    if (kind == "harmonic") {
        const double mass = get_num(p, "model.params", "mass");
        const double k = get_num(p, "model.params", "k");
        if (mass_out) *mass_out = mass;
        if (natural_omega_out) *natural_omega_out = std::sqrt(k / mass);
        return quantum::harmonic(dim, hbar, mass, k);
    }
    if (kind == "double_well_driven") {
        const double mass = get_num(p, "model.params", "mass");
        const double a = get_num(p, "model.params", "a");
        const double b = get_num(p, "model.params", "b");
        const double eps = undriven ? 0.0 : get_num(p, "model.params", "epsilon");
        const double omega = get_num(p, "model.params", "omega");
        if (mass_out) *mass_out = mass;
        if (natural_omega_out) *natural_omega_out = omega;
        const double wref = omega_ref > 0.0 ? omega_ref : std::sqrt(4.0 * a / mass);
        return quantum::double_well_driven(dim, hbar, mass, a, b, eps, omega, wref);
    }
    throw validation_error("model.kind: quantum experiments support harmonic | "
                           "double_well_driven");
}

inline QuantumSetup quantum_setup_from_config(const ExperimentConfig& cfg,
                                              const std::set<std::string>& extra_state_keys = {}) {
    check_keys(cfg.state, "state", {"kind", "params"});
    if (cfg.state.at("kind") != "ground")
        throw validation_error("state.kind: quantum experiments need kind 'ground'");
    const Json& sp = cfg.state.at("params");
    std::set<std::string> allowed = {"dim", "gate_dim", "hbar", "omega_ref"};
    allowed.insert(extra_state_keys.begin(), extra_state_keys.end());
    check_keys(sp, "state.params", {"dim"}, allowed);

    QuantumSetup setup;
    setup.dim = get_int(sp, "state.params", "dim");
    setup.gate_dim = get_int_or(sp, "state.params", "gate_dim", 0);
    setup.hbar = get_num_or(sp, "state.params", "hbar", 1.0);
    setup.omega_ref = get_num_or(sp, "state.params", "omega_ref", 0.0);
    if (setup.gate_dim != 0 && setup.gate_dim <= setup.dim)
        throw validation_error("state.params.gate_dim: must exceed dim (or be 0 to disable)");

    setup.system = build_quantum_system(cfg.model, setup.dim, setup.hbar, setup.omega_ref,
                                        &setup.mass, &setup.natural_omega);
    setup.system.check_ccr();
    setup.drive_period = setup.system.drive_period;
    {
        // ground state of the undriven Hamiltonian, embedded at dim
        const QuantumSystem undriven = build_quantum_system(
            cfg.model, setup.dim, setup.hbar, setup.omega_ref, nullptr, nullptr, true);
        setup.psi0 = ground_state_vector(undriven);
    }
    if (setup.gate_dim > 0) {
        setup.gate_system = build_quantum_system(cfg.model, setup.gate_dim, setup.hbar,
                                                 setup.omega_ref, nullptr);
        setup.gate_system.check_ccr();
        const QuantumSystem undriven = build_quantum_system(
            cfg.model, setup.gate_dim, setup.hbar, setup.omega_ref, nullptr, nullptr, true);
        setup.gate_psi0 = ground_state_vector(undriven);
    }
    return setup;
}

inline void append_bound_row(CsvWriter& csv, const QuantumScanSample& s,
                             const std::vector<double>& extra = {}) {
    std::vector<double> row = {s.t};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) row.push_back(s.lhs(i, j));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) row.push_back(s.rhs(i, j));
    row.push_back(s.satisfied ? 1.0 : 0.0);
    row.push_back(s.min_margin);
    row.insert(row.end(), extra.begin(), extra.end());
    csv.append_numeric(row);
}

inline std::vector<std::string> bound_header(const std::vector<std::string>& extra = {}) {
    std::vector<std::string> h = {"t"};
    for (const char* side : {"lhs", "rhs"})
        for (int i = 1; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j)
                h.push_back(std::string(side) + "_" + std::to_string(i) + std::to_string(j));
    h.push_back("satisfied");
    h.push_back("min_margin");
    h.insert(h.end(), extra.begin(), extra.end());
    return h;
}

/// Max entrywise change of lhs/rhs between a run and its gate-dimension twin.
inline double truncation_gate_change(const QuantumScanResult& base,
                                     const QuantumScanResult& gate) {
    if (base.samples.size() != gate.samples.size())
        throw numeric_error("truncation gate: sample counts differ");
    double change = 0.0;
    for (std::size_t k = 0; k < base.samples.size(); ++k) {
        change = std::max(change,
                          (base.samples[k].lhs - gate.samples[k].lhs).cwiseAbs().maxCoeff());
        change = std::max(change,
                          (base.samples[k].rhs - gate.samples[k].rhs).cwiseAbs().maxCoeff());
    }
    return change;
}

// -- quantum-sensitivity --------------------------------------------------------

inline RunResult run_quantum_sensitivity(const ExperimentConfig& cfg) {
    QuantumSetup setup = quantum_setup_from_config(cfg);

    check_keys(cfg.numerics, "numerics", {"periods"},
               {"steps_per_period", "samples_per_period"});
    const int periods = get_int(cfg.numerics, "numerics", "periods");
    const int steps_per_period = get_int_or(cfg.numerics, "numerics", "steps_per_period", 64);

    double segment = setup.drive_period;
    int seg_steps = steps_per_period;
    if (!setup.system.time_dependent) {
        // sample twice per natural period of the model
        segment = M_PI / setup.natural_omega;
        seg_steps = 1;  // step unitaries are exact for a static Hamiltonian
    }
    const int segments = setup.system.time_dependent ? periods : 2 * periods;

    const auto scan = sensitivity_scan(setup.system, setup.psi0, segment, segments, seg_steps);
    double gate_change = -1.0;
    if (setup.gate_dim > 0) {
        const auto gate_scan =
            sensitivity_scan(setup.gate_system, setup.gate_psi0, segment, segments, seg_steps);
        gate_change = truncation_gate_change(scan, gate_scan);
    }

    const double t0_identity_err =
        (scan.samples.front().expectation - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();

    CsvWriter csv(bound_header());
    for (const auto& s : scan.samples) append_bound_row(csv, s);

    RunResult result;
    const auto dir = prepare_output_dir(cfg);
    Json resolved = {{"periods", periods},
                     {"steps_per_period", seg_steps},
                     {"segment_time", segment},
                     {"segments", segments}};
    write_resolved_config(cfg, resolved, dir, result);
    auto plots = emit_plot_data(dir, [&] {
        std::map<std::string, CsvWriter> m;
        m.emplace("bound", std::move(csv));
        return m;
    }());
    result.files.insert(result.files.end(), plots.begin(), plots.end());

    Json summary;
    summary["experiment"] = cfg.experiment;
    summary["dim"] = setup.dim;
    summary["hbar"] = setup.hbar;
    summary["t0_identity_error"] = t0_identity_err;
    summary["eq17_t0_identity"] = t0_identity_err < 1e-12;
    summary["eq18_bound"] = scan.all_satisfied;
    summary["min_margin"] = scan.min_margin;
    if (setup.gate_dim > 0) {
        summary["truncation_gate"] = {{"gate_dim", setup.gate_dim},
                                      {"max_entry_change", gate_change},
                                      {"pass", gate_change < 1e-4}};
    }
    write_summary(summary, dir, result);
    result.summary = std::move(summary);
    return result;
}

// -- compare-chaos ---------------------------------------------------------------

inline RunResult run_compare_chaos(const ExperimentConfig& cfg) {
    QuantumSetup setup =
        quantum_setup_from_config(cfg, {"classical_q", "classical_p"});
    if (!setup.system.time_dependent)
        throw validation_error("compare-chaos: model must be the driven double well");
    const Json& sp = cfg.state.at("params");
    const PhasePoint z0(get_num(sp, "state.params", "classical_q"),
                        get_num(sp, "state.params", "classical_p"));

    check_keys(cfg.numerics, "numerics", {"periods"},
               {"steps_per_period", "renorms_per_period", "fit_window", "dt"});
    const int periods = get_int(cfg.numerics, "numerics", "periods");
    const int steps_per_period = get_int_or(cfg.numerics, "numerics", "steps_per_period", 64);
    const int renorms_per_period = get_int_or(cfg.numerics, "numerics", "renorms_per_period", 8);
    const double dt = get_num_or(cfg.numerics, "numerics", "dt", 0.01);
    double win_lo = 0.5, win_hi = 1.0;
    if (cfg.numerics.contains("fit_window")) {
        const auto& w = cfg.numerics.at("fit_window");
        if (!w.is_array() || w.size() != 2)
            throw validation_error("numerics.fit_window: expected [lo_frac, hi_frac]");
        win_lo = w.at(0).get<double>();
        win_hi = w.at(1).get<double>();
    }

    const HamiltonianModel model = model_from_json(cfg.model);
    const double period = setup.drive_period;
    const double t_total = periods * period;

    IntegratorConfig icfg;
    icfg.dt = dt;
    const auto spec = lyapunov_spectrum(model, z0, t_total, period / renorms_per_period, 0.0,
                                        icfg, renorms_per_period);
    const double lambda1 = spec.exponents(0);

    const auto scan =
        sensitivity_scan(setup.system, setup.psi0, period, periods, steps_per_period);
    double gate_change = -1.0;
    if (setup.gate_dim > 0) {
        const auto gate_scan = sensitivity_scan(setup.gate_system, setup.gate_psi0, period,
                                                periods, steps_per_period);
        gate_change = truncation_gate_change(scan, gate_scan);
    }

    // classical checkpoints land one per period by construction
    if (spec.checkpoints.size() != static_cast<std::size_t>(periods))
        throw numeric_error("compare-chaos: classical checkpoint count mismatch");

    CsvWriter csv(bound_header({"norm_T_quantum", "norm_T_classical"}));
    std::vector<double> ts, qnorm, cl_log;
    for (int k = 1; k <= periods; ++k) {
        const auto& s = scan.samples[k];
        const auto& cp = spec.checkpoints[k - 1];
        append_bound_row(csv, s, {s.norm_expectation, std::exp(cp.log_norm)});
        ts.push_back(s.t);
        qnorm.push_back(s.norm_expectation);
        cl_log.push_back(cp.log_norm);
    }
    CsvWriter growth({"t", "ln_norm_T_quantum", "ln_norm_T_classical"});
    for (std::size_t i = 0; i < ts.size(); ++i)
        growth.append_numeric({ts[i], std::log(qnorm[i]), cl_log[i]});

    const double t_lo = win_lo * t_total, t_hi = win_hi * t_total;
    // classical slope from the log data directly (the raw norms can overflow)
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_lo || ts[i] > t_hi) continue;
        xs.push_back(ts[i]);
        ys.push_back(cl_log[i]);
    }
    if (xs.size() < 4) throw validation_error("compare-chaos: fit window too narrow");
    const double classical_slope = linear_fit_slope(xs, ys);
    const double quantum_slope = growth_rate_fit(ts, qnorm, t_lo, t_hi);

    RunResult result;
    const auto dir = prepare_output_dir(cfg);
    Json resolved = {{"periods", periods},
                     {"steps_per_period", steps_per_period},
                     {"renorms_per_period", renorms_per_period},
                     {"dt", dt},
                     {"fit_window", {win_lo, win_hi}}};
    write_resolved_config(cfg, resolved, dir, result);
    auto plots = emit_plot_data(dir, [&] {
        std::map<std::string, CsvWriter> m;
        m.emplace("compare", std::move(csv));
        m.emplace("growth_compare", std::move(growth));
        return m;
    }());
    result.files.insert(result.files.end(), plots.begin(), plots.end());

    const double rel_err = std::abs(classical_slope - lambda1) / std::abs(lambda1);
    Json summary;
    summary["experiment"] = cfg.experiment;
    summary["lambda1"] = lambda1;
    summary["spectrum"] = std::vector<double>(spec.exponents.begin(), spec.exponents.end());
    summary["classical_late_slope"] = classical_slope;
    summary["quantum_late_slope"] = quantum_slope;
    summary["classical_slope_rel_err"] = rel_err;
    summary["quantum_slope_over_lambda1"] = quantum_slope / lambda1;
    summary["classical_growth_matches_lambda1"] = rel_err < 0.2;
    summary["quantum_growth_suppressed"] = quantum_slope < 0.05 * lambda1;
    summary["eq18_bound"] = scan.all_satisfied;
    summary["min_margin"] = scan.min_margin;
    if (setup.gate_dim > 0) {
        summary["truncation_gate"] = {{"gate_dim", setup.gate_dim},
                                      {"max_entry_change", gate_change},
                                      {"pass", gate_change < 1e-4}};
    }
    write_summary(summary, dir, result);
    result.summary = std::move(summary);
    return result;
}

}  // namespace detail

/// Dispatch a validated config to its experiment. Throws validation_error for
/// config problems and numeric_error for runtime failures; the CLI maps these
/// to exit codes 2 and 3.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "pictures-equivalence") return detail::run_pictures_equivalence(cfg);
    if (cfg.experiment == "constant-force") return detail::run_constant_force(cfg);
    if (cfg.experiment == "lyapunov") return detail::run_lyapunov(cfg);
    if (cfg.experiment == "quantum-sensitivity") return detail::run_quantum_sensitivity(cfg);
    if (cfg.experiment == "compare-chaos") return detail::run_compare_chaos(cfg);
    throw validation_error("config.experiment: unknown experiment '" + cfg.experiment +
                           "' (expected pictures-equivalence | constant-force | lyapunov | "
                           "quantum-sensitivity | compare-chaos)");
}

/// Validation pass only: parses and resolves everything cheap, without
/// running the numerics.
inline void validate_config(const Json& j) {
    const ExperimentConfig cfg = parse_config(j);
    if (cfg.experiment == "pictures-equivalence") {
        const auto model = model_from_json(cfg.model);
        if (!model.split || model.time_dependent)
            throw validation_error("pictures-equivalence: model must be an autonomous 1D "
                                   "kinetic-plus-potential system");
        detail::gaussian_state_from_json(cfg.state);
        detail::check_keys(cfg.numerics, "numerics", {},
                           {"t_final", "samples", "dt", "rtol", "tolerance"});
        return;
    }
    if (cfg.experiment == "constant-force") {
        const auto model = model_from_json(cfg.model);
        if (model.name != "constant_force" && model.name != "free")
            throw validation_error("constant-force: model.kind must be constant_force");
        detail::check_keys(cfg.state, "state", {"kind", "params"});
        detail::check_keys(cfg.state.at("params"), "state.params",
                           {"mean_q", "sigma_q", "p0", "nodes"});
        detail::check_keys(cfg.numerics, "numerics", {},
                           {"t_final", "samples", "marginal_points", "marginal_halfwidth", "dt"});
        return;
    }
    if (cfg.experiment == "lyapunov") {
        model_from_json(cfg.model);
        detail::check_keys(cfg.state, "state", {"kind", "params"});
        detail::check_keys(cfg.state.at("params"), "state.params", {"q", "p"});
        detail::check_keys(cfg.numerics, "numerics", {"t_total"},
                           {"renorm_interval", "warmup", "dt", "checkpoint_stride",
                            "noise_floor"});
        return;
    }
    if (cfg.experiment == "quantum-sensitivity" || cfg.experiment == "compare-chaos") {
        const bool compare = cfg.experiment == "compare-chaos";
        detail::check_keys(cfg.state, "state", {"kind", "params"});
        std::set<std::string> allowed = {"dim", "gate_dim", "hbar", "omega_ref"};
        if (compare) {
            allowed.insert("classical_q");
            allowed.insert("classical_p");
        }
        detail::check_keys(cfg.state.at("params"), "state.params", {"dim"}, allowed);
        double mass = 0.0;
        detail::build_quantum_system(cfg.model, 16, 1.0, 0.0, &mass);
        if (compare)
            detail::check_keys(cfg.numerics, "numerics", {"periods"},
                               {"steps_per_period", "renorms_per_period", "fit_window", "dt"});
        else
            detail::check_keys(cfg.numerics, "numerics", {"periods"},
                               {"steps_per_period", "samples_per_period"});
        return;
    }
    throw validation_error("config.experiment: unknown experiment '" + cfg.experiment + "'");
}

}  // namespace dynp
