// Acceptance suite: one criterion per function, one pass/fail line each,
// every tolerance pinned in code. Exit status is the number of failures.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dynpictures/experiments.hpp"
#include "dynpictures/pictures.hpp"
#include "dynpictures/quantum.hpp"
#include "dynpictures/sensitivity.hpp"
#include "oracles.hpp"

using namespace dynp;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

IntegratorConfig step(double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    return cfg;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

// 1. Three-picture equivalence on harmonic, quartic and constant-force
//    models, Gaussian ensemble with 1e4 deterministic quadrature nodes,
//    observables {q, p, q^2, H}, 21 samples over [0, 10], pairwise relative
//    disagreement < 1e-6.
bool picture_equivalence(std::string& detail) {
    const double tol = 1e-6;
    GaussianSpec gs{1.0, 0.0, 0.2, 0.2};
    const auto rho0 = gaussian_ensemble_density(gs, 100);  // 1e4 nodes
    std::vector<double> times;
    for (int i = 0; i <= 20; ++i) times.push_back(0.5 * i);

    double worst = 0.0;
    std::string worst_at;
    for (const auto& model : {models::harmonic(1.0, 1.0), models::quartic(1.0, 1.0),
                              models::constant_force(1.0, 1.0)}) {
        const std::vector<Observable> obs = {observables::position(), observables::momentum(),
                                             observables::position_squared(),
                                             observables::energy(model)};
        const auto rows = compare_pictures(model, rho0, obs, times, step(0.005));
        std::map<std::string, double> scale;
        for (const auto& r : rows) {
            double& s = scale[r.observable];
            s = std::max({s, std::abs(r.schrodinger), std::abs(r.heisenberg),
                          std::abs(r.interaction), 1.0});
        }
        for (const auto& r : rows) {
            const double rel = r.max_pairwise_diff() / scale[r.observable];
            if (rel > worst) {
                worst = rel;
                worst_at = model.name + " " + r.observable + " t=" + fmt(r.t);
            }
        }
    }
    detail = "max pairwise rel diff " + fmt(worst) + " (" + worst_at + "), tol 1e-6";
    return worst < tol;
}

// 2. Constant-force closed form: q marginal vs numeric trajectory-pullback
//    oracle (sup < 1e-8), moments exact to 1e-10, momentum support exact.
//    The sign resolution lands in the run summary of the CLI experiment.
bool constant_force_closed_form(std::string& detail) {
    const auto out = std::filesystem::temp_directory_path() / "dynp_acceptance" / "cf";
    std::filesystem::remove_all(out);
    Json j{{"experiment", "constant-force"},
           {"model", {{"kind", "constant_force"}, {"params", {{"mass", 1.0}, {"force", 2.0}}}}},
           {"state",
            {{"kind", "gaussian_line"},
             {"params", {{"mean_q", 0.0}, {"sigma_q", 0.5}, {"p0", 1.0}, {"nodes", 201}}}}},
           {"numerics", {{"t_final", 3.0}, {"samples", 13}}},
           {"output", out.string()}};
    const auto result = run_experiment(parse_config(j));
    const double sup = result.summary.at("sup_marginal_diff").get<double>();
    const double eq = result.summary.at("max_moment_err_q").get<double>();
    const double ep = result.summary.at("max_moment_err_p").get<double>();
    const bool support = result.summary.at("momentum_support_exact").get<bool>();
    const bool documented = result.summary.contains("eq15_sign_note") &&
                            result.summary.contains("q_argument");
    detail = "sup marginal diff " + fmt(sup) + " (tol 1e-8), moment errs " + fmt(eq) + "/" +
             fmt(ep) + " (tol 1e-10), exact support " + (support ? "yes" : "NO") +
             ", sign note in summary " + (documented ? "yes" : "NO");
    return sup < 1e-8 && eq < 1e-10 && ep < 1e-10 && support && documented;
}

// 3. Dyson convergence: measured order within 0.5 of nominal for orders 1
//    and 2 on the constant-force and harmonic splits. Step ranges sit inside
//    the stability region of the explicit truncated exponential (the
//    conjugated generator's coefficients grow toward the box corners) and
//    above the spatial stencil floor.
bool dyson_convergence(std::string& detail) {
    GaussianSpec gs{0.0, 0.0, 0.5, 0.5};
    std::ostringstream note;
    bool ok = true;

    struct Split {
        const char* name;
        HamiltonianModel model;
        double t;
        double half_width;
        int n;
        int base_steps;
        std::function<double(double, double)> exact_I;  // interaction-picture field at t
    };
    const double F = 1.0;
    std::vector<Split> splits;
    splits.push_back({"constant_force", models::constant_force(1.0, F), 1.0, 5.0, 201, 8,
                      [&gs, F](double q, double p) {
                          const double t = 1.0;
                          return gs.density(q + 0.5 * F * t * t, p - F * t);
                      }});
    splits.push_back({"harmonic", models::harmonic(1.0, 1.0), 0.5, 3.5, 161, 16,
                      [&gs](double q, double p) {
                          const double t = 0.5;
                          const double qf = q + p * t;  // undo the free frame
                          const double q0 = qf * std::cos(t) - p * std::sin(t);
                          const double p0 = p * std::cos(t) + qf * std::sin(t);
                          return gs.density(q0, p0);
                      }});

    for (const auto& split : splits) {
        const PhaseGrid g(-split.half_width, split.half_width, split.n, -split.half_width,
                          split.half_width, split.n);
        const auto rho0 = PhaseSpaceDensity::from_grid(
            GridR::sample(g, [&](double q, double p) { return gs.density(q, p); }));
        const auto exact = GridR::sample(g, split.exact_I);
        const auto l2_err = [&](const PhaseSpaceDensity& rho) {
            double acc = 0.0;
            for (std::size_t i = 0; i < exact.values.size(); ++i) {
                const double d = rho.grid.values[i] - exact.values[i];
                acc += d * d;
            }
            return std::sqrt(acc * g.cell_area());
        };
        for (int order : {1, 2}) {
            double errs[3];
            int steps = split.base_steps;
            for (int k = 0; k < 3; ++k, steps *= 2)
                errs[k] = l2_err(
                    dyson_evolve(rho0, *split.model.split, DysonConfig{order, steps, split.t}));
            const double measured =
                0.5 * (std::log2(errs[0] / errs[1]) + std::log2(errs[1] / errs[2]));
            note << split.name << " order " << order << ": measured " << fmt(measured) << "; ";
            ok = ok && std::abs(measured - order) < 0.5;
        }
    }
    detail = note.str() + "tol 0.5";
    return ok;
}

// 4. KvN unitarity: norm drift < 1e-10 over t in [0, 10] on the smooth test
//    models, ensemble representation evolved by characteristics.
bool kvn_unitarity(std::string& detail) {
    GaussianSpec gs{1.0, 0.0, 0.3, 0.3};
    const auto phi0 = gaussian_ensemble_wavefunction(gs, 40);
    double worst = 0.0;
    for (const auto& m :
         {models::harmonic(1.0, 1.0), models::quartic(1.0, 1.0),
          models::constant_force(1.0, 1.0), models::double_well_driven(1.0, 1.0, 0.25, 0.3, 1.0)}) {
        KvnWaveFunction phi = phi0;
        double t = 0.0;
        for (int leg = 0; leg < 10; ++leg) {
            phi = evolve_wavefunction(phi, m, t + 1.0, step(0.005), t);
            t += 1.0;
            worst = std::max(worst, std::abs(phi.norm() - phi0.norm()));
        }
    }
    detail = "max norm drift " + fmt(worst) + ", tol 1e-10";
    return worst < 1e-10;
}

// 5. Classical sensitivity: unit determinant, finite-difference oracle
//    agreement, integrable spectra near zero, inverted-oscillator rates,
//    standard-map leading exponent vs the two-trajectory oracle, pairing.
bool classical_sensitivity(std::string& detail) {
    std::ostringstream note;
    bool ok = true;

    double max_det = 0.0, max_fd = 0.0;
    for (const auto& m : {models::harmonic(1.0, 1.0), models::quartic(1.0, 1.0)}) {
        for (double t : {1.0, 5.0, 10.0}) {
            const PhasePoint z0(0.9, 0.2);
            const auto tang = tangent_flow(m, z0, t, step(0.01));
            const auto fd = finite_difference_sensitivity(m, z0, t, 1e-6, step(0.01));
            max_det = std::max(max_det, tang.det_error());
            max_fd = std::max(max_fd, (tang.entries - fd.entries).cwiseAbs().maxCoeff());
        }
    }
    note << "det err " << fmt(max_det) << " (tol 1e-8); oracle dev " << fmt(max_fd)
         << " (tol 1e-5); ";
    ok = ok && max_det < 1e-8 && max_fd < 1e-5;

    const auto harm_spec = lyapunov_spectrum(models::harmonic(1.0, 1.0), PhasePoint(1.0, 0.0),
                                             1000.0, 1.0, 0.0, step(0.01));
    note << "harmonic |lambda| " << fmt(harm_spec.exponents.cwiseAbs().maxCoeff())
         << " (tol 1e-2); ";
    ok = ok && harm_spec.exponents.cwiseAbs().maxCoeff() < 1e-2;
    ok = ok && harm_spec.max_det_error < 1e-8;

    const auto inv_spec = lyapunov_spectrum(models::inverted_oscillator(1.0, 1.0),
                                            PhasePoint(0.3, 0.1), 20.0, 1.0, 5.0, step(0.01));
    const double inv_err = std::max(std::abs(inv_spec.exponents(0) - 1.0),
                                    std::abs(inv_spec.exponents(1) + 1.0));
    note << "inverted spectrum err " << fmt(inv_err) << " (tol 1%); ";
    ok = ok && inv_err < 0.01;

    const auto sm = models::standard_map(10.0);
    const PhasePoint z0(0.3, 0.2);
    const auto sm_spec = lyapunov_spectrum(sm, z0, 10000.0, 1.0, 200.0);
    const double oracle = testing_oracles::benettin_lambda1(sm, z0, 1.0, 10000, 200);
    const double rel = std::abs(sm_spec.exponents(0) - oracle) / oracle;
    note << "standard map lambda1 " << fmt(sm_spec.exponents(0)) << " vs oracle " << fmt(oracle)
         << " (rel " << fmt(rel) << ", tol 10%); pairing "
         << fmt(std::max(sm_spec.pairing_residual(), harm_spec.pairing_residual()))
         << " (tol 5e-2)";
    ok = ok && rel < 0.10 && sm_spec.exponents(0) > 0.5;
    ok = ok && sm_spec.pairing_residual() < 5e-2 && harm_spec.pairing_residual() < 5e-2 &&
         inv_spec.pairing_residual() < 5e-2;
    ok = ok && sm_spec.max_det_error < 1e-8 && inv_spec.max_det_error < 1e-8;

    detail = note.str();
    return ok;
}

// Shared driven-double-well configuration for criteria 6 and 7: classically
// chaotic at these parameters (checked in criterion 7).
struct DrivenWell {
    double mass = 1.0, a = 1.0, b = 0.25, eps = 0.3, omega = 1.0;
    double hbar = 1.0;
    int dim = 128, gate_dim = 256;
    int steps_per_period = 64, periods = 200;

    double omega_ref() const { return std::sqrt(4.0 * a / mass); }
    double period() const { return 2.0 * M_PI / omega; }

    QuantumScanResult scan(int d) const {
        const auto sys =
            quantum::double_well_driven(d, hbar, mass, a, b, eps, omega, omega_ref());
        sys.check_ccr();
        const auto undriven =
            quantum::double_well_driven(d, hbar, mass, a, b, 0.0, omega, omega_ref());
        return sensitivity_scan(sys, ground_state_vector(undriven), period(), periods,
                                steps_per_period);
    }
};

// 6. Quantum sensitivity: identity at t = 0, harmonic rotation matrix
//    state-independently, uncertainty bound entrywise at every sample for
//    200 harmonic periods and 200 driven-well periods, with the dimension-
//    doubling truncation gate below 1e-4.
bool quantum_sensitivity(std::string& detail) {
    std::ostringstream note;
    bool ok = true;

    // harmonic, 200 periods sampled twice per period
    const int hdim = 128;
    const auto hsys = quantum::harmonic(hdim, 1.0, 1.0, 1.0);
    const auto hscan = sensitivity_scan(hsys, ground_state_vector(hsys), M_PI, 400, 1);
    const double t0_err = (hscan.samples.front().expectation - Eigen::Matrix2d::Identity())
                              .cwiseAbs()
                              .maxCoeff();
    note << "t0 identity err " << fmt(t0_err) << " (tol 1e-12); ";
    ok = ok && t0_err < 1e-12 && hscan.all_satisfied;

    // rotation matrix, independent of the state
    double rot_err = 0.0;
    for (double t : {0.8, 4.0, 40.0}) {
        const auto sens = sensitivity_operator(hsys, t, 1);
        Eigen::Matrix2d expected;
        expected << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
        CVec excited = CVec::Zero(hdim);
        excited(1) = 0.6;
        excited(4) = std::complex<double>(0.0, 0.8);
        CMat mixed = CMat::Zero(hdim, hdim);
        mixed(0, 0) = 0.5;
        mixed(2, 2) = 0.5;
        for (const auto& st :
             {QuantumState::pure(ground_state_vector(hsys)), QuantumState::pure(excited),
              QuantumState::from_density(mixed)}) {
            rot_err = std::max(
                rot_err,
                (sensitivity_expectation(sens, st).value - expected).cwiseAbs().maxCoeff());
        }
    }
    note << "harmonic rotation err " << fmt(rot_err) << " (tol 1e-8); ";
    ok = ok && rot_err < 1e-8;

    // driven double well with truncation gate
    const DrivenWell dw;
    const auto scan = dw.scan(dw.dim);
    const auto gate = dw.scan(dw.gate_dim);
    double change = 0.0;
    for (std::size_t k = 0; k < scan.samples.size(); ++k) {
        change = std::max(change,
                          (scan.samples[k].lhs - gate.samples[k].lhs).cwiseAbs().maxCoeff());
        change = std::max(change,
                          (scan.samples[k].rhs - gate.samples[k].rhs).cwiseAbs().maxCoeff());
    }
    note << "bound holds: harmonic " << (hscan.all_satisfied ? "yes" : "NO") << ", driven well "
         << (scan.all_satisfied ? "yes" : "NO") << " (min margin " << fmt(scan.min_margin)
         << "); gate change " << fmt(change) << " (tol 1e-4)";
    ok = ok && scan.all_satisfied && change < 1e-4;
    return (detail = note.str(), ok);
}

// 7. Quantum vs classical growth for the driven double well: the classical
//    tangent-norm slope over the late window matches lambda1 within 20%,
//    while the quantum sensitivity norm's slope stays below 0.05 lambda1.
bool growth_contrast(std::string& detail) {
    const DrivenWell dw;
    const auto model =
        models::double_well_driven(dw.mass, dw.a, dw.b, dw.eps, dw.omega);
    const PhasePoint z0(0.01, 0.0);  // chaotic layer near the hyperbolic point
    const double T = dw.periods * dw.period();

    const auto spec = lyapunov_spectrum(model, z0, T, dw.period() / 8.0, 0.0, step(0.01), 8);
    const double lambda1 = spec.exponents(0);

    std::vector<double> ts, cl_log;
    for (const auto& cp : spec.checkpoints) {
        ts.push_back(cp.t);
        cl_log.push_back(cp.log_norm);
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < 0.5 * T) continue;
        xs.push_back(ts[i]);
        ys.push_back(cl_log[i]);
    }
    const double cl_slope = linear_fit_slope(xs, ys);

    const auto scan = dw.scan(dw.dim);
    std::vector<double> qt, qv;
    for (std::size_t k = 1; k < scan.samples.size(); ++k) {
        qt.push_back(scan.samples[k].t);
        qv.push_back(scan.samples[k].norm_expectation);
    }
    const double q_slope = growth_rate_fit(qt, qv, 0.5 * T, T);

    const double rel = std::abs(cl_slope - lambda1) / lambda1;
    std::ostringstream note;
    note << "lambda1 " << fmt(lambda1) << ", classical slope " << fmt(cl_slope) << " (rel dev "
         << fmt(rel) << ", tol 20%), quantum slope " << fmt(q_slope) << " (bound "
         << fmt(0.05 * lambda1) << ")";
    detail = note.str();
    return lambda1 > 0.0 && rel < 0.20 && q_slope < 0.05 * lambda1;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {"picture-equivalence", picture_equivalence},
        {"constant-force-closed-form", constant_force_closed_form},
        {"dyson-convergence", dyson_convergence},
        {"kvn-unitarity", kvn_unitarity},
        {"classical-sensitivity", classical_sensitivity},
        {"quantum-sensitivity", quantum_sensitivity},
        {"quantum-classical-growth", growth_contrast},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool pass = false;
        try {
            pass = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %zu %s: %s\n", pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].name.c_str(), detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    return failures;
}
