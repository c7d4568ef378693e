#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dynpictures/integrate.hpp"
#include "dynpictures/model.hpp"
#include "dynpictures/state.hpp"

namespace dynp {

enum class PictureTag { Schrodinger, Heisenberg, Interaction };

inline const char* to_string(PictureTag tag) {
    switch (tag) {
        case PictureTag::Schrodinger: return "schrodinger";
        case PictureTag::Heisenberg: return "heisenberg";
        case PictureTag::Interaction: return "interaction";
    }
    return "?";
}

namespace detail {

inline const OperatorSplit& require_split(const HamiltonianModel& model) {
    if (!model.split || model.dof != 1)
        throw validation_error("interaction picture requires a 1D model with a kinetic-plus-"
                               "potential split");
    return *model.split;
}

inline void check_split(const OperatorSplit& split) {
    if (split.mass <= 0.0 || !split.potential || !split.potential_prime)
        throw validation_error("unsupported split: need mass > 0 and a potential with "
                               "derivative (free part must be p^2/2m)");
}

}  // namespace detail

/// Evolves a density from time t0 to t1 along the characteristics of the
/// transport equation: ensembles ride the flow, grids are advected by the
/// inverse flow with interpolation of the initial grid.
inline PhaseSpaceDensity evolve_density(const PhaseSpaceDensity& rho0,
                                        const HamiltonianModel& model, double t,
                                        const IntegratorConfig& cfg = {}, double t0 = 0.0) {
    if (rho0.rep == Representation::Ensemble) {
        PhaseSpaceDensity rho = rho0;
        for (auto& z : rho.points) z = flow_from(model, z, t0, t, cfg).point;
        return rho;
    }
    GridR out = rho0.grid;
    for (int iq = 0; iq < out.grid.nq; ++iq) {
        for (int ip = 0; ip < out.grid.np; ++ip) {
            const PhasePoint z(out.grid.q_at(iq), out.grid.p_at(ip));
            const PhasePoint z0 = flow_from(model, z, t, t0, cfg).point;
            out.values[out.grid.index(iq, ip)] =
                std::max(0.0, rho0.grid.interpolate(z0.q(0), z0.p(0)));
        }
    }
    PhaseSpaceDensity rho = PhaseSpaceDensity::from_grid(std::move(out), /*normalize=*/false);
    return rho;
}

/// rho_t(z) = rho_0(Phi_{-t}(z)); normalization rides along for free since
/// the flow Jacobian has unit determinant.
inline PhaseSpaceDensity pullback_density(const PhaseSpaceDensity& rho0,
                                          const HamiltonianModel& model, double t,
                                          const IntegratorConfig& cfg = {}) {
    return evolve_density(rho0, model, t, cfg, 0.0);
}

/// Schrodinger picture: the state carries the time dependence.
inline double expectation_schrodinger(const Observable& obs, const PhaseSpaceDensity& rho0,
                                      const HamiltonianModel& model, double t,
                                      const IntegratorConfig& cfg = {}) {
    return evolve_density(rho0, model, t, cfg).expectation(obs);
}

/// Heisenberg picture: the observable carries the time dependence,
/// A(t)(z0) = A(Phi_t(z0)). The model is captured by value so the returned
/// observable owns everything it needs.
inline Observable heisenberg_observable(const Observable& obs, const HamiltonianModel& model,
                                        double t, const IntegratorConfig& cfg = {}) {
    auto fn = [obs, model, t, cfg](const Vec& q, const Vec& p) {
        const auto moved = flow(model, PhasePoint(q, p), t, cfg).point;
        return obs.eval(moved.q, moved.p);
    };
    return Observable{obs.name + "@t=" + std::to_string(t), std::move(fn)};
}

inline double expectation_heisenberg(const Observable& obs, const PhaseSpaceDensity& rho0,
                                     const HamiltonianModel& model, double t,
                                     const IntegratorConfig& cfg = {}) {
    return rho0.expectation(heisenberg_observable(obs, model, t, cfg));
}

// ---------------------------------------------------------------------------
// Interaction picture (1D kinetic-plus-potential splits only).

/// The conjugated interaction generator at sample time t, acting on densities
/// as d(rho)/dt = coeff_p * d(rho)/dp + coeff_q * d(rho)/dq.
struct InteractionLiouvillian1D {
    OperatorSplit split;
    double t = 0.0;

    double shifted_argument(double q, double p) const { return q + p * t / split.mass; }
    double coeff_p(double q, double p) const { return split.potential_prime(shifted_argument(q, p)); }
    double coeff_q(double q, double p) const { return -(t / split.mass) * coeff_p(q, p); }
};

inline InteractionLiouvillian1D interaction_liouvillian(const OperatorSplit& split, double t) {
    detail::check_split(split);
    return InteractionLiouvillian1D{split, t};
}

/// Interaction-frame characteristics: the ODE generated by the conjugated
/// interaction generator alone. Free motion is absorbed into the frame, so a
/// vanishing potential freezes the state exactly.
inline PhasePoint interaction_frame_flow(const OperatorSplit& split, const PhasePoint& z,
                                         double t0, double t1,
                                         const IntegratorConfig& cfg = {}) {
    detail::check_split(split);
    if (z.dof() != 1)
        throw validation_error("interaction_frame_flow: one degree of freedom only");
    const double m = split.mass;
    Vec y = z.flat();
    auto rhs = [&](double tau, const Vec& yy) {
        const double vp = split.potential_prime(yy(0) + yy(1) * tau / m);
        Vec dy(2);
        dy(0) = (tau / m) * vp;
        dy(1) = -vp;
        return dy;
    };
    detail::rk45(rhs, y, t0, t1, cfg, 2);
    return PhasePoint::from_flat(y);
}

/// rho_I(t)(z) = rho_t(free-flow_t(z)): ensembles move by the inverse free
/// flow, grids resample along the free shear.
inline PhaseSpaceDensity to_interaction_picture(const PhaseSpaceDensity& rho_t,
                                                const OperatorSplit& split, double t) {
    detail::check_split(split);
    const double m = split.mass;
    if (rho_t.rep == Representation::Ensemble) {
        PhaseSpaceDensity out = rho_t;
        for (auto& z : out.points) z.q(0) -= z.p(0) * t / m;
        return out;
    }
    GridR g = rho_t.grid;
    for (int iq = 0; iq < g.grid.nq; ++iq) {
        for (int ip = 0; ip < g.grid.np; ++ip) {
            const double q = g.grid.q_at(iq), p = g.grid.p_at(ip);
            g.values[g.grid.index(iq, ip)] = rho_t.grid.interpolate(q + p * t / m, p);
        }
    }
    return PhaseSpaceDensity::from_grid_unchecked(std::move(g));
}

/// Inverse transform: rho(t)(z) = rho_I(t)(inverse-free-flow_t(z)).
inline PhaseSpaceDensity from_interaction_picture(const PhaseSpaceDensity& rho_I,
                                                  const OperatorSplit& split, double t) {
    detail::check_split(split);
    const double m = split.mass;
    if (rho_I.rep == Representation::Ensemble) {
        PhaseSpaceDensity out = rho_I;
        for (auto& z : out.points) z.q(0) += z.p(0) * t / m;
        return out;
    }
    GridR g = rho_I.grid;
    for (int iq = 0; iq < g.grid.nq; ++iq) {
        for (int ip = 0; ip < g.grid.np; ++ip) {
            const double q = g.grid.q_at(iq), p = g.grid.p_at(ip);
            g.values[g.grid.index(iq, ip)] = rho_I.grid.interpolate(q - p * t / m, p);
        }
    }
    return PhaseSpaceDensity::from_grid_unchecked(std::move(g));
}

/// Free-evolved observable A_I(t) = A o free-flow_t, the partner of rho_I in
/// interaction-picture expectations.
inline Observable interaction_observable(const Observable& obs, const OperatorSplit& split,
                                         double t) {
    detail::check_split(split);
    const double m = split.mass;
    auto fn = [obs, m, t](const Vec& q, const Vec& p) {
        Vec qf = q + (t / m) * p;
        return obs.eval(qf, p);
    };
    return Observable{obs.name + "_I@t=" + std::to_string(t), std::move(fn)};
}

/// Interaction picture expectation: evolve rho_I along the conjugated
/// generator's characteristics (a genuinely different ODE from the full
/// flow), pair with the free-evolved observable.
inline double expectation_interaction(const Observable& obs, const PhaseSpaceDensity& rho0,
                                      const HamiltonianModel& model, double t,
                                      const IntegratorConfig& cfg = {}) {
    const OperatorSplit& split = detail::require_split(model);
    if (rho0.rep != Representation::Ensemble)
        throw validation_error("expectation_interaction: ensemble representation required");
    PhaseSpaceDensity rho_I = rho0;
    for (auto& z : rho_I.points) z = interaction_frame_flow(split, z, 0.0, t, cfg);
    return rho_I.expectation(interaction_observable(obs, split, t));
}

// ---------------------------------------------------------------------------
// Dyson propagation of grid densities.

struct DysonConfig {
    int order = 2;       // truncation order of the per-step expansion, 1..4
    int steps = 16;      // number of time-ordered substeps
    double t_final = 1.0;
};

namespace detail {

/// Apply the transport generator at sample time tau with 4th-order central
/// stencils. Values outside the box read as zero.
inline GridR apply_interaction_generator(const GridR& rho, const InteractionLiouvillian1D& gen) {
    const PhaseGrid& g = rho.grid;
    GridR out(g, std::vector<double>(g.size(), 0.0));
    const double inv_dq = 1.0 / (12.0 * g.dq);
    const double inv_dp = 1.0 / (12.0 * g.dp);
    for (int iq = 0; iq < g.nq; ++iq) {
        const double q = g.q_at(iq);
        for (int ip = 0; ip < g.np; ++ip) {
            const double p = g.p_at(ip);
            const double dq_rho = (-rho.at(iq + 2, ip) + 8.0 * rho.at(iq + 1, ip) -
                                   8.0 * rho.at(iq - 1, ip) + rho.at(iq - 2, ip)) *
                                  inv_dq;
            const double dp_rho = (-rho.at(iq, ip + 2) + 8.0 * rho.at(iq, ip + 1) -
                                   8.0 * rho.at(iq, ip - 1) + rho.at(iq, ip - 2)) *
                                  inv_dp;
            out.values[g.index(iq, ip)] =
                gen.coeff_p(q, p) * dp_rho + gen.coeff_q(q, p) * dq_rho;
        }
    }
    return out;
}

}  // namespace detail

/// Time-ordered evolution of an interaction-picture grid density: an ordered
/// product of per-step exponentials, each sampled at the step midpoint and
/// truncated at cfg.order. Converges to the exact interaction-picture
/// evolution as steps grow, at the truncation order (the midpoint sampling
/// is itself second-order accurate).
inline PhaseSpaceDensity dyson_evolve(const PhaseSpaceDensity& rho_I0, const OperatorSplit& split,
                                      const DysonConfig& cfg) {
    detail::check_split(split);
    if (cfg.order < 1 || cfg.order > 4)
        throw validation_error("dyson_evolve: order must lie in [1, 4]");
    if (cfg.steps < 1) throw validation_error("dyson_evolve: need steps >= 1");
    if (rho_I0.rep != Representation::Grid)
        throw validation_error("dyson_evolve: grid representation required");

    GridR rho = rho_I0.grid;
    const double dt = cfg.t_final / cfg.steps;
    for (int s = 0; s < cfg.steps; ++s) {
        const double t_mid = (s + 0.5) * dt;
        const auto gen = interaction_liouvillian(split, t_mid);
        GridR term = rho;
        GridR acc = rho;
        double factorial = 1.0;
        for (int k = 1; k <= cfg.order; ++k) {
            term = detail::apply_interaction_generator(term, gen);
            factorial *= k;
            const double scale = std::pow(dt, k) / factorial;
            for (std::size_t i = 0; i < acc.values.size(); ++i)
                acc.values[i] += scale * term.values[i];
        }
        rho = std::move(acc);
    }
    return PhaseSpaceDensity::from_grid_unchecked(std::move(rho));
}

// ---------------------------------------------------------------------------
// Constant-force closed form.

struct LineQuadrature {
    double q_lo = -10.0;
    double q_hi = 10.0;
    int nodes = 201;
};

/// Exact time-t density for the initial state f(q) delta(p - p0) under
/// H = p^2/2m - F q. The momentum support p0 + F t is represented exactly as
/// a shared ensemble momentum; the q profile is f carried along the analytic
/// trajectories. The q argument of the resulting profile is fixed by
/// inverting the trajectories: q0 = q - p t/m + F t^2/2m on the support.
inline PhaseSpaceDensity constant_force_density(const std::function<double(double)>& f, double p0,
                                                double F, double m, double t,
                                                const LineQuadrature& quad = {}) {
    if (m <= 0.0) throw validation_error("constant_force_density: mass must be positive");
    PhaseSpaceDensity rho = line_density(f, quad.q_lo, quad.q_hi, quad.nodes, p0);
    const double p_t = p0 + F * t;
    const double shift = p0 * t / m + 0.5 * F * t * t / m;
    for (auto& z : rho.points) {
        z.q(0) += shift;
        z.p(0) = p_t;
    }
    return rho;
}

/// The q marginal of the constant-force closed form as a callable.
inline std::function<double(double)> constant_force_q_marginal(std::function<double(double)> f,
                                                               double p0, double F, double m,
                                                               double t) {
    if (m <= 0.0) throw validation_error("constant_force_q_marginal: mass must be positive");
    const double shift = p0 * t / m + 0.5 * F * t * t / m;
    return [f = std::move(f), shift](double q) { return f(q - shift); };
}

// ---------------------------------------------------------------------------
// Cross-picture comparison scan.

struct PictureSample {
    double t = 0.0;
    std::string observable;
    double schrodinger = 0.0;
    double heisenberg = 0.0;
    double interaction = 0.0;

    double max_pairwise_diff() const {
        return std::max({std::abs(schrodinger - heisenberg), std::abs(schrodinger - interaction),
                         std::abs(heisenberg - interaction)});
    }
};

/// Runs the three picture computations over a time grid with deliberately
/// distinct execution paths: the Schrodinger state advances incrementally,
/// the Heisenberg observables re-run fresh trajectories from the initial
/// nodes, and the interaction route integrates the conjugated generator's
/// characteristics. All three share the initial quadrature, so differences
/// measure the dynamics, not the quadrature.
inline std::vector<PictureSample> compare_pictures(const HamiltonianModel& model,
                                                   const PhaseSpaceDensity& rho0,
                                                   const std::vector<Observable>& observables,
                                                   const std::vector<double>& times,
                                                   const IntegratorConfig& cfg = {}) {
    const OperatorSplit& split = detail::require_split(model);
    if (rho0.rep != Representation::Ensemble)
        throw validation_error("compare_pictures: ensemble representation required");
    std::vector<PictureSample> out;
    PhaseSpaceDensity schro = rho0;   // advances in place
    PhaseSpaceDensity inter = rho0;   // interaction-frame nodes
    double t_prev = 0.0;
    for (double t : times) {
        if (t < t_prev)
            throw validation_error("compare_pictures: times must be nondecreasing");
        for (auto& z : schro.points) z = flow_from(model, z, t_prev, t, cfg).point;
        for (auto& z : inter.points) z = interaction_frame_flow(split, z, t_prev, t, cfg);
        t_prev = t;
        // Heisenberg route: fresh trajectories from the initial nodes, all
        // observables evaluated along the same composed flow map.
        PhaseSpaceDensity heis = rho0;
        for (auto& z : heis.points) z = flow(model, z, t, cfg).point;
        for (const auto& obs : observables) {
            PictureSample s;
            s.t = t;
            s.observable = obs.name;
            s.schrodinger = schro.expectation(obs);
            s.heisenberg = heis.expectation(obs);
            s.interaction = inter.expectation(interaction_observable(obs, split, t));
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace dynp
