#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>

#include "dynpictures/model.hpp"
#include "dynpictures/phase.hpp"

namespace dynp {

struct IntegratorConfig {
    enum class Method { Auto, Split4, RK45 };
    Method method = Method::Auto;

    /// Fixed step for the splitting integrator; 0 means calibrate from the
    /// error budget at the start of each flow call.
    double dt = 0.0;
    /// Local error rate target (error per unit time) for step calibration.
    double error_budget = 1e-10;
    double max_step = 0.05;

    /// Embedded RK tolerances (non-separable / generic path).
    double rtol = 1e-10;
    double atol = 1e-12;
    double min_step = 1e-13;
};

struct FlowResult {
    PhasePoint point;
    double t = 0.0;
    std::int64_t steps = 0;
    double est_error = 0.0;
};

namespace detail {

/// One kick-drift-kick leapfrog of size h starting at time t. Advances
/// (q, p, t) in place; if tangent is non-null it is multiplied by the exact
/// Jacobian of each substep, so the accumulated matrix is the exact Jacobian
/// of the numerical map (unit determinant by construction).
/// One-dof models with scalar closures take an allocation-free path.
inline void leapfrog_step(const HamiltonianModel& m, Vec& q, Vec& p, double& t, double h,
                          Mat* tangent) {
    const int n = m.dof;
    if (n == 1 && m.grad_q_1d) {
        double qs = q(0), ps = p(0);
        const double inv_m = 1.0 / m.mass;
        auto kick = [&](double dt) {
            if (tangent) {
                const double hqq = m.hess_qq_1d ? m.hess_qq_1d(qs, t)
                                                : m.hessian_qq(q, p, t)(0, 0);
                tangent->row(1) -= dt * hqq * tangent->row(0);
            }
            ps -= dt * m.grad_q_1d(qs, t);
        };
        auto drift = [&](double dt) {
            if (tangent) tangent->row(0) += (dt * inv_m) * tangent->row(1);
            qs += dt * ps * inv_m;
            t += dt;
        };
        kick(0.5 * h);
        drift(h);
        kick(0.5 * h);
        q(0) = qs;
        p(0) = ps;
        return;
    }
    auto kick = [&](double dt) {
        if (tangent) {
            const Mat hqq = m.hessian_qq(q, p, t);
            tangent->bottomRows(n) -= dt * hqq * tangent->topRows(n);
        }
        p -= dt * m.grad_q(q, p, t);
    };
    auto drift = [&](double dt) {
        if (tangent) {
            const Mat hpp = m.hessian_pp(q, p, t);
            tangent->topRows(n) += dt * hpp * tangent->bottomRows(n);
        }
        q += dt * m.grad_p(q, p, t);
        t += dt;
    };
    kick(0.5 * h);
    drift(h);
    kick(0.5 * h);
}

/// Fourth-order triple-jump composition of the leapfrog. Time dependence is
/// carried through the substep clocks, which keeps the scheme symplectic in
/// the extended phase space and fourth order for smooth V(q, t).
inline void split4_step(const HamiltonianModel& m, Vec& q, Vec& p, double& t, double h,
                        Mat* tangent) {
    static const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
    static const double w0 = 1.0 - 2.0 * w1;
    leapfrog_step(m, q, p, t, w1 * h, tangent);
    leapfrog_step(m, q, p, t, w0 * h, tangent);
    leapfrog_step(m, q, p, t, w1 * h, tangent);
}

/// Pick a splitting step so the local error rate stays within the budget.
/// Uses step doubling at the initial point; the result is clipped to
/// [1e-4, max_step] and then rounded so it divides the interval exactly.
inline double calibrate_step(const HamiltonianModel& m, const PhasePoint& z0, double t0,
                             double span, const IntegratorConfig& cfg) {
    double h = std::min(cfg.max_step, span);
    for (int iter = 0; iter < 3; ++iter) {
        Vec q1 = z0.q, p1 = z0.p;
        double ta = t0;
        split4_step(m, q1, p1, ta, h, nullptr);
        Vec q2 = z0.q, p2 = z0.p;
        double tb = t0;
        split4_step(m, q2, p2, tb, 0.5 * h, nullptr);
        split4_step(m, q2, p2, tb, 0.5 * h, nullptr);
        const double delta =
            std::sqrt((q1 - q2).squaredNorm() + (p1 - p2).squaredNorm()) / (1.0 - 1.0 / 16.0);
        if (!std::isfinite(delta)) throw numeric_error("step calibration diverged");
        if (delta == 0.0) {
            h = cfg.max_step;
            break;
        }
        const double target = cfg.error_budget * h;  // allowed local error for this step
        h *= std::pow(target / delta, 0.2);
        h = std::clamp(h, 1e-4, cfg.max_step);
    }
    const auto nsteps = static_cast<std::int64_t>(std::ceil(span / h - 1e-12));
    return span / static_cast<double>(std::max<std::int64_t>(nsteps, 1));
}

struct RKResult {
    std::int64_t steps = 0;
    double est_error = 0.0;
};

/// Dormand-Prince 5(4) with step control. Integrates y' = f(t, y) from t0 to
/// t1 in place. The error norm is evaluated on the first `err_dim` components
/// so that augmented (tangent) blocks ride along without driving rejection.
template <typename F>
RKResult rk45(F&& f, Vec& y, double t0, double t1, const IntegratorConfig& cfg,
              Eigen::Index err_dim) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = t1 - t0;
    if (span == 0.0) return {};
    const double dir = span > 0.0 ? 1.0 : -1.0;
    double t = t0;
    double h = dir * std::min(std::abs(span), cfg.max_step);
    RKResult res;
    Vec k1 = f(t, y);
    while (dir * (t1 - t) > 0.0) {
        if (dir * (t + h - t1) > 0.0) h = t1 - t;
        const Vec y2 = y + h * a21 * k1;
        const Vec k2 = f(t + c2 * h, y2);
        const Vec y3 = y + h * (a31 * k1 + a32 * k2);
        const Vec k3 = f(t + c3 * h, y3);
        const Vec y4 = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        const Vec k4 = f(t + c4 * h, y4);
        const Vec y5 = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        const Vec k5 = f(t + c5 * h, y5);
        const Vec y6 = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const Vec k6 = f(t + h, y6);
        const Vec ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vec k7 = f(t + h, ynew);
        const Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = 0.0;
        for (Eigen::Index i = 0; i < err_dim; ++i) {
            const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
            err = std::max(err, std::abs(errv(i)) / sc);
        }
        if (!std::isfinite(err)) throw numeric_error("rk45: non-finite state during integration");
        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;
            ++res.steps;
            res.est_error += errv.head(err_dim).norm();
        }
        const double fac = std::clamp(0.9 * std::pow(err > 0 ? err : 1e-16, -0.2), 0.2, 5.0);
        h *= fac;
        if (std::abs(h) < cfg.min_step)
            throw numeric_error("rk45: step underflow at t = " + std::to_string(t) +
                                " (error budget too tight or singular dynamics)");
    }
    return res;
}

inline std::int64_t kick_count(const HamiltonianModel& m, double span) {
    const double ratio = span / m.kick_period;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9)
        throw validation_error("kicked-map flow requires t to be an integer multiple of the "
                               "kick period, got t/T = " +
                               std::to_string(ratio));
    return static_cast<std::int64_t>(rounded);
}

/// Shared driver: advances z (and optional tangent) from t0 to t1.
inline FlowResult flow_impl(const HamiltonianModel& m, const PhasePoint& z0, double t0, double t1,
                            const IntegratorConfig& cfg, Mat* tangent) {
    m.check_point(z0);
    if (!std::isfinite(t0) || !std::isfinite(t1))
        throw validation_error("flow: time must be finite");
    const int n = m.dof;
    if (tangent && (tangent->rows() != 2 * n || tangent->cols() != 2 * n))
        throw validation_error("flow: tangent matrix must be 2N x 2N");

    FlowResult out;
    out.t = t1;

    if (m.kind == ModelKind::KickedMap) {
        const std::int64_t k = kick_count(m, t1 - t0);
        Vec q = z0.q, p = z0.p;
        for (std::int64_t i = 0; i < std::llabs(k); ++i) {
            if (k > 0) {
                if (tangent) *tangent = m.kick_jacobian(q, p) * (*tangent);
                m.kick_forward(q, p);
            } else {
                m.kick_backward(q, p);
                if (tangent) *tangent = m.kick_jacobian(q, p).inverse() * (*tangent);
            }
        }
        out.point = PhasePoint(std::move(q), std::move(p));
        out.steps = std::llabs(k);
        return out;
    }

    const double span = t1 - t0;
    if (span == 0.0) {
        out.point = z0;
        return out;
    }

    const bool use_split = cfg.method == IntegratorConfig::Method::Split4 ||
                           (cfg.method == IntegratorConfig::Method::Auto && m.separable);
    if (use_split) {
        if (!m.separable)
            throw validation_error("split integrator requires a separable model");
        double h = cfg.dt > 0.0 ? cfg.dt : calibrate_step(m, z0, t0, std::abs(span), cfg);
        const auto nsteps =
            static_cast<std::int64_t>(std::llround(std::ceil(std::abs(span) / h - 1e-12)));
        h = span / static_cast<double>(nsteps);
        Vec q = z0.q, p = z0.p;
        double t = t0;
        for (std::int64_t i = 0; i < nsteps; ++i) split4_step(m, q, p, t, h, tangent);
        if (!all_finite(q) || !all_finite(p))
            throw numeric_error("flow: trajectory left the finite domain (model '" + m.name +
                                "')");
        out.point = PhasePoint(std::move(q), std::move(p));
        out.steps = nsteps;
        out.est_error = cfg.error_budget * std::abs(span);
        return out;
    }

    // Generic path: Hamilton's equations as a first-order system.
    const Eigen::Index dim = 2 * n;
    Vec y(tangent ? dim + dim * dim : dim);
    y.head(n) = z0.q;
    y.segment(n, n) = z0.p;
    if (tangent) y.tail(dim * dim) = Eigen::Map<const Vec>(tangent->data(), dim * dim);
    auto rhs = [&](double t, const Vec& yy) {
        const Vec q = yy.head(n), p = yy.segment(n, n);
        Vec dy(yy.size());
        dy.head(n) = m.grad_p(q, p, t);
        dy.segment(n, n) = -m.grad_q(q, p, t);
        if (tangent) {
            Mat hess(dim, dim);
            hess.topLeftCorner(n, n) = m.hessian_qq(q, p, t);
            hess.topRightCorner(n, n) = m.hessian_qp(q, p, t);
            hess.bottomLeftCorner(n, n) = hess.topRightCorner(n, n).transpose();
            hess.bottomRightCorner(n, n) = m.hessian_pp(q, p, t);
            const Eigen::Map<const Mat> tmat(yy.tail(dim * dim).data(), dim, dim);
            Mat jhess(dim, dim);
            jhess.topRows(n) = hess.bottomRows(n);
            jhess.bottomRows(n) = -hess.topRows(n);
            const Mat dtang = jhess * tmat;
            dy.tail(dim * dim) = Eigen::Map<const Vec>(dtang.data(), dim * dim);
        }
        return dy;
    };
    const auto rk = rk45(rhs, y, t0, t1, cfg, dim);
    if (tangent)
        *tangent = Eigen::Map<const Mat>(y.tail(dim * dim).data(), dim, dim);
    out.point = PhasePoint(y.head(n), y.segment(n, n));
    out.steps = rk.steps;
    out.est_error = rk.est_error;
    return out;
}

}  // namespace detail

/// Flow map: integrates Hamilton's equations (or iterates the kicked map)
/// from time t0 to t1 starting at z.
inline FlowResult flow_from(const HamiltonianModel& model, const PhasePoint& z, double t0,
                            double t1, const IntegratorConfig& cfg = {}) {
    return detail::flow_impl(model, z, t0, t1, cfg, nullptr);
}

/// Phi_t: state at time 0 mapped to time t.
inline FlowResult flow(const HamiltonianModel& model, const PhasePoint& z0, double t,
                       const IntegratorConfig& cfg = {}) {
    return flow_from(model, z0, 0.0, t, cfg);
}

/// Inverse of the flow map: carries a time-t state back to time 0, so
/// inverse_flow(flow(z, t), t) == z up to integrator tolerance.
inline FlowResult inverse_flow(const HamiltonianModel& model, const PhasePoint& z, double t,
                               const IntegratorConfig& cfg = {}) {
    auto res = flow_from(model, z, t, 0.0, cfg);
    res.t = 0.0;
    return res;
}

}  // namespace dynp
