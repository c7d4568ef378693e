#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "dynpictures/numerics.hpp"
#include "dynpictures/phase.hpp"

namespace dynp {

/// Splitting H = p^2/2m + V(q) used by the interaction-picture machinery.
/// Only the one-dimensional kinetic-plus-potential case is supported there.
struct OperatorSplit {
    double mass = 1.0;
    std::function<double(double)> potential;        // V(q)
    std::function<double(double)> potential_prime;  // V'(q)
};

enum class ModelKind { SmoothFlow, KickedMap };

/// A Hamiltonian system. Smooth models carry H and its gradients as closures;
/// kicked models carry the exact one-period map and its Jacobian. Instances
/// are immutable after construction and safe to share between threads.
struct HamiltonianModel {
    std::string name;
    int dof = 1;
    ModelKind kind = ModelKind::SmoothFlow;

    std::function<double(const Vec& q, const Vec& p, double t)> value;
    std::function<Vec(const Vec& q, const Vec& p, double t)> grad_q;
    std::function<Vec(const Vec& q, const Vec& p, double t)> grad_p;

    // Hessian blocks; analytic when available, otherwise left empty and
    // obtained by central differences of the gradients.
    std::function<Mat(const Vec& q, const Vec& p, double t)> hess_qq;
    std::function<Mat(const Vec& q, const Vec& p, double t)> hess_qp;
    std::function<Mat(const Vec& q, const Vec& p, double t)> hess_pp;

    bool separable = false;       // H = T(p) + V(q, t)
    bool time_dependent = false;  // explicit t dependence
    double mass = 1.0;            // kinetic mass for separable models

    // Scalar closures for 1-dof separable models; the splitting integrator
    // hot loop uses these to avoid per-call vector allocation. Only valid
    // when the kinetic part is p^2/(2 mass).
    std::function<double(double q, double t)> grad_q_1d;
    std::function<double(double q, double t)> hess_qq_1d;

    std::optional<OperatorSplit> split;

    // Kicked maps: exact stroboscopic updates, one kick period each.
    double kick_period = 1.0;
    std::function<void(Vec& q, Vec& p)> kick_forward;
    std::function<void(Vec& q, Vec& p)> kick_backward;
    // Jacobian of the forward map evaluated at the pre-kick point.
    std::function<Mat(const Vec& q, const Vec& p)> kick_jacobian;

    double energy(const PhasePoint& z, double t = 0.0) const {
        check_point(z);
        return value(z.q, z.p, t);
    }

    void check_point(const PhasePoint& z) const {
        if (z.dof() != dof)
            throw validation_error("model '" + name + "': phase point has dof " +
                                   std::to_string(z.dof()) + ", expected " + std::to_string(dof));
    }

    Mat hessian_qq(const Vec& q, const Vec& p, double t) const {
        if (hess_qq) return hess_qq(q, p, t);
        return fd_jacobian([&](const Vec& qq) { return grad_q(qq, p, t); }, q);
    }
    Mat hessian_qp(const Vec& q, const Vec& p, double t) const {
        if (hess_qp) return hess_qp(q, p, t);
        return fd_jacobian([&](const Vec& pp) { return grad_q(q, pp, t); }, p);
    }
    Mat hessian_pp(const Vec& q, const Vec& p, double t) const {
        if (hess_pp) return hess_pp(q, p, t);
        return fd_jacobian([&](const Vec& pp) { return grad_p(q, pp, t); }, p);
    }

  private:
    template <typename F>
    static Mat fd_jacobian(F&& f, const Vec& x) {
        const auto n = x.size();
        Mat jac(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = fd_step(x(j));
            Vec xp = x, xm = x;
            xp(j) += h;
            xm(j) -= h;
            jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
        }
        return jac;
    }
};

/// Evaluate H(q, p, t) with dimension checking.
inline double evaluate_hamiltonian(const HamiltonianModel& model, const PhasePoint& z,
                                   double t = 0.0) {
    return model.energy(z, t);
}

/// Rate of change of an observable A(q, p) along the Hamiltonian flow,
/// dA/dt = sum_i [dA/dq_i dH/dp_i - dA/dp_i dH/dq_i], using central
/// differences for the observable. Note this is the negative of the operator
/// of the KvN evolution equation acting on A; densities evolve with the
/// opposite sign (see README on sign conventions).
template <typename Obs>
double liouville_action(const HamiltonianModel& model, Obs&& observable, const PhasePoint& z,
                        double t = 0.0) {
    model.check_point(z);
    const Vec hq = model.grad_q(z.q, z.p, t);
    const Vec hp = model.grad_p(z.q, z.p, t);
    double out = 0.0;
    for (int i = 0; i < model.dof; ++i) {
        Vec qp = z.q, qm = z.q, pp = z.p, pm = z.p;
        const double hqi = fd_step(z.q(i)), hpi = fd_step(z.p(i));
        qp(i) += hqi;
        qm(i) -= hqi;
        pp(i) += hpi;
        pm(i) -= hpi;
        const double dA_dq = (observable(qp, z.p) - observable(qm, z.p)) / (2.0 * hqi);
        const double dA_dp = (observable(z.q, pp) - observable(z.q, pm)) / (2.0 * hpi);
        if (!std::isfinite(dA_dq) || !std::isfinite(dA_dp))
            throw numeric_error("liouville_action: non-finite derivative estimate");
        out += dA_dq * hp(i) - dA_dp * hq(i);
    }
    return out;
}

namespace models {

/// H = p^2/2m + k q^2/2.
inline HamiltonianModel harmonic(double mass = 1.0, double k = 1.0) {
    if (mass <= 0.0) throw validation_error("harmonic: mass must be positive");
    HamiltonianModel m;
    m.name = "harmonic";
    m.dof = 1;
    m.separable = true;
    m.mass = mass;
    m.value = [mass, k](const Vec& q, const Vec& p, double) {
        return p.squaredNorm() / (2.0 * mass) + 0.5 * k * q.squaredNorm();
    };
    m.grad_q = [k](const Vec& q, const Vec&, double) { return Vec(k * q); };
    m.grad_p = [mass](const Vec&, const Vec& p, double) { return Vec(p / mass); };
    m.hess_qq = [k](const Vec& q, const Vec&, double) {
        return Mat(k * Mat::Identity(q.size(), q.size()));
    };
    m.hess_qp = [](const Vec& q, const Vec&, double) {
        return Mat(Mat::Zero(q.size(), q.size()));
    };
    m.hess_pp = [mass](const Vec& q, const Vec&, double) {
        return Mat(Mat::Identity(q.size(), q.size()) / mass);
    };
    m.grad_q_1d = [k](double q, double) { return k * q; };
    m.hess_qq_1d = [k](double, double) { return k; };
    m.split = OperatorSplit{mass, [k](double q) { return 0.5 * k * q * q; },
                            [k](double q) { return k * q; }};
    return m;
}

/// H = p^2/2m - F q (free particle when F = 0).
inline HamiltonianModel constant_force(double mass = 1.0, double force = 1.0) {
    if (mass <= 0.0) throw validation_error("constant_force: mass must be positive");
    HamiltonianModel m;
    m.name = force == 0.0 ? "free" : "constant_force";
    m.dof = 1;
    m.separable = true;
    m.mass = mass;
    m.value = [mass, force](const Vec& q, const Vec& p, double) {
        return p.squaredNorm() / (2.0 * mass) - force * q.sum();
    };
    m.grad_q = [force](const Vec& q, const Vec&, double) {
        return Vec(Vec::Constant(q.size(), -force));
    };
    m.grad_p = [mass](const Vec&, const Vec& p, double) { return Vec(p / mass); };
    m.hess_qq = [](const Vec& q, const Vec&, double) {
        return Mat(Mat::Zero(q.size(), q.size()));
    };
    m.hess_qp = m.hess_qq;
    m.hess_pp = [mass](const Vec& q, const Vec&, double) {
        return Mat(Mat::Identity(q.size(), q.size()) / mass);
    };
    m.grad_q_1d = [force](double, double) { return -force; };
    m.hess_qq_1d = [](double, double) { return 0.0; };
    m.split = OperatorSplit{mass, [force](double q) { return -force * q; },
                            [force](double) { return -force; }};
    return m;
}

inline HamiltonianModel free_particle(double mass = 1.0) { return constant_force(mass, 0.0); }

/// H = p^2/2m + c q^4/4.
inline HamiltonianModel quartic(double mass = 1.0, double coeff = 1.0) {
    if (mass <= 0.0) throw validation_error("quartic: mass must be positive");
    HamiltonianModel m;
    m.name = "quartic";
    m.dof = 1;
    m.separable = true;
    m.mass = mass;
    m.value = [mass, coeff](const Vec& q, const Vec& p, double) {
        return p.squaredNorm() / (2.0 * mass) + 0.25 * coeff * q.array().pow(4).sum();
    };
    m.grad_q = [coeff](const Vec& q, const Vec&, double) {
        return Vec(coeff * q.array().cube());
    };
    m.grad_p = [mass](const Vec&, const Vec& p, double) { return Vec(p / mass); };
    m.hess_qq = [coeff](const Vec& q, const Vec&, double) {
        return Mat((3.0 * coeff * q.array().square()).matrix().asDiagonal());
    };
    m.hess_qp = [](const Vec& q, const Vec&, double) {
        return Mat(Mat::Zero(q.size(), q.size()));
    };
    m.hess_pp = [mass](const Vec& q, const Vec&, double) {
        return Mat(Mat::Identity(q.size(), q.size()) / mass);
    };
    m.grad_q_1d = [coeff](double q, double) { return coeff * q * q * q; };
    m.hess_qq_1d = [coeff](double q, double) { return 3.0 * coeff * q * q; };
    m.split = OperatorSplit{mass, [coeff](double q) { return 0.25 * coeff * q * q * q * q; },
                            [coeff](double q) { return coeff * q * q * q; }};
    return m;
}

/// H = p^2/2m - k q^2/2 (hyperbolic fixed point at the origin).
inline HamiltonianModel inverted_oscillator(double mass = 1.0, double k = 1.0) {
    auto m = harmonic(mass, -k);
    m.name = "inverted_oscillator";
    return m;
}

/// Driven double well, H = p^2/2m - a q^2 + b q^4 + eps q cos(Omega t).
inline HamiltonianModel double_well_driven(double mass, double a, double b, double eps,
                                           double omega) {
    if (mass <= 0.0 || b <= 0.0)
        throw validation_error("double_well_driven: need mass > 0 and b > 0");
    HamiltonianModel m;
    m.name = "double_well_driven";
    m.dof = 1;
    m.separable = true;
    m.time_dependent = eps != 0.0;
    m.mass = mass;
    m.value = [=](const Vec& q, const Vec& p, double t) {
        const double x = q(0);
        return p.squaredNorm() / (2.0 * mass) - a * x * x + b * x * x * x * x +
               eps * x * std::cos(omega * t);
    };
    m.grad_q = [=](const Vec& q, const Vec&, double t) {
        Vec g(1);
        const double x = q(0);
        g(0) = -2.0 * a * x + 4.0 * b * x * x * x + eps * std::cos(omega * t);
        return g;
    };
    m.grad_p = [mass](const Vec&, const Vec& p, double) { return Vec(p / mass); };
    m.hess_qq = [=](const Vec& q, const Vec&, double) {
        Mat h(1, 1);
        h(0, 0) = -2.0 * a + 12.0 * b * q(0) * q(0);
        return h;
    };
    m.hess_qp = [](const Vec&, const Vec&, double) { return Mat(Mat::Zero(1, 1)); };
    m.hess_pp = [mass](const Vec&, const Vec&, double) {
        Mat h(1, 1);
        h(0, 0) = 1.0 / mass;
        return h;
    };
    m.grad_q_1d = [=](double x, double t) {
        return -2.0 * a * x + 4.0 * b * x * x * x + eps * std::cos(omega * t);
    };
    m.hess_qq_1d = [=](double x, double) { return -2.0 * a + 12.0 * b * x * x; };
    return m;
}

/// Chirikov standard map, p' = p + K sin q, q' = q + p', one kick per period.
/// Trajectories use the unreduced angle lift; reduce mod 2*pi only for display.
inline HamiltonianModel standard_map(double kick_strength) {
    HamiltonianModel m;
    m.name = "standard_map";
    m.dof = 1;
    m.kind = ModelKind::KickedMap;
    m.kick_period = 1.0;
    const double K = kick_strength;
    // Stroboscopic energy right after a kick; used only as a diagnostic.
    m.value = [K](const Vec& q, const Vec& p, double) {
        return 0.5 * p.squaredNorm() + K * std::cos(q(0));
    };
    m.grad_q = [K](const Vec& q, const Vec&, double) {
        Vec g(1);
        g(0) = -K * std::sin(q(0));
        return g;
    };
    m.grad_p = [](const Vec&, const Vec& p, double) { return Vec(p); };
    m.kick_forward = [K](Vec& q, Vec& p) {
        p(0) += K * std::sin(q(0));
        q(0) += p(0);
    };
    m.kick_backward = [K](Vec& q, Vec& p) {
        q(0) -= p(0);
        p(0) -= K * std::sin(q(0));
    };
    m.kick_jacobian = [K](const Vec& q, const Vec&) {
        Mat jac(2, 2);
        const double c = K * std::cos(q(0));
        // layout [dq'/dq, dq'/dp; dp'/dq, dp'/dp]
        jac(0, 0) = 1.0 + c;
        jac(0, 1) = 1.0;
        jac(1, 0) = c;
        jac(1, 1) = 1.0;
        return jac;
    };
    return m;
}

/// Reduce an angle to [0, 2*pi); display/marginal use only.
inline double wrap_angle(double q) {
    const double two_pi = 2.0 * M_PI;
    double r = std::fmod(q, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

}  // namespace models
}  // namespace dynp
