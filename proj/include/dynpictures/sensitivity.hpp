#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dynpictures/integrate.hpp"
#include "dynpictures/model.hpp"

namespace dynp {

/// Jacobian of the flow with respect to the initial condition, in the block
/// layout [dq/dq0, dq/dp0; dp/dq0, dp/dp0]. Symplectic, so det = 1.
struct SensitivityMatrix {
    Mat entries;
    double t = 0.0;
    PhasePoint base_point;

    double det_error() const { return std::abs(entries.determinant() - 1.0); }
};

/// Integrates the variational equations along the trajectory from z0. On the
/// splitting path the accumulated matrix is the exact Jacobian of the
/// numerical map, so the unit-determinant property holds to round-off.
inline SensitivityMatrix tangent_flow(const HamiltonianModel& model, const PhasePoint& z0,
                                      double t, const IntegratorConfig& cfg = {}) {
    model.check_point(z0);
    Mat tang = Mat::Identity(2 * model.dof, 2 * model.dof);
    detail::flow_impl(model, z0, 0.0, t, cfg, &tang);
    return SensitivityMatrix{std::move(tang), t, z0};
}

/// Central-difference Jacobian of the flow map; the test oracle for
/// tangent_flow.
inline SensitivityMatrix finite_difference_sensitivity(const HamiltonianModel& model,
                                                       const PhasePoint& z0, double t, double h,
                                                       const IntegratorConfig& cfg = {}) {
    if (h <= 0.0) throw validation_error("finite_difference_sensitivity: need h > 0");
    const int n = model.dof;
    Mat jac(2 * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
        Vec zp = z0.flat(), zm = z0.flat();
        zp(j) += h;
        zm(j) -= h;
        const Vec fp = flow(model, PhasePoint::from_flat(zp), t, cfg).point.flat();
        const Vec fm = flow(model, PhasePoint::from_flat(zm), t, cfg).point.flat();
        jac.col(j) = (fp - fm) / (2.0 * h);
    }
    return SensitivityMatrix{std::move(jac), t, z0};
}

struct LyapunovCheckpoint {
    double t = 0.0;
    Vec exponents;     // running estimates, sorted descending
    double det_error;  // |det T - 1| of the renormalized frame product
    double log_norm;   // accumulated ln of the leading tangent growth
};

struct LyapunovSpectrum {
    Vec exponents;  // sorted descending; length 2N
    double T = 0.0;
    double renorm_interval = 0.0;
    double warmup = 0.0;
    std::vector<LyapunovCheckpoint> checkpoints;
    double max_det_error = 0.0;

    /// Largest residual of the symplectic pairing lambda_i + lambda_{2N+1-i}.
    double pairing_residual() const {
        const auto n = exponents.size();
        double r = 0.0;
        for (Eigen::Index i = 0; i < n / 2; ++i)
            r = std::max(r, std::abs(exponents(i) + exponents(n - 1 - i)));
        return r;
    }
};

/// Benettin-style spectrum: evolve a full tangent frame, re-orthonormalize by
/// QR every renorm_interval, and average the log growth rates. An optional
/// warmup segment lets the frame align before accumulation starts. This
/// agrees with the eigenvalues of ln(T^T T)/(2t) as t grows but stays
/// conditioned over long horizons.
inline LyapunovSpectrum lyapunov_spectrum(const HamiltonianModel& model, const PhasePoint& z0,
                                          double T, double renorm_interval, double warmup = 0.0,
                                          const IntegratorConfig& cfg = {},
                                          int checkpoint_stride = 16) {
    model.check_point(z0);
    if (renorm_interval <= 0.0 || T < renorm_interval)
        throw validation_error("lyapunov_spectrum: need T >= renorm_interval > 0");
    if (model.kind == ModelKind::KickedMap) {
        renorm_interval = model.kick_period * std::max(1.0, std::round(renorm_interval));
        warmup = model.kick_period * std::round(warmup / model.kick_period);
    }

    const int dim = 2 * model.dof;
    const auto total = static_cast<std::int64_t>(std::round((warmup + T) / renorm_interval));
    const auto skip = static_cast<std::int64_t>(std::round(warmup / renorm_interval));

    PhasePoint z = z0;
    double t = 0.0;
    // A generic (but fixed) orthogonal start frame: an identity frame can sit
    // exactly on an invariant direction of shear-like tangent maps, which
    // pins the leading estimate at zero.
    Mat frame;
    {
        Mat seed(dim, dim);
        std::uint64_t state = 0x9e3779b97f4a7c15ull;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                state = state * 6364136223846793005ull + 1442695040888963407ull;
                seed(i, j) = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
            }
        frame = Eigen::HouseholderQR<Mat>(seed).householderQ();
    }
    Vec log_sum = Vec::Zero(dim);
    LyapunovSpectrum out;
    out.renorm_interval = renorm_interval;
    out.warmup = skip * renorm_interval;

    double accum_time = 0.0;
    for (std::int64_t k = 0; k < total; ++k) {
        Mat tang = Mat::Identity(dim, dim);
        const auto res = detail::flow_impl(model, z, t, t + renorm_interval, cfg, &tang);
        z = res.point;
        t += renorm_interval;

        Mat w = tang * frame;
        Eigen::HouseholderQR<Mat> qr(w);
        Mat qfull = qr.householderQ();
        Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
        // fix signs so R has a positive diagonal
        for (int i = 0; i < dim; ++i) {
            if (r(i, i) < 0.0) {
                r.row(i) *= -1.0;
                qfull.col(i) *= -1.0;
            }
        }
        frame = qfull;
        for (int i = 0; i < dim; ++i) {
            if (r(i, i) <= 0.0)
                throw numeric_error("lyapunov_spectrum: tangent frame lost rank at t = " +
                                    std::to_string(t));
        }
        out.max_det_error = std::max(out.max_det_error, std::abs(std::abs(w.determinant()) - 1.0));

        if (k < skip) continue;
        accum_time += renorm_interval;
        for (int i = 0; i < dim; ++i) log_sum(i) += std::log(r(i, i));

        const auto done = k - skip + 1;
        if (done % checkpoint_stride == 0 || k + 1 == total) {
            LyapunovCheckpoint cp;
            cp.t = accum_time;
            cp.exponents = log_sum / accum_time;
            std::sort(cp.exponents.begin(), cp.exponents.end(), std::greater<double>());
            cp.det_error = out.max_det_error;
            cp.log_norm = log_sum(0);
            out.checkpoints.push_back(std::move(cp));
        }
    }

    out.T = accum_time;
    out.exponents = log_sum / accum_time;
    std::sort(out.exponents.begin(), out.exponents.end(), std::greater<double>());
    return out;
}

/// Sum of the Lyapunov exponents that exceed the noise floor.
inline double ks_entropy(const LyapunovSpectrum& spectrum, double noise_floor = 1e-3) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < spectrum.exponents.size(); ++i)
        if (spectrum.exponents(i) > noise_floor) h += spectrum.exponents(i);
    return h;
}

inline double ks_entropy(const Vec& exponents, double noise_floor = 1e-3) {
    LyapunovSpectrum s;
    s.exponents = exponents;
    return ks_entropy(s, noise_floor);
}

/// Short-time spectrum straight from the definition: eigenvalues of
/// ln(T^T T)/(2t). Overflows for long horizons; retained as a cross-check.
inline Vec lyapunov_exponents_direct(const SensitivityMatrix& sens) {
    if (sens.t == 0.0) throw validation_error("lyapunov_exponents_direct: need t != 0");
    Eigen::SelfAdjointEigenSolver<Mat> es(sens.entries.transpose() * sens.entries);
    Vec lam = es.eigenvalues();
    Vec out(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) out(i) = std::log(lam(i)) / (2.0 * sens.t);
    std::sort(out.begin(), out.end(), std::greater<double>());
    return out;
}

}  // namespace dynp
