#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynpictures/numerics.hpp"
#include "dynpictures/phase.hpp"

namespace dynp {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline double hermiticity_error(const CMat& A) {
    return (A - A.adjoint()).cwiseAbs().maxCoeff();
}

inline double unitarity_error(const CMat& U) {
    return (U.adjoint() * U - CMat::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

inline CMat commutator(const CMat& A, const CMat& B) { return A * B - B * A; }

/// Top-left block where truncation artifacts are negligible.
inline CMat interior_block(const CMat& A, int interior_dim) {
    return A.topLeftCorner(interior_dim, interior_dim);
}

/// Truncated canonical pair built from oscillator ladder operators of a
/// reference oscillator (mass, omega_ref). The canonical commutation relation
/// [q, p] = i*hbar holds exactly except in the last diagonal entry, hence the
/// interior subspace of dimension dim - 2 by default.
struct CanonicalPair {
    CMat q_op;
    CMat p_op;
    int interior_dim = 0;
};

inline CanonicalPair build_canonical_pair(int dim, double hbar, double mass, double omega_ref) {
    if (dim < 8) throw validation_error("build_canonical_pair: need dim >= 8");
    if (hbar <= 0.0 || mass <= 0.0 || omega_ref <= 0.0)
        throw validation_error("build_canonical_pair: hbar, mass, omega_ref must be positive");
    const double s = std::sqrt(hbar / (2.0 * mass * omega_ref));
    const double c = std::sqrt(hbar * mass * omega_ref / 2.0);
    CMat q = CMat::Zero(dim, dim), p = CMat::Zero(dim, dim);
    for (int n = 0; n + 1 < dim; ++n) {
        const double r = std::sqrt(n + 1.0);
        q(n, n + 1) = s * r;
        q(n + 1, n) = s * r;
        p(n, n + 1) = std::complex<double>(0.0, -c * r);
        p(n + 1, n) = std::complex<double>(0.0, c * r);
    }
    return CanonicalPair{std::move(q), std::move(p), dim - 2};
}

/// Finite-dimensional canonical system: operators, Hamiltonian closure, and
/// the interior bookkeeping that gates truncation artifacts.
struct QuantumSystem {
    std::string name;
    int dim = 0;
    double hbar = 1.0;
    int interior_dim = 0;
    CMat q_op;
    CMat p_op;
    std::function<CMat(double)> hamiltonian;
    bool time_dependent = false;
    double drive_period = 0.0;  // 0 when not periodic

    void check_ccr(double tol = 1e-10) const {
        const CMat ccr = commutator(q_op, p_op) -
                         std::complex<double>(0.0, hbar) * CMat::Identity(dim, dim);
        const double err = interior_block(ccr, interior_dim).cwiseAbs().maxCoeff();
        if (err > tol)
            throw validation_error("QuantumSystem: CCR violated on interior subspace (err = " +
                                   std::to_string(err) + ")");
    }
};

namespace quantum {

inline QuantumSystem harmonic(int dim, double hbar, double mass, double k) {
    if (k <= 0.0) throw validation_error("quantum harmonic: need k > 0");
    const double omega = std::sqrt(k / mass);
    auto pair = build_canonical_pair(dim, hbar, mass, omega);
    QuantumSystem sys;
    sys.name = "harmonic";
    sys.dim = dim;
    sys.hbar = hbar;
    sys.interior_dim = pair.interior_dim;
    sys.q_op = std::move(pair.q_op);
    sys.p_op = std::move(pair.p_op);
    CMat h = sys.p_op * sys.p_op / (2.0 * mass) + 0.5 * k * sys.q_op * sys.q_op;
    sys.hamiltonian = [h = std::move(h)](double) { return h; };
    return sys;
}

inline QuantumSystem free_particle(int dim, double hbar, double mass, double omega_ref) {
    auto pair = build_canonical_pair(dim, hbar, mass, omega_ref);
    QuantumSystem sys;
    sys.name = "free";
    sys.dim = dim;
    sys.hbar = hbar;
    sys.interior_dim = pair.interior_dim;
    sys.q_op = std::move(pair.q_op);
    sys.p_op = std::move(pair.p_op);
    CMat h = sys.p_op * sys.p_op / (2.0 * mass);
    sys.hamiltonian = [h = std::move(h)](double) { return h; };
    return sys;
}

/// H(t) = p^2/2m - a q^2 + b q^4 + eps q cos(omega t), the quantum testbed
/// for the chaos comparison.
inline QuantumSystem double_well_driven(int dim, double hbar, double mass, double a, double b,
                                        double eps, double omega, double omega_ref) {
    auto pair = build_canonical_pair(dim, hbar, mass, omega_ref);
    QuantumSystem sys;
    sys.name = "double_well_driven";
    sys.dim = dim;
    sys.hbar = hbar;
    sys.interior_dim = pair.interior_dim;
    sys.q_op = std::move(pair.q_op);
    sys.p_op = std::move(pair.p_op);
    CMat q2 = sys.q_op * sys.q_op;
    CMat h0 = sys.p_op * sys.p_op / (2.0 * mass) - a * q2 + b * q2 * q2;
    sys.time_dependent = eps != 0.0;
    sys.drive_period = omega > 0.0 ? 2.0 * M_PI / omega : 0.0;
    sys.hamiltonian = [h0 = std::move(h0), q = sys.q_op, eps, omega](double t) {
        if (eps == 0.0) return h0;
        return CMat(h0 + (eps * std::cos(omega * t)) * q);
    };
    return sys;
}

}  // namespace quantum

/// Density operator with the usual sanity checks.
struct QuantumState {
    CMat rho;

    static QuantumState pure(const CVec& psi) {
        const double n2 = psi.squaredNorm();
        if (!(n2 > 0.0)) throw validation_error("QuantumState: zero vector");
        QuantumState st;
        st.rho = psi * psi.adjoint() / n2;
        return st;
    }

    static QuantumState from_density(CMat rho, double tol = 1e-12) {
        if (hermiticity_error(rho) > tol)
            throw validation_error("QuantumState: density operator not Hermitian");
        const double tr = rho.trace().real();
        if (std::abs(tr - 1.0) > tol)
            throw validation_error("QuantumState: trace must be 1");
        Eigen::SelfAdjointEigenSolver<CMat> es(rho);
        if (es.eigenvalues().minCoeff() < -tol)
            throw validation_error("QuantumState: density operator not positive semidefinite");
        QuantumState st;
        st.rho = std::move(rho);
        return st;
    }

    double expectation(const CMat& A) const { return (A * rho).trace().real(); }

    double variance(const CMat& A) const {
        const double mean = expectation(A);
        const double second = expectation(CMat(A * A));
        return std::max(0.0, second - mean * mean);
    }
};

/// Lowest eigenvector of H(t0) as a pure state vector.
inline CVec ground_state_vector(const QuantumSystem& sys, double t0 = 0.0) {
    Eigen::SelfAdjointEigenSolver<CMat> es(sys.hamiltonian(t0));
    return es.eigenvectors().col(0);
}

namespace detail {

inline CMat step_unitary(const CMat& h, double dt, double hbar) {
    if (hermiticity_error(h) > 1e-10)
        throw numeric_error("propagator: Hamiltonian sample is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    const auto& lam = es.eigenvalues();
    CVec phases(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        phases(i) = std::exp(std::complex<double>(0.0, -lam(i) * dt / hbar));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Unitary evolution operator from 0 to t. Time-independent Hamiltonians are
/// exponentiated exactly through their spectral decomposition; time-dependent
/// ones use an ordered product of midpoint-sampled step unitaries.
inline CMat propagator(const QuantumSystem& sys, double t, int steps = 1) {
    if (!sys.time_dependent) return detail::step_unitary(sys.hamiltonian(0.0), t, sys.hbar);
    if (steps < 1) throw validation_error("propagator: need steps >= 1");
    const double dt = t / steps;
    CMat u = CMat::Identity(sys.dim, sys.dim);
    for (int k = 0; k < steps; ++k) {
        const double t_mid = (k + 0.5) * dt;
        u = detail::step_unitary(sys.hamiltonian(t_mid), dt, sys.hbar) * u;
    }
    return u;
}

/// Heisenberg conjugation A -> U^dag A U. Rejects clearly non-unitary input.
inline CMat heisenberg_operator(const CMat& U, const CMat& A, double unitarity_tol = 1e-8) {
    if (unitarity_error(U) > unitarity_tol)
        throw validation_error("heisenberg_operator: U is not unitary within tolerance");
    return U.adjoint() * A * U;
}

/// The 2x2 block of Hermitian operators obtained from commutators of
/// Heisenberg-evolved canonical operators with the fixed initial ones,
/// scaled by -i/hbar. Its expectation in any state is the quantum
/// counterpart of the classical sensitivity matrix.
struct QuantumSensitivity {
    CMat block[2][2];
    double t = 0.0;
    double hbar = 1.0;
    int interior_dim = 0;

    double max_hermiticity_error() const {
        double e = 0.0;
        for (const auto& row : block)
            for (const auto& b : row)
                e = std::max(e, hermiticity_error(interior_block(b, interior_dim)));
        return e;
    }
};

inline QuantumSensitivity sensitivity_operator(const QuantumSystem& sys, double t, int steps = 1,
                                               double hermiticity_tol = 1e-10) {
    const CMat u = propagator(sys, t, steps);
    const CMat qt = u.adjoint() * sys.q_op * u;
    const CMat pt = u.adjoint() * sys.p_op * u;
    const std::complex<double> scale(0.0, -1.0 / sys.hbar);
    QuantumSensitivity s;
    s.t = t;
    s.hbar = sys.hbar;
    s.interior_dim = sys.interior_dim;
    s.block[0][0] = scale * commutator(qt, sys.p_op);
    s.block[0][1] = -scale * commutator(qt, sys.q_op);
    s.block[1][0] = scale * commutator(pt, sys.p_op);
    s.block[1][1] = -scale * commutator(pt, sys.q_op);
    const double herm = s.max_hermiticity_error();
    if (herm > hermiticity_tol)
        throw numeric_error("sensitivity_operator: block not Hermitian on the interior "
                            "subspace (err = " + std::to_string(herm) + ")");
    return s;
}

struct SensitivityExpectation {
    Eigen::Matrix2d value;
    double max_imag_residue = 0.0;
    bool truncation_warning = false;  // imaginary residue above 1e-8
};

/// Entrywise trace of the sensitivity blocks against a state. The result is
/// real up to truncation artifacts; the imaginary residue is reported and
/// flagged when it exceeds 1e-8.
inline SensitivityExpectation sensitivity_expectation(const QuantumSensitivity& sens,
                                                      const QuantumState& state) {
    if (state.rho.rows() != sens.block[0][0].rows())
        throw validation_error("sensitivity_expectation: dimension mismatch");
    SensitivityExpectation out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const std::complex<double> tr = (sens.block[i][j] * state.rho).trace();
            out.value(i, j) = tr.real();
            out.max_imag_residue = std::max(out.max_imag_residue, std::abs(tr.imag()));
        }
    }
    if (out.max_imag_residue > 1e-10) {
        if (out.max_imag_residue > 1e-8) out.truncation_warning = true;
    }
    return out;
}

/// Entrywise bound |T_ij(t)| <= (2/hbar) * spread of the evolved coordinate
/// times spread of the initial one, the generalized uncertainty inequality
/// applied to each commutator pair.
struct BoundReport {
    double t = 0.0;
    Eigen::Matrix2d lhs;
    Eigen::Matrix2d rhs;
    bool satisfied = false;
    double min_margin = 0.0;       // min over entries of rhs - lhs
    double max_imag_residue = 0.0;
    double interior_tail = 0.0;    // state weight outside the interior subspace
    bool truncation_warning = false;
};

inline BoundReport bound_check_from_operators(const QuantumSensitivity& sens, const CMat& qt,
                                              const CMat& pt, const QuantumSystem& sys,
                                              const QuantumState& state) {
    const auto expval = sensitivity_expectation(sens, state);
    const double dq_t = std::sqrt(state.variance(qt));
    const double dp_t = std::sqrt(state.variance(pt));
    const double dq_0 = std::sqrt(state.variance(sys.q_op));
    const double dp_0 = std::sqrt(state.variance(sys.p_op));
    BoundReport rep;
    rep.t = sens.t;
    rep.lhs = expval.value.cwiseAbs();
    rep.max_imag_residue = expval.max_imag_residue;
    rep.interior_tail =
        1.0 - interior_block(state.rho, sens.interior_dim).trace().real();
    rep.truncation_warning = expval.truncation_warning || rep.interior_tail > 1e-8;
    const double two_over_hbar = 2.0 / sys.hbar;
    rep.rhs(0, 0) = two_over_hbar * dq_t * dp_0;
    rep.rhs(0, 1) = two_over_hbar * dq_t * dq_0;
    rep.rhs(1, 0) = two_over_hbar * dp_t * dp_0;
    rep.rhs(1, 1) = two_over_hbar * dp_t * dq_0;
    rep.min_margin = (rep.rhs - rep.lhs).minCoeff();
    rep.satisfied = (rep.lhs.array() <= rep.rhs.array() * (1.0 + 1e-10)).all();
    return rep;
}

inline BoundReport bound_check(const QuantumSystem& sys, const QuantumState& state, double t,
                               int steps = 1) {
    const CMat u = propagator(sys, t, steps);
    const CMat qt = u.adjoint() * sys.q_op * u;
    const CMat pt = u.adjoint() * sys.p_op * u;
    const std::complex<double> scale(0.0, -1.0 / sys.hbar);
    QuantumSensitivity sens;
    sens.t = t;
    sens.hbar = sys.hbar;
    sens.interior_dim = sys.interior_dim;
    sens.block[0][0] = scale * commutator(qt, sys.p_op);
    sens.block[0][1] = -scale * commutator(qt, sys.q_op);
    sens.block[1][0] = scale * commutator(pt, sys.p_op);
    sens.block[1][1] = -scale * commutator(pt, sys.q_op);
    return bound_check_from_operators(sens, qt, pt, sys, state);
}

/// Least-squares slope of ln(value) over a time window; the growth-rate
/// diagnostic for the classical/quantum comparison.
inline double growth_rate_fit(std::span<const double> ts, std::span<const double> values,
                              double t_lo, double t_hi) {
    if (ts.size() != values.size())
        throw validation_error("growth_rate_fit: array length mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_lo || ts[i] > t_hi) continue;
        if (!(values[i] > 0.0))
            throw validation_error("growth_rate_fit: values must be positive inside the window");
        xs.push_back(ts[i]);
        ys.push_back(std::log(values[i]));
    }
    if (xs.size() < 4)
        throw validation_error("growth_rate_fit: need at least 4 points in the window");
    return linear_fit_slope(xs, ys);
}

// ---------------------------------------------------------------------------
// Long-run scan for pure states.
//
// For a pure state the expectation of every commutator block reduces to
// inner products of three evolved vectors: psi, q0 psi and p0 psi, since
// tr([q(t), p0] rho) = 2i Im <psi_t | q | (p0 psi)_t>. That turns the long
// driven runs into matrix-vector work after the one-period unitaries are
// cached.

struct QuantumScanSample {
    double t = 0.0;
    Eigen::Matrix2d expectation;  // signed sensitivity expectation
    Eigen::Matrix2d lhs;          // |expectation|
    Eigen::Matrix2d rhs;          // uncertainty products
    bool satisfied = false;
    double min_margin = 0.0;
    double norm_expectation = 0.0;  // Frobenius norm of the expectation block
};

struct QuantumScanResult {
    std::vector<QuantumScanSample> samples;
    bool all_satisfied = true;
    double min_margin = 0.0;
};

/// Evolves a pure state stroboscopically over n_segments segments of length
/// segment_time, emitting one sample per segment boundary (plus t = 0).
/// A periodic drive with segment_time equal to the drive period reuses the
/// same cached step unitaries for every segment.
inline QuantumScanResult sensitivity_scan(const QuantumSystem& sys, const CVec& psi0,
                                          double segment_time, int n_segments,
                                          int steps_per_segment) {
    if (psi0.size() != sys.dim) throw validation_error("sensitivity_scan: state dimension");
    if (n_segments < 1 || steps_per_segment < 1)
        throw validation_error("sensitivity_scan: need positive segment counts");

    // Cached per-step unitaries for one segment; valid for all segments when
    // the Hamiltonian is segment-periodic (or time-independent).
    const double dt = segment_time / steps_per_segment;
    std::vector<CMat> steps;
    steps.reserve(steps_per_segment);
    for (int k = 0; k < steps_per_segment; ++k)
        steps.push_back(detail::step_unitary(sys.hamiltonian((k + 0.5) * dt), dt, sys.hbar));
    if (sys.time_dependent && sys.drive_period > 0.0) {
        const double ratio = segment_time / sys.drive_period;
        if (std::abs(ratio - std::round(ratio)) > 1e-9)
            throw validation_error("sensitivity_scan: segment_time must be a whole number of "
                                   "drive periods for a periodic drive");
    }

    CVec a = psi0.normalized();
    CVec b = sys.q_op * a;
    CVec c = sys.p_op * a;
    const double dq0 = std::sqrt(std::max(0.0, b.squaredNorm() - std::pow((a.dot(b)).real(), 2)));
    const double dp0 = std::sqrt(std::max(0.0, c.squaredNorm() - std::pow((a.dot(c)).real(), 2)));

    QuantumScanResult out;
    out.min_margin = std::numeric_limits<double>::infinity();
    const double two_over_hbar = 2.0 / sys.hbar;

    auto emit = [&](double t) {
        const CVec qa = sys.q_op * a;
        const CVec pa = sys.p_op * a;
        QuantumScanSample s;
        s.t = t;
        s.expectation(0, 0) = two_over_hbar * (qa.dot(c)).imag();
        s.expectation(0, 1) = -two_over_hbar * (qa.dot(b)).imag();
        s.expectation(1, 0) = two_over_hbar * (pa.dot(c)).imag();
        s.expectation(1, 1) = -two_over_hbar * (pa.dot(b)).imag();
        const double mean_q = (a.dot(qa)).real();
        const double mean_p = (a.dot(pa)).real();
        const double dq_t = std::sqrt(std::max(0.0, qa.squaredNorm() - mean_q * mean_q));
        const double dp_t = std::sqrt(std::max(0.0, pa.squaredNorm() - mean_p * mean_p));
        s.lhs = s.expectation.cwiseAbs();
        s.rhs(0, 0) = two_over_hbar * dq_t * dp0;
        s.rhs(0, 1) = two_over_hbar * dq_t * dq0;
        s.rhs(1, 0) = two_over_hbar * dp_t * dp0;
        s.rhs(1, 1) = two_over_hbar * dp_t * dq0;
        s.min_margin = (s.rhs - s.lhs).minCoeff();
        s.satisfied = (s.lhs.array() <= s.rhs.array() * (1.0 + 1e-10)).all();
        s.norm_expectation = s.expectation.norm();
        out.all_satisfied = out.all_satisfied && s.satisfied;
        out.min_margin = std::min(out.min_margin, s.min_margin);
        out.samples.push_back(std::move(s));
    };

    emit(0.0);
    for (int seg = 1; seg <= n_segments; ++seg) {
        for (const auto& u : steps) {
            a = u * a;
            b = u * b;
            c = u * c;
        }
        emit(seg * segment_time);
    }
    return out;
}

}  // namespace dynp
