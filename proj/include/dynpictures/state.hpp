#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dynpictures/integrate.hpp"
#include "dynpictures/model.hpp"
#include "dynpictures/numerics.hpp"

namespace dynp {

using Cplx = std::complex<double>;

/// A dynamical quantity A(q, p); time independent by convention, the pictures
/// decide where the time dependence lives.
struct Observable {
    std::string name;
    std::function<double(const Vec& q, const Vec& p)> eval;

    double operator()(const PhasePoint& z) const { return eval(z.q, z.p); }
};

namespace observables {
inline Observable position() {
    return {"q", [](const Vec& q, const Vec&) { return q(0); }};
}
inline Observable momentum() {
    return {"p", [](const Vec&, const Vec& p) { return p(0); }};
}
inline Observable position_squared() {
    return {"q2", [](const Vec& q, const Vec&) { return q(0) * q(0); }};
}
inline Observable energy(const HamiltonianModel& model, double t = 0.0) {
    return {"H", [&model, t](const Vec& q, const Vec& p) { return model.value(q, p, t); }};
}
}  // namespace observables

/// Uniform tensor grid over a rectangular box in the (q, p) plane. Grid
/// states are restricted to one degree of freedom; they exist for residual
/// diagnostics, marginals and the operator-series evolution, not as the
/// primary expectation path.
struct PhaseGrid {
    double q_min = 0.0, p_min = 0.0;
    double dq = 0.0, dp = 0.0;
    int nq = 0, np = 0;

    PhaseGrid() = default;
    PhaseGrid(double qmin, double qmax, int nq_, double pmin, double pmax, int np_)
        : q_min(qmin), p_min(pmin), nq(nq_), np(np_) {
        if (nq < 2 || np < 2) throw validation_error("PhaseGrid: need at least 2x2 nodes");
        if (!(qmax > qmin) || !(pmax > pmin))
            throw validation_error("PhaseGrid: box must have positive extent");
        dq = (qmax - qmin) / (nq - 1);
        dp = (pmax - pmin) / (np - 1);
    }

    std::size_t size() const { return static_cast<std::size_t>(nq) * np; }
    std::size_t index(int iq, int ip) const { return static_cast<std::size_t>(iq) * np + ip; }
    double q_at(int iq) const { return q_min + iq * dq; }
    double p_at(int ip) const { return p_min + ip * dp; }
    double cell_area() const { return dq * dp; }

    bool same_layout(const PhaseGrid& o) const {
        return nq == o.nq && np == o.np && q_min == o.q_min && p_min == o.p_min && dq == o.dq &&
               dp == o.dp;
    }
};

/// Values on a PhaseGrid with separable Catmull-Rom interpolation. Points
/// outside the box read as zero.
template <typename T>
struct GridData {
    PhaseGrid grid;
    std::vector<T> values;

    GridData() = default;
    GridData(PhaseGrid g, std::vector<T> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw validation_error("GridData: value count does not match grid");
    }

    template <typename F>
    static GridData sample(const PhaseGrid& g, F&& f) {
        std::vector<T> vals(g.size());
        for (int iq = 0; iq < g.nq; ++iq)
            for (int ip = 0; ip < g.np; ++ip) vals[g.index(iq, ip)] = f(g.q_at(iq), g.p_at(ip));
        return GridData(g, std::move(vals));
    }

    T at(int iq, int ip) const {
        if (iq < 0 || iq >= grid.nq || ip < 0 || ip >= grid.np) return T{};
        return values[grid.index(iq, ip)];
    }

    T interpolate(double q, double p) const {
        const double xq = (q - grid.q_min) / grid.dq;
        const double xp = (p - grid.p_min) / grid.dp;
        if (xq < 0.0 || xq > grid.nq - 1 || xp < 0.0 || xp > grid.np - 1) return T{};
        int iq = static_cast<int>(std::floor(xq));
        int ip = static_cast<int>(std::floor(xp));
        iq = std::min(iq, grid.nq - 2);
        ip = std::min(ip, grid.np - 2);
        const double uq = xq - iq, up = xp - ip;
        T cols[4];
        for (int a = 0; a < 4; ++a) {
            const int jq = iq - 1 + a;
            cols[a] = catmull_rom(at(jq, ip - 1), at(jq, ip), at(jq, ip + 1), at(jq, ip + 2), up);
        }
        return catmull_rom(cols[0], cols[1], cols[2], cols[3], uq);
    }

    /// Quadrature of f(value) over the box (midpoint-weighted sum; values are
    /// assumed negligible at the boundary).
    template <typename F>
    double integrate(F&& f) const {
        CompensatedSum s;
        for (const auto& v : values) s.add(f(v));
        return s.value() * grid.cell_area();
    }
};

using GridC = GridData<Cplx>;
using GridR = GridData<double>;

enum class Representation { Ensemble, Grid };

/// Koopman-von Neumann wavefunction phi(q, p): either a weighted ensemble of
/// support points carried by the flow, or a tensor grid for diagnostics.
/// Evolution moves support points and leaves amplitudes and weights alone, so
/// the norm is conserved structurally.
struct KvnWaveFunction {
    Representation rep = Representation::Ensemble;

    std::vector<PhasePoint> points;
    std::vector<Cplx> amplitudes;
    std::vector<double> weights;

    GridC grid;

    static KvnWaveFunction from_ensemble(std::vector<PhasePoint> pts, std::vector<Cplx> amps,
                                         std::vector<double> wts) {
        if (pts.size() != amps.size() || pts.size() != wts.size() || pts.empty())
            throw validation_error("KvnWaveFunction: ensemble arrays must match and be nonempty");
        for (double w : wts)
            if (!(w >= 0.0)) throw validation_error("KvnWaveFunction: weights must be >= 0");
        KvnWaveFunction phi;
        phi.rep = Representation::Ensemble;
        phi.points = std::move(pts);
        phi.amplitudes = std::move(amps);
        phi.weights = std::move(wts);
        if (!(phi.norm2() > 0.0) || !std::isfinite(phi.norm2()))
            throw validation_error("KvnWaveFunction: norm must be finite and positive");
        return phi;
    }

    static KvnWaveFunction from_grid(GridC g) {
        KvnWaveFunction phi;
        phi.rep = Representation::Grid;
        phi.grid = std::move(g);
        if (!(phi.norm2() > 0.0) || !std::isfinite(phi.norm2()))
            throw validation_error("KvnWaveFunction: norm must be finite and positive");
        return phi;
    }

    double norm2() const {
        if (rep == Representation::Ensemble) {
            CompensatedSum s;
            for (std::size_t i = 0; i < points.size(); ++i)
                s.add(weights[i] * std::norm(amplitudes[i]));
            return s.value();
        }
        return grid.integrate([](const Cplx& v) { return std::norm(v); });
    }

    double norm() const { return std::sqrt(norm2()); }
};

/// Classical probability density rho(q, p) >= 0 in the same two
/// representations. Normalization is enforced at construction; evolution
/// never renormalizes, drift is a measured diagnostic.
struct PhaseSpaceDensity {
    Representation rep = Representation::Ensemble;

    std::vector<PhasePoint> points;
    std::vector<double> values;
    std::vector<double> weights;

    GridR grid;

    bool normalized = false;

    static PhaseSpaceDensity from_ensemble(std::vector<PhasePoint> pts, std::vector<double> vals,
                                           std::vector<double> wts, bool normalize = true) {
        if (pts.size() != vals.size() || pts.size() != wts.size() || pts.empty())
            throw validation_error("PhaseSpaceDensity: ensemble arrays must match");
        PhaseSpaceDensity rho;
        rho.rep = Representation::Ensemble;
        rho.points = std::move(pts);
        rho.values = std::move(vals);
        rho.weights = std::move(wts);
        for (std::size_t i = 0; i < rho.values.size(); ++i) {
            if (!(rho.values[i] >= 0.0) || !(rho.weights[i] >= 0.0))
                throw validation_error("PhaseSpaceDensity: values and weights must be >= 0");
        }
        rho.finish(normalize);
        return rho;
    }

    static PhaseSpaceDensity from_grid(GridR g, bool normalize = true) {
        PhaseSpaceDensity rho;
        rho.rep = Representation::Grid;
        rho.grid = std::move(g);
        for (double v : rho.grid.values)
            if (!(v >= 0.0)) throw validation_error("PhaseSpaceDensity: values must be >= 0");
        rho.finish(normalize);
        return rho;
    }

    /// For truncated operator-series evolution, whose intermediate fields can
    /// overshoot below zero at the tails. Skips the sign check and never
    /// rescales, so convergence measurements see the raw field.
    static PhaseSpaceDensity from_grid_unchecked(GridR g) {
        PhaseSpaceDensity rho;
        rho.rep = Representation::Grid;
        rho.grid = std::move(g);
        rho.normalized = std::abs(rho.integral() - 1.0) <= 1e-10;
        return rho;
    }

    double integral() const {
        if (rep == Representation::Ensemble) {
            CompensatedSum s;
            for (std::size_t i = 0; i < values.size(); ++i) s.add(weights[i] * values[i]);
            return s.value();
        }
        return grid.integrate([](double v) { return v; });
    }

    /// Expectation of A against the density via the state's quadrature.
    /// Requires a normalized state unless raw = true.
    double expectation(const Observable& obs, bool raw = false) const {
        if (!raw && !normalized)
            throw validation_error("expectation: density not normalized (pass raw=true to "
                                   "integrate anyway)");
        if (rep == Representation::Ensemble) {
            CompensatedSum s;
            for (std::size_t i = 0; i < points.size(); ++i)
                s.add(weights[i] * values[i] * obs(points[i]));
            return s.value();
        }
        CompensatedSum s;
        Vec q(1), p(1);
        for (int iq = 0; iq < grid.grid.nq; ++iq) {
            q(0) = grid.grid.q_at(iq);
            for (int ip = 0; ip < grid.grid.np; ++ip) {
                p(0) = grid.grid.p_at(ip);
                s.add(grid.values[grid.grid.index(iq, ip)] * obs.eval(q, p));
            }
        }
        return s.value() * grid.grid.cell_area();
    }

    /// Marginal density in q (grid: sum over p; ensemble: not defined here).
    std::vector<double> q_marginal() const {
        if (rep != Representation::Grid)
            throw validation_error("q_marginal: grid representation required");
        std::vector<double> out(grid.grid.nq, 0.0);
        for (int iq = 0; iq < grid.grid.nq; ++iq) {
            CompensatedSum s;
            for (int ip = 0; ip < grid.grid.np; ++ip)
                s.add(grid.values[grid.grid.index(iq, ip)]);
            out[iq] = s.value() * grid.grid.dp;
        }
        return out;
    }

  private:
    void finish(bool normalize) {
        const double total = integral();
        if (!std::isfinite(total) || total <= 0.0)
            throw validation_error("PhaseSpaceDensity: integral must be finite and positive");
        if (normalize) {
            if (rep == Representation::Ensemble)
                for (auto& v : values) v /= total;
            else
                for (auto& v : grid.values) v /= total;
            normalized = true;
        } else {
            normalized = std::abs(total - 1.0) <= 1e-10;
        }
    }
};

/// rho = |phi|^2, pointwise. The integral of the result equals norm2(phi).
inline PhaseSpaceDensity density_of(const KvnWaveFunction& phi) {
    if (phi.rep == Representation::Ensemble) {
        std::vector<double> vals(phi.amplitudes.size());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::norm(phi.amplitudes[i]);
        return PhaseSpaceDensity::from_ensemble(phi.points, std::move(vals), phi.weights,
                                                /*normalize=*/false);
    }
    std::vector<double> vals(phi.grid.values.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::norm(phi.grid.values[i]);
    return PhaseSpaceDensity::from_grid(GridR(phi.grid.grid, std::move(vals)),
                                        /*normalize=*/false);
}

/// Solves the KvN evolution equation by characteristics: ensemble support
/// points ride the flow from time t0 to t1 with amplitudes and weights
/// untouched; grid states are advected semi-Lagrangian style, phi_t(z) =
/// phi_0 evaluated at the inverse-flow preimage of z.
inline KvnWaveFunction evolve_wavefunction(const KvnWaveFunction& phi0,
                                           const HamiltonianModel& model, double t,
                                           const IntegratorConfig& cfg = {}, double t0 = 0.0) {
    if (!std::isfinite(t)) throw validation_error("evolve_wavefunction: t must be finite");
    if (phi0.rep == Representation::Ensemble) {
        KvnWaveFunction phi = phi0;
        for (auto& z : phi.points) z = flow_from(model, z, t0, t, cfg).point;
        return phi;
    }
    GridC out = phi0.grid;
    for (int iq = 0; iq < out.grid.nq; ++iq) {
        for (int ip = 0; ip < out.grid.np; ++ip) {
            const PhasePoint z(out.grid.q_at(iq), out.grid.p_at(ip));
            const PhasePoint z0 = flow_from(model, z, t, t0, cfg).point;
            out.values[out.grid.index(iq, ip)] = phi0.grid.interpolate(z0.q(0), z0.p(0));
        }
    }
    return KvnWaveFunction::from_grid(std::move(out));
}

/// Discrete residual of the transport equation d(rho)/dt = {H, rho} on a
/// time series of grid densities with uniform spacing: centered differences
/// in time and phase space, RMS over interior cells of the interior slices.
inline double liouville_residual(const std::vector<std::pair<double, GridR>>& series,
                                 const HamiltonianModel& model) {
    if (series.size() < 3)
        throw validation_error("liouville_residual: need at least 3 time slices");
    const double dt = series[1].first - series[0].first;
    for (std::size_t k = 1; k < series.size(); ++k) {
        if (std::abs(series[k].first - series[k - 1].first - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw validation_error("liouville_residual: time slices must be uniformly spaced");
        if (!series[k].second.grid.same_layout(series[0].second.grid))
            throw validation_error("liouville_residual: all slices must share one grid");
    }
    const PhaseGrid& g = series[0].second.grid;
    CompensatedSum sum_sq;
    std::size_t count = 0;
    Vec q(1), p(1);
    for (std::size_t k = 1; k + 1 < series.size(); ++k) {
        const GridR& prev = series[k - 1].second;
        const GridR& cur = series[k].second;
        const GridR& next = series[k + 1].second;
        const double t = series[k].first;
        for (int iq = 1; iq + 1 < g.nq; ++iq) {
            q(0) = g.q_at(iq);
            for (int ip = 1; ip + 1 < g.np; ++ip) {
                p(0) = g.p_at(ip);
                const double d_dt =
                    (next.values[g.index(iq, ip)] - prev.values[g.index(iq, ip)]) / (2.0 * dt);
                const double drho_dq =
                    (cur.at(iq + 1, ip) - cur.at(iq - 1, ip)) / (2.0 * g.dq);
                const double drho_dp =
                    (cur.at(iq, ip + 1) - cur.at(iq, ip - 1)) / (2.0 * g.dp);
                const Vec hq = model.grad_q(q, p, t);
                const Vec hp = model.grad_p(q, p, t);
                const double bracket = hq(0) * drho_dp - hp(0) * drho_dq;
                const double r = d_dt - bracket;
                sum_sq.add(r * r);
                ++count;
            }
        }
    }
    if (count == 0) throw validation_error("liouville_residual: grid too small");
    return std::sqrt(sum_sq.value() / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// Gaussian state builders (one degree of freedom).

struct GaussianSpec {
    double mean_q = 0.0;
    double mean_p = 0.0;
    double sigma_q = 1.0;
    double sigma_p = 1.0;

    double density(double q, double p) const {
        const double xq = (q - mean_q) / sigma_q;
        const double xp = (p - mean_p) / sigma_p;
        return std::exp(-0.5 * (xq * xq + xp * xp)) / (2.0 * M_PI * sigma_q * sigma_p);
    }
};

/// Tensor Gauss-Hermite ensemble for a Gaussian phase-space density. The
/// weights carry the phase-space measure, so expectations of smooth
/// observables converge spectrally in nodes_per_dim.
inline PhaseSpaceDensity gaussian_ensemble_density(const GaussianSpec& gs, int nodes_per_dim) {
    if (!(gs.sigma_q > 0.0) || !(gs.sigma_p > 0.0))
        throw validation_error("gaussian state: sigmas must be positive");
    const QuadratureRule rule = gauss_hermite(nodes_per_dim);
    std::vector<PhasePoint> pts;
    std::vector<double> vals, wts;
    pts.reserve(rule.nodes.size() * rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double q = gs.mean_q + std::sqrt(2.0) * gs.sigma_q * rule.nodes[i];
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double p = gs.mean_p + std::sqrt(2.0) * gs.sigma_p * rule.nodes[j];
            const double xi = rule.nodes[i], xj = rule.nodes[j];
            const double w = rule.weights[i] * rule.weights[j] * std::exp(xi * xi + xj * xj) *
                             2.0 * gs.sigma_q * gs.sigma_p;
            pts.emplace_back(q, p);
            vals.push_back(gs.density(q, p));
            wts.push_back(w);
        }
    }
    return PhaseSpaceDensity::from_ensemble(std::move(pts), std::move(vals), std::move(wts));
}

inline KvnWaveFunction gaussian_ensemble_wavefunction(const GaussianSpec& gs, int nodes_per_dim) {
    PhaseSpaceDensity rho = gaussian_ensemble_density(gs, nodes_per_dim);
    std::vector<Cplx> amps(rho.values.size());
    for (std::size_t i = 0; i < amps.size(); ++i) amps[i] = std::sqrt(rho.values[i]);
    return KvnWaveFunction::from_ensemble(rho.points, std::move(amps), rho.weights);
}

inline GridR gaussian_grid_density(const GaussianSpec& gs, int nq, int np, double half_width = 6.0,
                                   double pad_q = 0.0, double pad_p = 0.0) {
    const double aq = gs.mean_q - half_width * gs.sigma_q - pad_q;
    const double bq = gs.mean_q + half_width * gs.sigma_q + pad_q;
    const double ap = gs.mean_p - half_width * gs.sigma_p - pad_p;
    const double bp = gs.mean_p + half_width * gs.sigma_p + pad_p;
    const PhaseGrid g(aq, bq, nq, ap, bp, np);
    return GridR::sample(g, [&](double q, double p) { return gs.density(q, p); });
}

/// Ensemble for f(q) * delta(p - p0): quadrature nodes over the q profile all
/// share one exact momentum value. Used by the constant-force closed form.
inline PhaseSpaceDensity line_density(const std::function<double(double)>& f, double q_lo,
                                      double q_hi, int nodes, double p0) {
    const QuadratureRule rule = gauss_legendre(nodes, q_lo, q_hi);
    std::vector<PhasePoint> pts;
    std::vector<double> vals, wts;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        pts.emplace_back(rule.nodes[i], p0);
        vals.push_back(std::max(0.0, f(rule.nodes[i])));
        wts.push_back(rule.weights[i]);
    }
    return PhaseSpaceDensity::from_ensemble(std::move(pts), std::move(vals), std::move(wts));
}

}  // namespace dynp
