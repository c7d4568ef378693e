#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad user input: dimension mismatches, malformed configs, invalid parameters.
struct validation_error : error {
    using error::error;
};

/// Numerical failure during a computation (step underflow, NaN, rank loss).
struct numeric_error : error {
    using error::error;
};

inline bool all_finite(const Vec& v) {
    return v.allFinite();
}

/// A point (q, p) in 2N-dimensional phase space.
struct PhasePoint {
    Vec q;
    Vec p;

    PhasePoint() = default;

    PhasePoint(Vec q_, Vec p_) : q(std::move(q_)), p(std::move(p_)) {
        if (q.size() != p.size())
            throw validation_error("PhasePoint: q and p must have equal length");
        if (!all_finite(q) || !all_finite(p))
            throw validation_error("PhasePoint: entries must be finite");
    }

    /// 1D convenience constructor.
    PhasePoint(double q1, double p1) : q(1), p(1) {
        q(0) = q1;
        p(0) = p1;
    }

    int dof() const { return static_cast<int>(q.size()); }

    /// Flat (q..., p...) vector of length 2N.
    Vec flat() const {
        Vec z(2 * dof());
        z.head(dof()) = q;
        z.tail(dof()) = p;
        return z;
    }

    static PhasePoint from_flat(const Vec& z) {
        const auto n = z.size() / 2;
        return PhasePoint(z.head(n), z.tail(n));
    }

    bool finite() const { return all_finite(q) && all_finite(p); }
};

inline double distance(const PhasePoint& a, const PhasePoint& b) {
    return std::sqrt((a.q - b.q).squaredNorm() + (a.p - b.p).squaredNorm());
}

}  // namespace dynp
