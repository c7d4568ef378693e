#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "dynpictures/phase.hpp"

namespace dynp {

/// Step size for one-sided numeric differentiation, h = eps^{1/3} * scale.
inline double fd_step(double scale = 1.0) {
    static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
    return h0 * std::max(1.0, std::abs(scale));
}

/// Neumaier-compensated sum over a fixed index order. Deterministic for a
/// given input order regardless of magnitudes.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Hermite rule: integrates f against exp(-x^2) on the real line,
/// exact for polynomials up to degree 2n-1. Nodes via Golub-Welsch.
inline QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw validation_error("gauss_hermite: need n >= 1");
    Mat jacobi = Mat::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    const double mu0 = std::sqrt(M_PI);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

/// Gauss-Legendre rule on [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw validation_error("gauss_legendre: need n >= 1");
    Mat jacobi = Mat::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double off = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = 2.0 * half * v0 * v0;
    }
    return rule;
}

/// Least-squares slope of y vs x.
inline double linear_fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("linear_fit_slope: need matching arrays of length >= 2");
    const auto n = static_cast<double>(x.size());
    CompensatedSum sx, sy, sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
        sxx.add(x[i] * x[i]);
        sxy.add(x[i] * y[i]);
    }
    const double denom = n * sxx.value() - sx.value() * sx.value();
    if (denom == 0.0) throw numeric_error("linear_fit_slope: degenerate abscissae");
    return (n * sxy.value() - sx.value() * sy.value()) / denom;
}

/// Catmull-Rom interpolation through four equally spaced samples; u in [0,1]
/// measures the position between f1 and f2.
template <typename T>
T catmull_rom(T f0, T f1, T f2, T f3, double u) {
    const double u2 = u * u, u3 = u2 * u;
    return f1 * (1.0) + (f2 - f0) * (0.5 * u) + (f0 * 2.0 - f1 * 5.0 + f2 * 4.0 - f3) * (0.5 * u2) +
           (f1 * 3.0 - f0 - f2 * 3.0 + f3) * (0.5 * u3);
}

}  // namespace dynp
