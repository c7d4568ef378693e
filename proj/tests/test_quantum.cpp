#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "dynpictures/quantum.hpp"

using namespace dynp;

namespace {
constexpr double kHbar = 1.0;
}

TEST_CASE("canonical pair construction") {
    SECTION("ladder matrix elements") {
        const double mass = 1.3, omega = 0.8;
        const auto pair = build_canonical_pair(8, kHbar, mass, omega);
        const double s = std::sqrt(kHbar / (2 * mass * omega));
        const double c = std::sqrt(kHbar * mass * omega / 2);
        CHECK(pair.q_op(0, 1).real() == Catch::Approx(s));
        CHECK(pair.q_op(1, 0).real() == Catch::Approx(s));
        CHECK(pair.p_op(0, 1).imag() == Catch::Approx(-c));
        CHECK(pair.p_op(1, 0).imag() == Catch::Approx(c));
        CHECK(pair.q_op(1, 2).real() == Catch::Approx(s * std::sqrt(2.0)));
        CHECK(pair.interior_dim == 6);
    }

    SECTION("hermiticity is exact") {
        const auto pair = build_canonical_pair(64, kHbar, 1.0, 1.0);
        CHECK(hermiticity_error(pair.q_op) < 1e-15);
        CHECK(hermiticity_error(pair.p_op) < 1e-15);
    }

    SECTION("commutator is i hbar except in the corner") {
        const int dim = 32;
        const auto pair = build_canonical_pair(dim, kHbar, 1.0, 1.0);
        const CMat ccr = commutator(pair.q_op, pair.p_op);
        for (int k = 0; k < dim - 1; ++k) {
            CHECK(std::abs(ccr(k, k) - std::complex<double>(0, kHbar)) < 1e-13);
        }
        CHECK(std::abs(ccr(dim - 1, dim - 1).imag() - kHbar) > 1.0);  // truncation artifact
    }

    SECTION("dimension floor") {
        CHECK_THROWS_AS(build_canonical_pair(4, kHbar, 1.0, 1.0), validation_error);
    }
}

TEST_CASE("quantum system CCR gate") {
    const auto sys = quantum::harmonic(32, kHbar, 1.0, 1.0);
    CHECK_NOTHROW(sys.check_ccr(1e-10));
}

TEST_CASE("propagator") {
    SECTION("t = 0 is the identity") {
        const auto sys = quantum::harmonic(16, kHbar, 1.0, 1.0);
        const CMat u = propagator(sys, 0.0);
        CHECK((u - CMat::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-14);
    }

    SECTION("harmonic eigenphases on number states") {
        const int dim = 32;
        const double omega = 1.0, t = 0.7;
        const auto sys = quantum::harmonic(dim, kHbar, 1.0, omega * omega);
        const CMat u = propagator(sys, t);
        for (int n = 0; n < dim - 1; ++n) {
            const std::complex<double> expected =
                std::exp(std::complex<double>(0, -omega * (n + 0.5) * t));
            CHECK(std::abs(u(n, n) - expected) < 1e-8);
        }
        CHECK(unitarity_error(u) < 1e-10);
    }

    SECTION("composition over subintervals") {
        const auto sys = quantum::double_well_driven(24, kHbar, 1.0, 1.0, 0.25, 0.3, 1.0, 2.0);
        const CMat u2 = propagator(sys, 1.0, 64);
        const CMat u11 = propagator(sys, 0.5, 32);
        // second half restarted at t=0.5 via direct stepping
        CMat u12 = CMat::Identity(24, 24);
        const double dt = 0.5 / 32;
        for (int k = 0; k < 32; ++k) {
            const double tm = 0.5 + (k + 0.5) * dt;
            u12 = detail::step_unitary(sys.hamiltonian(tm), dt, kHbar) * u12;
        }
        CHECK(((u12 * u11) - u2).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(unitarity_error(u2) < 1e-10);
    }

    SECTION("non-hermitian hamiltonian sample is rejected") {
        QuantumSystem sys = quantum::harmonic(16, kHbar, 1.0, 1.0);
        sys.time_dependent = true;
        sys.hamiltonian = [](double) {
            CMat h = CMat::Zero(16, 16);
            h(0, 1) = 1.0;  // not hermitian
            return h;
        };
        CHECK_THROWS_AS(propagator(sys, 1.0, 4), numeric_error);
    }
}

TEST_CASE("heisenberg conjugation") {
    const auto sys = quantum::harmonic(48, kHbar, 1.0, 1.0);

    SECTION("identity leaves operators alone") {
        const CMat a = sys.q_op * sys.q_op;
        const CMat at = heisenberg_operator(CMat::Identity(48, 48), a);
        CHECK((at - a).cwiseAbs().maxCoeff() < 1e-14);
    }

    SECTION("harmonic q(t) rotates into p") {
        const double t = 1.3, mass = 1.0, omega = 1.0;
        const CMat u = propagator(sys, t);
        const CMat qt = heisenberg_operator(u, sys.q_op);
        const CMat expected = std::cos(omega * t) * sys.q_op +
                              (std::sin(omega * t) / (mass * omega)) * sys.p_op;
        CHECK(interior_block(qt - expected, 40).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(hermiticity_error(qt) < 1e-12);
    }

    SECTION("spectrum is preserved") {
        const CMat u = propagator(sys, 0.9);
        const CMat a = sys.q_op;
        Eigen::SelfAdjointEigenSolver<CMat> ea(a), eb(heisenberg_operator(u, a));
        CHECK((ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
    }

    SECTION("clearly non-unitary input is rejected") {
        CHECK_THROWS_AS(heisenberg_operator(2.0 * CMat::Identity(48, 48), sys.q_op),
                        validation_error);
    }
}

TEST_CASE("sensitivity operator closed forms") {
    SECTION("t = 0 expectation is the identity for any state") {
        const auto sys = quantum::double_well_driven(32, kHbar, 1.0, 1.0, 0.25, 0.3, 1.0, 2.0);
        const auto sens = sensitivity_operator(sys, 0.0, 1);
        // pure ground-ish state and a mixed state
        const auto pure = QuantumState::pure(ground_state_vector(sys));
        CMat mixed = CMat::Zero(32, 32);
        mixed(0, 0) = 0.6;
        mixed(3, 3) = 0.4;
        const auto mixed_state = QuantumState::from_density(mixed);
        for (const auto& st : {pure, mixed_state}) {
            const auto e = sensitivity_expectation(sens, st);
            CHECK((e.value - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(e.max_imag_residue < 1e-10);
        }
    }

    SECTION("free particle gives the classical shear on the interior") {
        const int dim = 128;
        const double t = 0.4, mass = 1.0;
        const auto sys = quantum::free_particle(dim, kHbar, mass, 1.0);
        const auto sens = sensitivity_operator(sys, t, 1);
        const int d_int = 64;  // truncation noise reaches deeper than for bound motion
        const CMat id = CMat::Identity(dim, dim);
        CHECK(interior_block(sens.block[0][0] - id, d_int).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(interior_block(sens.block[0][1] - (t / mass) * id, d_int).cwiseAbs().maxCoeff() <
              1e-8);
        CHECK(interior_block(sens.block[1][0], d_int).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(interior_block(sens.block[1][1] - id, d_int).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(sens.max_hermiticity_error() < 1e-10);
    }

    SECTION("harmonic expectation is the rotation matrix, state independent") {
        const int dim = 64;
        const double mass = 1.0, omega = 1.0;
        const auto sys = quantum::harmonic(dim, kHbar, mass, mass * omega * omega);
        for (double t : {0.5, 2.0, 7.0}) {
            const auto sens = sensitivity_operator(sys, t, 1);
            Eigen::Matrix2d expected;
            expected << std::cos(omega * t), std::sin(omega * t) / (mass * omega),
                -mass * omega * std::sin(omega * t), std::cos(omega * t);

            const auto ground = QuantumState::pure(ground_state_vector(sys));
            CVec excited = CVec::Zero(dim);
            excited(2) = 1.0 / std::sqrt(2.0);
            excited(5) = std::complex<double>(0.5, 0.5);
            const auto other = QuantumState::pure(excited);
            for (const auto& st : {ground, other}) {
                const auto e = sensitivity_expectation(sens, st);
                CHECK((e.value - expected).cwiseAbs().maxCoeff() < 1e-8);
            }
        }
    }
}

TEST_CASE("bound check on the harmonic ground state") {
    const int dim = 64;
    const double mass = 1.0, omega = 1.0;
    const auto sys = quantum::harmonic(dim, kHbar, mass, mass * omega * omega);
    const auto ground = QuantumState::pure(ground_state_vector(sys));
    for (double t : {0.0, 0.8, M_PI, 5.0}) {
        const auto rep = bound_check(sys, ground, t, 1);
        CHECK(rep.satisfied);
        // minimum-uncertainty state: rhs_11 = (2/hbar) dq dp = 1 for all t
        CHECK(rep.rhs(0, 0) == Catch::Approx(1.0).margin(1e-10));
        CHECK(rep.lhs(0, 0) == Catch::Approx(std::abs(std::cos(omega * t))).margin(1e-10));
    }
    // saturation at omega t in {0, pi}: lhs_11 == rhs_11
    for (double t : {0.0, M_PI}) {
        const auto rep = bound_check(sys, ground, t, 1);
        CHECK(rep.lhs(0, 0) == Catch::Approx(rep.rhs(0, 0)).margin(1e-9));
    }
}

TEST_CASE("scan matches the operator route") {
    const auto sys = quantum::double_well_driven(32, kHbar, 1.0, 1.0, 0.25, 0.3, 1.0, 2.0);
    const CVec psi0 = ground_state_vector(sys);
    const double period = 2.0 * M_PI;
    const int steps = 32;
    const auto scan = sensitivity_scan(sys, psi0, period, 3, steps);
    REQUIRE(scan.samples.size() == 4);
    const auto state = QuantumState::pure(psi0);
    for (int seg : {1, 3}) {
        const auto rep = bound_check(sys, state, seg * period, seg * steps);
        CHECK((scan.samples[seg].lhs - rep.lhs).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((scan.samples[seg].rhs - rep.rhs).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(scan.samples[seg].satisfied == rep.satisfied);
    }
}

TEST_CASE("scan refuses fractional drive segments") {
    const auto sys = quantum::double_well_driven(16, kHbar, 1.0, 1.0, 0.25, 0.3, 1.0, 2.0);
    const CVec psi0 = ground_state_vector(sys);
    CHECK_THROWS_AS(sensitivity_scan(sys, psi0, 1.0, 2, 8), validation_error);
}

TEST_CASE("quantum state validation") {
    CMat bad = CMat::Zero(4, 4);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(QuantumState::from_density(bad), validation_error);

    CMat not_unit_trace = CMat::Identity(4, 4);
    CHECK_THROWS_AS(QuantumState::from_density(not_unit_trace), validation_error);

    CMat negative = CMat::Zero(4, 4);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(QuantumState::from_density(negative), validation_error);
}

TEST_CASE("growth rate fit") {
    std::vector<double> ts, vals;
    for (int i = 0; i <= 40; ++i) {
        ts.push_back(0.25 * i);
        vals.push_back(std::exp(0.7 * 0.25 * i));
    }
    CHECK(growth_rate_fit(ts, vals, 0.0, 10.0) == Catch::Approx(0.7).margin(1e-10));

    std::vector<double> flat(ts.size(), 2.5);
    CHECK(growth_rate_fit(ts, flat, 0.0, 10.0) == Catch::Approx(0.0).margin(1e-12));

    CHECK_THROWS_AS(growth_rate_fit(ts, vals, 9.9, 10.0), validation_error);
    std::vector<double> with_zero = vals;
    with_zero[20] = 0.0;
    CHECK_THROWS_AS(growth_rate_fit(ts, with_zero, 0.0, 10.0), validation_error);
}

TEST_CASE("truncation gate on a static model") {
    // doubling the dimension must leave interior quantities unchanged
    const auto small = quantum::harmonic(24, kHbar, 1.0, 1.0);
    const auto big = quantum::harmonic(48, kHbar, 1.0, 1.0);
    const auto scan_small = sensitivity_scan(small, ground_state_vector(small), M_PI, 6, 1);
    const auto scan_big = sensitivity_scan(big, ground_state_vector(big), M_PI, 6, 1);
    double change = 0.0;
    for (std::size_t k = 0; k < scan_small.samples.size(); ++k) {
        change = std::max(change, (scan_small.samples[k].lhs - scan_big.samples[k].lhs)
                                      .cwiseAbs()
                                      .maxCoeff());
        change = std::max(change, (scan_small.samples[k].rhs - scan_big.samples[k].rhs)
                                      .cwiseAbs()
                                      .maxCoeff());
    }
    CHECK(change < 1e-4);
}
