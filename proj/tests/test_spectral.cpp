#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dpim/quad_system.hpp"
#include "dpim/spectral.hpp"

#include <Eigen/LU>
#include <cmath>

using namespace dpim;

namespace {

ForcingSpec duffing_forcing(double Omega, double kappa) {
    ForcingSpec f;
    f.Fc = Vec::Zero(3);
    f.Fc(1) = 1.0;
    f.omega = Omega;
    f.kappa = kappa;
    return f;
}

}  // namespace

TEST_CASE("conservative duffing spectrum") {
    const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
    const auto pairs = eigenpairs(sys);
    REQUIRE(pairs.size() == 2);   // the algebraic row sheds its infinite mode
    CHECK(std::abs(pairs[0].lambda - cplx(0.0, 1.5)) < 1e-12);
    CHECK(std::abs(pairs[1].lambda - cplx(0.0, -1.5)) < 1e-12);
    for (const auto& p : pairs) {
        const double res = (sys.A() * p.Y - p.lambda * sys.B() * p.Y).norm();
        CHECK(res <= 1e-10 * (sys.A() * p.Y).norm());
        const double lres = (p.X.adjoint() * sys.A() - p.lambda * (p.X.adjoint() * sys.B())).norm();
        CHECK(lres <= 1e-10 * (p.X.adjoint() * sys.A()).norm());
    }
}

TEST_CASE("damped duffing eigenvalue closed form") {
    const double omega = 1.5, xi = 0.02;
    const auto pairs = eigenpairs(build_duffing(omega, xi, 1.0));
    const cplx expected(-xi * omega, omega * std::sqrt(1.0 - xi * xi));
    bool found = false;
    for (const auto& p : pairs)
        if (std::abs(p.lambda - expected) < 1e-10) found = true;
    CHECK(found);
}

TEST_CASE("two dof spectrum and master selection") {
    const QuadSystem sys = build_two_dof(1.0, 1.57, 0.0, 0.0, 1.0, 1.0);
    const auto pairs = eigenpairs(sys);
    REQUIRE(pairs.size() == 4);
    CHECK(std::abs(pairs[0].lambda.imag()) == doctest::Approx(1.0));
    CHECK(std::abs(pairs[2].lambda.imag()) == doctest::Approx(1.57));

    const MasterMode master = select_master(pairs, 1.0);
    CHECK(master.lambda.imag() == doctest::Approx(1.0));
    CHECK_THROWS(select_master(pairs, 10.0));
}

TEST_CASE("biorthogonality after normalisation") {
    const QuadSystem sys = build_two_dof(1.0, 1.57, 0.01, 0.03, 1.0, 1.0);
    const auto pairs = eigenpairs(sys);
    for (const auto& p : pairs) {
        for (const auto& q : pairs) {
            const cplx prod = (p.X.adjoint() * sys.B() * q.Y)(0, 0);
            if (std::abs(p.lambda - q.lambda) > 1e-8)
                CHECK(std::abs(prod) <= 1e-10 * (p.X.norm() * q.Y.norm()));
        }
    }
}

TEST_CASE("normalisation schemes") {
    const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
    MasterMode master = select_master(eigenpairs(sys), 1.5);
    master = normalize(master, sys, NormalisationScheme::unit_displacement);

    CHECK(master.Y(0) == cplx(1.0, 0.0));
    CHECK(std::abs(master.Y(1) - master.lambda) < 1e-12);
    CHECK(std::abs((master.X.adjoint() * sys.B() * master.Y)(0, 0) - cplx(1.0, 0.0)) < 1e-12);

    const MasterMode doubled = normalize(master, sys, NormalisationScheme::scale, 2.0);
    const MasterMode back = normalize(doubled, sys, NormalisationScheme::scale, 0.5);
    CHECK((back.Y - master.Y).norm() < 1e-14);
    CHECK((back.X - master.X).norm() < 1e-14);
    CHECK(std::abs((doubled.X.adjoint() * sys.B() * doubled.Y)(0, 0) - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("augmented pencil carries the rotating pair") {
    const QuadSystem sys = build_duffing(1.5, 0.02, 1.0);
    const QuadSystem aug = augment_forcing(sys, duffing_forcing(1.5, 0.0));
    const auto pairs = eigenpairs(aug);
    int hits = 0;
    for (const auto& p : pairs)
        if (std::abs(p.lambda - cplx(0.0, 1.5)) < 1e-12 ||
            std::abs(p.lambda - cplx(0.0, -1.5)) < 1e-12)
            ++hits;
    // +-1.5i appear both as the forcing pair and as near-mechanical values.
    CHECK(hits >= 2);

    // Zero forcing leaves the mechanical spectrum untouched.
    const auto mech = eigenpairs(sys);
    for (const auto& m : mech) {
        bool found = false;
        for (const auto& p : pairs)
            if (std::abs(p.lambda - m.lambda) < 1e-10) found = true;
        CHECK(found);
    }
}

TEST_CASE("forcing eigenvectors against a direct solve") {
    const double omega = 1.5, xi = 0.02, kappa = 0.2;
    const QuadSystem sys = build_duffing(omega, xi, 1.0);
    const QuadSystem aug = augment_forcing(sys, duffing_forcing(omega, kappa));
    const auto [plus, minus] = forcing_eigenvectors(aug);

    CHECK(plus.lambda == cplx(0.0, omega));
    CHECK(plus.Y(3) == cplx(1.0, 0.0));
    CHECK(minus.Y(4) == cplx(1.0, 0.0));

    // Direct dense solve of (i Omega B - A) u = F as an independent check.
    const Mat M = cplx(0.0, omega) * sys.B() - sys.A();
    const Vec u = Eigen::PartialPivLU<Mat>(M).solve(aug.forcing_columns().col(0));
    CHECK((plus.Y.head(3) - u).norm() <= 1e-12 * u.norm());

    // At the expansion point the response magnitude scales like kappa/(4 xi omega^2).
    CHECK(std::abs(plus.Y(0)) == doctest::Approx(kappa / (4.0 * xi * omega * omega)).epsilon(1e-10));

    // Far from resonance the response is nearly quasi-static.
    const QuadSystem far = augment_forcing(sys, duffing_forcing(10.0 * omega, kappa));
    const auto [fplus, fminus] = forcing_eigenvectors(far);
    CHECK(fplus.Y.head(3).norm() < 0.1 * plus.Y.head(3).norm());

    // Undamped forcing exactly at resonance has no bounded response.
    const QuadSystem undamped = build_duffing(omega, 0.0, 1.0);
    const QuadSystem resonant = augment_forcing(undamped, duffing_forcing(omega, kappa));
    CHECK_THROWS_WITH_AS(forcing_eigenvectors(resonant),
                         doctest::Contains("expansion point resonance"), std::runtime_error);
}
