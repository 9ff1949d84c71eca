#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dpim/oracle.hpp"
#include "dpim/parametrisation.hpp"
#include "dpim/quad_system.hpp"
#include "dpim/rom_dynamics.hpp"
#include "dpim/spectral.hpp"

#include <cmath>

using namespace dpim;

namespace {

Parametrisation build_forced_duffing(double xi, double kappa, double Omega, int order,
                                     int order_na = -1, int res_n = 1) {
    QuadSystem sys = build_duffing(1.5, xi, 1.0);
    ForcingSpec f;
    f.Fc = Vec::Zero(3);
    f.Fc(1) = 1.0;
    f.omega = Omega;
    f.kappa = kappa;
    const QuadSystem forced = augment_forcing(sys, f);
    MasterMode m = select_master(eigenpairs(forced.mechanical()), 1.5);
    m = normalize(m, forced.mechanical(), NormalisationScheme::unit_displacement);
    BuildOptions opt;
    opt.order = order;
    opt.order_na = order_na;
    opt.res_n = res_n;
    return build_parametrisation(forced, m, opt);
}

}  // namespace

TEST_CASE("backbone frequency") {
    const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
    MasterMode m = select_master(eigenpairs(sys), 1.5);
    m = normalize(m, sys, NormalisationScheme::unit_displacement);
    BuildOptions opt;
    opt.order = 9;
    const Parametrisation par = build_parametrisation(sys, m, opt);

    const auto curve = backbone(par, {1e-4, 0.1, 0.2, 0.4});
    CHECK(curve.front().omega_nl == doctest::Approx(1.5).epsilon(1e-8));

    // Small-amplitude curvature 3h/(8 omega) against the period quadrature.
    for (const auto& pt : curve) {
        if (pt.rho < 0.05) continue;
        const double exact = oracle::conservative_frequency(1.5, 1.0, pt.u_max);
        CHECK(pt.omega_nl == doctest::Approx(exact).epsilon(2e-4));
    }
    const double curvature = (curve[1].omega_nl - 1.5) / (curve[1].u_max * curve[1].u_max);
    CHECK(curvature == doctest::Approx(3.0 / (8.0 * 1.5)).epsilon(0.01));

    // The graph style keeps phase-dependent monomials; the backbone rejects it.
    BuildOptions gopt;
    gopt.style = Style::graph;
    gopt.order = 5;
    const Parametrisation graph = build_parametrisation(sys, m, gopt);
    CHECK_THROWS_AS(backbone(graph, {0.3}), std::runtime_error);
}

TEST_CASE("two dof backbone switches from hardening to softening") {
    const QuadSystem sys = build_two_dof(1.0, 1.57, 0.0, 0.0, 1.0, 1.0);
    MasterMode m = select_master(eigenpairs(sys), 1.0);
    m = normalize(m, sys, NormalisationScheme::unit_displacement);
    BuildOptions opt;
    opt.order = 15;
    const Parametrisation par = build_parametrisation(sys, m, opt);
    std::vector<double> rhos;
    for (double r = 0.05; r < 0.72; r += 0.025) rhos.push_back(r);
    const auto curve = backbone(par, rhos);
    CHECK(curve.front().omega_nl > 1.0);   // hardening at small amplitude
    // The hardening rate collapses as the slaved mode takes over: the slope
    // of omega(rho) falls well below its small-amplitude trend.
    const auto slope_at = [&](std::size_t i) {
        return (curve[i + 1].omega_nl - curve[i].omega_nl) /
               (curve[i + 1].rho - curve[i].rho);
    };
    double early = 0.0, late = 1e300;
    for (std::size_t i = 8; i < 12; ++i) early = std::max(early, slope_at(i));
    for (std::size_t i = 18; i + 1 < curve.size() && i < 22; ++i)
        late = std::min(late, slope_at(i));
    CHECK(late < 0.75 * early);
}

TEST_CASE("frc collapses to the rest branch without forcing") {
    const Parametrisation par = build_forced_duffing(0.02, 1e-9, 1.5, 5);
    const auto points = frc(par, {1.45, 1.5, 1.55});
    for (const auto& pt : points) CHECK(pt.rho < 1e-5);
}

TEST_CASE("frc peak stays below the validity limits at low forcing") {
    const Parametrisation par = build_forced_duffing(0.02, 0.1, 1.5, 15, 15);
    std::vector<double> omegas;
    for (int i = 0; i <= 30; ++i) omegas.push_back(1.5 * (0.85 + 0.3 * i / 30.0));
    const auto points = frc(par, omegas);
    REQUIRE(!points.empty());
    double peak_rho = 0.0;
    int stable_count = 0;
    for (const auto& pt : points) {
        peak_rho = std::max(peak_rho, pt.rho);
        if (pt.stable) ++stable_count;
    }
    CHECK(peak_rho < 1.14);   // the 1% invariance radius of this setup
    CHECK(peak_rho > 1.0);
    CHECK(stable_count >= static_cast<int>(omegas.size()));
}

TEST_CASE("generic coefficients and kappa linearity") {
    const Parametrisation par = build_forced_duffing(0.02, 0.175, 1.5, 5);
    const auto coeffs = extract_generic(par, 0.175);
    const double delta = std::sqrt(1.0 - 0.02 * 0.02);
    CHECK(coeffs.f1.real() == doctest::Approx(-0.02 * 1.5).epsilon(1e-10));
    CHECK(coeffs.f1.imag() == doctest::Approx(delta * 1.5).epsilon(1e-10));

    const Parametrisation par2 = build_forced_duffing(0.02, 0.35, 1.5, 5);
    const auto coeffs2 = extract_generic(par2, 0.35);
    CHECK(std::abs(coeffs2.f3 - 2.0 * coeffs.f3) < 1e-12 * std::abs(coeffs.f3));
    CHECK(std::abs(coeffs2.c3 - coeffs.c3) < 1e-12 * std::abs(coeffs.c3));

    CHECK_THROWS_AS(extract_generic(par, 0.0), std::invalid_argument);
}

TEST_CASE("truncated fixed points close the phase algebra") {
    const Parametrisation par = build_forced_duffing(0.02, 0.1, 1.5, 5);
    const auto coeffs = extract_generic(par, 0.1);
    std::vector<double> omegas;
    for (int i = 0; i <= 12; ++i) omegas.push_back(1.5 * (0.9 + 0.2 * i / 12.0));
    const auto points = frc_truncated(coeffs, 0.1, omegas);
    REQUIRE(points.size() >= omegas.size());
    for (const auto& pt : points) {
        const auto [s, c] = truncated_phase_identity(coeffs, 0.1, pt.rho, pt.Omega);
        CHECK(s * s + c * c == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::sin(pt.phi) == doctest::Approx(s).epsilon(1e-6));
        CHECK(std::cos(pt.phi) == doctest::Approx(c).epsilon(1e-6));
    }
}

TEST_CASE("maximum forcing closes the discriminant") {
    const Parametrisation par = build_forced_duffing(0.02, 0.1, 1.5, 5);
    const auto coeffs = extract_generic(par, 0.1);
    const double rho = 1.144;
    const double kappa_max = max_forcing_primary(coeffs, rho);
    CHECK(kappa_max == doctest::Approx(duffing_kappa_linear(1.5, 0.02, rho)).epsilon(0.01));

    const double disc = truncated_peak_discriminant(coeffs, kappa_max, rho);
    // Normalise by the discriminant scale away from the fold.
    const double off = std::abs(truncated_peak_discriminant(coeffs, 2.0 * kappa_max, rho));
    CHECK(std::abs(disc) < 1e-6 * off);

    GenericRomCoefficients degenerate = coeffs;
    degenerate.c3 = 0.0;
    CHECK_THROWS_AS(max_forcing_primary(degenerate, rho), std::invalid_argument);
}

TEST_CASE("two dof forcing routes through the imaginary branch") {
    QuadSystem sys0 = build_two_dof(1.0, 1.57, 0.05, 0.05, 1.0, 1.0);
    ForcingSpec f;
    f.Fc = Vec::Zero(5);
    f.Fc(1) = 1.0;
    f.omega = 1.0;
    f.kappa = 0.07;
    const QuadSystem sys = augment_forcing(sys0, f);
    MasterMode m = select_master(eigenpairs(sys.mechanical()), 1.0);
    m = normalize(m, sys.mechanical(), NormalisationScheme::unit_displacement);
    BuildOptions opt;
    opt.order = 3;
    opt.order_na = 1;
    const Parametrisation par = build_parametrisation(sys, m, opt);
    const auto coeffs = extract_generic(par, 0.07);
    CHECK(std::abs(coeffs.c3.real()) < 1e-10 * std::abs(coeffs.c3));
    CHECK(max_forcing_primary(coeffs, 0.63) == doctest::Approx(0.0629).epsilon(0.02));
}

TEST_CASE("closed-form forcing rules") {
    CHECK(duffing_kappa_linear(1.5, 0.02, 1.144) == doctest::Approx(0.103).epsilon(0.01));
    CHECK(duffing_kappa_refined(1.5, 0.02, 1.0, 1.144) == doctest::Approx(0.116).epsilon(0.01));
    CHECK(duffing_kappa_superharmonic(1.5, 0.002, 1.0, 1.144) == doctest::Approx(0.691).epsilon(0.01));
    CHECK(duffing_kappa_linear(1.5, 0.0, 1.0) == 0.0);
    // 3 h rho^2 = 16 omega^2 is a pole of the refined rule.
    CHECK_THROWS_AS(duffing_kappa_refined(1.5, 0.02, 3.0, std::sqrt(16.0 * 2.25 / 9.0)),
                    std::invalid_argument);
}

TEST_CASE("conservative limit sends the peak to the backbone") {
    const double xi = 1e-3, kappa = 0.01;
    const Parametrisation par = build_forced_duffing(xi, kappa, 1.5, 9, 9);
    std::vector<double> omegas;
    for (int i = 0; i <= 60; ++i) omegas.push_back(1.5 + 0.25 * i / 60.0);
    const auto points = frc(par, omegas);
    double peak_rho = 0.0, peak_omega = 0.0;
    for (const auto& pt : points)
        if (pt.rho > peak_rho) { peak_rho = pt.rho; peak_omega = pt.Omega; }
    REQUIRE(peak_rho > 0.0);

    const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
    MasterMode m = select_master(eigenpairs(sys), 1.5);
    m = normalize(m, sys, NormalisationScheme::unit_displacement);
    BuildOptions opt;
    opt.order = 9;
    const Parametrisation aut = build_parametrisation(sys, m, opt);
    const auto bb = backbone(aut, {peak_rho});
    CHECK(bb.front().omega_nl == doctest::Approx(peak_omega).epsilon(0.01));
}
