#include "dpim/rom_dynamics.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpim {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Rotating-frame rate of the first reduced equation: e^{-i theta} f_1(z),
// which is theta-independent for a normal-form style parametrisation.
cplx rotating_rate(const Parametrisation& par, double rho, double phi, double theta = 0.0) {
    const Vec z = par.polar_point(rho, theta, phi);
    return std::exp(cplx(0.0, -theta)) * par.evaluate_f(z)(0);
}

struct PolarRates {
    double rho_dot;
    double phi_dot;
};

PolarRates polar_rates(const Parametrisation& par, double rho, double phi, double Omega) {
    const cplx w = rotating_rate(par, rho, phi);
    const double ratio = static_cast<double>(par.res_m()) / static_cast<double>(par.res_n());
    return {2.0 * w.real(), ratio * (2.0 / rho) * w.imag() - Omega};
}

}  // namespace

std::vector<BackbonePoint> backbone(const Parametrisation& par, const std::vector<double>& rhos,
                                    int eval_order) {
    if (par.forced())
        throw std::invalid_argument("backbone: autonomous parametrisation required");
    std::vector<BackbonePoint> out;
    out.reserve(rhos.size());
    AngleGrid grid;
    for (double rho : rhos) {
        if (rho <= 0.0) throw std::invalid_argument("backbone: rho must be positive");
        const cplx w0 = rotating_rate(par, rho, 0.0, 0.0);
        const cplx w1 = rotating_rate(par, rho, 0.0, 0.9);
        if (std::abs(w1 - w0) > 1e-8 * (1.0 + std::abs(w0)))
            throw std::runtime_error(
                "backbone: reduced dynamics is phase-dependent; use the normal-form style");
        BackbonePoint pt;
        pt.rho = rho;
        pt.omega_nl = 2.0 / rho * w0.imag();
        pt.u_max = u_max(par, rho, grid, eval_order);
        out.push_back(pt);
    }
    return out;
}

std::vector<PolarFixedPoint> frc(const Parametrisation& par, const std::vector<double>& omegas,
                                 const FrcOptions& opt) {
    if (!par.forced()) throw std::invalid_argument("frc: forced parametrisation required");
    {
        // The polar flow is autonomous only when every retained reduced-dynamics
        // monomial rotates with the master.
        const cplx w0 = rotating_rate(par, 0.37, 0.4, 0.0);
        const cplx w1 = rotating_rate(par, 0.37, 0.4, 0.9);
        if (std::abs(w1 - w0) > 1e-8 * (1.0 + std::abs(w0)))
            throw std::runtime_error(
                "frc: reduced dynamics is phase-dependent; rebuild with resonant forcing terms only");
    }

    double rho_max = opt.rho_max;
    if (rho_max <= 0.0) {
        // Linear-response peak amplitude sets the search window.
        const MultiIndex e3 = {0, 0, 1, 0};
        const cplx f3 = par.f(1, par.table().index_of(e3))(0);
        const double decay = std::abs(par.lambdas()[0].real());
        rho_max = decay > 0.0 && std::abs(f3) > 0.0 ? 3.0 * std::abs(f3) / decay
                                                    : 4.0 / std::abs(par.master_Y()(par.pivot_row()));
    }

    std::vector<PolarFixedPoint> out;
    for (double Omega : omegas) {
        std::vector<PolarFixedPoint> found;
        for (int ir = 1; ir <= opt.seeds_rho; ++ir) {
            for (int ip = 0; ip < opt.seeds_phi; ++ip) {
                double rho = rho_max * ir / opt.seeds_rho;
                double phi = 2.0 * kPi * ip / opt.seeds_phi;
                bool ok = false;
                for (int iter = 0; iter < 60; ++iter) {
                    const PolarRates g = polar_rates(par, rho, phi, Omega);
                    const double res = std::abs(g.rho_dot) + rho * std::abs(g.phi_dot);
                    if (res < 1e-10 * (1.0 + rho)) {
                        ok = true;
                        break;
                    }
                    const double dr = 1e-7 * (1.0 + rho), dp = 1e-7;
                    const PolarRates gr_hi = polar_rates(par, rho + dr, phi, Omega);
                    const PolarRates gr_lo = polar_rates(par, rho - dr, phi, Omega);
                    const PolarRates gp_hi = polar_rates(par, rho, phi + dp, Omega);
                    const PolarRates gp_lo = polar_rates(par, rho, phi - dp, Omega);
                    Eigen::Matrix2d J;
                    J << (gr_hi.rho_dot - gr_lo.rho_dot) / (2 * dr),
                        (gp_hi.rho_dot - gp_lo.rho_dot) / (2 * dp),
                        (gr_hi.phi_dot - gr_lo.phi_dot) / (2 * dr),
                        (gp_hi.phi_dot - gp_lo.phi_dot) / (2 * dp);
                    const Eigen::Vector2d step =
                        J.fullPivLu().solve(Eigen::Vector2d(g.rho_dot, g.phi_dot));
                    if (!step.allFinite()) break;
                    rho -= step(0);
                    phi -= step(1);
                    if (!(rho > 1e-12) || rho > 10.0 * rho_max) break;
                }
                if (!ok) continue;
                phi = std::remainder(phi, 2.0 * kPi);
                if (phi < 0.0) phi += 2.0 * kPi;
                bool duplicate = false;
                for (const auto& known : found) {
                    const double dphi = std::abs(std::remainder(known.phi - phi, 2.0 * kPi));
                    if (std::abs(known.rho - rho) < 1e-6 * (1.0 + rho) && dphi < 1e-5) {
                        duplicate = true;
                        break;
                    }
                }
                if (duplicate) continue;

                PolarFixedPoint pt;
                pt.Omega = Omega;
                pt.rho = rho;
                pt.phi = phi;
                {
                    const double dr = 1e-6 * (1.0 + rho), dp = 1e-6;
                    const PolarRates a = polar_rates(par, rho + dr, phi, Omega);
                    const PolarRates b = polar_rates(par, rho - dr, phi, Omega);
                    const PolarRates c = polar_rates(par, rho, phi + dp, Omega);
                    const PolarRates d = polar_rates(par, rho, phi - dp, Omega);
                    const double j11 = (a.rho_dot - b.rho_dot) / (2 * dr);
                    const double j12 = (c.rho_dot - d.rho_dot) / (2 * dp);
                    const double j21 = (a.phi_dot - b.phi_dot) / (2 * dr);
                    const double j22 = (c.phi_dot - d.phi_dot) / (2 * dp);
                    const double tr = j11 + j22, det = j11 * j22 - j12 * j21;
                    pt.stable = tr < 0.0 && det > 0.0;
                }
                AngleGrid amp_grid;
                amp_grid.phis = {phi};
                pt.u_max = u_max(par, rho, amp_grid, opt.eval_order);
                found.push_back(pt);
            }
        }
        std::sort(found.begin(), found.end(),
                  [](const PolarFixedPoint& a, const PolarFixedPoint& b) { return a.rho < b.rho; });
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

GenericRomCoefficients extract_generic(const Parametrisation& par, double kappa) {
    if (!par.forced())
        throw std::invalid_argument("extract_generic: forced parametrisation required");
    if (kappa == 0.0) throw std::invalid_argument("extract_generic: kappa must be nonzero");
    const auto& tab = par.table();
    const MultiIndex e1 = {1, 0, 0, 0}, m21 = {2, 1, 0, 0}, e3 = {0, 0, 1, 0};
    if (par.order() < 3)
        throw std::invalid_argument("extract_generic: order three required for the cubic term");
    const int k21 = tab.index_of(m21);
    if (!par.active(3, k21))
        throw std::invalid_argument("extract_generic: cubic monomial missing from the tables");

    GenericRomCoefficients out;
    out.f1 = par.f(1, tab.index_of(e1))(0);
    out.f2 = par.f(3, k21)(0);
    out.f3 = par.f(1, tab.index_of(e3))(0);
    if (std::abs(out.f1 - par.lambdas()[0]) > 1e-10 * std::abs(out.f1))
        throw std::runtime_error("extract_generic: linear coefficient disagrees with the spectrum");
    out.c3 = out.f3 / kappa;
    return out;
}

namespace {

// P, Q polynomials of the truncated polar system at a fixed point.
std::pair<double, double> truncated_pq(const GenericRomCoefficients& coeffs, double rho,
                                       double Omega) {
    const double P = coeffs.f1.real() * rho + coeffs.f2.real() * rho * rho * rho / 4.0;
    const double Q = (coeffs.f1.imag() - Omega) * rho + coeffs.f2.imag() * rho * rho * rho / 4.0;
    return {P, Q};
}

}  // namespace

std::vector<PolarFixedPoint> frc_truncated(const GenericRomCoefficients& coeffs, double kappa,
                                           const std::vector<double>& omegas) {
    const cplx f3 = coeffs.c3 * kappa;
    if (std::abs(f3) == 0.0) throw std::invalid_argument("frc_truncated: zero forcing coefficient");
    std::vector<PolarFixedPoint> out;
    for (double Omega : omegas) {
        // At a fixed point, sin/cos of the phase are linear in (P, Q); the
        // Pythagorean identity turns into a cubic polynomial condition in rho^2.
        const double rho_lin = 2.0 * std::abs(f3) / std::max(std::abs(coeffs.f1.real()), 1e-300);
        std::vector<PolarFixedPoint> found;
        for (int ir = 1; ir <= 64; ++ir) {
            double rho = 1.5 * rho_lin * ir / 64.0;
            for (int iter = 0; iter < 80; ++iter) {
                const auto [P, Q] = truncated_pq(coeffs, rho, Omega);
                const double g = P * P + Q * Q - 4.0 * std::norm(f3);
                const double drho = 1e-7 * (1.0 + rho);
                const auto [Pp, Qp] = truncated_pq(coeffs, rho + drho, Omega);
                const auto [Pm, Qm] = truncated_pq(coeffs, rho - drho, Omega);
                const double gp = Pp * Pp + Qp * Qp - 4.0 * std::norm(f3);
                const double gm = Pm * Pm + Qm * Qm - 4.0 * std::norm(f3);
                const double slope = (gp - gm) / (2.0 * drho);
                if (std::abs(g) < 1e-12 * (1.0 + 4.0 * std::norm(f3))) break;
                if (slope == 0.0) { rho = -1.0; break; }
                rho -= g / slope;
                if (!(rho > 1e-12) || rho > 10.0 * rho_lin) { rho = -1.0; break; }
            }
            if (rho <= 0.0) continue;
            const auto [P, Q] = truncated_pq(coeffs, rho, Omega);
            if (std::abs(P * P + Q * Q - 4.0 * std::norm(f3)) > 1e-9 * (1.0 + 4.0 * std::norm(f3)))
                continue;
            const double s = (Q * f3.real() - P * f3.imag()) / (2.0 * std::norm(f3));
            const double c = -(P * f3.real() + Q * f3.imag()) / (2.0 * std::norm(f3));
            double phi = std::atan2(s, c);
            if (phi < 0.0) phi += 2.0 * kPi;
            bool duplicate = false;
            for (const auto& known : found)
                if (std::abs(known.rho - rho) < 1e-7 * (1.0 + rho)) { duplicate = true; break; }
            if (duplicate) continue;
            PolarFixedPoint pt;
            pt.Omega = Omega;
            pt.rho = rho;
            pt.phi = phi;
            // Planar stability from the truncated flow's Jacobian.
            const auto rates = [&](double r, double p) {
                const double rd = coeffs.f1.real() * r + coeffs.f2.real() * r * r * r / 4.0 +
                                  2.0 * f3.real() * std::cos(p) + 2.0 * f3.imag() * std::sin(p);
                const double pd = (coeffs.f1.imag() - Omega) + coeffs.f2.imag() * r * r / 4.0 +
                                  (2.0 * f3.imag() * std::cos(p) - 2.0 * f3.real() * std::sin(p)) / r;
                return std::pair<double, double>(rd, pd);
            };
            const double dr = 1e-7 * (1.0 + rho), dp = 1e-7;
            const auto [r1, p1] = rates(rho + dr, phi);
            const auto [r2, p2] = rates(rho - dr, phi);
            const auto [r3, p3] = rates(rho, phi + dp);
            const auto [r4, p4] = rates(rho, phi - dp);
            const double j11 = (r1 - r2) / (2 * dr), j12 = (r3 - r4) / (2 * dp);
            const double j21 = (p1 - p2) / (2 * dr), j22 = (p3 - p4) / (2 * dp);
            const double tr = j11 + j22, det = j11 * j22 - j12 * j21;
            pt.stable = tr < 0.0 && det > 0.0;
            found.push_back(pt);
        }
        std::sort(found.begin(), found.end(),
                  [](const PolarFixedPoint& a, const PolarFixedPoint& b) { return a.rho < b.rho; });
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

std::pair<double, double> truncated_phase_identity(const GenericRomCoefficients& coeffs,
                                                   double kappa, double rho, double Omega) {
    const cplx f3 = coeffs.c3 * kappa;
    if (std::abs(f3) == 0.0)
        throw std::invalid_argument("truncated_phase_identity: zero forcing coefficient");
    const auto [P, Q] = truncated_pq(coeffs, rho, Omega);
    const double s = (Q * f3.real() - P * f3.imag()) / (2.0 * std::norm(f3));
    const double c = -(P * f3.real() + Q * f3.imag()) / (2.0 * std::norm(f3));
    return {s, c};
}

double truncated_peak_discriminant(const GenericRomCoefficients& coeffs, double kappa,
                                   double rho) {
    const cplx f1 = coeffs.f1, f2 = coeffs.f2, f3 = coeffs.c3 * kappa;
    const double r2 = rho * rho;
    const double a = r2;
    const double b = -2.0 * f1.imag() * r2 - f2.imag() * r2 * r2 / 2.0;
    const double c = std::norm(f1) * r2 +
                     (f1.imag() * f2.imag() + f1.real() * f2.real()) * r2 * r2 / 2.0 +
                     std::norm(f2) * r2 * r2 * r2 / 16.0 - 4.0 * std::norm(f3);
    return b * b - 4.0 * a * c;
}

double max_forcing_primary(const GenericRomCoefficients& coeffs, double rho_limit) {
    if (rho_limit <= 0.0) throw std::invalid_argument("max_forcing_primary: rho must be positive");
    const double c3r = coeffs.c3.real(), c3i = coeffs.c3.imag();
    if (c3r == 0.0 && c3i == 0.0)
        throw std::invalid_argument("max_forcing_primary: both parts of c3 vanish");
    const double numerator =
        2.0 * coeffs.f1.real() * rho_limit + coeffs.f2.real() * rho_limit * rho_limit * rho_limit / 2.0;
    double kappa;
    if (std::abs(c3r) >= std::abs(c3i)) {
        const double alpha = c3i / c3r;
        kappa = numerator / (4.0 * c3r * std::sqrt(1.0 + alpha * alpha));
    } else {
        const double beta = c3r / c3i;
        kappa = numerator / (4.0 * c3i * std::sqrt(1.0 + beta * beta));
    }
    return std::abs(kappa);
}

double duffing_kappa_linear(double omega, double xi, double rho) {
    return 2.0 * omega * omega * xi * rho;
}

double duffing_kappa_refined(double omega, double xi, double h, double rho) {
    const double den = 3.0 * h * rho * rho - 16.0 * omega * omega;
    if (den == 0.0) throw std::invalid_argument("duffing_kappa_refined: singular denominator");
    return std::abs(32.0 * std::pow(omega, 4) * xi * rho / den);
}

double duffing_kappa_superharmonic(double omega, double xi, double h, double rho) {
    if (h == 0.0) throw std::invalid_argument("duffing_kappa_superharmonic: h must be nonzero");
    const double delta = std::sqrt(1.0 - xi * xi);
    const double inner =
        std::pow(omega, 8) * std::pow(9.0 * xi * xi + 16.0, 1.5) * delta * xi * rho / h;
    return 4.0 / 9.0 * std::cbrt(inner);
}

}  // namespace dpim
