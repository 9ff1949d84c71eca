#pragma once

#include "dpim/parametrisation.hpp"
#include "dpim/validity.hpp"

#include <vector>

namespace dpim {

struct BackbonePoint {
    double rho = 0.0;
    double omega_nl = 0.0;
    double u_max = 0.0;
};

/// Amplitude-frequency relation of the conservative reduced dynamics,
/// omega_nl(rho) = (2/rho) Im[e^{-i theta} f_1]; phase-independent for the
/// normal-form style, which is asserted.
std::vector<BackbonePoint> backbone(const Parametrisation& par,
                                    const std::vector<double>& rhos, int eval_order = -1);

/// Steady state of the polar reduced dynamics at one excitation frequency.
struct PolarFixedPoint {
    double Omega = 0.0;
    double rho = 0.0;
    double phi = 0.0;
    bool stable = false;
    double u_max = 0.0;
};

struct FrcOptions {
    int seeds_rho = 8;
    int seeds_phi = 8;
    double rho_max = -1.0;   // <0: scaled from the linear response peak
    int eval_order = -1;     // truncation used for the physical amplitude
};

/// Fixed points (rho, phi) of the full-order polar reduced dynamics over an
/// excitation-frequency grid; the expansion coefficients stay frozen at the
/// frequency the parametrisation was built for.
std::vector<PolarFixedPoint> frc(const Parametrisation& par, const std::vector<double>& omegas,
                                 const FrcOptions& opt = {});

/// The three coefficients of the generic primary-resonance reduced dynamics
/// z1' = f1 z1 + f2 z1^2 z2 + f3 z3, with f3 normalised per unit forcing.
struct GenericRomCoefficients {
    cplx f1, f2, f3;
    cplx c3;   // f3 / kappa
};

GenericRomCoefficients extract_generic(const Parametrisation& par, double kappa);

/// Fixed points of the truncated three-coefficient dynamics; kept separate
/// from frc() so the closed-form identities can be checked against it.
std::vector<PolarFixedPoint> frc_truncated(const GenericRomCoefficients& coeffs, double kappa,
                                           const std::vector<double>& omegas);

/// sin(phi) and cos(phi) of a truncated fixed point reconstructed from
/// (rho, Omega) alone; their squares summing to one closes the algebra.
std::pair<double, double> truncated_phase_identity(const GenericRomCoefficients& coeffs,
                                                   double kappa, double rho, double Omega);

/// Discriminant of the quadratic in Omega locating the truncated-response
/// peak; zero at the fold amplitude.
double truncated_peak_discriminant(const GenericRomCoefficients& coeffs, double kappa,
                                   double rho);

/// Largest forcing amplitude keeping the response peak at rho_limit, from the
/// vanishing-discriminant condition. Uses whichever part of c3 dominates.
double max_forcing_primary(const GenericRomCoefficients& coeffs, double rho_limit);

// Closed-form amplitude rules for the cubic oscillator.
double duffing_kappa_linear(double omega, double xi, double rho);
double duffing_kappa_refined(double omega, double xi, double h, double rho);
double duffing_kappa_superharmonic(double omega, double xi, double h, double rho);

}  // namespace dpim
