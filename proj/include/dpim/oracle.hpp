#pragma once

#include "dpim/quad_system.hpp"

#include <vector>

namespace dpim::oracle {

using RVec = Eigen::VectorXd;

/// Time history of the physical variables; algebraic auxiliaries are
/// reconstructed from their defining rows at every sample.
struct Trajectory {
    std::vector<double> t;
    std::vector<RVec> y;        // physical block
    std::vector<RVec> y_full;   // physical + algebraic
    int accepted = 0;
    int rejected = 0;
};

// Real first-order ODE on the physical block of a quadratic DAE, with the
// algebraic auxiliaries eliminated by direct substitution. Requires the
// algebraic rows to define the auxiliaries in closed form from physical
// variables (true for every recast produced by the builders).
class ReducedOde {
public:
    explicit ReducedOde(const QuadSystem& sys);

    int dim() const { return Dp_; }
    RVec rhs(double t, const RVec& yp) const;
    RVec auxiliaries(const RVec& yp) const;
    RVec assemble_full(const RVec& yp) const;
    /// Residual of the algebraic rows for a full state; zero on consistent states.
    double algebraic_residual(const RVec& y_full) const;

private:
    int Dp_ = 0, Da_ = 0;
    Eigen::MatrixXd A_, Bpp_inv_;
    Eigen::MatrixXd Aaa_inv_, Aap_;
    std::vector<QuadEntry> Q_;
    RVec Fc_, Fs_;
    double omega_ = 0.0;
    double kappa_ = 0.0;
};

/// Adaptive embedded Runge-Kutta integration of the reduced ODE from a
/// consistent full-state initial condition.
Trajectory integrate(const QuadSystem& sys, const Vec& y0_full, double T, double tol,
                     double t0 = 0.0);

/// End state only; cheaper than a full trajectory when sampling is not needed.
RVec propagate(const ReducedOde& ode, const RVec& yp0, double t0, double t1, double tol);

/// Exact oscillation frequency of u'' + omega^2 u + h u^3 = 0 at amplitude a,
/// from the period quadrature with the endpoint singularity substituted away.
double conservative_frequency(double omega, double h, double a, double tol = 1e-12);

struct FrcPoint {
    double Omega = 0.0;
    RVec y0;                 // state at t = 0 on the periodic orbit
    double amplitude = 0.0;  // max |row| over one period
    bool stable = false;
    bool converged = false;
};

/// Periodic solutions of the forced system over a frequency grid by Newton on
/// the period map, swept in both directions with warm starts.
std::vector<FrcPoint> shooting_frc(const QuadSystem& sys, const ForcingSpec& forcing,
                                   const std::vector<double>& omegas, int res_n = 1,
                                   double tol = 1e-10, int amplitude_row = 0);

}  // namespace dpim::oracle
