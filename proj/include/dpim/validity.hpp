#pragma once

#include "dpim/parametrisation.hpp"
#include "dpim/quad_system.hpp"

#include <limits>
#include <string>
#include <vector>

namespace dpim {

/// Sampling of the polar angles used by every criterion. theta spans the full
/// response period [0, 2 pi n) of an m:n locked solution; phi is only used by
/// forced parametrisations.
struct AngleGrid {
    int n_theta = 64;
    std::vector<double> phis = {0.0, 1.5707963267948966, 3.141592653589793,
                                4.71238898038469};

    std::vector<double> thetas(int res_n) const;
};

enum class EstimateStatus {
    converged,
    non_convergent,
    no_crossing,
    no_singularity,
    infinite_radius,
};

const char* to_string(EstimateStatus s);

struct AnglePoint {
    double theta = 0.0;
    double phi = 0.0;
    double rho = 0.0;
};

/// Result of one validity criterion: the global radius, the physical
/// amplitude it maps to, and the per-angle diagnostics behind the minimum.
struct ValidityEstimate {
    std::string criterion;
    double rho_star = std::numeric_limits<double>::quiet_NaN();
    double u_max = std::numeric_limits<double>::quiet_NaN();
    std::vector<AnglePoint> curve;
    double epsilon = 0.0;
    int order = 0;
    int eval_order = 0;
    std::string component;
    EstimateStatus status = EstimateStatus::converged;
};

/// Relative residual of the invariance equation at one normal point:
/// ||B grad_W f - A W - Q(W,W) - F ztilde|| / ||A W^(1,1)||.
double invariance_error(const Parametrisation& par, const QuadSystem& sys, const Vec& z);

/// Root-find the first amplitude where the invariance error reaches eps, per
/// angle; the global radius is the minimum over the grid.
ValidityEstimate invariance_limit(const Parametrisation& par, const QuadSystem& sys,
                                  double eps, const AngleGrid& grid = {},
                                  int eval_order = -1);

/// Closed-form radius from the first neglected residual block,
/// rho = 2 (||A W^(1,1)|| eps / ||R^(o+1)||)^(1/(o+1)). Autonomous only.
ValidityEstimate invariance_limit_simplified(const Parametrisation& par,
                                             const QuadSystem& sys, double eps,
                                             int eval_order = -1);

/// Angle-resolved variant keeping the order-(o+1) phase factors.
std::vector<AnglePoint> simplified_limit_by_angle(const Parametrisation& par,
                                                  const QuadSystem& sys, double eps,
                                                  const AngleGrid& grid = {});

/// Determinant of the selected square block of B grad_z W restricted to the
/// autonomous normal directions. `rows` defaults to the master displacement
/// and velocity rows.
cplx homological_det(const Parametrisation& par, const Vec& z,
                     const std::vector<int>& rows = {});

/// Smallest-amplitude zero of the block determinant over the angle grid,
/// located by Newton iterations in (rho, theta) seeded from coarse minima.
ValidityEstimate singularity_limit(const Parametrisation& par, const QuadSystem& sys,
                                   const AngleGrid& grid = {},
                                   const std::vector<int>& rows = {}, int eval_order = -1);

/// Rank-deficiency variant: drive the smallest singular value of the full
/// physical-row block to zero instead of a square-block determinant.
ValidityEstimate singularity_limit_svd(const Parametrisation& par, const QuadSystem& sys,
                                       const AngleGrid& grid = {}, int eval_order = -1);

enum class SeriesComponent { displacement, velocity, reduced_dynamics, custom_row };

/// Collapsed power-series coefficients a_p of the chosen scalar at fixed
/// angles; the index p counts powers of rho (the forcing coordinates sit on
/// the unit circle and carry no amplitude).
std::vector<double> series_coefficients(const Parametrisation& par, double theta, double phi,
                                        SeriesComponent component, int custom_row = -1);

struct SeriesEstimate {
    double value = std::numeric_limits<double>::quiet_NaN();
    EstimateStatus status = EstimateStatus::converged;
    /// (order, estimate) pairs for each truncation where an estimate exists.
    std::vector<std::pair<int, double>> by_order;
};

/// Root criterion a_p^(-1/p), evaluated at the highest-order nonzero term.
SeriesEstimate cauchy_limit(const std::vector<double>& a);

/// Ratio criterion from the last consecutive nonzero pair; gaps of two are
/// treated with the even/odd form (a_p / a_{p+2})^(1/2).
SeriesEstimate dalembert_limit(const std::vector<double>& a);

enum class SeriesCriterion { cauchy, dalembert };

/// Minimum of the per-angle series radii over the grid and over the standard
/// components (displacement, velocity, reduced dynamics); components whose
/// ratio sequences fail to settle are excluded, and the estimate is flagged
/// non-convergent when every component fails.
ValidityEstimate series_limit(const Parametrisation& par, SeriesCriterion criterion,
                              const AngleGrid& grid = {}, int eval_order = -1);

/// Per-order radius sequence (min over the grid) for one component, as used
/// for extrapolation from low-order data.
std::vector<std::pair<int, double>> series_limit_by_order(const Parametrisation& par,
                                                          SeriesCriterion criterion,
                                                          SeriesComponent component,
                                                          const AngleGrid& grid = {});

struct ExtrapolationResult {
    double rho_inf = std::numeric_limits<double>::quiet_NaN();
    double decay_rate = 0.0;
    double amplitude = 0.0;
    double residual = 0.0;
    EstimateStatus status = EstimateStatus::converged;
};

/// Least-squares fit of rho(p) = rho_inf + c exp(-gamma p) after averaging
/// successive data points; used to infer the converged radius from low-order
/// computations.
ExtrapolationResult extrapolate(const std::vector<std::pair<int, double>>& rho_by_order);

/// Largest physical amplitude |W_row| on the rho-circle, evaluated with the
/// mapping truncated at eval_order (default min(order, 15)).
double u_max(const Parametrisation& par, double rho, const AngleGrid& grid = {},
             int eval_order = -1, int row = -1);

}  // namespace dpim
