#include "dpim/validity.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace dpim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.141592653589793238462643383279502884;

// Fraction of angle samples allowed to fail the ratio-settling check before
// a whole series component is declared non-convergent.
constexpr double kAngleFailFraction = 0.25;

std::vector<double> effective_phis(const Parametrisation& par, const AngleGrid& grid) {
    if (par.forced()) return grid.phis;
    return {0.0};
}

double length_scale(const Parametrisation& par) {
    const double pivot = std::abs(par.master_Y()(par.pivot_row()));
    return 1.0 / std::max(pivot, 1e-300);
}

double force_norm(const Parametrisation& par, const QuadSystem& sys) {
    const int Dm = par.dim();
    return (sys.A().topLeftCorner(Dm, Dm) * par.master_Y()).norm();
}

int default_eval_order(const Parametrisation& par, int eval_order) {
    if (eval_order > 0) return std::min(eval_order, par.order());
    return std::min(par.order(), 15);
}

}  // namespace

std::vector<double> AngleGrid::thetas(int res_n) const {
    std::vector<double> out(static_cast<std::size_t>(n_theta));
    for (int i = 0; i < n_theta; ++i)
        out[static_cast<std::size_t>(i)] = 2.0 * kPi * res_n * i / n_theta;
    return out;
}

const char* to_string(EstimateStatus s) {
    switch (s) {
        case EstimateStatus::converged: return "converged";
        case EstimateStatus::non_convergent: return "non-convergent";
        case EstimateStatus::no_crossing: return "no-crossing";
        case EstimateStatus::no_singularity: return "no-singularity-found";
        case EstimateStatus::infinite_radius: return "infinite-radius";
    }
    return "unknown";
}

double invariance_error(const Parametrisation& par, const QuadSystem& sys, const Vec& z) {
    return par.invariance_defect(sys, z).norm() / force_norm(par, sys);
}

ValidityEstimate invariance_limit(const Parametrisation& par, const QuadSystem& sys,
                                  double eps, const AngleGrid& grid, int eval_order) {
    if (eps <= 0.0) throw std::invalid_argument("invariance_limit: eps must be positive");
    ValidityEstimate out;
    out.criterion = "invariance";
    out.epsilon = eps;
    out.order = par.order();
    out.eval_order = default_eval_order(par, eval_order);

    const double scale = length_scale(par);
    const double rho_start = 1e-3 * scale;
    const double rho_cap = 100.0 * scale;

    bool any_crossing = false;
    double rho_min = kInf;
    for (double phi : effective_phis(par, grid)) {
        for (double theta : grid.thetas(par.res_n())) {
            const auto err = [&](double rho) {
                return invariance_error(par, sys, par.polar_point(rho, theta, phi));
            };
            double lo = 0.0, hi = rho_start;
            bool crossed = false;
            while (hi <= rho_cap) {
                if (err(hi) >= eps) {
                    crossed = true;
                    break;
                }
                lo = hi;
                hi *= 1.5;
            }
            if (!crossed) continue;
            while (hi - lo > 1e-6 * hi) {
                const double mid = 0.5 * (lo + hi);
                (err(mid) < eps ? lo : hi) = mid;
            }
            const double rho = 0.5 * (lo + hi);
            out.curve.push_back({theta, phi, rho});
            rho_min = std::min(rho_min, rho);
            any_crossing = true;
        }
    }
    if (!any_crossing) {
        out.status = EstimateStatus::no_crossing;
        return out;
    }
    out.rho_star = rho_min;
    out.u_max = u_max(par, rho_min, grid, out.eval_order);
    return out;
}

ValidityEstimate invariance_limit_simplified(const Parametrisation& par, const QuadSystem& sys,
                                             double eps, int eval_order) {
    if (par.forced())
        throw std::invalid_argument(
            "invariance_limit_simplified: closed form requires an autonomous parametrisation");
    if (eps <= 0.0) throw std::invalid_argument("invariance_limit_simplified: eps must be positive");
    ValidityEstimate out;
    out.criterion = "invariance-simplified";
    out.epsilon = eps;
    out.order = par.order();
    out.eval_order = default_eval_order(par, eval_order);

    const Vec R = stacked_residual(par, sys, par.order() + 1);
    const double nr = R.norm();
    const double den = force_norm(par, sys);
    if (nr < 1e-300 * den) {
        out.status = EstimateStatus::infinite_radius;
        return out;
    }
    out.rho_star = 2.0 * std::pow(den * eps / nr, 1.0 / (par.order() + 1));
    out.u_max = u_max(par, out.rho_star, AngleGrid{}, out.eval_order);
    return out;
}

std::vector<AnglePoint> simplified_limit_by_angle(const Parametrisation& par,
                                                  const QuadSystem& sys, double eps,
                                                  const AngleGrid& grid) {
    if (par.forced())
        throw std::invalid_argument(
            "simplified_limit_by_angle: closed form requires an autonomous parametrisation");
    const int p = par.order() + 1;
    const int Dm = par.dim();
    const int m = par.table().count(p);
    std::vector<Vec> blocks(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) blocks[static_cast<std::size_t>(k)] = assemble_residual(par, sys, p, k);
    const double den = force_norm(par, sys);

    std::vector<AnglePoint> out;
    for (double theta : grid.thetas(par.res_n())) {
        Vec sum = Vec::Zero(Dm);
        for (int k = 0; k < m; ++k) {
            const auto& alpha = par.table().alpha(p, k);
            sum += blocks[static_cast<std::size_t>(k)] *
                   std::exp(cplx(0.0, (alpha[0] - alpha[1]) * theta));
        }
        const double nr = sum.norm();
        const double rho = nr < 1e-300 * den ? kInf : 2.0 * std::pow(den * eps / nr, 1.0 / p);
        out.push_back({theta, 0.0, rho});
    }
    return out;
}

cplx homological_det(const Parametrisation& par, const Vec& z, const std::vector<int>& rows) {
    std::vector<int> r = rows;
    if (r.empty()) r = {par.pivot_row(), par.pivot_row() + 1};
    if (r.size() != 2) throw std::invalid_argument("homological_det: exactly two rows required");
    const Eigen::Matrix2cd G = par.gradient_BW_block(z, r[0], r[1]);
    return G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0);
}

namespace {

struct RootCandidate {
    double rho, theta, phi;
};

// Newton iteration on (Re det, Im det) over (rho, theta) at fixed phi.
bool newton_det_root(const Parametrisation& par, const std::vector<int>& rows, double phi,
                     double& rho, double& theta, double det_scale, double rho_cap) {
    const auto det_at = [&](double r, double t) {
        return homological_det(par, par.polar_point(r, t, phi), rows);
    };
    for (int iter = 0; iter < 60; ++iter) {
        const cplx g = det_at(rho, theta);
        if (std::abs(g) <= 1e-12 * det_scale) return true;
        const double dr = 1e-7 * (1.0 + rho);
        const double dt = 1e-7;
        const cplx gr = (det_at(rho + dr, theta) - det_at(rho - dr, theta)) / (2.0 * dr);
        const cplx gt = (det_at(rho, theta + dt) - det_at(rho, theta - dt)) / (2.0 * dt);
        Eigen::Matrix2d J;
        J << gr.real(), gt.real(), gr.imag(), gt.imag();
        Eigen::Vector2d rhs(g.real(), g.imag());
        Eigen::Vector2d step = J.fullPivLu().solve(rhs);
        if (!step.allFinite()) return false;
        // Damp oversized steps to stay inside the seed's basin.
        const double max_step = 0.25 * (1.0 + rho);
        const double len = step.norm();
        if (len > max_step) step *= max_step / len;
        rho -= step(0);
        theta -= step(1);
        if (!(rho > 1e-12) || rho > 4.0 * rho_cap) return false;
    }
    return std::abs(det_at(rho, theta)) <= 1e-10 * det_scale;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
    return out;
}

}  // namespace

ValidityEstimate singularity_limit(const Parametrisation& par, const QuadSystem& sys,
                                   const AngleGrid& grid, const std::vector<int>& rows,
                                   int eval_order) {
    std::vector<int> r = rows;
    if (r.empty()) r = {par.pivot_row(), par.pivot_row() + 1};
    for (int row : r)
        if (row < 0 || row >= sys.mechanical().n_physical())
            throw std::invalid_argument("singularity_limit: rows must select physical equations");

    ValidityEstimate out;
    out.criterion = "singularity";
    out.order = par.order();
    out.eval_order = default_eval_order(par, eval_order);

    const double scale = length_scale(par);
    const double rho_cap = 100.0 * scale;
    const auto rhos = log_spaced(1e-3 * scale, rho_cap, 96);
    const auto thetas = grid.thetas(par.res_n());
    const int nt = static_cast<int>(thetas.size());
    const int nr = static_cast<int>(rhos.size());

    std::vector<RootCandidate> roots;
    for (double phi : effective_phis(par, grid)) {
        const double det_scale = std::abs(homological_det(par, par.polar_point(0.0, 0.0, phi), r));
        std::vector<double> mag(static_cast<std::size_t>(nt) * nr);
        for (int it = 0; it < nt; ++it)
            for (int ir = 0; ir < nr; ++ir)
                mag[static_cast<std::size_t>(it) * nr + ir] = std::abs(homological_det(
                    par, par.polar_point(rhos[static_cast<std::size_t>(ir)], thetas[static_cast<std::size_t>(it)], phi), r));

        for (int it = 0; it < nt; ++it) {
            for (int ir = 0; ir < nr; ++ir) {
                const double v = mag[static_cast<std::size_t>(it) * nr + ir];
                const double left = ir > 0 ? mag[static_cast<std::size_t>(it) * nr + ir - 1] : kInf;
                const double right = ir + 1 < nr ? mag[static_cast<std::size_t>(it) * nr + ir + 1] : kInf;
                const double up = mag[static_cast<std::size_t>((it + nt - 1) % nt) * nr + ir];
                const double down = mag[static_cast<std::size_t>((it + 1) % nt) * nr + ir];
                if (v <= left && v <= right && v <= up && v <= down && v < 0.5 * det_scale) {
                    double rho = rhos[static_cast<std::size_t>(ir)];
                    double theta = thetas[static_cast<std::size_t>(it)];
                    if (newton_det_root(par, r, phi, rho, theta, det_scale, rho_cap) &&
                        rho > 1e-9 * scale && rho <= rho_cap) {
                        bool duplicate = false;
                        for (const auto& known : roots)
                            if (known.phi == phi && std::abs(known.rho - rho) < 1e-6 * (1.0 + rho) &&
                                std::abs(std::remainder(known.theta - theta, 2.0 * kPi * par.res_n())) < 1e-5) {
                                duplicate = true;
                                break;
                            }
                        if (!duplicate) roots.push_back({rho, theta, phi});
                    }
                }
            }
        }
    }

    if (roots.empty()) {
        out.status = EstimateStatus::no_singularity;
        return out;
    }
    double rho_min = kInf;
    for (const auto& root : roots) {
        out.curve.push_back({root.theta, root.phi, root.rho});
        rho_min = std::min(rho_min, root.rho);
    }
    out.rho_star = rho_min;
    out.u_max = u_max(par, rho_min, grid, out.eval_order);
    return out;
}

namespace {

// Smallest/largest singular values of the physical-row block of B grad W.
std::pair<double, double> sv_extremes(const Parametrisation& par, int n_physical,
                                      double rho, double theta, double phi) {
    const Mat G = par.gradient_BW(par.polar_point(rho, theta, phi));
    const Mat block = G.topLeftCorner(n_physical, 2);
    Eigen::JacobiSVD<Mat> svd(block);
    const auto& sv = svd.singularValues();
    return {sv(sv.size() - 1), sv(0)};
}

// Nelder-Mead on (rho, theta) for the smallest singular value.
void nelder_mead_sv(const Parametrisation& par, int n_physical, double phi, double& rho,
                    double& theta, double& value) {
    using Point = Eigen::Vector2d;
    const auto eval = [&](const Point& p) {
        if (!(p(0) > 0.0)) return kInf;
        return sv_extremes(par, n_physical, p(0), p(1), phi).first;
    };
    std::array<Point, 3> simplex = {Point(rho, theta), Point(rho * 1.05, theta),
                                    Point(rho, theta + 0.05)};
    std::array<double, 3> fv;
    for (int i = 0; i < 3; ++i) fv[static_cast<std::size_t>(i)] = eval(simplex[static_cast<std::size_t>(i)]);
    for (int iter = 0; iter < 300; ++iter) {
        std::array<int, 3> idx = {0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[static_cast<std::size_t>(a)] < fv[static_cast<std::size_t>(b)]; });
        const Point& best = simplex[static_cast<std::size_t>(idx[0])];
        Point& worst = simplex[static_cast<std::size_t>(idx[2])];
        if ((best - worst).norm() < 1e-13 * (1.0 + best.norm())) break;
        const Point centroid = 0.5 * (simplex[static_cast<std::size_t>(idx[0])] + simplex[static_cast<std::size_t>(idx[1])]);
        const Point refl = centroid + (centroid - worst);
        const double fr = eval(refl);
        if (fr < fv[static_cast<std::size_t>(idx[0])]) {
            const Point exp_pt = centroid + 2.0 * (centroid - worst);
            const double fe = eval(exp_pt);
            if (fe < fr) { worst = exp_pt; fv[static_cast<std::size_t>(idx[2])] = fe; }
            else { worst = refl; fv[static_cast<std::size_t>(idx[2])] = fr; }
        } else if (fr < fv[static_cast<std::size_t>(idx[1])]) {
            worst = refl;
            fv[static_cast<std::size_t>(idx[2])] = fr;
        } else {
            const Point contr = centroid + 0.5 * (worst - centroid);
            const double fc = eval(contr);
            if (fc < fv[static_cast<std::size_t>(idx[2])]) { worst = contr; fv[static_cast<std::size_t>(idx[2])] = fc; }
            else {
                for (int i : {idx[1], idx[2]}) {
                    simplex[static_cast<std::size_t>(i)] = best + 0.5 * (simplex[static_cast<std::size_t>(i)] - best);
                    fv[static_cast<std::size_t>(i)] = eval(simplex[static_cast<std::size_t>(i)]);
                }
            }
        }
    }
    int ibest = 0;
    for (int i = 1; i < 3; ++i)
        if (fv[static_cast<std::size_t>(i)] < fv[static_cast<std::size_t>(ibest)]) ibest = i;
    rho = simplex[static_cast<std::size_t>(ibest)](0);
    theta = simplex[static_cast<std::size_t>(ibest)](1);
    value = fv[static_cast<std::size_t>(ibest)];
}

}  // namespace

ValidityEstimate singularity_limit_svd(const Parametrisation& par, const QuadSystem& sys,
                                       const AngleGrid& grid, int eval_order) {
    ValidityEstimate out;
    out.criterion = "singularity-svd";
    out.order = par.order();
    out.eval_order = default_eval_order(par, eval_order);

    const int n_physical = sys.mechanical().n_physical();
    const double scale = length_scale(par);
    const double rho_cap = 100.0 * scale;
    const auto rhos = log_spaced(1e-3 * scale, rho_cap, 96);
    const int nr = static_cast<int>(rhos.size());

    double rho_min = kInf;
    for (double phi : effective_phis(par, grid)) {
        for (double theta : grid.thetas(par.res_n())) {
            std::vector<double> mag(static_cast<std::size_t>(nr));
            for (int ir = 0; ir < nr; ++ir)
                mag[static_cast<std::size_t>(ir)] =
                    sv_extremes(par, n_physical, rhos[static_cast<std::size_t>(ir)], theta, phi).first;
            for (int ir = 1; ir + 1 < nr; ++ir) {
                if (mag[static_cast<std::size_t>(ir)] > mag[static_cast<std::size_t>(ir - 1)] ||
                    mag[static_cast<std::size_t>(ir)] > mag[static_cast<std::size_t>(ir + 1)])
                    continue;
                double rho = rhos[static_cast<std::size_t>(ir)];
                double th = theta;
                double value = mag[static_cast<std::size_t>(ir)];
                nelder_mead_sv(par, n_physical, phi, rho, th, value);
                const auto [smin, smax] = sv_extremes(par, n_physical, rho, th, phi);
                if (smin < 1e-8 * smax && rho > 1e-9 * scale && rho <= rho_cap) {
                    out.curve.push_back({th, phi, rho});
                    rho_min = std::min(rho_min, rho);
                }
            }
        }
    }
    if (!std::isfinite(rho_min)) {
        out.status = EstimateStatus::no_singularity;
        return out;
    }
    out.rho_star = rho_min;
    out.u_max = u_max(par, rho_min, grid, out.eval_order);
    return out;
}

std::vector<double> series_coefficients(const Parametrisation& par, double theta, double phi,
                                        SeriesComponent component, int custom_row) {
    int row = -1;
    switch (component) {
        case SeriesComponent::displacement: row = par.pivot_row(); break;
        case SeriesComponent::velocity: row = par.pivot_row() + 1; break;
        case SeriesComponent::reduced_dynamics: break;
        case SeriesComponent::custom_row:
            if (custom_row < 0 || custom_row >= par.dim())
                throw std::invalid_argument("series_coefficients: bad custom row");
            row = custom_row;
            break;
    }
    const double ratio = static_cast<double>(par.res_m()) / static_cast<double>(par.res_n());
    std::vector<cplx> acc(static_cast<std::size_t>(par.order()) + 1, cplx(0.0, 0.0));
    for (int p = 1; p <= par.total_order(); ++p) {
        for (int k : par.active_ranks(p)) {
            const auto& alpha = par.table().alpha(p, k);
            const cplx c = component == SeriesComponent::reduced_dynamics ? par.f(p, k)(0)
                                                                          : par.W(p, k)(row);
            if (c == cplx(0.0, 0.0)) continue;
            const int p_rho = alpha[0] + alpha[1];
            double theta_rate = alpha[0] - alpha[1];
            double phi_rate = 0.0;
            if (par.forced()) {
                theta_rate += ratio * (alpha[2] - alpha[3]);
                phi_rate = static_cast<double>(alpha[3] - alpha[2]);
            }
            acc[static_cast<std::size_t>(p_rho)] +=
                c * std::pow(0.5, p_rho) * std::exp(cplx(0.0, theta_rate * theta + phi_rate * phi));
        }
    }
    std::vector<double> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = std::abs(acc[i]);
    return out;
}

namespace {

constexpr double kSeriesZero = 1e-250;

std::vector<int> nonzero_indices(const std::vector<double>& a) {
    std::vector<int> idx;
    for (int p = 1; p < static_cast<int>(a.size()); ++p)
        if (a[static_cast<std::size_t>(p)] > kSeriesZero) idx.push_back(p);
    return idx;
}

EstimateStatus settled_status(const std::vector<std::pair<int, double>>& by_order) {
    // Estimates have settled when successive values in the tail stop swinging
    // by more than 50% of each other.
    if (by_order.size() < 2) return EstimateStatus::converged;
    const std::size_t tail = std::min<std::size_t>(6, by_order.size());
    for (std::size_t i = by_order.size() - tail; i + 1 < by_order.size(); ++i) {
        const double a = by_order[i].second, b = by_order[i + 1].second;
        if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
            return EstimateStatus::non_convergent;
        if (std::abs(b - a) / std::min(a, b) > 0.5) return EstimateStatus::non_convergent;
    }
    return EstimateStatus::converged;
}

}  // namespace

SeriesEstimate cauchy_limit(const std::vector<double>& a) {
    const auto idx = nonzero_indices(a);
    if (idx.size() < 4)
        throw std::invalid_argument("cauchy_limit: need at least four nonzero terms");
    SeriesEstimate out;
    for (int p : idx)
        out.by_order.push_back({p, std::exp(-std::log(a[static_cast<std::size_t>(p)]) / p)});
    out.value = out.by_order.back().second;
    out.status = settled_status(out.by_order);
    return out;
}

SeriesEstimate dalembert_limit(const std::vector<double>& a) {
    const auto idx = nonzero_indices(a);
    if (idx.size() < 4)
        throw std::invalid_argument("dalembert_limit: need at least four nonzero terms");
    SeriesEstimate out;
    for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
        const int p = idx[j], q = idx[j + 1];
        const double ratio = a[static_cast<std::size_t>(p)] / a[static_cast<std::size_t>(q)];
        out.by_order.push_back({q, std::pow(ratio, 1.0 / (q - p))});
    }
    out.value = out.by_order.back().second;
    out.status = settled_status(out.by_order);
    return out;
}

namespace {

SeriesEstimate run_series_criterion(SeriesCriterion criterion, const std::vector<double>& a) {
    return criterion == SeriesCriterion::cauchy ? cauchy_limit(a) : dalembert_limit(a);
}

const std::vector<std::pair<SeriesComponent, const char*>> kStandardComponents = {
    {SeriesComponent::displacement, "displacement"},
    {SeriesComponent::velocity, "velocity"},
    {SeriesComponent::reduced_dynamics, "reduced-dynamics"},
};

}  // namespace

ValidityEstimate series_limit(const Parametrisation& par, SeriesCriterion criterion,
                              const AngleGrid& grid, int eval_order) {
    ValidityEstimate out;
    out.criterion = criterion == SeriesCriterion::cauchy ? "cauchy" : "dalembert";
    out.order = par.order();
    out.eval_order = default_eval_order(par, eval_order);

    double best = kInf;
    bool any_component = false;
    for (const auto& [component, name] : kStandardComponents) {
        int failures = 0, total = 0;
        double comp_min = kInf;
        std::vector<AnglePoint> comp_curve;
        for (double phi : effective_phis(par, grid)) {
            for (double theta : grid.thetas(par.res_n())) {
                const auto a = series_coefficients(par, theta, phi, component);
                SeriesEstimate est;
                try {
                    est = run_series_criterion(criterion, a);
                } catch (const std::invalid_argument&) {
                    continue;
                }
                ++total;
                if (est.status != EstimateStatus::converged || !std::isfinite(est.value)) {
                    ++failures;
                    continue;
                }
                comp_curve.push_back({theta, phi, est.value});
                comp_min = std::min(comp_min, est.value);
            }
        }
        const bool ok = total > 0 && failures <= kAngleFailFraction * total &&
                        std::isfinite(comp_min);
        if (!ok) continue;
        any_component = true;
        if (comp_min < best) {
            best = comp_min;
            out.component = name;
            out.curve = std::move(comp_curve);
        }
    }
    if (!any_component) {
        out.status = EstimateStatus::non_convergent;
        return out;
    }
    out.rho_star = best;
    out.u_max = u_max(par, best, grid, out.eval_order);
    return out;
}

std::vector<std::pair<int, double>> series_limit_by_order(const Parametrisation& par,
                                                          SeriesCriterion criterion,
                                                          SeriesComponent component,
                                                          const AngleGrid& grid) {
    std::map<int, double> min_by_order;
    for (double phi : effective_phis(par, grid)) {
        for (double theta : grid.thetas(par.res_n())) {
            const auto a = series_coefficients(par, theta, phi, component);
            SeriesEstimate est;
            try {
                est = run_series_criterion(criterion, a);
            } catch (const std::invalid_argument&) {
                continue;
            }
            for (const auto& [p, v] : est.by_order) {
                if (!std::isfinite(v)) continue;
                auto it = min_by_order.find(p);
                if (it == min_by_order.end() || v < it->second) min_by_order[p] = v;
            }
        }
    }
    return {min_by_order.begin(), min_by_order.end()};
}

ExtrapolationResult extrapolate(const std::vector<std::pair<int, double>>& rho_by_order) {
    if (rho_by_order.size() < 4)
        throw std::invalid_argument("extrapolate: need at least four points");

    // Mean of successive points damps the odd/even oscillation of the raw data.
    const std::size_t m = rho_by_order.size() - 1;
    std::vector<double> x(m), v(m);
    for (std::size_t j = 0; j < m; ++j) {
        x[j] = 0.5 * (rho_by_order[j].first + rho_by_order[j + 1].first);
        v[j] = 0.5 * (rho_by_order[j].second + rho_by_order[j + 1].second);
    }

    double vbar = 0.0;
    for (double vi : v) vbar += std::abs(vi);
    vbar /= static_cast<double>(m);

    // rho(p) = rho_inf + c exp(-gamma p): linear least squares in (rho_inf, c)
    // for fixed gamma, outer scan plus golden-section refinement on gamma.
    const auto fit_for_gamma = [&](double gamma, double& rho_inf, double& c) {
        double s_e = 0, s_ee = 0, s_v = 0, s_ev = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const double e = std::exp(-gamma * x[j]);
            s_e += e;
            s_ee += e * e;
            s_v += v[j];
            s_ev += e * v[j];
        }
        const double n = static_cast<double>(m);
        const double det = n * s_ee - s_e * s_e;
        if (std::abs(det) < 1e-300) {
            rho_inf = s_v / n;
            c = 0.0;
        } else {
            rho_inf = (s_ee * s_v - s_e * s_ev) / det;
            c = (n * s_ev - s_e * s_v) / det;
        }
        double ssr = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double r = v[j] - rho_inf - c * std::exp(-gamma * x[j]);
            ssr += r * r;
        }
        return ssr;
    };

    const int n_gamma = 240;
    double best_gamma = 1e-3, best_ssr = kInf, ri = 0.0, cc = 0.0;
    for (int i = 0; i < n_gamma; ++i) {
        const double gamma = std::exp(std::log(1e-3) + (std::log(3.0) - std::log(1e-3)) * i / (n_gamma - 1));
        double r, c;
        const double ssr = fit_for_gamma(gamma, r, c);
        if (ssr < best_ssr) {
            best_ssr = ssr;
            best_gamma = gamma;
            ri = r;
            cc = c;
        }
    }
    {
        double lo = best_gamma / 1.1, hi = best_gamma * 1.1;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double g1 = hi - gr * (hi - lo), g2 = lo + gr * (hi - lo);
        double r, c;
        double f1 = fit_for_gamma(g1, r, c), f2 = fit_for_gamma(g2, r, c);
        for (int it = 0; it < 200; ++it) {
            if (f1 < f2) {
                hi = g2; g2 = g1; f2 = f1;
                g1 = hi - gr * (hi - lo);
                f1 = fit_for_gamma(g1, r, c);
            } else {
                lo = g1; g1 = g2; f1 = f2;
                g2 = lo + gr * (hi - lo);
                f2 = fit_for_gamma(g2, r, c);
            }
        }
        best_gamma = 0.5 * (lo + hi);
        best_ssr = fit_for_gamma(best_gamma, ri, cc);
    }

    ExtrapolationResult out;
    out.rho_inf = ri;
    out.decay_rate = best_gamma;
    out.amplitude = cc;
    out.residual = vbar > 0.0 ? std::sqrt(best_ssr / static_cast<double>(m)) / vbar : 0.0;
    out.status = (std::isfinite(ri) && ri > 0.0 && out.residual < 0.05)
                     ? EstimateStatus::converged
                     : EstimateStatus::non_convergent;
    return out;
}

double u_max(const Parametrisation& par, double rho, const AngleGrid& grid, int eval_order,
             int row) {
    if (row < 0) row = par.pivot_row();
    const int maxp = default_eval_order(par, eval_order);
    const auto value = [&](double theta, double phi) {
        return std::abs(par.evaluate_W(par.polar_point(rho, theta, phi), maxp)(row));
    };
    double best = 0.0;
    for (double phi : effective_phis(par, grid)) {
        const auto thetas = grid.thetas(par.res_n());
        double local_best = 0.0, local_theta = 0.0;
        for (double theta : thetas) {
            const double v = value(theta, phi);
            if (v > local_best) {
                local_best = v;
                local_theta = theta;
            }
        }
        // Golden-section polish around the best sample.
        const double span = 2.0 * kPi * par.res_n() / grid.n_theta;
        double lo = local_theta - span, hi = local_theta + span;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double t1 = hi - gr * (hi - lo), t2 = lo + gr * (hi - lo);
        double f1 = value(t1, phi), f2 = value(t2, phi);
        for (int it = 0; it < 60; ++it) {
            if (f1 > f2) {
                hi = t2; t2 = t1; f2 = f1;
                t1 = hi - gr * (hi - lo);
                f1 = value(t1, phi);
            } else {
                lo = t1; t1 = t2; f1 = f2;
                t2 = lo + gr * (hi - lo);
                f2 = value(t2, phi);
            }
        }
        best = std::max({best, local_best, f1, f2});
    }
    return best;
}

}  // namespace dpim
