// End-to-end acceptance runs against the published benchmark values for the
// cubic oscillator and the two-degree-of-freedom system. Each numbered block
// prints one PASS/FAIL line; the binary exits nonzero if any block fails.

#include "dpim/oracle.hpp"
#include "dpim/parametrisation.hpp"
#include "dpim/quad_system.hpp"
#include "dpim/rom_dynamics.hpp"
#include "dpim/spectral.hpp"
#include "dpim/validity.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace dpim;

namespace {

int failures = 0;

struct Column {
    std::string label;
    double measured;
    double expected;
    bool ok;
};

bool within(double measured, double expected, double rel_tol) {
    return std::isfinite(measured) && std::abs(measured - expected) <= rel_tol * std::abs(expected);
}

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s  %s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string column_detail(const std::vector<Column>& cols) {
    std::string out;
    for (const auto& c : cols) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s%s=%.4g/%.4g", c.ok ? "" : "!", c.label.c_str(),
                      c.measured, c.expected);
        if (!out.empty()) out += "  ";
        out += buf;
    }
    return out;
}

MasterMode unit_master(const QuadSystem& sys, double target) {
    MasterMode m = select_master(eigenpairs(sys.mechanical()), target);
    return normalize(m, sys.mechanical(), NormalisationScheme::unit_displacement);
}

Parametrisation build(const QuadSystem& sys, double target, int order, int order_na = -1,
                      int total_cap = -1, int res_m = 1, int res_n = 1,
                      Style style = Style::cnf) {
    BuildOptions opt;
    opt.style = style;
    opt.order = order;
    opt.order_na = order_na;
    opt.total_cap = total_cap;
    opt.res_m = res_m;
    opt.res_n = res_n;
    return build_parametrisation(sys, unit_master(sys, target), opt);
}

QuadSystem forced_duffing(double xi, double kappa, double Omega) {
    QuadSystem sys = build_duffing(1.5, xi, 1.0);
    ForcingSpec f;
    f.Fc = Vec::Zero(3);
    f.Fc(1) = 1.0;
    f.omega = Omega;
    f.kappa = kappa;
    return augment_forcing(sys, f);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
    const AngleGrid grid;

    // ---------------------------------------------------------------- 1
    {
        const auto t0 = std::chrono::steady_clock::now();
        const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
        const Parametrisation p15 = build(sys, 1.5, 15);
        const Parametrisation p35 = build(sys, 1.5, 35);

        const auto inv = invariance_limit(p15, sys, 0.01, grid);
        const auto simp = invariance_limit_simplified(p15, sys, 0.01);
        const auto sing = singularity_limit(p15, sys, grid);
        const auto cau = series_limit(p35, SeriesCriterion::cauchy, grid);
        const auto dal = series_limit(p35, SeriesCriterion::dalembert, grid);
        const double elapsed = seconds_since(t0);

        std::vector<Column> cols = {
            {"cauchy", cau.rho_star, 1.361, within(cau.rho_star, 1.361, 0.03)},
            {"dalembert", dal.rho_star, 1.224, within(dal.rho_star, 1.224, 0.03)},
            {"singularity", sing.rho_star, 1.450, within(sing.rho_star, 1.450, 0.03)},
            {"invariance", inv.rho_star, 1.143, within(inv.rho_star, 1.143, 0.03)},
            {"simplified", simp.rho_star, 1.202, within(simp.rho_star, 1.202, 0.03)},
            {"u.cauchy", u_max(p15, cau.rho_star, grid), 1.215,
             within(u_max(p15, cau.rho_star, grid), 1.215, 0.03)},
            {"u.dalembert", u_max(p15, dal.rho_star, grid), 1.126,
             within(u_max(p15, dal.rho_star, grid), 1.126, 0.03)},
            {"u.singularity", sing.u_max, 1.240, within(sing.u_max, 1.240, 0.03)},
            {"u.invariance", inv.u_max, 1.063, within(inv.u_max, 1.063, 0.03)},
            {"u.simplified", simp.u_max, 1.109, within(simp.u_max, 1.109, 0.03)},
            {"runtime[s]", elapsed, 60.0, elapsed < 60.0},
        };
        bool pass = true;
        for (const auto& c : cols) pass = pass && c.ok;
        report(1, "conservative cubic oscillator validity table", pass, column_detail(cols));
    }

    // ---------------------------------------------------------------- 2
    {
        const QuadSystem sys = forced_duffing(0.02, 0.175, 1.5);
        const Parametrisation p15 = build(sys, 1.5, 15, 15);
        const Parametrisation p35 = build(sys, 1.5, 35, 35, 35);

        const auto inv = invariance_limit(p15, sys, 0.01, grid);
        const auto sing = singularity_limit(p15, sys, grid);
        const auto cau = series_limit(p35, SeriesCriterion::cauchy, grid);
        const auto dal = series_limit(p35, SeriesCriterion::dalembert, grid);

        std::vector<Column> cols = {
            {"cauchy", cau.rho_star, 1.427, within(cau.rho_star, 1.427, 0.04)},
            {"dalembert", dal.rho_star, 1.465, within(dal.rho_star, 1.465, 0.04)},
            {"singularity", sing.rho_star, 1.482, within(sing.rho_star, 1.482, 0.04)},
            {"invariance", inv.rho_star, 1.142, within(inv.rho_star, 1.142, 0.04)},
            {"u.cauchy", u_max(p15, cau.rho_star, grid), 1.251,
             within(u_max(p15, cau.rho_star, grid), 1.251, 0.04)},
            {"u.singularity", sing.u_max, 1.257, within(sing.u_max, 1.257, 0.04)},
            {"u.invariance", inv.u_max, 1.071, within(inv.u_max, 1.071, 0.04)},
        };
        bool pass = true;
        for (const auto& c : cols) pass = pass && c.ok;
        report(2, "primary-resonance validity table (xi=0.02, kappa=0.175)", pass,
               column_detail(cols));
    }

    // ---------------------------------------------------------------- 3
    {
        const QuadSystem sys = forced_duffing(0.002, 0.75, 0.5);
        const Parametrisation p15 = build(sys, 1.5, 15, 15, -1, 1, 3);
        const Parametrisation p35 = build(sys, 1.5, 35, 35, 35, 1, 3);

        const auto inv = invariance_limit(p15, sys, 0.01, grid);
        const auto sing = singularity_limit(p15, sys, grid);
        const auto cau = series_limit(p35, SeriesCriterion::cauchy, grid);
        const auto dal = series_limit(p35, SeriesCriterion::dalembert, grid);

        std::vector<Column> cols = {
            {"cauchy", cau.rho_star, 0.996, within(cau.rho_star, 0.996, 0.05)},
            {"dalembert", dal.rho_star, 0.880, within(dal.rho_star, 0.880, 0.05)},
            {"singularity", sing.rho_star, 0.762, within(sing.rho_star, 0.762, 0.05)},
            {"invariance", inv.rho_star, 0.526, within(inv.rho_star, 0.526, 0.05)},
            {"u.cauchy", u_max(p15, cau.rho_star, grid), 1.009,
             within(u_max(p15, cau.rho_star, grid), 1.009, 0.05)},
            {"u.singularity", sing.u_max, 0.830, within(sing.u_max, 0.830, 0.05)},
            {"u.invariance", inv.u_max, 0.602, within(inv.u_max, 0.602, 0.05)},
        };
        bool pass = true;
        for (const auto& c : cols) pass = pass && c.ok;
        report(3, "superharmonic validity table (xi=0.002, kappa=0.75)", pass,
               column_detail(cols));
    }

    // ---------------------------------------------------------------- 4
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<Column> cols;
        {
            const QuadSystem sys = build_two_dof(1.0, 1.57, 0.0, 0.0, 1.0, 1.0);
            const Parametrisation p15 = build(sys, 1.0, 15);
            const Parametrisation p35 = build(sys, 1.0, 35);
            const auto inv = invariance_limit(p15, sys, 0.01, grid);
            const auto sing = singularity_limit(p15, sys, grid);
            const auto cau = series_limit(p35, SeriesCriterion::cauchy, grid);
            const auto dal = series_limit(p35, SeriesCriterion::dalembert, grid);
            cols.push_back({"a.cauchy", cau.rho_star, 0.730, within(cau.rho_star, 0.730, 0.04)});
            cols.push_back({"a.dalembert", dal.rho_star, 0.639, within(dal.rho_star, 0.639, 0.04)});
            cols.push_back({"a.singularity", sing.rho_star, 0.766, within(sing.rho_star, 0.766, 0.04)});
            cols.push_back({"a.invariance", inv.rho_star, 0.630, within(inv.rho_star, 0.630, 0.04)});
        }
        {
            const QuadSystem sys = build_two_dof(1.0, 0.637, 0.0, 0.0, 1.0, 1.0);
            const Parametrisation p15 = build(sys, 1.0, 15);
            const Parametrisation p35 = build(sys, 1.0, 35);
            const auto inv = invariance_limit(p15, sys, 0.01, grid);
            const auto sing = singularity_limit(p15, sys, grid);
            const auto cau = series_limit(p35, SeriesCriterion::cauchy, grid);
            const auto dal = series_limit(p35, SeriesCriterion::dalembert, grid);
            cols.push_back({"b.cauchy", cau.rho_star, 0.517, within(cau.rho_star, 0.517, 0.04)});
            cols.push_back({"b.singularity", sing.rho_star, 0.580, within(sing.rho_star, 0.580, 0.04)});
            cols.push_back({"b.invariance", inv.rho_star, 0.456, within(inv.rho_star, 0.456, 0.04)});
            cols.push_back({"b.dal.status", dal.status == EstimateStatus::non_convergent ? 1.0 : 0.0,
                            1.0, dal.status == EstimateStatus::non_convergent});
        }
        const double elapsed = seconds_since(t0);
        cols.push_back({"runtime[s]", elapsed, 600.0, elapsed < 600.0});
        bool pass = true;
        for (const auto& c : cols) pass = pass && c.ok;
        report(4, "two-dof validity tables (hardening/softening and hardening)", pass,
               column_detail(cols));
    }

    // ---------------------------------------------------------------- 5
    {
        const double k1 = duffing_kappa_linear(1.5, 0.02, 1.144);
        const double k2 = duffing_kappa_refined(1.5, 0.02, 1.0, 1.144);
        const double k3 = duffing_kappa_superharmonic(1.5, 0.002, 1.0, 1.144);

        QuadSystem sys0 = build_two_dof(1.0, 1.57, 0.05, 0.05, 1.0, 1.0);
        ForcingSpec f;
        f.Fc = Vec::Zero(5);
        f.Fc(1) = 1.0;
        f.omega = 1.0;
        f.kappa = 0.07;
        const QuadSystem sys = augment_forcing(sys0, f);
        const Parametrisation par = build(sys, 1.0, 3, 1);
        const double k4 = max_forcing_primary(extract_generic(par, 0.07), 0.63);

        std::vector<Column> cols = {
            {"linear", k1, 0.103, within(k1, 0.103, 0.02)},
            {"refined", k2, 0.116, within(k2, 0.116, 0.02)},
            {"superharmonic", k3, 0.691, within(k3, 0.691, 0.02)},
            {"twodof", k4, 0.0629, within(k4, 0.0629, 0.02)},
        };
        bool pass = true;
        for (const auto& c : cols) pass = pass && c.ok;
        report(5, "closed-form and extracted maximum-forcing amplitudes", pass,
               column_detail(cols));
    }

    // ---------------------------------------------------------------- 6
    {
        const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
        const Parametrisation p15 = build(sys, 1.5, 15);
        std::vector<double> rhos;
        for (double r = 0.05; r <= 1.36; r += 0.05) rhos.push_back(r);
        const auto bb = backbone(p15, rhos);
        double worst_low = 0.0, err_high = 0.0;
        for (const auto& pt : bb) {
            const double exact = oracle::conservative_frequency(1.5, 1.0, pt.u_max);
            const double err = std::abs(pt.omega_nl - exact) / exact;
            if (pt.u_max <= 0.8) worst_low = std::max(worst_low, err);
            if (pt.u_max > 1.15) err_high = std::max(err_high, err);
        }
        const bool pass = worst_low < 0.005 && err_high > worst_low;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "rel err %.2e for u<=0.8 (tol 5e-3); grows to %.2e past u~1.15", worst_low,
                      err_high);
        report(6, "backbone against the period quadrature", pass, buf);
    }

    // ---------------------------------------------------------------- 7
    {
        const QuadSystem sys = forced_duffing(0.02, 0.1, 1.5);
        const Parametrisation p15 = build(sys, 1.5, 15, 15);
        std::vector<double> omegas;
        const int npts = 25;
        for (int i = 0; i < npts; ++i)
            omegas.push_back(1.5 * (0.85 + 0.30 * i / (npts - 1)));
        const auto rom = frc(p15, omegas);
        const auto ref = oracle::shooting_frc(build_duffing(1.5, 0.02, 1.0), sys.forcing(), omegas);
        const double step = omegas[1] - omegas[0];

        double worst = 0.0;
        int compared = 0, excluded = 0;
        for (const auto& s : ref) {
            if (!s.converged || !s.stable) continue;
            // Branch endpoints: no stable neighbour of similar amplitude one
            // step away on one side. Amplitude-at-fixed-frequency comparisons
            // are square-root singular there.
            bool left = false, right = false;
            for (const auto& o : ref) {
                if (!o.converged || !o.stable) continue;
                if (std::abs(o.Omega - (s.Omega - step)) < 0.01 * step &&
                    std::abs(o.amplitude - s.amplitude) < 0.3 * s.amplitude)
                    left = true;
                if (std::abs(o.Omega - (s.Omega + step)) < 0.01 * step &&
                    std::abs(o.amplitude - s.amplitude) < 0.3 * s.amplitude)
                    right = true;
            }
            if (!left || !right) {
                ++excluded;
                continue;
            }
            double best = 1e300;
            for (const auto& r : rom) {
                if (std::abs(r.Omega - s.Omega) > 1e-9 || !r.stable) continue;
                best = std::min(best, std::abs(r.u_max - s.amplitude));
            }
            if (best > 1e200) continue;
            ++compared;
            worst = std::max(worst, best / s.amplitude);
        }
        const bool pass = compared >= 20 && worst < 0.01;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%d stable points, worst rel err %.2e (tol 1e-2); %d fold endpoints left out",
                      compared, worst, excluded);
        report(7, "forced response against the shooting reference (kappa=0.1)", pass, buf);
    }

    // ---------------------------------------------------------------- 8
    {
        const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
        bool pass = true;
        std::string detail;
        for (int order : {3, 5, 9}) {
            const Parametrisation par = build(sys, 1.5, order);
            // The order-(o+1) defect falls below the double-precision floor of
            // the evaluation inside [1e-3, 1e-2] for o >= 5; the fit window is
            // shifted up just enough to clear it while staying asymptotic.
            const double lo = std::max(1e-3, 2.0 * std::pow(1e-12, 1.0 / (order + 1)));
            std::vector<double> xs, ys;
            for (int i = 0; i <= 8; ++i) {
                const double rho = lo * std::pow(4.0, i / 8.0);
                xs.push_back(std::log(rho));
                ys.push_back(std::log(invariance_error(par, sys, par.polar_point(rho, 0.7))));
            }
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const int n = static_cast<int>(xs.size());
            for (int i = 0; i < n; ++i) {
                sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
            }
            const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            pass = pass && std::abs(slope - (order + 1)) < 0.3;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "o=%d slope=%.3f  ", order, slope);
            detail += buf;
        }
        report(8, "invariance-error slope equals order+1", pass, detail + "(tol 0.3)");
    }

    // ---------------------------------------------------------------- 9
    {
        const QuadSystem duff = build_duffing(1.5, 0.0, 1.0);
        const Parametrisation pd = build(duff, 1.5, 15);
        const double full_d = invariance_limit(pd, duff, 0.01, grid).rho_star;
        const double simp_d = invariance_limit_simplified(pd, duff, 0.01).rho_star;

        const QuadSystem tdof = build_two_dof(1.0, 1.57, 0.0, 0.0, 1.0, 1.0);
        const Parametrisation pt = build(tdof, 1.0, 15);
        const double full_t = invariance_limit(pt, tdof, 0.01, grid).rho_star;
        const double simp_t = invariance_limit_simplified(pt, tdof, 0.01).rho_star;

        const double dev_d = std::abs(simp_d - full_d) / full_d;
        const double dev_t = std::abs(simp_t - full_t) / full_t;
        const bool pass = dev_d < 0.10 && dev_t < 0.10;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "duffing %.1f%%, two-dof %.1f%% (tol 10%%)", 100 * dev_d,
                      100 * dev_t);
        report(9, "simplified against full invariance criterion", pass, buf);
    }

    // ---------------------------------------------------------------- 10
    {
        const QuadSystem sys = build_two_dof(1.0, 1.57, 0.0, 0.0, 1.0, 1.0);
        const Parametrisation p15 = build(sys, 1.0, 15);
        const auto det_est = singularity_limit(p15, sys, grid);
        const auto svd_est = singularity_limit_svd(p15, sys, grid);
        const bool pass = svd_est.status == EstimateStatus::converged &&
                          within(svd_est.rho_star, det_est.rho_star, 0.02);
        char buf[200];
        std::snprintf(buf, sizeof(buf), "det=%.4f svd=%s [%s] (tol 2%%)", det_est.rho_star,
                      std::isfinite(svd_est.rho_star) ? std::to_string(svd_est.rho_star).c_str()
                                                      : "none",
                      to_string(svd_est.status));
        report(10, "rank-loss variant against the block determinant (two-dof)", pass, buf);
    }

    // ---------------------------------------------------------------- 11
    {
        const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
        MasterMode base = unit_master(sys, 1.5);
        BuildOptions o15;
        o15.order = 15;
        BuildOptions o25;
        o25.order = 25;

        struct Ref {
            double inv, simp, sing, cau, dal;
            double u_inv, u_sing;
        };
        const auto run_all = [&](const MasterMode& mode) {
            const Parametrisation p15 = build_parametrisation(sys, mode, o15);
            const Parametrisation p25 = build_parametrisation(sys, mode, o25);
            Ref r;
            const auto inv = invariance_limit(p15, sys, 0.01, grid);
            const auto sing = singularity_limit(p15, sys, grid);
            r.inv = inv.rho_star;
            r.simp = invariance_limit_simplified(p15, sys, 0.01).rho_star;
            r.sing = sing.rho_star;
            r.cau = series_limit(p25, SeriesCriterion::cauchy, grid).rho_star;
            r.dal = series_limit(p25, SeriesCriterion::dalembert, grid).rho_star;
            r.u_inv = inv.u_max;
            r.u_sing = sing.u_max;
            return r;
        };
        const Ref ref = run_all(base);
        bool pass = true;
        std::string detail;
        for (double gamma : {0.5, 2.0}) {
            const Ref scaled = run_all(normalize(base, sys, NormalisationScheme::scale, gamma));
            // Singular-point and series radii scale exactly as 1/gamma. The
            // two tolerance-normalised criteria compare against
            // ||A W^(1,1)|| ~ gamma, so their exact law carries an extra
            // gamma^(1/(o+1)).
            const double eps_factor15 = std::pow(gamma, 1.0 / 16.0);
            double worst = 0.0;
            worst = std::max(worst, std::abs(scaled.sing * gamma - ref.sing) / ref.sing);
            worst = std::max(worst, std::abs(scaled.cau * gamma - ref.cau) / ref.cau);
            worst = std::max(worst, std::abs(scaled.dal * gamma - ref.dal) / ref.dal);
            worst = std::max(worst,
                             std::abs(scaled.inv * gamma / eps_factor15 - ref.inv) / ref.inv);
            worst = std::max(worst,
                             std::abs(scaled.simp * gamma / eps_factor15 - ref.simp) / ref.simp);
            // Physical readback is invariant at corresponding amplitudes; the
            // singularity row checks it at its own (exactly covariant) radius.
            const double u_dev = std::abs(scaled.u_sing - ref.u_sing) / ref.u_sing;
            pass = pass && worst < 0.01 && u_dev < 0.01;
            char buf[96];
            std::snprintf(buf, sizeof(buf), "gamma=%.1f rho-dev %.2e u-dev %.2e  ", gamma, worst,
                          u_dev);
            detail += buf;
        }
        report(11, "criteria scale inversely with the eigenvector factor", pass,
               detail + "(tol 1%; tolerance-normalised pair carries gamma^(1/(o+1)))");
    }

    // ---------------------------------------------------------------- 12
    {
        const QuadSystem sys = build_duffing(1.5, 0.0, 1.0);
        const Parametrisation p35 = build(sys, 1.5, 35);
        const auto by_order =
            series_limit_by_order(p35, SeriesCriterion::cauchy, SeriesComponent::displacement, grid);
        std::vector<std::pair<int, double>> low;
        for (const auto& [p, v] : by_order)
            if (p <= 15) low.push_back({p, v});
        const auto fit = extrapolate(low);
        const double target = series_limit(p35, SeriesCriterion::cauchy, grid).rho_star;
        const bool pass =
            fit.status == EstimateStatus::converged && within(fit.rho_inf, target, 0.05);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "extrapolated %.4f vs order-35 value %.4f (tol 5%%) [%s]",
                      fit.rho_inf, target, to_string(fit.status));
        report(12, "exponential extrapolation from low-order data", pass, buf);
    }

    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
