#include "dpim/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace dpim::oracle {

namespace {

Eigen::MatrixXd real_part_checked(const Mat& m, const char* what) {
    if (m.size() > 0 && m.imag().cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw std::invalid_argument(std::string("oracle: ") + what + " must be real-valued");
    return m.real();
}

RVec real_vector_checked(const Vec& v, const char* what) {
    if (v.size() > 0 && v.imag().cwiseAbs().maxCoeff() > 1e-12 * (1.0 + v.cwiseAbs().maxCoeff()))
        throw std::invalid_argument(std::string("oracle: ") + what + " must be real-valued");
    return v.real();
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

template <typename Rhs, typename Observer>
void dopri5(const Rhs& rhs, RVec y, double t0, double t1, double tol, Observer&& observe,
            int* accepted_out = nullptr, int* rejected_out = nullptr) {
    const int n = static_cast<int>(y.size());
    double t = t0;
    double h = (t1 - t0) * 1e-3;
    const double hmin = (t1 - t0) * 1e-14;
    int accepted = 0, rejected = 0;
    RVec k1 = rhs(t, y), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    observe(t, y);
    while (t < t1) {
        if (t + h > t1) h = t1 - t;
        k2 = rhs(t + c2 * h, y + h * (a21 * k1));
        k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        RVec ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = rhs(t + h, ynew);
        RVec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        // Run the controller an order of magnitude below the requested
        // tolerance so accumulated drift stays near it over long horizons.
        const double tol_eff = 0.1 * tol;
        double scale = 0.0;
        for (int i = 0; i < n; ++i) {
            const double s =
                std::abs(err(i)) / (tol_eff + tol_eff * std::max(std::abs(y(i)), std::abs(ynew(i))));
            scale = std::max(scale, s);
        }
        if (scale <= 1.0) {
            t += h;
            y = std::move(ynew);
            k1 = k7;
            ++accepted;
            observe(t, y);
        } else {
            ++rejected;
        }
        const double factor = scale > 0.0 ? 0.9 * std::pow(scale, -0.2) : 5.0;
        h *= std::min(5.0, std::max(0.2, factor));
        if (h < hmin) throw std::runtime_error("oracle: step size collapse during integration");
    }
    if (accepted_out) *accepted_out = accepted;
    if (rejected_out) *rejected_out = rejected;
}

}  // namespace

ReducedOde::ReducedOde(const QuadSystem& sys) {
    const QuadSystem mech = sys.mechanical();
    Dp_ = mech.n_physical();
    Da_ = mech.n_algebraic();
    A_ = real_part_checked(mech.A(), "A");
    Eigen::MatrixXd B = real_part_checked(mech.B(), "B");
    Bpp_inv_ = B.topLeftCorner(Dp_, Dp_).inverse();

    for (const auto& e : mech.Q()) {
        QuadEntry r = e;
        if (std::abs(e.value.imag()) > 1e-14 * (1.0 + std::abs(e.value)))
            throw std::invalid_argument("oracle: quadratic entries must be real-valued");
        if (e.i >= Dp_ && (e.j >= Dp_ || e.k >= Dp_))
            throw std::invalid_argument(
                "oracle: algebraic rows must define auxiliaries from physical variables only");
        Q_.push_back(r);
    }
    if (Da_ > 0) {
        Aaa_inv_ = A_.bottomRightCorner(Da_, Da_).inverse();
        Aap_ = A_.bottomLeftCorner(Da_, Dp_);
    }
    if (sys.has_forcing()) {
        const auto& f = sys.forcing();
        Fc_ = real_vector_checked(f.Fc, "Fc").head(Dp_);
        Fs_ = real_vector_checked(f.Fs, "Fs").head(Dp_);
        omega_ = f.omega;
        kappa_ = f.kappa;
    } else {
        Fc_ = RVec::Zero(Dp_);
        Fs_ = RVec::Zero(Dp_);
    }
}

RVec ReducedOde::auxiliaries(const RVec& yp) const {
    if (Da_ == 0) return RVec(0);
    RVec q = RVec::Zero(Da_);
    for (const auto& e : Q_) {
        if (e.i < Dp_) continue;
        q(e.i - Dp_) += e.value.real() * yp(e.j) * yp(e.k);
    }
    return -Aaa_inv_ * (Aap_ * yp + q);
}

RVec ReducedOde::assemble_full(const RVec& yp) const {
    RVec full(Dp_ + Da_);
    full.head(Dp_) = yp;
    if (Da_ > 0) full.tail(Da_) = auxiliaries(yp);
    return full;
}

double ReducedOde::algebraic_residual(const RVec& y_full) const {
    if (Da_ == 0) return 0.0;
    RVec res = A_.bottomRows(Da_) * y_full;
    for (const auto& e : Q_) {
        if (e.i < Dp_) continue;
        res(e.i - Dp_) += e.value.real() * y_full(e.j) * y_full(e.k);
    }
    return res.cwiseAbs().maxCoeff();
}

RVec ReducedOde::rhs(double t, const RVec& yp) const {
    const RVec full = assemble_full(yp);
    RVec r = A_.topRows(Dp_) * full;
    for (const auto& e : Q_) {
        if (e.i >= Dp_) continue;
        r(e.i) += e.value.real() * full(e.j) * full(e.k);
    }
    if (kappa_ != 0.0)
        r += kappa_ * (std::cos(omega_ * t) * Fc_ + std::sin(omega_ * t) * Fs_);
    return Bpp_inv_ * r;
}

Trajectory integrate(const QuadSystem& sys, const Vec& y0_full, double T, double tol,
                     double t0) {
    ReducedOde ode(sys);
    const int Dm = sys.dim_mechanical();
    if (y0_full.size() != Dm && y0_full.size() != ode.dim())
        throw std::invalid_argument("integrate: initial state has wrong dimension");
    RVec y0 = real_vector_checked(y0_full, "y0").head(ode.dim());
    if (y0_full.size() == Dm) {
        RVec full = real_vector_checked(y0_full, "y0");
        if (ode.algebraic_residual(full) > 1e-10 * (1.0 + full.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("integrate: initial state violates the algebraic rows");
    }
    Trajectory traj;
    dopri5(
        [&](double t, const RVec& y) { return ode.rhs(t, y); }, y0, t0, t0 + T, tol,
        [&](double t, const RVec& y) {
            traj.t.push_back(t);
            traj.y.push_back(y);
            traj.y_full.push_back(ode.assemble_full(y));
        },
        &traj.accepted, &traj.rejected);
    return traj;
}

RVec propagate(const ReducedOde& ode, const RVec& yp0, double t0, double t1, double tol) {
    RVec out = yp0;
    dopri5([&](double t, const RVec& y) { return ode.rhs(t, y); }, yp0, t0, t1, tol,
           [&](double, const RVec& y) { out = y; });
    return out;
}

double conservative_frequency(double omega, double h, double a, double tol) {
    if (a == 0.0) return omega;
    const double w2 = omega * omega;
    if (w2 + h * a * a <= 0.0)
        throw std::invalid_argument("conservative_frequency: non-oscillatory energy level");
    // T = 4 * int_0^{pi/2} dpsi / sqrt(w^2 + h a^2 (1 + sin^2 psi)/2), after x = a sin psi.
    const auto integrand = [&](double psi) {
        const double s = std::sin(psi);
        return 1.0 / std::sqrt(w2 + 0.5 * h * a * a * (1.0 + s * s));
    };
    // Adaptive Simpson on a smooth integrand.
    struct Simpson {
        double operator()(const std::function<double(double)>& f, double lo, double hi,
                          double flo, double fmid, double fhi, double acc, double eps,
                          int depth) const {
            const double mid = 0.5 * (lo + hi);
            const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
            const double flm = f(lmid), frm = f(rmid);
            const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            if (depth > 40 || std::abs(left + right - acc) < 15.0 * eps)
                return left + right + (left + right - acc) / 15.0;
            return (*this)(f, lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1) +
                   (*this)(f, mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1);
        }
    };
    const double lo = 0.0, hi = M_PI / 2.0;
    const double flo = integrand(lo), fhi = integrand(hi), fmid = integrand(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    const double integral =
        Simpson{}(integrand, lo, hi, flo, fmid, fhi, whole, tol * std::abs(whole) + 1e-300, 0);
    const double period = 4.0 * integral;
    return 2.0 * M_PI / period;
}

std::vector<FrcPoint> shooting_frc(const QuadSystem& sys, const ForcingSpec& forcing,
                                   const std::vector<double>& omegas, int res_n, double tol,
                                   int amplitude_row) {
    std::vector<FrcPoint> out;

    const auto solve_at = [&](double Omega, const RVec& guess, FrcPoint& pt) -> bool {
        ForcingSpec f = forcing;
        f.omega = Omega;
        QuadSystem forced = augment_forcing(sys.has_forcing() ? sys.mechanical() : sys, f);
        ReducedOde ode(forced);
        const int n = ode.dim();
        const double T = 2.0 * M_PI * res_n / Omega;
        RVec x = guess.size() == n ? guess : RVec::Zero(n);
        bool converged = false;
        Eigen::MatrixXd monodromy(n, n);
        for (int iter = 0; iter < 25; ++iter) {
            const RVec fx = propagate(ode, x, 0.0, T, tol) - x;
            const double res = fx.cwiseAbs().maxCoeff();
            // Monodromy by forward differences, reused for the Newton matrix.
            for (int j = 0; j < n; ++j) {
                const double dx = 1e-7 * (1.0 + std::abs(x(j)));
                RVec xp = x;
                xp(j) += dx;
                monodromy.col(j) = (propagate(ode, xp, 0.0, T, tol) - (fx + x)) / dx;
            }
            if (res < 1e-9 * (1.0 + x.cwiseAbs().maxCoeff())) {
                converged = true;
                break;
            }
            Eigen::MatrixXd J = monodromy - Eigen::MatrixXd::Identity(n, n);
            const RVec step = J.partialPivLu().solve(fx);
            if (!step.allFinite()) return false;
            x -= step;
            if (x.cwiseAbs().maxCoeff() > 1e6) return false;
        }
        if (!converged) return false;

        pt.Omega = Omega;
        pt.y0 = x;
        pt.converged = true;
        const Eigen::VectorXcd mult = Eigen::EigenSolver<Eigen::MatrixXd>(monodromy).eigenvalues();
        pt.stable = mult.cwiseAbs().maxCoeff() < 1.0 + 1e-6;
        double amp = 0.0;
        const int samples = 600;
        RVec y = x;
        for (int s = 0; s < samples; ++s) {
            amp = std::max(amp, std::abs(y(amplitude_row)));
            y = propagate(ode, y, s * T / samples, (s + 1) * T / samples, tol);
        }
        pt.amplitude = amp;
        return true;
    };

    // Sweep up with warm starts, then down: the two passes together capture
    // both stable branches across a bistable window. Distinct orbits found at
    // the same frequency are both reported.
    std::vector<FrcPoint> down(omegas.size());
    RVec warm;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        FrcPoint pt;
        if (solve_at(omegas[i], warm, pt)) {
            out.push_back(pt);
            warm = pt.y0;
        } else {
            warm.resize(0);
        }
    }
    warm.resize(0);
    for (std::size_t ii = omegas.size(); ii-- > 0;) {
        FrcPoint pt;
        if (solve_at(omegas[ii], warm, pt)) {
            warm = pt.y0;
            down[ii] = pt;
        } else {
            warm.resize(0);
        }
    }
    for (const auto& pt : down) {
        if (!pt.converged) continue;
        bool duplicate = false;
        for (const auto& existing : out) {
            if (existing.Omega == pt.Omega &&
                (existing.y0 - pt.y0).cwiseAbs().maxCoeff() <
                    1e-5 * (1.0 + pt.y0.cwiseAbs().maxCoeff())) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) out.push_back(pt);
    }
    std::sort(out.begin(), out.end(),
              [](const FrcPoint& a, const FrcPoint& b) { return a.Omega < b.Omega; });
    return out;
}

}  // namespace dpim::oracle
