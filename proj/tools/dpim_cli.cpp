// Batch front-end: build or load a quadratic DAE, run the parametrisation,
// validity criteria, backbone/FRC analyses and the full-order references,
// emitting plot-ready CSV and JSON artifacts.

#include "dpim/oracle.hpp"
#include "dpim/parametrisation.hpp"
#include "dpim/quad_system.hpp"
#include "dpim/rom_dynamics.hpp"
#include "dpim/spectral.hpp"
#include "dpim/validity.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace dpim;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct RunConfig {
    std::string system = "duffing";
    std::string json_path;
    double omega = 1.5, xi = 0.0, h = 1.0;
    double omega1 = 1.0, omega2 = 1.57, xi1 = 0.0, xi2 = 0.0, h1 = 1.0, h2 = 1.0;
    double kappa = 0.0;
    double Omega = 0.0;      // expansion frequency; 0 keeps the run autonomous
    int res_m = 1, res_n = 1;
    std::string style = "cnf";
    int order = 15;
    int order_na = -1;
    double eps = 0.01;
    int theta_samples = 64;
    int phi_samples = 4;
    int eval_order = -1;
    double target = 0.0;     // master selection frequency; 0 picks the default
    std::string out_dir = ".";
};

void add_common_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--system", cfg.system, "builtin system: duffing | twodof");
    cmd->add_option("--json", cfg.json_path, "path to a JSON system file (overrides --system)");
    cmd->add_option("--omega", cfg.omega, "duffing linear frequency");
    cmd->add_option("--xi", cfg.xi, "duffing damping ratio");
    cmd->add_option("--h", cfg.h, "duffing cubic coefficient");
    cmd->add_option("--omega1", cfg.omega1, "first frequency of the 2-dof system");
    cmd->add_option("--omega2", cfg.omega2, "second frequency of the 2-dof system");
    cmd->add_option("--xi1", cfg.xi1, "first damping ratio of the 2-dof system");
    cmd->add_option("--xi2", cfg.xi2, "second damping ratio of the 2-dof system");
    cmd->add_option("--h1", cfg.h1, "self cubic coefficient of the 2-dof system");
    cmd->add_option("--h2", cfg.h2, "coupling cubic coefficient of the 2-dof system");
    cmd->add_option("--kappa", cfg.kappa, "forcing amplitude (0 keeps the system autonomous)");
    cmd->add_option("--Omega", cfg.Omega, "expansion excitation frequency");
    cmd->add_option("--res-m", cfg.res_m, "resonance lock numerator m in Omega = (m/n) theta'");
    cmd->add_option("--res-n", cfg.res_n, "resonance lock denominator n");
    cmd->add_option("--style", cfg.style, "parametrisation style: cnf | graph")
        ->check(CLI::IsMember({"cnf", "graph"}));
    cmd->add_option("--order", cfg.order, "expansion order");
    cmd->add_option("--order-na", cfg.order_na, "cap on forcing exponents (-1 tracks order)");
    cmd->add_option("--eps", cfg.eps, "invariance-error tolerance");
    cmd->add_option("--theta-samples", cfg.theta_samples, "phase samples per response period");
    cmd->add_option("--phi-samples", cfg.phi_samples, "forcing phase-shift samples");
    cmd->add_option("--eval-order", cfg.eval_order, "truncation used for physical amplitudes");
    cmd->add_option("--target", cfg.target, "master-mode frequency (defaults per system)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
}

QuadSystem make_system(const RunConfig& cfg) {
    if (!cfg.json_path.empty()) return load_system(cfg.json_path);
    QuadSystem sys = cfg.system == "twodof"
                         ? build_two_dof(cfg.omega1, cfg.omega2, cfg.xi1, cfg.xi2, cfg.h1, cfg.h2)
                         : build_duffing(cfg.omega, cfg.xi, cfg.h);
    if (cfg.kappa != 0.0) {
        if (cfg.Omega <= 0.0)
            throw CLI::ValidationError("--Omega", "forced runs need a positive expansion frequency");
        ForcingSpec forcing;
        forcing.Fc = Vec::Zero(sys.dim());
        forcing.Fc(1) = 1.0;   // cosine load on the master force balance row
        forcing.Fs = Vec::Zero(sys.dim());
        forcing.omega = cfg.Omega;
        forcing.kappa = cfg.kappa;
        sys = augment_forcing(sys, forcing);
    }
    return sys;
}

double default_target(const RunConfig& cfg, const QuadSystem& sys) {
    if (cfg.target > 0.0) return cfg.target;
    if (!cfg.json_path.empty()) {
        // Lowest mechanical frequency of an imported system.
        const auto pairs = eigenpairs(sys.mechanical());
        for (const auto& p : pairs)
            if (p.lambda.imag() > 1e-12) return p.lambda.imag();
        throw CLI::ValidationError("--target", "no oscillatory pair found; pass --target");
    }
    return cfg.system == "twodof" ? cfg.omega1 : cfg.omega;
}

Parametrisation run_parametrisation(const RunConfig& cfg, const QuadSystem& sys) {
    const auto pairs = eigenpairs(sys.mechanical());
    MasterMode master = select_master(pairs, default_target(cfg, sys));
    master = normalize(master, sys.mechanical(), NormalisationScheme::unit_displacement);
    BuildOptions opt;
    opt.style = cfg.style == "graph" ? Style::graph : Style::cnf;
    opt.order = cfg.order;
    opt.order_na = cfg.order_na;
    opt.res_m = cfg.res_m;
    opt.res_n = cfg.res_n;
    return build_parametrisation(sys, master, opt);
}

AngleGrid make_grid(const RunConfig& cfg) {
    AngleGrid grid;
    grid.n_theta = cfg.theta_samples;
    grid.phis.clear();
    for (int i = 0; i < cfg.phi_samples; ++i)
        grid.phis.push_back(2.0 * 3.141592653589793238462643383279502884 * i / cfg.phi_samples);
    return grid;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand) {
    json j;
    j["subcommand"] = subcommand;
    j["system"] = cfg.json_path.empty() ? cfg.system : cfg.json_path;
    j["style"] = cfg.style;
    j["order"] = cfg.order;
    j["order_na"] = cfg.order_na;
    j["eps"] = cfg.eps;
    j["kappa"] = cfg.kappa;
    j["Omega"] = cfg.Omega;
    j["res_m"] = cfg.res_m;
    j["res_n"] = cfg.res_n;
    j["theta_samples"] = cfg.theta_samples;
    j["phi_samples"] = cfg.phi_samples;
    if (cfg.json_path.empty()) {
        if (cfg.system == "twodof") {
            j["parameters"] = {{"omega1", cfg.omega1}, {"omega2", cfg.omega2}, {"xi1", cfg.xi1},
                               {"xi2", cfg.xi2},       {"h1", cfg.h1},         {"h2", cfg.h2}};
        } else {
            j["parameters"] = {{"omega", cfg.omega}, {"xi", cfg.xi}, {"h", cfg.h}};
        }
    }
    auto out = open_out(cfg, "manifest.json");
    out << j.dump(2) << "\n";
}

void write_estimate(const RunConfig& cfg, const ValidityEstimate& est) {
    auto csv = open_out(cfg, est.criterion + "_angles.csv");
    csv << "criterion,theta,phi,rho\n";
    for (const auto& pt : est.curve)
        csv << est.criterion << "," << fmt(pt.theta) << "," << fmt(pt.phi) << "," << fmt(pt.rho)
            << "\n";
    json j;
    j["criterion"] = est.criterion;
    j["rho_star"] = est.rho_star;
    j["u_max"] = est.u_max;
    j["epsilon"] = est.epsilon;
    j["order"] = est.order;
    j["eval_order"] = est.eval_order;
    j["status"] = to_string(est.status);
    if (!est.component.empty()) j["component"] = est.component;
    auto out = open_out(cfg, est.criterion + "_summary.json");
    out << j.dump(2) << "\n";
}

int cmd_parametrise(const RunConfig& cfg) {
    const QuadSystem sys = make_system(cfg);
    const Parametrisation par = run_parametrisation(cfg, sys);
    write_manifest(cfg, "parametrise");
    dump_coefficients(par, (std::filesystem::path(cfg.out_dir) / "coefficients.json").string());
    std::cout << "parametrisation: order " << par.order() << ", " << par.n_normal()
              << " normal variables, state dimension " << par.dim() << "\n";
    return 0;
}

int cmd_validity(const RunConfig& cfg, const std::vector<std::string>& criteria) {
    const QuadSystem sys = make_system(cfg);
    const Parametrisation par = run_parametrisation(cfg, sys);
    const AngleGrid grid = make_grid(cfg);
    write_manifest(cfg, "validity");

    const auto want = [&](const std::string& name) {
        if (criteria.empty()) return false;
        if (criteria.size() == 1 && criteria.front() == "all") return true;
        return std::find(criteria.begin(), criteria.end(), name) != criteria.end();
    };

    std::vector<ValidityEstimate> results;
    if (want("cauchy")) results.push_back(series_limit(par, SeriesCriterion::cauchy, grid, cfg.eval_order));
    if (want("dalembert"))
        results.push_back(series_limit(par, SeriesCriterion::dalembert, grid, cfg.eval_order));
    if (want("singularity")) results.push_back(singularity_limit(par, sys, grid, {}, cfg.eval_order));
    if (want("singularity-svd"))
        results.push_back(singularity_limit_svd(par, sys, grid, cfg.eval_order));
    if (want("invariance")) results.push_back(invariance_limit(par, sys, cfg.eps, grid, cfg.eval_order));
    if (want("invariance-simplified") && !par.forced())
        results.push_back(invariance_limit_simplified(par, sys, cfg.eps, cfg.eval_order));

    if (results.empty()) {
        std::cerr << "validity: no criteria requested; use --criteria all or a list\n";
        return kExitConfig;
    }

    std::printf("%-24s %12s %12s   %s\n", "criterion", "rho", "u_max", "status");
    for (const auto& est : results) {
        write_estimate(cfg, est);
        std::printf("%-24s %12.6g %12.6g   %s\n", est.criterion.c_str(), est.rho_star, est.u_max,
                    to_string(est.status));
    }
    return 0;
}

int cmd_backbone(const RunConfig& cfg, double rho_max, int n_points) {
    const QuadSystem sys = make_system(cfg);
    const Parametrisation par = run_parametrisation(cfg, sys);
    write_manifest(cfg, "backbone");
    std::vector<double> rhos;
    for (int i = 1; i <= n_points; ++i) rhos.push_back(rho_max * i / n_points);
    const auto curve = backbone(par, rhos, cfg.eval_order);
    auto csv = open_out(cfg, "backbone.csv");
    csv << "rho,omega_nl,u_max\n";
    for (const auto& pt : curve)
        csv << fmt(pt.rho) << "," << fmt(pt.omega_nl) << "," << fmt(pt.u_max) << "\n";
    std::cout << "backbone: " << curve.size() << " points written\n";
    return 0;
}

std::vector<double> frequency_grid(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
    return out;
}

int cmd_frc(const RunConfig& cfg, double om_lo, double om_hi, int n_points) {
    const QuadSystem sys = make_system(cfg);
    if (!sys.has_forcing()) {
        std::cerr << "frc: a forced system is required; pass --kappa and --Omega\n";
        return kExitConfig;
    }
    const Parametrisation par = run_parametrisation(cfg, sys);
    write_manifest(cfg, "frc");
    FrcOptions opt;
    opt.eval_order = cfg.eval_order;
    const auto points = frc(par, frequency_grid(om_lo, om_hi, n_points), opt);
    auto csv = open_out(cfg, "frc.csv");
    csv << "omega,rho,phi,u_max,stable\n";
    for (const auto& pt : points)
        csv << fmt(pt.Omega) << "," << fmt(pt.rho) << "," << fmt(pt.phi) << "," << fmt(pt.u_max)
            << "," << (pt.stable ? 1 : 0) << "\n";
    std::cout << "frc: " << points.size() << " fixed points written\n";
    return 0;
}

int cmd_oracle(const RunConfig& cfg, double om_lo, double om_hi, int n_points) {
    const QuadSystem sys = make_system(cfg);
    if (!sys.has_forcing()) {
        std::cerr << "oracle: a forced system is required; pass --kappa and --Omega\n";
        return kExitConfig;
    }
    write_manifest(cfg, "oracle");
    const auto points = oracle::shooting_frc(sys.mechanical(), sys.forcing(),
                                             frequency_grid(om_lo, om_hi, n_points), cfg.res_n);
    auto csv = open_out(cfg, "oracle_frc.csv");
    csv << "omega,amplitude,stable\n";
    for (const auto& pt : points) {
        if (!pt.converged) continue;
        csv << fmt(pt.Omega) << "," << fmt(pt.amplitude) << "," << (pt.stable ? 1 : 0) << "\n";
    }
    std::cout << "oracle: " << points.size() << " periodic orbits written\n";
    return 0;
}

int cmd_max_forcing(const RunConfig& cfg, double rho_limit) {
    RunConfig forced = cfg;
    if (forced.kappa == 0.0) forced.kappa = 1e-3;   // probe load for coefficient extraction
    if (forced.Omega <= 0.0)
        forced.Omega = forced.system == "twodof" ? forced.omega1 : forced.omega;
    if (forced.order < 3) forced.order = 3;
    const QuadSystem sys = make_system(forced);
    const Parametrisation par = run_parametrisation(forced, sys);
    const auto coeffs = extract_generic(par, sys.forcing().kappa);
    const double kappa_max = max_forcing_primary(coeffs, rho_limit);
    write_manifest(cfg, "max-forcing");
    json j;
    j["rho_limit"] = rho_limit;
    j["kappa_max"] = kappa_max;
    j["f1"] = {coeffs.f1.real(), coeffs.f1.imag()};
    j["f2"] = {coeffs.f2.real(), coeffs.f2.imag()};
    j["c3"] = {coeffs.c3.real(), coeffs.c3.imag()};
    auto out = open_out(cfg, "max_forcing.json");
    out << j.dump(2) << "\n";
    std::printf("kappa_max = %.6g at rho = %.6g\n", kappa_max, rho_limit);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Invariant-manifold reduction of quadratic DAE systems with validity diagnostics"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* parametrise = app.add_subcommand("parametrise", "compute and dump the coefficient tables");
    add_common_flags(parametrise, cfg);

    std::vector<std::string> criteria;
    auto* validity = app.add_subcommand("validity", "evaluate validity-limit criteria");
    add_common_flags(validity, cfg);
    validity->add_option("--criteria", criteria,
                         "all | cauchy dalembert singularity singularity-svd invariance "
                         "invariance-simplified");

    double rho_max = 1.5;
    int n_points = 40;
    auto* backbone_cmd = app.add_subcommand("backbone", "amplitude-frequency curve");
    add_common_flags(backbone_cmd, cfg);
    backbone_cmd->add_option("--rho-max", rho_max, "largest normal amplitude");
    backbone_cmd->add_option("--points", n_points, "number of samples");

    double om_lo = 0.0, om_hi = 0.0;
    auto* frc_cmd = app.add_subcommand("frc", "forced response from the reduced dynamics");
    add_common_flags(frc_cmd, cfg);
    frc_cmd->add_option("--omega-lo", om_lo, "sweep start")->required();
    frc_cmd->add_option("--omega-hi", om_hi, "sweep end")->required();
    frc_cmd->add_option("--points", n_points, "number of sweep samples");

    auto* oracle_cmd = app.add_subcommand("oracle", "forced response from full-order shooting");
    add_common_flags(oracle_cmd, cfg);
    oracle_cmd->add_option("--omega-lo", om_lo, "sweep start")->required();
    oracle_cmd->add_option("--omega-hi", om_hi, "sweep end")->required();
    oracle_cmd->add_option("--points", n_points, "number of sweep samples");

    double rho_limit = 0.0;
    auto* maxf = app.add_subcommand("max-forcing", "largest safe forcing for a given radius");
    add_common_flags(maxf, cfg);
    maxf->add_option("--rho", rho_limit, "validity radius of the unforced system")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (parametrise->parsed()) return cmd_parametrise(cfg);
        if (validity->parsed()) return cmd_validity(cfg, criteria);
        if (backbone_cmd->parsed()) return cmd_backbone(cfg, rho_max, n_points);
        if (frc_cmd->parsed()) return cmd_frc(cfg, om_lo, om_hi, n_points);
        if (oracle_cmd->parsed()) return cmd_oracle(cfg, om_lo, om_hi, n_points);
        if (maxf->parsed()) return cmd_max_forcing(cfg, rho_limit);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitConfig;
}
