#include "meanforce/cli/run.hpp"

#include "meanforce/oracle.hpp"
#include "meanforce/response.hpp"
#include "meanforce/thermo.hpp"
#include "meanforce/version.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace meanforce::cli {

namespace {

/// Relative tolerance of every oracle-compare quantity.
constexpr double kOracleTolerance = 0.01;

nlohmann::json matrix_json(const Mat3& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return rows;
}

/// JSON has no representation for nan or inf; those become null.
nlohmann::json number_json(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

class CsvWriter {
public:
    explicit CsvWriter(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            out_ << (first ? "" : ",") << h;
            first = false;
        }
        out_ << '\n';
    }

    CsvWriter& cell(double v) { return raw(format_number(v)); }
    CsvWriter& cell(const std::string& s) { return raw(s); }
    CsvWriter& cell(int v) { return raw(std::to_string(v)); }

    void end_row() {
        out_ << '\n';
        first_ = true;
    }

    std::string str() const { return out_.str(); }

private:
    CsvWriter& raw(const std::string& s) {
        out_ << (first_ ? "" : ",") << s;
        first_ = false;
        return *this;
    }

    std::ostringstream out_;
    bool first_ = true;
};

const char* pass_fail(bool ok) { return ok ? "pass" : "fail"; }

std::vector<double> validation_grid(const ModelSpec& spec) {
    double scale = spec.omega0;
    for (const auto& band : spec.bands) scale = std::max(scale, band.resonances.maxCoeff());
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
    std::vector<double> grid;
    constexpr int kPoints = 201;
    for (int k = 0; k < kPoints; ++k) {
        grid.push_back(scale * std::pow(10.0, -2.0 + 4.0 * k / (kPoints - 1)));
    }
    return grid;
}

RunOutcome run_validate(const RunConfig& cfg) {
    const ValidationReport r = validate_model<3>(cfg.model, validation_grid(cfg.model), cfg.quadrature);
    RunOutcome out;
    double kk_worst = 0.0;
    nlohmann::json kk = nlohmann::json::array();
    for (const auto& s : r.kk_samples) {
        kk.push_back({{"omega", s.omega}, {"relative_residual", number_json(s.relative_residual)}});
        kk_worst = std::max(kk_worst, s.relative_residual);
    }
    const double min_static = r.static_eigenvalues.empty() ? std::nan("")
                                                           : r.static_eigenvalues.front();
    out.report["flags"] = {{"parameters_valid", pass_fail(r.parameters_valid)},
                           {"rotations_orthogonal", pass_fail(r.rotations_orthogonal)},
                           {"static_stability", pass_fail(r.static_stability)},
                           {"passivity", pass_fail(r.passivity)},
                           {"kramers_kronig", pass_fail(r.kramers_kronig)}};
    nlohmann::json eig = nlohmann::json::array();
    for (double e : r.static_eigenvalues) eig.push_back(e);
    out.report["outputs"] = {{"static_eigenvalues", eig},
                             {"min_passivity_eigenvalue", number_json(r.min_passivity_eigenvalue)},
                             {"kramers_kronig_samples", kk}};

    CsvWriter csv({"check", "status", "value"});
    csv.cell(std::string("parameters_valid")).cell(std::string(pass_fail(r.parameters_valid))).cell(std::string());
    csv.end_row();
    csv.cell(std::string("rotations_orthogonal")).cell(std::string(pass_fail(r.rotations_orthogonal))).cell(std::string());
    csv.end_row();
    csv.cell(std::string("static_stability")).cell(std::string(pass_fail(r.static_stability))).cell(min_static);
    csv.end_row();
    csv.cell(std::string("passivity")).cell(std::string(pass_fail(r.passivity))).cell(r.min_passivity_eigenvalue);
    csv.end_row();
    csv.cell(std::string("kramers_kronig")).cell(std::string(pass_fail(r.kramers_kronig))).cell(kk_worst);
    csv.end_row();
    out.csv = csv.str();
    out.exit_code = r.passed() ? kExitOk : kExitTaskFailed;
    return out;
}

RunOutcome run_thermo_sweep(const RunConfig& cfg, const RunOptions& opts) {
    const SusceptibilityModel model(cfg.model);
    const auto points = thermo_sweep(model, cfg.temperatures, cfg.quadrature, opts.threads);
    RunOutcome out;
    CsvWriter csv({"T", "U_star", "U_alt", "F_star", "S_star", "E_bath", "E_int",
                   "consistency_residual"});
    nlohmann::json rows = nlohmann::json::array();
    bool all_ok = true;
    bool any_cutoff = false;
    for (const auto& p : points) {
        const double nan = std::nan("");
        const double residual = std::max(p.legendre_residual, p.energy_balance_residual);
        csv.cell(p.T);
        for (double v : {p.U_star, p.U_alt, p.F_star, p.S_star, p.E_bath, p.E_int, residual}) {
            csv.cell(p.ok ? v : nan);
        }
        csv.end_row();
        nlohmann::json row = {{"T", number_json(p.T)}, {"ok", p.ok}};
        if (p.ok) {
            row.update({{"U_star", p.U_star},
                        {"U_alt", p.U_alt},
                        {"F_star", p.F_star},
                        {"S_star", p.S_star},
                        {"E_bath", p.E_bath},
                        {"E_int", p.E_int},
                        {"quad_error", p.quad_error},
                        {"legendre_residual", p.legendre_residual},
                        {"energy_balance_residual", p.energy_balance_residual},
                        {"bath_energy_cutoff_sensitive", p.cutoff_sensitive}});
        } else {
            row["error"] = p.error;
        }
        rows.push_back(row);
        all_ok = all_ok && p.ok;
        any_cutoff = any_cutoff || (p.ok && p.cutoff_sensitive);
    }
    out.report["outputs"] = {{"points", rows}};
    out.report["flags"] = {{"all_points_ok", all_ok}, {"bath_energy_cutoff_sensitive", any_cutoff}};
    out.csv = csv.str();
    out.exit_code = all_ok ? kExitOk : kExitTaskFailed;
    return out;
}

void add_matrix_cells(CsvWriter& csv, const Mat3& m) {
    csv.cell(m(0, 0)).cell(m(1, 1)).cell(m(2, 2)).cell(m(0, 1)).cell(m(0, 2)).cell(m(1, 2));
}

RunOutcome run_correlators(const RunConfig& cfg) {
    const SusceptibilityModel model(cfg.model);
    RunOutcome out;
    CsvWriter csv({"T", "tau", "quantity", "xx", "yy", "zz", "xy", "xz", "yz", "est_error"});
    nlohmann::json rows = nlohmann::json::array();
    for (double T : cfg.temperatures) {
        for (double tau : cfg.correlators.taus) {
            const auto q = position_correlator(model, tau, T, cfg.quadrature);
            const auto p = momentum_correlator(model, tau, T, cfg.quadrature);
            for (const auto& [name, r] : {std::pair{"position", q}, std::pair{"momentum", p}}) {
                csv.cell(T).cell(tau).cell(std::string(name));
                add_matrix_cells(csv, r.value);
                csv.cell(r.est_error);
                csv.end_row();
                rows.push_back({{"T", T},
                                {"tau", tau},
                                {"quantity", name},
                                {"value", matrix_json(r.value)},
                                {"est_error", r.est_error}});
            }
        }
    }
    out.report["outputs"] = {{"correlators", rows}};
    out.report["flags"] = nlohmann::json::object();
    out.csv = csv.str();
    return out;
}

double relative_deviation(double continuum, double oracle) {
    const double scale = std::abs(oracle);
    return scale > 0.0 ? std::abs(continuum - oracle) / scale : std::abs(continuum - oracle);
}

RunOutcome run_oracle_compare(const RunConfig& cfg) {
    const SusceptibilityModel model(cfg.model);
    const double omega_max = cfg.oracle.omega_max > 0.0 ? cfg.oracle.omega_max
                                                        : default_bath_cutoff(model);
    const DiscreteBath bath = build_discrete_bath(model, cfg.oracle.n_modes, omega_max);
    const NormalModes modes = diagonalize(bath);

    RunOutcome out;
    CsvWriter csv({"T", "quantity", "continuum", "oracle", "relative_deviation"});
    nlohmann::json rows = nlohmann::json::array();
    double worst = 0.0;
    for (double T : cfg.temperatures) {
        const ThermoPoint c = thermo_point(model, T, cfg.quadrature);
        const ThermoPoint o = oracle_thermo(modes, bath.omega_grid, T);
        nlohmann::json deviations;
        auto scalar_row = [&](const char* name, double cv, double ov) {
            const double dev = relative_deviation(cv, ov);
            csv.cell(T).cell(std::string(name)).cell(cv).cell(ov).cell(dev);
            csv.end_row();
            deviations[name] = {{"continuum", cv}, {"oracle", ov}, {"relative_deviation", dev}};
            worst = std::max(worst, dev);
        };
        scalar_row("U_star", c.U_star, o.U_star);
        scalar_row("U_alt", c.U_alt, o.U_alt);
        scalar_row("F_star", c.F_star, o.F_star);
        scalar_row("S_star", c.S_star, o.S_star);
        scalar_row("E_bath", c.E_bath, o.E_bath);
        scalar_row("E_int", c.E_int, o.E_int);
        auto matrix_row = [&](const char* name, const Mat3& cm, const Mat3& om) {
            // Frobenius norms in the CSV; the deviation is ||C - O|| / ||O||.
            const double dev = (cm - om).norm() / om.norm();
            csv.cell(T).cell(std::string(name)).cell(cm.norm()).cell(om.norm()).cell(dev);
            csv.end_row();
            deviations[name] = {{"continuum", matrix_json(cm)},
                                {"oracle", matrix_json(om)},
                                {"relative_deviation", dev}};
            worst = std::max(worst, dev);
        };
        matrix_row("position_covariance", position_correlator(model, 0.0, T, cfg.quadrature).value,
                   oracle_position_covariance(modes, T));
        matrix_row("momentum_covariance", momentum_correlator(model, 0.0, T, cfg.quadrature).value,
                   oracle_momentum_covariance(modes, T));
        rows.push_back({{"T", T},
                        {"deviations", deviations},
                        {"oracle_legendre_residual", o.legendre_residual}});
    }
    const bool within = worst < kOracleTolerance;
    out.report["outputs"] = {{"n_modes", cfg.oracle.n_modes},
                             {"omega_max", omega_max},
                             {"temperatures", rows},
                             {"max_relative_deviation", worst}};
    out.report["flags"] = {{"within_tolerance", within}, {"tolerance", kOracleTolerance}};
    out.csv = csv.str();
    out.exit_code = within ? kExitOk : kExitTaskFailed;
    return out;
}

RunOutcome run_langevin(const RunConfig& cfg, const RunOptions& opts) {
    const SusceptibilityModel model(cfg.model);
    SimConfig sim = cfg.simulation;
    sim.threads = opts.threads;
    const TrajectoryEnsemble e = simulate(model, sim);
    const Mat3 q_ref = classical_position_covariance(model, sim.T, cfg.quadrature).value;
    const Mat3 v_ref = Mat3::Identity() * (model.kB() * sim.T);

    RunOutcome out;
    CsvWriter csv({"quantity", "i", "j", "value", "std_error", "reference", "z_score"});
    double worst_z = 0.0;
    auto rows = [&](const char* name, const MatrixEstimate<3>& est, const Mat3& ref) {
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                const double se = est.std_error(i, j);
                const double z = se > 0.0 ? (est.value(i, j) - ref(i, j)) / se : 0.0;
                worst_z = std::max(worst_z, std::abs(z));
                csv.cell(std::string(name)).cell(i).cell(j).cell(est.value(i, j)).cell(se)
                    .cell(ref(i, j)).cell(z);
                csv.end_row();
            }
        }
    };
    rows("position_cov", e.position_cov, q_ref);
    rows("velocity_cov", e.velocity_cov, v_ref);

    nlohmann::json acf = nlohmann::json::array();
    for (const auto& s : e.acf_samples) acf.push_back({{"lag", s.lag}, {"value", matrix_json(s.value)}});
    auto estimate = [](const MatrixEstimate<3>& est) {
        return nlohmann::json{{"value", matrix_json(est.value)}, {"std_error", matrix_json(est.std_error)}};
    };
    out.report["outputs"] = {{"position_cov", estimate(e.position_cov)},
                             {"velocity_cov", estimate(e.velocity_cov)},
                             {"position_cov_first_half", estimate(e.position_cov_first_half)},
                             {"position_cov_second_half", estimate(e.position_cov_second_half)},
                             {"classical_position_cov", matrix_json(q_ref)},
                             {"acf_samples", acf},
                             {"n_effective", e.n_effective},
                             {"energy_drift_per_period", e.energy_drift},
                             {"samples_per_trajectory", e.samples_per_traj}};
    out.report["flags"] = {{"within_3_standard_errors", worst_z <= 3.0}, {"max_abs_z_score", worst_z}};
    out.csv = csv.str();
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

} // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

nlohmann::json versions_json() {
    return {{"meanforce", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                          "." + std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

nlohmann::json error_json(const std::exception& error) {
    nlohmann::json e = {{"kind", "Error"}, {"message", error.what()}};
    if (const auto* pe = dynamic_cast<const ParseError*>(&error)) {
        e["kind"] = pe->kind();
        e["line"] = pe->line();
        e["column"] = pe->column();
    } else if (const auto* se = dynamic_cast<const SemanticError*>(&error)) {
        e["kind"] = se->kind();
        e["key"] = se->key();
    } else if (const auto* me = dynamic_cast<const Error*>(&error)) {
        e["kind"] = me->kind();
    } else if (dynamic_cast<const std::invalid_argument*>(&error)) {
        e["kind"] = "InvalidArgument";
    }
    return {{"status", "error"}, {"error", e}, {"versions", versions_json()}};
}

RunOutcome execute(const RunConfig& cfg, const RunOptions& opts) {
    RunOutcome out;
    switch (cfg.task) {
    case Task::validate: out = run_validate(cfg); break;
    case Task::thermo_sweep: out = run_thermo_sweep(cfg, opts); break;
    case Task::correlators: out = run_correlators(cfg); break;
    case Task::oracle_compare: out = run_oracle_compare(cfg); break;
    case Task::langevin: out = run_langevin(cfg, opts); break;
    }
    out.report["status"] = out.exit_code == kExitOk ? "ok" : "failed";
    out.report["task"] = to_string(cfg.task);
    out.report["config"] = to_json(cfg);
    out.report["versions"] = versions_json();
    return out;
}

int run(const RunConfig& cfg, const RunOptions& opts) {
    const std::filesystem::path dir(cfg.output_path);
    const bool want_json = cfg.format != OutputFormat::csv;
    const bool want_csv = cfg.format != OutputFormat::json;
    std::filesystem::create_directories(dir);
    try {
        const RunOutcome out = execute(cfg, opts);
        if (want_csv) write_file(dir / "results.csv", out.csv);
        if (want_json) write_file(dir / "report.json", out.report.dump(2) + "\n");
        return out.exit_code;
    } catch (const std::exception& e) {
        nlohmann::json err = error_json(e);
        err["task"] = to_string(cfg.task);
        err["config"] = to_json(cfg);
        write_file(dir / "report.json", err.dump(2) + "\n");
        std::fprintf(stderr, "%s\n", err["error"].dump().c_str());
        return kExitTaskFailed;
    }
}

} // namespace meanforce::cli
