#include "meanforce/bath_model.hpp"

#include "meanforce/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace meanforce {

namespace {

constexpr double kPi = std::numbers::pi;

// e^{-gamma t/2} sin(nu1 t)/nu1 and e^{-gamma t/2} (cos(nu1 t) + (gamma/2) sin(nu1 t)/nu1)
// with nu1^2 = nu^2 - gamma^2/4, continued through critical and overdamped regimes.
struct DampedPair {
    double sine;
    double cosine;
};

DampedPair damped_pair(double t, double nu, double gamma) {
    const double a = 0.5 * gamma;
    const double d = nu * nu - a * a;
    const double x = d * t * t;
    if (std::abs(x) < 1e-4) {
        const double s = t * (1.0 - x / 6.0 + x * x / 120.0);
        const double c = 1.0 - x / 2.0 + x * x / 24.0;
        const double e = std::exp(-a * t);
        return {e * s, e * (c + a * s)};
    }
    if (d > 0.0) {
        const double nu1 = std::sqrt(d);
        const double e = std::exp(-a * t);
        const double s = std::sin(nu1 * t) / nu1;
        return {e * s, e * (std::cos(nu1 * t) + a * s)};
    }
    const double kappa = std::sqrt(-d);
    const double slow = std::exp((kappa - a) * t);
    const double fast = std::exp(-(kappa + a) * t);
    const double sine = 0.5 * (slow - fast) / kappa;
    const double cosine = 0.5 * (slow + fast) + a * sine;
    return {sine, cosine};
}

template <int Dim>
ComplexMatrix<Dim> chi_sum(const std::vector<BasicLorentzBand<Dim>>& bands, double omega) {
    ComplexMatrix<Dim> total = ComplexMatrix<Dim>::Zero();
    for (const auto& band : bands) {
        Eigen::Matrix<complex, Dim, 1> diag;
        for (int i = 0; i < Dim; ++i) diag[i] = band.axis_response(i, omega);
        const ComplexMatrix<Dim> r = band.rotation.template cast<complex>();
        total += r * diag.asDiagonal() * r.transpose();
    }
    return total;
}

template <int Dim>
ComplexMatrix<Dim> chi_derivative_sum(const std::vector<BasicLorentzBand<Dim>>& bands,
                                      double omega) {
    ComplexMatrix<Dim> total = ComplexMatrix<Dim>::Zero();
    for (const auto& band : bands) {
        Eigen::Matrix<complex, Dim, 1> diag;
        for (int i = 0; i < Dim; ++i) diag[i] = band.axis_response_derivative(i, omega);
        const ComplexMatrix<Dim> r = band.rotation.template cast<complex>();
        total += r * diag.asDiagonal() * r.transpose();
    }
    return total;
}

template <int Dim>
RealMatrix<Dim> static_chi(const std::vector<BasicLorentzBand<Dim>>& bands) {
    RealMatrix<Dim> total = RealMatrix<Dim>::Zero();
    for (const auto& band : bands) {
        total += band.rotation * band.strengths.asDiagonal() * band.rotation.transpose();
    }
    return 0.5 * (total + total.transpose());
}

template <int Dim>
RealMatrix<Dim> sym(const RealMatrix<Dim>& m) {
    return 0.5 * (m + m.transpose());
}

template <int Dim>
double min_eigenvalue(const RealMatrix<Dim>& m) {
    Eigen::SelfAdjointEigenSolver<RealMatrix<Dim>> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

template <int Dim>
bool parameters_ok(const BasicModelSpec<Dim>& spec, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!(spec.omega0 > 0.0) || !std::isfinite(spec.omega0)) return fail("omega0 must be > 0");
    if (!(spec.units.hbar > 0.0) || !(spec.units.kB > 0.0)) {
        return fail("hbar and kB must be > 0");
    }
    if (spec.bands.empty()) return fail("model needs at least one band");
    for (std::size_t b = 0; b < spec.bands.size(); ++b) {
        const auto& band = spec.bands[b];
        for (int i = 0; i < Dim; ++i) {
            std::ostringstream where;
            where << "band " << b << " axis " << i;
            if (!(band.strengths[i] >= 0.0) || !std::isfinite(band.strengths[i])) {
                return fail(where.str() + ": strength must be >= 0");
            }
            if (!(band.resonances[i] > 0.0) || !std::isfinite(band.resonances[i])) {
                return fail(where.str() + ": resonance must be > 0");
            }
            if (!(band.dampings[i] > 0.0) || !std::isfinite(band.dampings[i])) {
                return fail(where.str() + ": damping must be > 0");
            }
        }
    }
    return true;
}

template <int Dim>
bool rotations_ok(const BasicModelSpec<Dim>& spec) {
    for (const auto& band : spec.bands) {
        if (!band.rotation.allFinite()) return false;
        const RealMatrix<Dim> gram = band.rotation.transpose() * band.rotation;
        if (max_norm(gram - RealMatrix<Dim>::Identity()) >= 1e-12) return false;
    }
    return true;
}

template <int Dim>
double spec_scale(const BasicModelSpec<Dim>& spec) {
    double s = spec.omega0;
    for (const auto& band : spec.bands) s = std::max(s, band.resonances.maxCoeff());
    return s;
}

std::vector<double> passivity_grid(double scale) {
    std::vector<double> grid;
    constexpr int kPoints = 241;
    for (int k = 0; k < kPoints; ++k) {
        grid.push_back(scale * std::pow(10.0, -3.0 + 6.0 * k / (kPoints - 1)));
    }
    return grid;
}

template <int Dim>
double min_passivity(const BasicModelSpec<Dim>& spec, const std::vector<double>& grid) {
    double lo = std::numeric_limits<double>::infinity();
    for (double w : grid) {
        lo = std::min(lo, min_eigenvalue<Dim>(sym<Dim>(chi_sum(spec.bands, w).imag())));
    }
    return lo;
}

template <int Dim>
RealMatrix<Dim> kk_from_bands(const BasicModelSpec<Dim>& spec, double omega,
                              const QuadratureSpec& quad) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("kk_real_part needs omega > 0");
    }
    const auto& bands = spec.bands;
    auto g = [&](double xi) -> RealMatrix<Dim> {
        return (2.0 / kPi) * xi * chi_sum(bands, xi).imag();
    };
    const RealMatrix<Dim> g_omega = g(omega);
    Integrand<Dim * Dim> integrand = [&](double xi) -> QuadVector<Dim * Dim> {
        RealMatrix<Dim> value;
        const double denom = xi * xi - omega * omega;
        if (denom == 0.0) {
            const ComplexMatrix<Dim> c = chi_sum(bands, xi);
            const ComplexMatrix<Dim> dc = chi_derivative_sum(bands, xi);
            value = (2.0 / kPi) * (c.imag() + xi * dc.imag()) / (2.0 * omega);
        } else {
            value = (g(xi) - g_omega) / denom;
        }
        return Eigen::Map<const QuadVector<Dim * Dim>>(value.data());
    };
    std::vector<double> breaks{omega, spec.omega0};
    for (const auto& band : bands) {
        for (int i = 0; i < Dim; ++i) breaks.push_back(band.resonances[i]);
    }
    const double cut = quad.omega_max_factor * std::max(spec_scale(spec), omega);
    const auto result = integrate_half_line<Dim * Dim>(integrand, breaks, cut, quad);
    const RealMatrix<Dim> out = Eigen::Map<const RealMatrix<Dim>>(result.value.data());
    return sym<Dim>(out);
}

} // namespace

template <int Dim>
complex BasicLorentzBand<Dim>::axis_response(int axis, double omega) const {
    const double nu2 = resonances[axis] * resonances[axis];
    const complex den(nu2 - omega * omega, -dampings[axis] * omega);
    return strengths[axis] * nu2 / den;
}

template <int Dim>
complex BasicLorentzBand<Dim>::axis_response_derivative(int axis, double omega) const {
    const double nu2 = resonances[axis] * resonances[axis];
    const complex den(nu2 - omega * omega, -dampings[axis] * omega);
    const complex num(2.0 * omega, dampings[axis]);
    return strengths[axis] * nu2 * num / (den * den);
}

template <int Dim>
BasicSusceptibilityModel<Dim>::BasicSusceptibilityModel(Spec spec) : spec_(std::move(spec)) {
    std::string why;
    if (!parameters_ok(spec_, &why)) throw ModelError(why);
    if (!rotations_ok(spec_)) throw ModelError("band rotation is not orthogonal to 1e-12");
    const double passive = min_passivity(spec_, passivity_grid(spec_scale(spec_)));
    if (passive < -kPassivityTolerance) {
        std::ostringstream msg;
        msg << "Im chi is not positive semidefinite (min eigenvalue " << passive << ")";
        throw ModelError(msg.str());
    }
    const RealMatrix<Dim> stiff =
        spec_.omega0 * spec_.omega0 * (RealMatrix<Dim>::Identity() - static_chi(spec_.bands));
    const double lo = min_eigenvalue<Dim>(stiff);
    if (!(lo > 0.0)) {
        std::ostringstream msg;
        msg << "static stability violated: omega0^2 (I - chi(0)) has eigenvalue " << lo;
        throw ModelError(msg.str());
    }
}

template <int Dim>
double BasicSusceptibilityModel<Dim>::frequency_scale() const noexcept {
    return spec_scale(spec_);
}

template <int Dim>
BasicSusceptibilityModel<Dim> BasicSusceptibilityModel<Dim>::rotated(
    const RealMatrix<Dim>& R) const {
    Spec out = spec_;
    for (auto& band : out.bands) band.rotation = R * band.rotation;
    return BasicSusceptibilityModel(std::move(out));
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw std::invalid_argument("rotation axis must be nonzero");
    return Eigen::AngleAxisd(angle, axis / n).toRotationMatrix();
}

template <int Dim>
BasicModelSpec<Dim> isotropic_spec(double omega0, double strength, double resonance,
                                   double damping, UnitSystem units) {
    BasicLorentzBand<Dim> band;
    band.strengths.setConstant(strength);
    band.resonances.setConstant(resonance);
    band.dampings.setConstant(damping);
    return BasicModelSpec<Dim>{omega0, {band}, units};
}

template <int Dim>
BasicComplexTensor<Dim> eval_chi(const BasicSusceptibilityModel<Dim>& model, double omega) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("eval_chi needs finite omega >= 0");
    }
    return BasicComplexTensor<Dim>::symmetrized(chi_sum(model.bands(), omega));
}

template <int Dim>
BasicComplexTensor<Dim> eval_chi_signed(const BasicSusceptibilityModel<Dim>& model, double omega) {
    if (!std::isfinite(omega)) throw std::invalid_argument("eval_chi_signed needs finite omega");
    return BasicComplexTensor<Dim>::symmetrized(chi_sum(model.bands(), omega));
}

template <int Dim>
BasicComplexTensor<Dim> eval_chi_derivative(const BasicSusceptibilityModel<Dim>& model,
                                            double omega) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("eval_chi_derivative needs finite omega >= 0");
    }
    return BasicComplexTensor<Dim>::symmetrized(chi_derivative_sum(model.bands(), omega));
}

template <int Dim>
RealMatrix<Dim> coupling_tensor(const BasicSusceptibilityModel<Dim>& model, double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("coupling_tensor needs omega > 0");
    }
    const RealMatrix<Dim> im = eval_chi(model, omega).imag();
    Eigen::SelfAdjointEigenSolver<RealMatrix<Dim>> es(im);
    if (es.info() != Eigen::Success) throw EigenFailure("coupling_tensor eigensolve failed");
    const double lo = es.eigenvalues().minCoeff();
    if (lo < -kPassivityTolerance) {
        std::ostringstream msg;
        msg << "Im chi(" << omega << ") has eigenvalue " << lo;
        throw NotPassive(msg.str());
    }
    const double scale = 2.0 * omega * model.omega0() * model.omega0() / kPi;
    RealVector<Dim> root;
    for (int i = 0; i < Dim; ++i) root[i] = std::sqrt(scale * std::max(es.eigenvalues()[i], 0.0));
    const RealMatrix<Dim> f =
        es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
    return sym<Dim>(f);
}

template <int Dim>
RealMatrix<Dim> kk_real_part(const BasicSusceptibilityModel<Dim>& model, double omega,
                             const QuadratureSpec& quad) {
    return kk_from_bands(model.spec(), omega, quad);
}

template <int Dim>
RealMatrix<Dim> memory_kernel_time(const BasicSusceptibilityModel<Dim>& model, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("memory_kernel_time needs finite t >= 0");
    }
    RealMatrix<Dim> total = RealMatrix<Dim>::Zero();
    for (const auto& band : model.bands()) {
        RealVector<Dim> diag;
        for (int i = 0; i < Dim; ++i) {
            const double nu = band.resonances[i];
            diag[i] = band.strengths[i] * nu * nu * damped_pair(t, nu, band.dampings[i]).sine;
        }
        total += band.rotation * diag.asDiagonal() * band.rotation.transpose();
    }
    return sym<Dim>(total);
}

template <int Dim>
RealMatrix<Dim> noise_kernel_time(const BasicSusceptibilityModel<Dim>& model, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("noise_kernel_time needs finite t");
    t = std::abs(t);
    RealMatrix<Dim> total = RealMatrix<Dim>::Zero();
    for (const auto& band : model.bands()) {
        RealVector<Dim> diag;
        for (int i = 0; i < Dim; ++i) {
            diag[i] = band.strengths[i] *
                      damped_pair(t, band.resonances[i], band.dampings[i]).cosine;
        }
        total += band.rotation * diag.asDiagonal() * band.rotation.transpose();
    }
    return sym<Dim>(total);
}

template <int Dim>
ValidationReport validate_model(const BasicModelSpec<Dim>& spec, const std::vector<double>& grid,
                                const QuadratureSpec& quad) {
    if (grid.empty()) throw std::invalid_argument("validation grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i]) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw std::invalid_argument("validation grid must be positive and ascending");
        }
    }
    ValidationReport report;
    report.parameters_valid = parameters_ok(spec, nullptr);
    report.rotations_orthogonal = rotations_ok(spec);
    if (!report.parameters_valid || !report.rotations_orthogonal) return report;

    const RealMatrix<Dim> stiff =
        spec.omega0 * spec.omega0 * (RealMatrix<Dim>::Identity() - static_chi(spec.bands));
    Eigen::SelfAdjointEigenSolver<RealMatrix<Dim>> es(stiff, Eigen::EigenvaluesOnly);
    for (int i = 0; i < Dim; ++i) report.static_eigenvalues.push_back(es.eigenvalues()[i]);
    report.static_stability = es.eigenvalues().minCoeff() > 0.0;

    report.min_passivity_eigenvalue = min_passivity(spec, grid);
    report.passivity = report.min_passivity_eigenvalue >= -kPassivityTolerance;

    const std::size_t n = grid.size();
    std::vector<std::size_t> picks{n / 4, n / 2, (3 * n) / 4};
    for (auto& p : picks) p = std::min(p, n - 1);
    const double static_norm = max_norm(static_chi(spec.bands));
    report.kramers_kronig = true;
    for (std::size_t p : picks) {
        const double w = grid[p];
        KkSample sample{w, 0.0};
        try {
            const RealMatrix<Dim> rebuilt = kk_from_bands(spec, w, quad);
            const RealMatrix<Dim> direct = sym<Dim>(chi_sum(spec.bands, w).real());
            const double denom = std::max(max_norm(direct), static_norm);
            const double diff = max_norm(rebuilt - direct);
            sample.relative_residual = denom > 0.0 ? diff / denom : diff;
        } catch (const QuadratureFailure&) {
            sample.relative_residual = std::numeric_limits<double>::infinity();
        }
        report.kramers_kronig =
            report.kramers_kronig && sample.relative_residual < kKramersKronigTolerance;
        report.kk_samples.push_back(sample);
    }
    return report;
}

#define MEANFORCE_INSTANTIATE(D)                                                                  \
    template struct BasicLorentzBand<D>;                                                          \
    template class BasicSusceptibilityModel<D>;                                                   \
    template BasicModelSpec<D> isotropic_spec<D>(double, double, double, double, UnitSystem);     \
    template BasicComplexTensor<D> eval_chi<D>(const BasicSusceptibilityModel<D>&, double);       \
    template BasicComplexTensor<D> eval_chi_signed<D>(const BasicSusceptibilityModel<D>&, double);\
    template BasicComplexTensor<D> eval_chi_derivative<D>(const BasicSusceptibilityModel<D>&,     \
                                                          double);                                \
    template RealMatrix<D> coupling_tensor<D>(const BasicSusceptibilityModel<D>&, double);        \
    template RealMatrix<D> kk_real_part<D>(const BasicSusceptibilityModel<D>&, double,            \
                                           const QuadratureSpec&);                                \
    template RealMatrix<D> memory_kernel_time<D>(const BasicSusceptibilityModel<D>&, double);     \
    template RealMatrix<D> noise_kernel_time<D>(const BasicSusceptibilityModel<D>&, double);      \
    template ValidationReport validate_model<D>(const BasicModelSpec<D>&,                         \
                                                const std::vector<double>&,                       \
                                                const QuadratureSpec&);

MEANFORCE_INSTANTIATE(1)
MEANFORCE_INSTANTIATE(3)

#undef MEANFORCE_INSTANTIATE

} // namespace meanforce
