#include "meanforce/response.hpp"

#include "meanforce/errors.hpp"
#include "resolvent_detail.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace meanforce {

namespace detail {

template <int Dim>
ComplexMatrix<Dim> invert_lambda(const ComplexMatrix<Dim>& lambda, double omega) {
    const Eigen::FullPivLU<ComplexMatrix<Dim>> lu(lambda);
    const double norm = lambda.cwiseAbs().colwise().sum().maxCoeff();
    ComplexMatrix<Dim> inv;
    double cond = std::numeric_limits<double>::infinity();
    if (lu.isInvertible()) {
        inv = lu.inverse();
        cond = norm * inv.cwiseAbs().colwise().sum().maxCoeff();
    }
    if (!(cond <= kMaxResolventCondition)) {
        std::ostringstream msg;
        msg << "Lambda(" << omega << ") is singular to working precision (cond " << cond << ")";
        throw SingularResolvent(msg.str());
    }
    return 0.5 * (inv + inv.transpose());
}

template ComplexMatrix<1> invert_lambda<1>(const ComplexMatrix<1>&, double);
template ComplexMatrix<3> invert_lambda<3>(const ComplexMatrix<3>&, double);

} // namespace detail

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive_omega(double omega, const char* who) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument(std::string(who) + " needs finite omega > 0");
    }
}

void require_temperature(double T) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("temperature must be positive and finite");
    }
}

enum class Weight { Position, Momentum, ClassicalPosition };

template <int Dim>
BasicCorrelatorResult<Dim> correlator(const BasicSusceptibilityModel<Dim>& model, double tau,
                                      double T, const QuadratureSpec& quad, Weight weight) {
    require_temperature(T);
    quad.validate();
    const double cut = integration_cutoff(model, quad);
    if (!std::isfinite(tau) || std::abs(tau) * cut > kMaxPhaseSpan) {
        throw std::invalid_argument("correlator lag too long: |tau| * omega_cut exceeds 1e4");
    }
    const double hbar = model.hbar();
    const double kT = model.kB() * T;
    Integrand<Dim * Dim> integrand = [&](double omega) -> QuadVector<Dim * Dim> {
        const ComplexMatrix<Dim> chi = eval_chi(model, omega).entries();
        const RealMatrix<Dim> im_g =
            detail::invert_lambda<Dim>(detail::lambda_of(model, chi, omega), omega).imag();
        double w = 0.0;
        switch (weight) {
        case Weight::Position:
            w = (hbar / kPi) * coth_guarded(hbar * omega / (2.0 * kT));
            break;
        case Weight::Momentum:
            w = (hbar / kPi) * omega * omega * coth_guarded(hbar * omega / (2.0 * kT));
            break;
        case Weight::ClassicalPosition:
            w = (2.0 * kT / kPi) / omega;
            break;
        }
        if (tau != 0.0) w *= std::cos(omega * tau);
        return detail::flatten<Dim>(w * im_g);
    };
    const auto result =
        integrate_half_line<Dim * Dim>(integrand, resonance_breakpoints(model), cut, quad);
    return {detail::unflatten<Dim>(result.value), result.est_error, result.evaluations};
}

} // namespace

double coth_guarded(double x) {
    if (std::abs(x) < 1e-6) return 1.0 / x + x / 3.0;
    return 1.0 / std::tanh(x);
}

double log_two_sinh(double x) {
    return x + std::log(-std::expm1(-2.0 * x));
}

template <int Dim>
double integration_cutoff(const BasicSusceptibilityModel<Dim>& model, const QuadratureSpec& quad) {
    return quad.omega_max_factor * model.frequency_scale();
}

template <int Dim>
std::vector<double> resonance_breakpoints(const BasicSusceptibilityModel<Dim>& model) {
    std::vector<double> out{model.omega0()};
    for (const auto& band : model.bands()) {
        for (int i = 0; i < Dim; ++i) out.push_back(band.resonances[i]);
    }
    // det Re Lambda is positive at omega = 0 (static stability) and ~ (-omega^2)^Dim far above
    // every resonance, so all dressed resonances lie below a few times the frequency scale.
    auto det_re_lambda = [&](double w) {
        const ComplexMatrix<Dim> chi = eval_chi(model, w).entries();
        return detail::lambda_of(model, chi, w).real().determinant();
    };
    const double top = 4.0 * model.frequency_scale();
    constexpr int kScan = 800;
    double prev_w = 0.0;
    double prev = det_re_lambda(0.0);
    for (int k = 1; k <= kScan; ++k) {
        const double w = top * k / kScan;
        const double cur = det_re_lambda(w);
        if ((prev > 0.0) != (cur > 0.0)) {
            double lo = prev_w;
            double hi = w;
            const bool lo_positive = prev > 0.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (!(mid > lo && mid < hi)) break;
                if ((det_re_lambda(mid) > 0.0) == lo_positive) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push_back(0.5 * (lo + hi));
        }
        prev_w = w;
        prev = cur;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

template <int Dim>
BasicComplexTensor<Dim> lambda_matrix(const BasicSusceptibilityModel<Dim>& model, double omega) {
    require_positive_omega(omega, "lambda_matrix");
    const ComplexMatrix<Dim> chi = eval_chi(model, omega).entries();
    return BasicComplexTensor<Dim>::symmetrized(detail::lambda_of(model, chi, omega));
}

template <int Dim>
BasicComplexTensor<Dim> green_tensor(const BasicSusceptibilityModel<Dim>& model, double omega) {
    require_positive_omega(omega, "green_tensor");
    const ComplexMatrix<Dim> chi = eval_chi(model, omega).entries();
    return BasicComplexTensor<Dim>(detail::invert_lambda<Dim>(detail::lambda_of(model, chi, omega),
                                                              omega),
                                   true);
}

template <int Dim>
double fdt_identity_residual(const BasicSusceptibilityModel<Dim>& model, double omega) {
    require_positive_omega(omega, "fdt_identity_residual");
    const RealMatrix<Dim> f = coupling_tensor(model, omega);
    const ComplexMatrix<Dim> g = green_tensor(model, omega).entries();
    const ComplexMatrix<Dim> ff = (f * f).template cast<complex>();
    const ComplexMatrix<Dim> lhs = (kPi / (2.0 * omega)) * g.adjoint() * ff * g;
    return max_norm(lhs - g.imag().template cast<complex>());
}

template <int Dim>
BasicCorrelatorResult<Dim> position_correlator(const BasicSusceptibilityModel<Dim>& model,
                                               double tau, double T, const QuadratureSpec& quad) {
    return correlator(model, tau, T, quad, Weight::Position);
}

template <int Dim>
BasicCorrelatorResult<Dim> momentum_correlator(const BasicSusceptibilityModel<Dim>& model,
                                               double tau, double T, const QuadratureSpec& quad) {
    return correlator(model, tau, T, quad, Weight::Momentum);
}

template <int Dim>
BasicCorrelatorResult<Dim> classical_position_covariance(
    const BasicSusceptibilityModel<Dim>& model, double T, const QuadratureSpec& quad) {
    return correlator(model, 0.0, T, quad, Weight::ClassicalPosition);
}

#define MEANFORCE_INSTANTIATE(D)                                                                  \
    template double integration_cutoff<D>(const BasicSusceptibilityModel<D>&,                     \
                                          const QuadratureSpec&);                                 \
    template std::vector<double> resonance_breakpoints<D>(const BasicSusceptibilityModel<D>&);    \
    template BasicComplexTensor<D> lambda_matrix<D>(const BasicSusceptibilityModel<D>&, double);  \
    template BasicComplexTensor<D> green_tensor<D>(const BasicSusceptibilityModel<D>&, double);   \
    template double fdt_identity_residual<D>(const BasicSusceptibilityModel<D>&, double);         \
    template BasicCorrelatorResult<D> position_correlator<D>(                                     \
        const BasicSusceptibilityModel<D>&, double, double, const QuadratureSpec&);               \
    template BasicCorrelatorResult<D> momentum_correlator<D>(                                     \
        const BasicSusceptibilityModel<D>&, double, double, const QuadratureSpec&);               \
    template BasicCorrelatorResult<D> classical_position_covariance<D>(                           \
        const BasicSusceptibilityModel<D>&, double, const QuadratureSpec&);

MEANFORCE_INSTANTIATE(1)
MEANFORCE_INSTANTIATE(3)

#undef MEANFORCE_INSTANTIATE

} // namespace meanforce
