#include "meanforce/thermo.hpp"

#include "meanforce/errors.hpp"
#include "meanforce/response.hpp"
#include "resolvent_detail.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace meanforce {

namespace {

constexpr double kPi = std::numbers::pi;

void require_temperature(double T) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("temperature must be positive and finite");
    }
}

/// x coth x - ln(2 sinh x), stable for every x > 0.
double entropy_weight(double x) {
    return 2.0 * x / std::expm1(2.0 * x) - std::log(-std::expm1(-2.0 * x));
}

template <int Dim>
ComplexMatrix<Dim> mean_force_numerator(const BasicSusceptibilityModel<Dim>& model,
                                        const detail::ResolventSample<Dim>& s, double omega) {
    const double w02 = model.omega0() * model.omega0();
    ComplexMatrix<Dim> a = w02 * (omega * s.dchi - s.chi);
    a.diagonal().array() += w02 + omega * omega;
    return a;
}

template <int Dim>
double kernel_from_sample(const BasicSusceptibilityModel<Dim>& model,
                          const detail::ResolventSample<Dim>& s, double omega) {
    return (mean_force_numerator(model, s, omega) * s.green).trace().imag();
}

/// Integrates weight(omega, sample) over the half line with the model's partition.
template <int Dim>
QuadratureResult<1> integrate_scalar(
    const BasicSusceptibilityModel<Dim>& model, const QuadratureSpec& quad,
    const std::function<double(double, const detail::ResolventSample<Dim>&)>& weight) {
    quad.validate();
    Integrand<1> integrand = [&](double omega) -> QuadVector<1> {
        const auto s = detail::sample_resolvent(model, omega);
        return QuadVector<1>::Constant(weight(omega, s));
    };
    return integrate_half_line<1>(integrand, resonance_breakpoints(model),
                                  integration_cutoff(model, quad), quad);
}

template <int Dim>
QuadratureResult<1> u_star(const BasicSusceptibilityModel<Dim>& model, double T,
                           const QuadratureSpec& quad) {
    require_temperature(T);
    const double hbar = model.hbar();
    const double kT = model.kB() * T;
    return integrate_scalar<Dim>(model, quad, [&](double w, const detail::ResolventSample<Dim>& s) {
        return hbar / (2.0 * kPi) * coth_guarded(hbar * w / (2.0 * kT)) *
               kernel_from_sample(model, s, w);
    });
}

template <int Dim>
QuadratureResult<1> u_alt(const BasicSusceptibilityModel<Dim>& model, double T,
                          const QuadratureSpec& quad) {
    require_temperature(T);
    const double hbar = model.hbar();
    const double kT = model.kB() * T;
    const double w02 = model.omega0() * model.omega0();
    return integrate_scalar<Dim>(model, quad, [&](double w, const detail::ResolventSample<Dim>& s) {
        return hbar / (2.0 * kPi) * coth_guarded(hbar * w / (2.0 * kT)) * (w * w + w02) *
               s.green.trace().imag();
    });
}

template <int Dim>
QuadratureResult<1> f_star(const BasicSusceptibilityModel<Dim>& model, double T,
                           const QuadratureSpec& quad) {
    require_temperature(T);
    const double hbar = model.hbar();
    const double kT = model.kB() * T;
    return integrate_scalar<Dim>(model, quad, [&](double w, const detail::ResolventSample<Dim>& s) {
        return kT / kPi / w * log_two_sinh(hbar * w / (2.0 * kT)) *
               kernel_from_sample(model, s, w);
    });
}

template <int Dim>
QuadratureResult<1> s_star(const BasicSusceptibilityModel<Dim>& model, double T,
                           const QuadratureSpec& quad) {
    require_temperature(T);
    const double hbar = model.hbar();
    const double kB = model.kB();
    const double kT = kB * T;
    return integrate_scalar<Dim>(model, quad, [&](double w, const detail::ResolventSample<Dim>& s) {
        return kB / kPi / w * entropy_weight(hbar * w / (2.0 * kT)) *
               kernel_from_sample(model, s, w);
    });
}

template <int Dim>
QuadratureResult<1> e_bath(const BasicSusceptibilityModel<Dim>& model, double T,
                           const QuadratureSpec& quad) {
    require_temperature(T);
    const double hbar = model.hbar();
    const double kT = model.kB() * T;
    const double w02 = model.omega0() * model.omega0();
    return integrate_scalar<Dim>(model, quad, [&](double w, const detail::ResolventSample<Dim>& s) {
        const ComplexMatrix<Dim> d_omega_chi = s.chi + w * s.dchi;
        return hbar * w02 / (2.0 * kPi) * coth_guarded(hbar * w / (2.0 * kT)) *
               (d_omega_chi * s.green).trace().imag();
    });
}

template <int Dim>
QuadratureResult<1> e_int(const BasicSusceptibilityModel<Dim>& model, double T,
                          const QuadratureSpec& quad) {
    require_temperature(T);
    const double hbar = model.hbar();
    const double kT = model.kB() * T;
    const double w02 = model.omega0() * model.omega0();
    return integrate_scalar<Dim>(model, quad, [&](double w, const detail::ResolventSample<Dim>& s) {
        return -hbar * w02 / kPi * coth_guarded(hbar * w / (2.0 * kT)) *
               (s.chi * s.green).trace().imag();
    });
}

double relative(double diff, double ref) {
    const double scale = std::abs(ref);
    return scale > 0.0 ? std::abs(diff) / scale : std::abs(diff);
}

double richardson_derivative(const std::function<double(double)>& g, double T) {
    const double h = kTemperatureStep * T;
    const double d1 = (g(T + h) - g(T - h)) / (2.0 * h);
    const double d2 = (g(T + 2.0 * h) - g(T - 2.0 * h)) / (4.0 * h);
    return (4.0 * d1 - d2) / 3.0;
}

} // namespace

template <int Dim>
double mean_force_trace_kernel(const BasicSusceptibilityModel<Dim>& model, double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("mean_force_trace_kernel needs omega > 0");
    return kernel_from_sample(model, detail::sample_resolvent(model, omega), omega);
}

template <int Dim>
double mean_force_trace_kernel_quotient(const BasicSusceptibilityModel<Dim>& model,
                                        double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("mean_force_trace_kernel needs omega > 0");
    detail::ResolventSample<Dim> s;
    s.chi = eval_chi(model, omega).entries();
    s.dchi = eval_chi_derivative(model, omega).entries();
    const ComplexMatrix<Dim> lambda = detail::lambda_of(model, s.chi, omega);
    const ComplexMatrix<Dim> numerator = mean_force_numerator(model, s, omega);
    // numerator * Lambda^-1 = (Lambda^-T numerator^T)^T
    const ComplexMatrix<Dim> quotient =
        lambda.transpose().fullPivLu().solve(numerator.transpose()).transpose();
    return quotient.trace().imag();
}

template <int Dim>
double internal_energy_mean_force(const BasicSusceptibilityModel<Dim>& model, double T,
                                  const QuadratureSpec& quad) {
    return u_star(model, T, quad).value[0];
}

template <int Dim>
double internal_energy_alternative(const BasicSusceptibilityModel<Dim>& model, double T,
                                   const QuadratureSpec& quad) {
    return u_alt(model, T, quad).value[0];
}

template <int Dim>
double free_energy_mean_force(const BasicSusceptibilityModel<Dim>& model, double T,
                              const QuadratureSpec& quad) {
    return f_star(model, T, quad).value[0];
}

template <int Dim>
double entropy_mean_force(const BasicSusceptibilityModel<Dim>& model, double T,
                          const QuadratureSpec& quad) {
    return s_star(model, T, quad).value[0];
}

template <int Dim>
double bath_energy_expectation(const BasicSusceptibilityModel<Dim>& model, double T,
                               const QuadratureSpec& quad) {
    return e_bath(model, T, quad).value[0];
}

template <int Dim>
bool bath_energy_cutoff_sensitive(const BasicSusceptibilityModel<Dim>& model, double T,
                                  const QuadratureSpec& quad) {
    QuadratureSpec doubled = quad;
    doubled.omega_max_factor *= 2.0;
    const double base = e_bath(model, T, quad).value[0];
    const double wide = e_bath(model, T, doubled).value[0];
    return relative(wide - base, base) > 1e-3;
}

template <int Dim>
double interaction_energy_expectation(const BasicSusceptibilityModel<Dim>& model, double T,
                                      const QuadratureSpec& quad) {
    return e_int(model, T, quad).value[0];
}

template <int Dim>
ThermoPoint thermo_point(const BasicSusceptibilityModel<Dim>& model, double T,
                         const QuadratureSpec& quad) {
    require_temperature(T);
    ThermoPoint p;
    p.T = T;
    const auto u = u_star(model, T, quad);
    const auto ua = u_alt(model, T, quad);
    const auto f = f_star(model, T, quad);
    const auto s = s_star(model, T, quad);
    const auto eb = e_bath(model, T, quad);
    const auto ei = e_int(model, T, quad);
    p.U_star = u.value[0];
    p.U_alt = ua.value[0];
    p.F_star = f.value[0];
    p.S_star = s.value[0];
    p.E_bath = eb.value[0];
    p.E_int = ei.value[0];
    p.quad_error =
        u.est_error + ua.est_error + f.est_error + s.est_error + eb.est_error + ei.est_error;
    p.legendre_residual = relative(p.U_star - p.F_star - T * p.S_star, p.U_star);
    p.energy_balance_residual = relative(p.U_star - (p.U_alt + p.E_bath + p.E_int), p.U_star);
    p.cutoff_sensitive = bath_energy_cutoff_sensitive(model, T, quad);
    const double values[] = {p.U_star, p.U_alt, p.F_star, p.S_star, p.E_bath, p.E_int};
    if (!std::all_of(std::begin(values), std::end(values), [](double v) { return std::isfinite(v); })) {
        throw QuadratureFailure("non-finite thermodynamic output");
    }
    return p;
}

template <int Dim>
std::vector<ThermoPoint> thermo_sweep(const BasicSusceptibilityModel<Dim>& model,
                                      const std::vector<double>& temperatures,
                                      const QuadratureSpec& quad, unsigned threads) {
    for (std::size_t i = 0; i < temperatures.size(); ++i) {
        if (!(temperatures[i] > 0.0) || (i > 0 && !(temperatures[i] > temperatures[i - 1]))) {
            throw std::invalid_argument("temperatures must be positive and ascending");
        }
    }
    std::vector<ThermoPoint> out(temperatures.size());
    auto work = [&](std::size_t i) {
        try {
            out[i] = thermo_point(model, temperatures[i], quad);
        } catch (const std::exception& e) {
            ThermoPoint failed;
            failed.T = temperatures[i];
            failed.ok = false;
            failed.error = e.what();
            out[i] = failed;
        }
    };
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(temperatures.size())));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < temperatures.size(); ++i) work(i);
        return out;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < temperatures.size(); i += n_threads) work(i);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

template <int Dim>
double internal_energy_from_free_energy(const BasicSusceptibilityModel<Dim>& model, double T,
                                        const QuadratureSpec& quad) {
    require_temperature(T);
    const auto f_over_t = [&](double t) { return f_star(model, t, quad).value[0] / t; };
    return -T * T * richardson_derivative(f_over_t, T);
}

template <int Dim>
double entropy_from_free_energy(const BasicSusceptibilityModel<Dim>& model, double T,
                                const QuadratureSpec& quad) {
    require_temperature(T);
    const auto f = [&](double t) { return f_star(model, t, quad).value[0]; };
    return -richardson_derivative(f, T);
}

#define MEANFORCE_INSTANTIATE(D)                                                                  \
    template double mean_force_trace_kernel<D>(const BasicSusceptibilityModel<D>&, double);       \
    template double mean_force_trace_kernel_quotient<D>(const BasicSusceptibilityModel<D>&,       \
                                                        double);                                  \
    template double internal_energy_mean_force<D>(const BasicSusceptibilityModel<D>&, double,     \
                                                  const QuadratureSpec&);                         \
    template double internal_energy_alternative<D>(const BasicSusceptibilityModel<D>&, double,    \
                                                   const QuadratureSpec&);                        \
    template double free_energy_mean_force<D>(const BasicSusceptibilityModel<D>&, double,         \
                                              const QuadratureSpec&);                             \
    template double entropy_mean_force<D>(const BasicSusceptibilityModel<D>&, double,             \
                                          const QuadratureSpec&);                                 \
    template double bath_energy_expectation<D>(const BasicSusceptibilityModel<D>&, double,        \
                                               const QuadratureSpec&);                            \
    template bool bath_energy_cutoff_sensitive<D>(const BasicSusceptibilityModel<D>&, double,     \
                                                  const QuadratureSpec&);                         \
    template double interaction_energy_expectation<D>(const BasicSusceptibilityModel<D>&, double, \
                                                      const QuadratureSpec&);                     \
    template ThermoPoint thermo_point<D>(const BasicSusceptibilityModel<D>&, double,              \
                                         const QuadratureSpec&);                                  \
    template std::vector<ThermoPoint> thermo_sweep<D>(const BasicSusceptibilityModel<D>&,         \
                                                      const std::vector<double>&,                 \
                                                      const QuadratureSpec&, unsigned);           \
    template double internal_energy_from_free_energy<D>(const BasicSusceptibilityModel<D>&,       \
                                                        double, const QuadratureSpec&);           \
    template double entropy_from_free_energy<D>(const BasicSusceptibilityModel<D>&, double,       \
                                                const QuadratureSpec&);

MEANFORCE_INSTANTIATE(1)
MEANFORCE_INSTANTIATE(3)

#undef MEANFORCE_INSTANTIATE

} // namespace meanforce
