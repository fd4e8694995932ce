#pragma once

#include "meanforce/bath_model.hpp"
#include "meanforce/quadrature.hpp"

#include <string>
#include <vector>

namespace meanforce {

/// Every scalar thermodynamic output at one temperature.
struct ThermoPoint {
    double T = 0.0;
    double U_star = 0.0;  ///< internal energy of mean force
    double U_alt = 0.0;   ///< (1/2) <p.p + omega0^2 q.q>
    double F_star = 0.0;  ///< free energy of mean force
    double S_star = 0.0;  ///< entropy of mean force, -dF*/dT
    double E_bath = 0.0;  ///< <H_R> minus the uncoupled-bath value
    double E_int = 0.0;   ///< <H_I> = -<q . f . X>
    double quad_error = 0.0;
    /// |U* - F* - T S*| / max(|U*|, tiny).
    double legendre_residual = 0.0;
    /// |U* - (U_alt + E_bath + E_int)| / max(|U*|, tiny).
    double energy_balance_residual = 0.0;
    bool cutoff_sensitive = false;
    bool ok = true;
    std::string error;
};

/// Trace kernel shared by U*, F* and S*:
///     tr Im{ [omega0^2 (omega chi' - chi + I) + omega^2 I] G(omega) }.
template <int Dim>
double mean_force_trace_kernel(const BasicSusceptibilityModel<Dim>& model, double omega);

/// The same kernel evaluated in quotient form, numerator times Lambda^-1 by linear solve.
template <int Dim>
double mean_force_trace_kernel_quotient(const BasicSusceptibilityModel<Dim>& model, double omega);

/// U*(T) = (hbar/2pi) int coth(hbar omega/2 kB T) * kernel(omega) d omega.
template <int Dim>
double internal_energy_mean_force(const BasicSusceptibilityModel<Dim>& model, double T,
                                  const QuadratureSpec& quad = {});

/// U(T) = (hbar/2pi) int coth * tr Im[(omega^2 + omega0^2) G] d omega.
template <int Dim>
double internal_energy_alternative(const BasicSusceptibilityModel<Dim>& model, double T,
                                   const QuadratureSpec& quad = {});

/// F*(T) = (kB T/pi) int (1/omega) ln[2 sinh(hbar omega/2 kB T)] * kernel(omega) d omega.
/// The ln 2 inside the logarithm integrates to Dim kB T ln 2.
template <int Dim>
double free_energy_mean_force(const BasicSusceptibilityModel<Dim>& model, double T,
                              const QuadratureSpec& quad = {});

/// S*(T) = -dF*/dT = (kB/pi) int (1/omega) [x coth x - ln(2 sinh x)] * kernel d omega,
/// x = hbar omega / 2 kB T.
template <int Dim>
double entropy_mean_force(const BasicSusceptibilityModel<Dim>& model, double T,
                          const QuadratureSpec& quad = {});

/// (hbar omega0^2 / 2pi) int coth * tr Im{ d[omega chi]/d omega G } d omega:
/// bath energy relative to the uncoupled bath at the same temperature.
template <int Dim>
double bath_energy_expectation(const BasicSusceptibilityModel<Dim>& model, double T,
                               const QuadratureSpec& quad = {});

/// True if bath_energy_expectation moves by more than 0.1% when omega_max_factor doubles.
template <int Dim>
bool bath_energy_cutoff_sensitive(const BasicSusceptibilityModel<Dim>& model, double T,
                                  const QuadratureSpec& quad = {});

/// <H_I> = -(hbar omega0^2 / pi) int coth * tr Im{ chi G } d omega. The interaction
/// enters the Hamiltonian with a minus sign, so this is minus <q . f . X>.
template <int Dim>
double interaction_energy_expectation(const BasicSusceptibilityModel<Dim>& model, double T,
                                      const QuadratureSpec& quad = {});

/// All six scalars at one temperature plus both consistency residuals.
/// Throws on failure (see thermo_sweep for the isolating variant).
template <int Dim>
ThermoPoint thermo_point(const BasicSusceptibilityModel<Dim>& model, double T,
                         const QuadratureSpec& quad = {});

/// thermo_point over an ascending list of positive temperatures. A failing point is
/// returned with ok = false and its error message; the rest of the sweep is unaffected.
/// `threads` > 1 evaluates points concurrently; results do not depend on it.
template <int Dim>
std::vector<ThermoPoint> thermo_sweep(const BasicSusceptibilityModel<Dim>& model,
                                      const std::vector<double>& temperatures,
                                      const QuadratureSpec& quad = {}, unsigned threads = 1);

/// -T^2 d(F*/T)/dT by central differences (h = 1e-4 T) with one Richardson step.
template <int Dim>
double internal_energy_from_free_energy(const BasicSusceptibilityModel<Dim>& model, double T,
                                        const QuadratureSpec& quad = {});

/// -dF*/dT by central differences (h = 1e-4 T) with one Richardson step.
template <int Dim>
double entropy_from_free_energy(const BasicSusceptibilityModel<Dim>& model, double T,
                                const QuadratureSpec& quad = {});

/// Relative step of the temperature finite differences.
inline constexpr double kTemperatureStep = 1e-4;

} // namespace meanforce
