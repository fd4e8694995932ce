#pragma once

#include "meanforce/bath_model.hpp"
#include "meanforce/quadrature.hpp"
#include "meanforce/tensor.hpp"

#include <vector>

namespace meanforce {

/// Symmetric thermal correlator matrix with its quadrature bookkeeping.
template <int Dim>
struct BasicCorrelatorResult {
    RealMatrix<Dim> value = RealMatrix<Dim>::Zero();
    double est_error = 0.0;
    int evaluations = 0;
};

using CorrelatorResult = BasicCorrelatorResult<3>;

/// Lambda(omega) = omega0^2 (I - chi(omega)) - omega^2 I.
template <int Dim>
BasicComplexTensor<Dim> lambda_matrix(const BasicSusceptibilityModel<Dim>& model, double omega);

/// G(omega) = Lambda(omega)^-1. Throws SingularResolvent when cond_1(Lambda) > 1e14.
template <int Dim>
BasicComplexTensor<Dim> green_tensor(const BasicSusceptibilityModel<Dim>& model, double omega);

/// Max-norm of (pi / 2 omega) G^dagger f f G - Im G. Vanishes identically for any
/// passive model, so it checks the resolvent/coupling algebra at one frequency.
template <int Dim>
double fdt_identity_residual(const BasicSusceptibilityModel<Dim>& model, double omega);

/// <q_i(t+tau) q_j(t)>_S = (hbar/pi) int_0^inf cos(omega tau) coth(hbar omega / 2 kB T) Im G_ij.
/// Requires |tau| * omega_cut <= 1e4.
template <int Dim>
BasicCorrelatorResult<Dim> position_correlator(const BasicSusceptibilityModel<Dim>& model,
                                               double tau, double T,
                                               const QuadratureSpec& quad = {});

/// As position_correlator with an extra omega^2 weight.
template <int Dim>
BasicCorrelatorResult<Dim> momentum_correlator(const BasicSusceptibilityModel<Dim>& model,
                                               double tau, double T,
                                               const QuadratureSpec& quad = {});

/// Classical limit of the equal-time position covariance: coth replaced by 2 kB T / hbar omega.
template <int Dim>
BasicCorrelatorResult<Dim> classical_position_covariance(
    const BasicSusceptibilityModel<Dim>& model, double T, const QuadratureSpec& quad = {});

/// Initial partition for frequency integrals: omega0, every band resonance, and the
/// dressed resonances where det Re Lambda(omega) changes sign.
template <int Dim>
std::vector<double> resonance_breakpoints(const BasicSusceptibilityModel<Dim>& model);

/// omega_max_factor * frequency_scale().
template <int Dim>
double integration_cutoff(const BasicSusceptibilityModel<Dim>& model, const QuadratureSpec& quad);

/// coth(x) with the 1/x + x/3 series below x = 1e-6.
double coth_guarded(double x);
/// ln(2 sinh x) for x > 0 without overflow or cancellation.
double log_two_sinh(double x);

/// Largest tolerated |tau| * omega_cut for oscillatory correlator integrals.
inline constexpr double kMaxPhaseSpan = 1e4;
/// Condition-number bound for Lambda(omega).
inline constexpr double kMaxResolventCondition = 1e14;

} // namespace meanforce
