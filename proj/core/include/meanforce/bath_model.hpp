#pragma once

#include "meanforce/quadrature.hpp"
#include "meanforce/tensor.hpp"

#include <vector>

namespace meanforce {

/// Unit convention. Natural units (hbar = kB = 1) unless a config overrides them.
struct UnitSystem {
    double hbar = 1.0;
    double kB = 1.0;

    bool operator==(const UnitSystem&) const = default;
};

/// One anisotropic Lorentzian band. Along principal axis i (column i of
/// `rotation`) the response is
///     chi_i(omega) = alpha_i nu_i^2 / (nu_i^2 - omega^2 - i gamma_i omega).
template <int Dim>
struct BasicLorentzBand {
    RealMatrix<Dim> rotation = RealMatrix<Dim>::Identity();
    RealVector<Dim> strengths = RealVector<Dim>::Zero();
    RealVector<Dim> resonances = RealVector<Dim>::Ones();
    RealVector<Dim> dampings = RealVector<Dim>::Ones();

    complex axis_response(int axis, double omega) const;
    complex axis_response_derivative(int axis, double omega) const;

    bool operator==(const BasicLorentzBand&) const = default;
};

/// Raw, unvalidated model parameters. `BasicSusceptibilityModel` is the validated form.
template <int Dim>
struct BasicModelSpec {
    double omega0 = 1.0;
    std::vector<BasicLorentzBand<Dim>> bands;
    UnitSystem units{};

    bool operator==(const BasicModelSpec&) const = default;
};

/// Validated, immutable susceptibility model. Construction enforces:
/// omega0 > 0, at least one band, orthogonal rotations (1e-12), strengths >= 0,
/// resonances and dampings > 0, passivity on a validation grid, and static
/// stability (omega0^2 (I - chi(0)) positive definite). Violations throw ModelError.
template <int Dim>
class BasicSusceptibilityModel {
public:
    using Band = BasicLorentzBand<Dim>;
    using Spec = BasicModelSpec<Dim>;

    explicit BasicSusceptibilityModel(Spec spec);

    const Spec& spec() const noexcept { return spec_; }
    double omega0() const noexcept { return spec_.omega0; }
    const std::vector<Band>& bands() const noexcept { return spec_.bands; }
    const UnitSystem& units() const noexcept { return spec_.units; }
    double hbar() const noexcept { return spec_.units.hbar; }
    double kB() const noexcept { return spec_.units.kB; }

    /// max(omega0, every band resonance): the reference for cutoffs.
    double frequency_scale() const noexcept;

    /// The model with every band rotation replaced by R * rotation.
    BasicSusceptibilityModel rotated(const RealMatrix<Dim>& R) const;

private:
    Spec spec_;
};

using LorentzBand = BasicLorentzBand<3>;
using ModelSpec = BasicModelSpec<3>;
using SusceptibilityModel = BasicSusceptibilityModel<3>;
using ScalarModelSpec = BasicModelSpec<1>;
using ScalarSusceptibilityModel = BasicSusceptibilityModel<1>;

/// Rotation matrix for a right-handed rotation by `angle` about `axis` (normalized internally).
Mat3 axis_angle_rotation(const Vec3& axis, double angle);

/// Isotropic single-band spec: rotation I, equal strength/resonance/damping on every axis.
template <int Dim>
BasicModelSpec<Dim> isotropic_spec(double omega0, double strength, double resonance,
                                   double damping, UnitSystem units = {});

/// chi(omega) = sum_b R_b diag(chi_i(omega)) R_b^T. Symmetric, Im part PSD for omega > 0,
/// real at omega = 0.
template <int Dim>
BasicComplexTensor<Dim> eval_chi(const BasicSusceptibilityModel<Dim>& model, double omega);

/// chi at any real omega, negative allowed; chi(-omega) = conj(chi(omega)).
template <int Dim>
BasicComplexTensor<Dim> eval_chi_signed(const BasicSusceptibilityModel<Dim>& model, double omega);

/// Closed-form d chi / d omega.
template <int Dim>
BasicComplexTensor<Dim> eval_chi_derivative(const BasicSusceptibilityModel<Dim>& model,
                                            double omega);

/// Dyadic coupling f(omega): principal PSD square root of (2 omega omega0^2 / pi) Im chi(omega),
/// so that f f reproduces the coupling/susceptibility relation for non-diagonal Im chi.
/// Throws NotPassive if Im chi has an eigenvalue below -1e-12 (scaled).
template <int Dim>
RealMatrix<Dim> coupling_tensor(const BasicSusceptibilityModel<Dim>& model, double omega);

/// Re chi(omega) rebuilt from Im chi by the principal-value dispersion integral
///     (2/pi) P int_0^inf xi Im chi(xi) / (xi^2 - omega^2) d xi.
/// Throws QuadratureFailure if the tolerance is unreachable.
template <int Dim>
RealMatrix<Dim> kk_real_part(const BasicSusceptibilityModel<Dim>& model, double omega,
                             const QuadratureSpec& quad = {});

/// chi(t) for t >= 0: closed-form inverse sine transform of every band
/// (an exponentially damped sinusoid per principal axis), rotated and summed. chi(0) = 0.
template <int Dim>
RealMatrix<Dim> memory_kernel_time(const BasicSusceptibilityModel<Dim>& model, double t);

/// K(t) = (2/pi) int_0^inf Im chi(omega) cos(omega t) / omega d omega, the classical noise
/// autocovariance kernel: <zeta(t) zeta(0)^T> = kB T omega0^2 K(t), K(0) = chi(0), K' = -chi(t).
template <int Dim>
RealMatrix<Dim> noise_kernel_time(const BasicSusceptibilityModel<Dim>& model, double t);

struct KkSample {
    double omega = 0.0;
    double relative_residual = 0.0;
};

struct ValidationReport {
    std::vector<double> static_eigenvalues;  ///< of omega0^2 (I - chi(0))
    bool static_stability = false;
    double min_passivity_eigenvalue = 0.0;  ///< min over grid of lambda_min(Im chi)
    bool passivity = false;
    std::vector<KkSample> kk_samples;
    bool kramers_kronig = false;
    bool rotations_orthogonal = false;
    bool parameters_valid = false;  ///< signs of omega0, strengths, resonances, dampings

    bool passed() const noexcept {
        return static_stability && passivity && kramers_kronig && rotations_orthogonal &&
               parameters_valid;
    }
};

/// Runs every model check on raw parameters without throwing; failures are flagged.
/// `grid` must be nonempty, positive and ascending (std::invalid_argument otherwise).
template <int Dim>
ValidationReport validate_model(const BasicModelSpec<Dim>& spec, const std::vector<double>& grid,
                                const QuadratureSpec& quad = {});

/// Passivity slack: eigenvalues of Im chi above -1e-12 count as nonnegative.
inline constexpr double kPassivityTolerance = 1e-12;
/// KK residual threshold used by validate_model.
inline constexpr double kKramersKronigTolerance = 1e-4;

} // namespace meanforce
