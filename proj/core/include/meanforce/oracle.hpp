#pragma once

#include "meanforce/bath_model.hpp"
#include "meanforce/thermo.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace meanforce {

/// Finite bath of N unit-mass oscillators on a uniform midpoint grid. Each bath frequency
/// carries Dim degenerate modes coupled to the oscillator through a symmetric block.
template <int Dim>
struct BasicDiscreteBath {
    double omega0 = 1.0;
    std::vector<double> omega_grid;                  ///< ascending bath frequencies
    std::vector<double> weights;                     ///< grid spacing per frequency
    std::vector<RealMatrix<Dim>> coupling_blocks;    ///< f(omega_n) sqrt(weight_n)
    UnitSystem units{};

    int n_modes() const noexcept { return static_cast<int>(omega_grid.size()); }
    int dimension() const noexcept { return Dim * (n_modes() + 1); }

    /// Dense potential-energy matrix: oscillator block omega0^2 I, bath block
    /// diag(omega_n^2), off-diagonal blocks minus the coupling blocks.
    Eigen::MatrixXd stiffness() const;
};

using DiscreteBath = BasicDiscreteBath<3>;

/// Normal modes of a discrete bath. Columns of `oscillator_rows` hold the oscillator
/// components of each unit-norm mode vector; the bath components enter only through the
/// three per-mode contractions below.
template <int Dim>
struct BasicNormalModes {
    double omega0 = 1.0;
    UnitSystem units{};
    Eigen::VectorXd frequencies;                        ///< ascending Omega_m
    Eigen::Matrix<double, Dim, Eigen::Dynamic> oscillator_rows;
    Eigen::VectorXd bath_norm;         ///< sum_n |y_n|^2
    Eigen::VectorXd bath_potential;    ///< sum_n omega_n^2 |y_n|^2
    Eigen::VectorXd coupling_overlap;  ///< sum_n v . c_n y_n
    /// Full orthogonal transform (columns are modes), present only when requested.
    std::optional<Eigen::MatrixXd> transform;

    int size() const noexcept { return static_cast<int>(frequencies.size()); }
};

using NormalModes = BasicNormalModes<3>;

/// Midpoint grid of n_modes frequencies on (0, omega_max]. Throws UnstableBath when the
/// discretized stiffness is not positive definite.
template <int Dim>
BasicDiscreteBath<Dim> build_discrete_bath(const BasicSusceptibilityModel<Dim>& model,
                                           int n_modes, double omega_max);

/// Default bath cutoff: 60 times the model's largest frequency.
template <int Dim>
double default_bath_cutoff(const BasicSusceptibilityModel<Dim>& model);

/// Exact normal modes by solving the oscillator-block secular equation between bath
/// frequencies. Cost O(N^2); the transform (O(N^2) memory) is built only on request.
template <int Dim>
BasicNormalModes<Dim> diagonalize(const BasicDiscreteBath<Dim>& bath, bool with_transform = false);

/// Dense symmetric eigendecomposition of the stiffness matrix, for cross-checks at small N.
template <int Dim>
BasicNormalModes<Dim> diagonalize_dense(const BasicDiscreteBath<Dim>& bath);

/// <q_i q_j> = sum_m (hbar / 2 Omega_m) coth(hbar Omega_m / 2 kB T) v_im v_jm.
template <int Dim>
RealMatrix<Dim> oracle_position_covariance(const BasicNormalModes<Dim>& modes, double T);

/// <p_i p_j> = sum_m (hbar Omega_m / 2) coth(hbar Omega_m / 2 kB T) v_im v_jm.
template <int Dim>
RealMatrix<Dim> oracle_momentum_covariance(const BasicNormalModes<Dim>& modes, double T);

/// Coupled-minus-bare mode sums. Each bare frequency counts Dim times. Both residuals of
/// the returned point are filled in.
template <int Dim>
ThermoPoint oracle_thermo(const BasicNormalModes<Dim>& modes,
                          const std::vector<double>& bare_frequencies, double T);

/// Im of sum_m v_m v_m^T / (Omega_m^2 - omega^2 - i eta omega): the oscillator-block
/// resolvent with every mode broadened by eta.
template <int Dim>
RealMatrix<Dim> oracle_broadened_green_imag(const BasicNormalModes<Dim>& modes, double omega,
                                            double eta);

/// Couplings below this fraction of the largest one are treated as exact zeros.
inline constexpr double kCouplingDropTolerance = 1e-10;

} // namespace meanforce
