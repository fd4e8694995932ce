#pragma once

#include "meanforce/bath_model.hpp"
#include "meanforce/oracle.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace meanforce {

/// Counter-based random bit generator: a splitmix64 stream started from a derived key.
/// Every (seed, trajectory, mode, axis) tuple gets its own independent stream, so
/// ensembles are reproducible and trajectories need no coordination.
class CounterEngine {
public:
    using result_type = std::uint64_t;

    explicit CounterEngine(std::uint64_t key) noexcept : state_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t trajectory,
                                    std::uint64_t mode, std::uint64_t axis) noexcept;

private:
    std::uint64_t state_;
};

struct SimConfig {
    double dt = 0.02;
    int n_steps = 2500;
    int n_traj = 2000;
    double T = 10.0;
    std::uint64_t seed = 0;
    int n_bath = 300;
    int burn_in = 0;
    /// Bath cutoff; 0 selects 30 times the model's largest frequency.
    double omega_max = 0.0;
    /// Number of autocorrelation lags recorded, spaced acf_stride steps apart.
    int acf_lags = 20;
    int acf_stride = 5;
    unsigned threads = 1;

    /// Throws std::invalid_argument when an invariant fails. `frequency_scale` is the
    /// largest system frequency; dt * frequency_scale must stay below 0.1.
    void validate(double frequency_scale) const;

    bool operator==(const SimConfig&) const = default;
};

/// Phase-space state of the bath, one column per mode.
template <int Dim>
struct BasicBathState {
    Eigen::Matrix<double, Dim, Eigen::Dynamic> X;
    Eigen::Matrix<double, Dim, Eigen::Dynamic> V;
};

/// Full phase-space state of oscillator plus bath.
template <int Dim>
struct BasicPhaseState {
    RealVector<Dim> q = RealVector<Dim>::Zero();
    RealVector<Dim> p = RealVector<Dim>::Zero();
    BasicBathState<Dim> bath;
};

template <int Dim>
struct MatrixEstimate {
    RealMatrix<Dim> value = RealMatrix<Dim>::Zero();
    RealMatrix<Dim> std_error = RealMatrix<Dim>::Zero();
};

template <int Dim>
struct AcfSample {
    double lag = 0.0;
    RealMatrix<Dim> value = RealMatrix<Dim>::Zero();  ///< <q(t + lag) q(t)^T>
};

template <int Dim>
struct BasicTrajectoryEnsemble {
    MatrixEstimate<Dim> position_cov;
    MatrixEstimate<Dim> velocity_cov;
    MatrixEstimate<Dim> position_cov_first_half;
    MatrixEstimate<Dim> position_cov_second_half;
    std::vector<AcfSample<Dim>> acf_samples;
    /// Independent-sample count equivalent to the ensemble for the diagonal
    /// position variances (autocorrelation-adjusted).
    double n_effective = 0.0;
    /// Largest energy drift per period seen on the deterministic check orbit.
    double energy_drift = 0.0;
    int n_traj = 0;
    int samples_per_traj = 0;
};

using TrajectoryEnsemble = BasicTrajectoryEnsemble<3>;

/// Free-bath classical Gibbs draw for trajectory `trajectory`: per mode and axis
/// X ~ N(0, kB T / omega_n^2) and V ~ N(0, kB T), all independent. The induced noise
/// force then has autocovariance kB T omega0^2 K(t) with K the noise kernel.
template <int Dim>
BasicBathState<Dim> sample_bath_initials(const BasicDiscreteBath<Dim>& bath, double T,
                                         std::uint64_t seed, std::uint64_t trajectory = 0);

/// Same draw on a freshly discretized bath.
template <int Dim>
BasicBathState<Dim> sample_bath_initials(const BasicSusceptibilityModel<Dim>& model, int n_bath,
                                         double omega_max, double T, std::uint64_t seed,
                                         std::uint64_t trajectory = 0);

/// zeta(t) = sum_n c_n [X_n cos(omega_n t) + V_n sin(omega_n t) / omega_n]: the force the
/// freely evolving bath exerts on the oscillator.
template <int Dim>
RealVector<Dim> noise_force(const BasicDiscreteBath<Dim>& bath, const BasicBathState<Dim>& state,
                            double t);

/// noise_force at t = k dt for k = 0..n_steps.
template <int Dim>
std::vector<RealVector<Dim>> noise_series(const BasicDiscreteBath<Dim>& bath,
                                          const BasicBathState<Dim>& state, double dt,
                                          int n_steps);

/// Total energy of the discrete oscillator-plus-bath Hamiltonian.
template <int Dim>
double total_energy(const BasicDiscreteBath<Dim>& bath, const BasicPhaseState<Dim>& state);

/// Symplectic second-order integration of the explicit bath: exact free rotation of the
/// oscillator and every bath mode, with position-only coupling kicks (Strang splitting).
/// Returns q at t = k dt for k = 0..n_steps and leaves `state` at the final time.
template <int Dim>
std::vector<RealVector<Dim>> integrate_explicit_bath(const BasicDiscreteBath<Dim>& bath,
                                                     BasicPhaseState<Dim>& state, double dt,
                                                     int n_steps);

/// Largest |E(t) - E(0)| / (E(0) max(1, t / period)) along a noise-free orbit started
/// from a unit displacement with the bath at rest.
template <int Dim>
double energy_drift_per_period(const BasicDiscreteBath<Dim>& bath, double dt, int n_periods = 10);

/// Trapezoid-rule memory force omega0^2 dt sum_j w_j chi(j dt) q(t_k - j dt) at the last
/// history point. `history` holds q_0..q_k, `kernel` holds chi at lags 0..k (at least).
template <int Dim>
RealVector<Dim> memory_force(const std::vector<RealVector<Dim>>& history,
                             const std::vector<RealMatrix<Dim>>& kernel, double dt, double omega0);

/// Direct generalized Langevin integration with the continuum memory kernel and a given
/// noise series (one sample per step, n_steps + 1 samples). Velocity Verlet; the memory
/// kernel vanishes at zero lag, so every step is explicit.
template <int Dim>
std::vector<RealVector<Dim>> integrate_gle(const BasicSusceptibilityModel<Dim>& model,
                                           const RealVector<Dim>& q0, const RealVector<Dim>& p0,
                                           const std::vector<RealVector<Dim>>& noise, double dt,
                                           int n_steps);

/// Ensemble of explicit-bath trajectories started from the exact classical Gibbs state of
/// the discrete Hamiltonian. Throws StepSizeTooLarge if the check orbit drifts by more
/// than kMaxEnergyDrift per period. Output is independent of cfg.threads.
template <int Dim>
BasicTrajectoryEnsemble<Dim> simulate(const BasicSusceptibilityModel<Dim>& model,
                                      const SimConfig& cfg);

inline constexpr double kMaxEnergyDrift = 1e-3;
inline constexpr double kMaxStepScale = 0.1;

} // namespace meanforce
