#include "meanforce/langevin.hpp"
#include "meanforce/response.hpp"

#include "support/reference_models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace meanforce;
using namespace meanforce::testing;

namespace {

SusceptibilityModel uncoupled_model() {
    ModelSpec spec;
    spec.bands.push_back(LorentzBand{});
    return SusceptibilityModel(spec);
}

SimConfig short_run(int n_traj, double T, std::uint64_t seed = 1) {
    SimConfig cfg;
    cfg.n_traj = n_traj;
    cfg.T = T;
    cfg.seed = seed;
    cfg.n_steps = 2500;
    cfg.dt = 0.02;
    cfg.n_bath = 300;
    return cfg;
}

double z_score(double value, double reference, double se) { return std::abs(value - reference) / se; }

} // namespace

TEST(CounterEngine, StreamsAreReproducibleAndDistinct) {
    CounterEngine a(CounterEngine::derive_key(7, 3, 1, 2));
    CounterEngine b(CounterEngine::derive_key(7, 3, 1, 2));
    for (int k = 0; k < 100; ++k) EXPECT_EQ(a(), b());

    std::set<std::uint64_t> keys;
    for (std::uint64_t traj = 0; traj < 8; ++traj) {
        for (std::uint64_t mode = 0; mode < 8; ++mode) {
            for (std::uint64_t axis = 0; axis < 3; ++axis) {
                keys.insert(CounterEngine::derive_key(7, traj, mode, axis));
            }
        }
    }
    EXPECT_EQ(keys.size(), 8u * 8u * 3u);
    EXPECT_NE(CounterEngine::derive_key(1, 0, 0, 0), CounterEngine::derive_key(2, 0, 0, 0));
}

TEST(CounterEngine, NormalDrawsHaveUnitMoments) {
    CounterEngine eng(CounterEngine::derive_key(0, 0, 0, 0));
    std::normal_distribution<double> normal;
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double x = normal(eng);
        sum += x;
        sum2 += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(sum2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(BathInitials, VanishAtTinyTemperature) {
    const auto s = sample_bath_initials(reference_model(), 200, 30.0, 1e-12, 4);
    EXPECT_LT(s.X.cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LT(s.V.cwiseAbs().maxCoeff(), 1e-4);
}

TEST(BathInitials, FixedSeedIsBitIdentical) {
    const auto bath = build_discrete_bath(reference_model(), 100, 30.0);
    const auto a = sample_bath_initials(bath, 2.0, 42, 9);
    const auto b = sample_bath_initials(bath, 2.0, 42, 9);
    const auto c = sample_bath_initials(bath, 2.0, 42, 10);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.V, b.V);
    EXPECT_NE(a.X, c.X);
}

TEST(NoiseForce, AutocovarianceMatchesDiscreteKernel) {
    const auto model = reference_model();
    const auto bath = build_discrete_bath(model, 300, 30.0);
    const double T = 2.0;
    const int n_traj = 2000;
    const double lag = 0.7;
    // Exact discrete-bath value: kB T sum_n c_n c_n^T cos(omega_n t) / omega_n^2.
    Mat3 expect0 = Mat3::Zero(), expect_lag = Mat3::Zero();
    for (int n = 0; n < bath.n_modes(); ++n) {
        const double w = bath.omega_grid[n];
        const Mat3 cc = bath.coupling_blocks[n] * bath.coupling_blocks[n];
        expect0 += T * cc / (w * w);
        expect_lag += T * cc * std::cos(w * lag) / (w * w);
    }
    Mat3 sum0 = Mat3::Zero(), sum0_sq = Mat3::Zero(), sum_lag = Mat3::Zero(), sum_lag_sq = Mat3::Zero();
    for (int k = 0; k < n_traj; ++k) {
        const auto s = sample_bath_initials(bath, T, 123, k);
        const Vec3 z0 = noise_force(bath, s, 0.0);
        const Vec3 zt = noise_force(bath, s, lag);
        const Mat3 a = z0 * z0.transpose();
        const Mat3 b = zt * z0.transpose();
        sum0 += a;
        sum0_sq += a.cwiseProduct(a);
        sum_lag += b;
        sum_lag_sq += b.cwiseProduct(b);
    }
    const Mat3 mean0 = sum0 / n_traj;
    const Mat3 mean_lag = sum_lag / n_traj;
    const Mat3 se0 = ((sum0_sq / n_traj - mean0.cwiseProduct(mean0)) / (n_traj - 1)).cwiseSqrt();
    const Mat3 se_lag = ((sum_lag_sq / n_traj - mean_lag.cwiseProduct(mean_lag)) / (n_traj - 1)).cwiseSqrt();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            EXPECT_LT(z_score(mean0(i, j), expect0(i, j), se0(i, j)), 3.0) << i << "," << j;
            EXPECT_LT(z_score(mean_lag(i, j), expect_lag(i, j), se_lag(i, j)), 3.0) << i << "," << j;
        }
    }
    // The discrete kernel approximates the continuum one, kB T omega0^2 K(t).
    EXPECT_LT(max_norm(expect0 - T * noise_kernel_time(model, 0.0)), 0.02 * max_norm(expect0));
    EXPECT_LT(max_norm(expect_lag - T * noise_kernel_time(model, lag)), 0.02 * max_norm(expect0));
}

TEST(ExplicitBath, FreeOscillatorStaysOnCosine) {
    const auto bath = build_discrete_bath(uncoupled_model(), 20, 10.0);
    BasicPhaseState<3> state;
    state.q = Vec3(1.0, 0.0, 0.0);
    state.bath.X = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 20);
    state.bath.V = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 20);
    const double dt = 0.05;
    const int n = static_cast<int>(std::round(100 * 2 * std::numbers::pi / dt));
    const auto q = integrate_explicit_bath(bath, state, dt, n);
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) {
        worst = std::max(worst, std::abs(q[k][0] - std::cos(k * dt)));
        worst = std::max(worst, q[k].tail<2>().cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(ExplicitBath, EnergyDriftIsSmallAndSecondOrder) {
    const auto bath = build_discrete_bath(reference_model(), 300, 54.0);
    const double coarse = energy_drift_per_period(bath, 0.04);
    const double fine = energy_drift_per_period(bath, 0.02);
    EXPECT_LT(fine, kMaxEnergyDrift);
    EXPECT_GT(coarse / fine, 3.0);
}

TEST(ExplicitBath, TotalEnergyOfDisplacedOscillator) {
    const auto bath = build_discrete_bath(reference_model(), 50, 20.0);
    BasicPhaseState<3> state;
    state.q = Vec3(1.0, 0.0, 0.0);
    state.p = Vec3(0.0, 2.0, 0.0);
    state.bath.X = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 50);
    state.bath.V = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 50);
    EXPECT_DOUBLE_EQ(total_energy(bath, state), 0.5 * 4.0 + 0.5 * 1.0);
}

TEST(MemoryForce, ZeroKernelGivesZeroForce) {
    std::vector<Vec3> history(5, Vec3(1.0, 2.0, 3.0));
    std::vector<Mat3> kernel(5, Mat3::Zero());
    EXPECT_EQ(memory_force(history, kernel, 0.1, 1.0), Vec3::Zero());
}

TEST(MemoryForce, ConstantHistoryIntegratesKernel) {
    const auto model = reference_model();
    const double t_end = 3.0;
    const Vec3 q(0.4, -1.0, 0.7);
    // Since K' = -chi, the exact integral of chi over [0, t] is K(0) - K(t).
    const Vec3 exact = model.omega0() * model.omega0() *
                       (noise_kernel_time(model, 0.0) - noise_kernel_time(model, t_end)) * q;
    double previous_error = 0.0;
    for (int n : {30, 60, 120}) {
        const double dt = t_end / n;
        std::vector<Vec3> history(n + 1, q);
        std::vector<Mat3> kernel;
        for (int j = 0; j <= n; ++j) kernel.push_back(memory_kernel_time(model, j * dt));
        const double error = (memory_force(history, kernel, dt, model.omega0()) - exact).norm();
        EXPECT_LT(error, 0.5 * dt * dt);
        if (previous_error > 0.0) EXPECT_NEAR(previous_error / error, 4.0, 0.5);
        previous_error = error;
    }
}

TEST(GeneralizedLangevin, ReproducesExplicitBathTrajectory) {
    const auto model = reference_model();
    const auto bath = build_discrete_bath(model, 10000, 100.0);
    BasicPhaseState<3> state;
    state.q = Vec3(0.5, -0.3, 0.2);
    state.p = Vec3(0.1, 0.2, -0.4);
    state.bath = sample_bath_initials(bath, 0.5, 3);
    const double dt = 0.005;
    const int n = static_cast<int>(20 * 2 * std::numbers::pi / dt);
    const auto noise = noise_series(bath, state.bath, dt, n);
    const Vec3 q0 = state.q, p0 = state.p;
    const auto explicit_q = integrate_explicit_bath(bath, state, dt, n);
    const auto gle_q = integrate_gle(model, q0, p0, noise, dt, n);
    double divergence = 0.0;
    for (int k = 0; k <= n; ++k) {
        divergence = std::max(divergence, (explicit_q[k] - gle_q[k]).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(divergence, 1e-3);
}

TEST(SimConfig, RejectsInvalidSettings) {
    SimConfig cfg;
    EXPECT_NO_THROW(cfg.validate(1.8));
    cfg.dt = 0.06;
    EXPECT_THROW(cfg.validate(1.8), std::invalid_argument);
    cfg = SimConfig{};
    cfg.burn_in = cfg.n_steps;
    EXPECT_THROW(cfg.validate(1.0), std::invalid_argument);
    cfg = SimConfig{};
    cfg.n_traj = 0;
    EXPECT_THROW(cfg.validate(1.0), std::invalid_argument);
    cfg = SimConfig{};
    cfg.T = -1.0;
    EXPECT_THROW(cfg.validate(1.0), std::invalid_argument);
}

TEST(Simulate, DeterministicAndThreadIndependent) {
    const auto model = reference_model();
    SimConfig cfg = short_run(12, 10.0, 77);
    cfg.n_steps = 400;
    const auto a = simulate(model, cfg);
    const auto b = simulate(model, cfg);
    cfg.threads = 3;
    const auto c = simulate(model, cfg);
    EXPECT_EQ(a.position_cov.value, b.position_cov.value);
    EXPECT_EQ(a.velocity_cov.std_error, b.velocity_cov.std_error);
    EXPECT_EQ(a.position_cov.value, c.position_cov.value);
    EXPECT_EQ(a.acf_samples.size(), c.acf_samples.size());
    for (std::size_t k = 0; k < a.acf_samples.size(); ++k) {
        EXPECT_EQ(a.acf_samples[k].value, c.acf_samples[k].value);
    }
}

TEST(Simulate, ClassicalEquilibriumAcrossTemperatures) {
    const auto model = reference_model();
    for (double T : {5.0, 20.0}) {
        const auto e = simulate(model, short_run(200, T, 11));
        const Mat3 q_ref = classical_position_covariance(model, T).value;
        for (int i = 0; i < 3; ++i) {
            EXPECT_LT(z_score(e.velocity_cov.value(i, i), T, e.velocity_cov.std_error(i, i)), 3.0)
                << "T = " << T << " axis " << i;
            for (int j = 0; j < 3; ++j) {
                EXPECT_LT(z_score(e.position_cov.value(i, j), q_ref(i, j), e.position_cov.std_error(i, j)), 3.0)
                    << "T = " << T << " (" << i << "," << j << ")";
            }
        }
        EXPECT_LT(e.energy_drift, kMaxEnergyDrift);
        EXPECT_GT(e.n_effective, 200.0);
    }
}

TEST(Simulate, HalvesAreStationary) {
    const auto e = simulate(reference_model(), short_run(200, 10.0, 5));
    for (int i = 0; i < 3; ++i) {
        const auto& a = e.position_cov_first_half;
        const auto& b = e.position_cov_second_half;
        const double se = std::hypot(a.std_error(i, i), b.std_error(i, i));
        EXPECT_LT(std::abs(a.value(i, i) - b.value(i, i)), 3.0 * se) << "axis " << i;
    }
}

TEST(Simulate, AutocorrelationStartsAtCovariance) {
    const auto e = simulate(reference_model(), short_run(50, 10.0, 9));
    ASSERT_FALSE(e.acf_samples.empty());
    EXPECT_EQ(e.acf_samples.front().lag, 0.0);
    EXPECT_LT(max_norm(e.acf_samples.front().value - e.position_cov.value), 1e-9 * max_norm(e.position_cov.value));
    EXPECT_LT(e.acf_samples.back().value.trace(), e.acf_samples.front().value.trace());
}

TEST(Simulate, RotationCovariantWithinStatisticalError) {
    const auto model = reference_model();
    std::mt19937_64 rng(21);
    const Mat3 R = random_rotation(rng);
    const auto plain = simulate(model, short_run(200, 10.0, 31));
    const auto turned = simulate(model.rotated(R), short_run(200, 10.0, 32));
    const Mat3 mapped = R * plain.position_cov.value * R.transpose();
    // Triangle-inequality bound on the rotated errors: |R| SE |R|^T.
    const Mat3 Ra = R.cwiseAbs();
    const Mat3 mapped_se = Ra * plain.position_cov.std_error * Ra.transpose();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double se = std::hypot(mapped_se(i, j), turned.position_cov.std_error(i, j));
            EXPECT_LT(std::abs(mapped(i, j) - turned.position_cov.value(i, j)), 3.0 * se)
                << i << "," << j;
        }
    }
}
