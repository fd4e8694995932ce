#include "meanforce/langevin.hpp"

#include "meanforce/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace meanforce {

namespace {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// Precomputed coupling layout of a discrete bath for the integrators.
template <int Dim>
struct BathOperator {
    using Columns = Eigen::Matrix<double, Dim, Eigen::Dynamic>;
    Eigen::Matrix<double, Dim, Eigen::Dynamic> coupling;  ///< [c_0 c_1 ... c_{N-1}]
    Eigen::ArrayXd omega;
    double omega0 = 1.0;

    explicit BathOperator(const BasicDiscreteBath<Dim>& bath) {
        const int n = bath.n_modes();
        coupling.resize(Dim, Dim * n);
        omega.resize(n);
        for (int i = 0; i < n; ++i) {
            coupling.block(0, Dim * i, Dim, Dim) = bath.coupling_blocks[i];
            omega[i] = bath.omega_grid[i];
        }
        omega0 = bath.omega0;
    }

    int size() const { return static_cast<int>(omega.size()); }

    /// sum_n c_n X_n.
    RealVector<Dim> force_on_oscillator(const Columns& X) const {
        return coupling * Eigen::Map<const Eigen::VectorXd>(X.data(), X.size());
    }

    /// Adds h c_n q to every bath velocity.
    void kick_bath(Columns& V, const RealVector<Dim>& q, double h) const {
        Eigen::Map<Eigen::VectorXd>(V.data(), V.size()).noalias() += h * (coupling.transpose() * q);
    }
};

/// Exact free evolution over one fixed step for a set of oscillators.
template <int Dim>
struct Rotation {
    Eigen::Array<double, 1, Eigen::Dynamic> c, s_over_w, w_s;

    Rotation(const Eigen::ArrayXd& omega, double dt) {
        c = (omega * dt).cos().transpose();
        s_over_w = ((omega * dt).sin() / omega).transpose();
        w_s = (omega * (omega * dt).sin()).transpose();
    }

    void apply(Eigen::Matrix<double, Dim, Eigen::Dynamic>& X,
               Eigen::Matrix<double, Dim, Eigen::Dynamic>& V) const {
        for (int a = 0; a < Dim; ++a) {
            const Eigen::Array<double, 1, Eigen::Dynamic> x = X.row(a).array();
            const Eigen::Array<double, 1, Eigen::Dynamic> v = V.row(a).array();
            X.row(a) = (c * x + s_over_w * v).matrix();
            V.row(a) = (c * v - w_s * x).matrix();
        }
    }
};

template <int Dim>
struct Stepper {
    const BathOperator<Dim>& op;
    double dt;
    Rotation<Dim> bath_rotation;
    double c0, s0;

    Stepper(const BathOperator<Dim>& o, double step)
        : op(o), dt(step), bath_rotation(o.omega, step),
          c0(std::cos(o.omega0 * step)), s0(std::sin(o.omega0 * step)) {}

    void kick(BasicPhaseState<Dim>& s, double h) const {
        s.p += h * op.force_on_oscillator(s.bath.X);
        op.kick_bath(s.bath.V, s.q, h);
    }

    void step(BasicPhaseState<Dim>& s) const {
        kick(s, 0.5 * dt);
        const RealVector<Dim> q = s.q;
        const double w0 = op.omega0;
        s.q = c0 * q + (s0 / w0) * s.p;
        s.p = c0 * s.p - (w0 * s0) * q;
        bath_rotation.apply(s.bath.X, s.bath.V);
        kick(s, 0.5 * dt);
    }
};

template <int Dim>
double energy_of(const BathOperator<Dim>& op, const BasicPhaseState<Dim>& s) {
    const double w02 = op.omega0 * op.omega0;
    double e = 0.5 * (s.p.squaredNorm() + w02 * s.q.squaredNorm());
    e += 0.5 * s.bath.V.squaredNorm();
    e += 0.5 * (s.bath.X.array().square().rowwise() * op.omega.square().transpose()).sum();
    e -= s.q.dot(op.force_on_oscillator(s.bath.X));
    return e;
}

template <int Dim>
double drift_of(const BathOperator<Dim>& op, double dt, int n_periods) {
    const double period = 2.0 * std::numbers::pi / op.omega0;
    const int n_steps = static_cast<int>(std::ceil(n_periods * period / dt));
    BasicPhaseState<Dim> s;
    s.q = RealVector<Dim>::Constant(1.0 / std::sqrt(static_cast<double>(Dim)));
    s.bath.X = Eigen::Matrix<double, Dim, Eigen::Dynamic>::Zero(Dim, op.size());
    s.bath.V = s.bath.X;
    const double e0 = energy_of(op, s);
    const Stepper<Dim> stepper(op, dt);
    double worst = 0.0;
    for (int k = 1; k <= n_steps; ++k) {
        stepper.step(s);
        const double e = energy_of(op, s);
        if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
        const double elapsed = std::max(1.0, k * dt / period);
        worst = std::max(worst, std::abs(e - e0) / (std::abs(e0) * elapsed));
    }
    return worst;
}

/// Per-trajectory time averages gathered after burn-in.
template <int Dim>
struct TrajectoryStats {
    RealMatrix<Dim> qq = RealMatrix<Dim>::Zero();
    RealMatrix<Dim> pp = RealMatrix<Dim>::Zero();
    RealMatrix<Dim> qq_first = RealMatrix<Dim>::Zero();
    RealMatrix<Dim> qq_second = RealMatrix<Dim>::Zero();
    RealVector<Dim> q4 = RealVector<Dim>::Zero();  ///< time average of q_i^4
    std::vector<RealMatrix<Dim>> acf;
};

template <int Dim>
void accumulate_estimate(const std::vector<RealMatrix<Dim>>& samples, MatrixEstimate<Dim>& out) {
    const double n = static_cast<double>(samples.size());
    RealMatrix<Dim> mean = RealMatrix<Dim>::Zero();
    for (const auto& m : samples) mean += m;
    mean /= n;
    RealMatrix<Dim> var = RealMatrix<Dim>::Zero();
    for (const auto& m : samples) var.array() += (m - mean).array().square();
    out.value = 0.5 * (mean + mean.transpose());
    if (samples.size() > 1) {
        var /= (n - 1.0);
        out.std_error = (var / n).cwiseSqrt();
        out.std_error = 0.5 * (out.std_error + out.std_error.transpose());
    } else {
        out.std_error.setZero();
    }
}

void require_positive_temperature(double T) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("temperature must be positive and finite");
    }
}

} // namespace

CounterEngine::result_type CounterEngine::operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
}

std::uint64_t CounterEngine::derive_key(std::uint64_t seed, std::uint64_t trajectory,
                                        std::uint64_t mode, std::uint64_t axis) noexcept {
    std::uint64_t h = mix64(seed + kGolden);
    h = mix64(h ^ (trajectory + 2 * kGolden));
    h = mix64(h ^ (mode + 3 * kGolden));
    return mix64(h ^ (axis + 5 * kGolden));
}

void SimConfig::validate(double frequency_scale) const {
    auto fail = [](const char* what) { throw std::invalid_argument(what); };
    if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
    if (!(dt * frequency_scale < kMaxStepScale)) {
        fail("dt times the largest system frequency must be below 0.1");
    }
    if (n_steps < 1) fail("n_steps must be at least 1");
    if (n_traj < 1) fail("n_traj must be at least 1");
    if (!(T > 0.0) || !std::isfinite(T)) fail("T must be positive and finite");
    if (n_bath < 10) fail("n_bath must be at least 10");
    if (burn_in < 0 || burn_in >= n_steps) fail("burn_in must lie in [0, n_steps)");
    if (!(omega_max >= 0.0) || !std::isfinite(omega_max)) fail("omega_max must be >= 0");
    if (acf_lags < 0) fail("acf_lags must be >= 0");
    if (acf_stride < 1) fail("acf_stride must be >= 1");
}

template <int Dim>
BasicBathState<Dim> sample_bath_initials(const BasicDiscreteBath<Dim>& bath, double T,
                                         std::uint64_t seed, std::uint64_t trajectory) {
    require_positive_temperature(T);
    const double kT = bath.units.kB * T;
    const int n = bath.n_modes();
    BasicBathState<Dim> s;
    s.X.resize(Dim, n);
    s.V.resize(Dim, n);
    for (int i = 0; i < n; ++i) {
        const double w = bath.omega_grid[i];
        for (int a = 0; a < Dim; ++a) {
            CounterEngine engine(CounterEngine::derive_key(seed, trajectory, i + 1, a));
            std::normal_distribution<double> normal(0.0, 1.0);
            s.X(a, i) = std::sqrt(kT) / w * normal(engine);
            s.V(a, i) = std::sqrt(kT) * normal(engine);
        }
    }
    return s;
}

template <int Dim>
BasicBathState<Dim> sample_bath_initials(const BasicSusceptibilityModel<Dim>& model, int n_bath,
                                         double omega_max, double T, std::uint64_t seed,
                                         std::uint64_t trajectory) {
    return sample_bath_initials(build_discrete_bath(model, n_bath, omega_max), T, seed, trajectory);
}

template <int Dim>
RealVector<Dim> noise_force(const BasicDiscreteBath<Dim>& bath, const BasicBathState<Dim>& state,
                            double t) {
    RealVector<Dim> f = RealVector<Dim>::Zero();
    for (int i = 0; i < bath.n_modes(); ++i) {
        const double w = bath.omega_grid[i];
        f += bath.coupling_blocks[i] *
             (state.X.col(i) * std::cos(w * t) + state.V.col(i) * (std::sin(w * t) / w));
    }
    return f;
}

template <int Dim>
std::vector<RealVector<Dim>> noise_series(const BasicDiscreteBath<Dim>& bath,
                                          const BasicBathState<Dim>& state, double dt,
                                          int n_steps) {
    if (!(dt > 0.0) || n_steps < 0) throw std::invalid_argument("noise_series needs dt > 0");
    const BathOperator<Dim> op(bath);
    const Rotation<Dim> rotation(op.omega, dt);
    BasicBathState<Dim> s = state;
    std::vector<RealVector<Dim>> out;
    out.reserve(static_cast<std::size_t>(n_steps) + 1);
    out.push_back(op.force_on_oscillator(s.X));
    for (int k = 0; k < n_steps; ++k) {
        rotation.apply(s.X, s.V);
        out.push_back(op.force_on_oscillator(s.X));
    }
    return out;
}

template <int Dim>
double total_energy(const BasicDiscreteBath<Dim>& bath, const BasicPhaseState<Dim>& state) {
    return energy_of(BathOperator<Dim>(bath), state);
}

template <int Dim>
std::vector<RealVector<Dim>> integrate_explicit_bath(const BasicDiscreteBath<Dim>& bath,
                                                     BasicPhaseState<Dim>& state, double dt,
                                                     int n_steps) {
    if (!(dt > 0.0) || n_steps < 0) throw std::invalid_argument("integration needs dt > 0");
    if (state.bath.X.cols() != bath.n_modes() || state.bath.V.cols() != bath.n_modes()) {
        throw std::invalid_argument("bath state size does not match the bath");
    }
    const BathOperator<Dim> op(bath);
    const Stepper<Dim> stepper(op, dt);
    std::vector<RealVector<Dim>> out;
    out.reserve(static_cast<std::size_t>(n_steps) + 1);
    out.push_back(state.q);
    for (int k = 0; k < n_steps; ++k) {
        stepper.step(state);
        out.push_back(state.q);
    }
    return out;
}

template <int Dim>
double energy_drift_per_period(const BasicDiscreteBath<Dim>& bath, double dt, int n_periods) {
    if (!(dt > 0.0) || n_periods < 1) throw std::invalid_argument("drift check needs dt > 0");
    return drift_of(BathOperator<Dim>(bath), dt, n_periods);
}

template <int Dim>
RealVector<Dim> memory_force(const std::vector<RealVector<Dim>>& history,
                             const std::vector<RealMatrix<Dim>>& kernel, double dt, double omega0) {
    if (history.empty()) throw std::invalid_argument("memory_force needs a non-empty history");
    const std::size_t k = history.size() - 1;
    if (kernel.size() < history.size()) {
        throw std::invalid_argument("memory kernel shorter than the history");
    }
    if (k == 0) return RealVector<Dim>::Zero();
    RealVector<Dim> sum = 0.5 * (kernel[0] * history[k] + kernel[k] * history[0]);
    for (std::size_t j = 1; j < k; ++j) sum.noalias() += kernel[j] * history[k - j];
    return omega0 * omega0 * dt * sum;
}

template <int Dim>
std::vector<RealVector<Dim>> integrate_gle(const BasicSusceptibilityModel<Dim>& model,
                                           const RealVector<Dim>& q0, const RealVector<Dim>& p0,
                                           const std::vector<RealVector<Dim>>& noise, double dt,
                                           int n_steps) {
    if (!(dt > 0.0) || n_steps < 0) throw std::invalid_argument("integration needs dt > 0");
    if (noise.size() < static_cast<std::size_t>(n_steps) + 1) {
        throw std::invalid_argument("noise series shorter than n_steps + 1");
    }
    const double w0 = model.omega0();
    std::vector<RealMatrix<Dim>> kernel(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) kernel[k] = memory_kernel_time(model, k * dt);

    std::vector<RealVector<Dim>> q;
    q.reserve(kernel.size());
    q.push_back(q0);
    RealVector<Dim> p = p0;
    auto acceleration = [&](std::size_t k) -> RealVector<Dim> {
        return -w0 * w0 * q[k] + memory_force(q, kernel, dt, w0) + noise[k];
    };
    RealVector<Dim> a = acceleration(0);
    for (int k = 0; k < n_steps; ++k) {
        q.push_back(q.back() + dt * p + 0.5 * dt * dt * a);
        const RealVector<Dim> a_next = acceleration(q.size() - 1);
        p += 0.5 * dt * (a + a_next);
        a = a_next;
    }
    return q;
}

template <int Dim>
BasicTrajectoryEnsemble<Dim> simulate(const BasicSusceptibilityModel<Dim>& model,
                                      const SimConfig& cfg) {
    cfg.validate(model.frequency_scale());
    const double omega_max =
        cfg.omega_max > 0.0 ? cfg.omega_max : 30.0 * model.frequency_scale();
    const BasicDiscreteBath<Dim> bath = build_discrete_bath(model, cfg.n_bath, omega_max);
    const BathOperator<Dim> op(bath);

    BasicTrajectoryEnsemble<Dim> out;
    out.energy_drift = drift_of(op, cfg.dt, 10);
    if (!(out.energy_drift <= kMaxEnergyDrift)) {
        throw StepSizeTooLarge("energy drift per period " + std::to_string(out.energy_drift) +
                               " exceeds 1e-3 on the check orbit");
    }

    const double kT = model.kB() * cfg.T;
    // Static stiffness of the discrete system; q(0) ~ N(0, kB T M0^-1).
    RealMatrix<Dim> m0 = RealMatrix<Dim>::Identity() * (bath.omega0 * bath.omega0);
    for (int i = 0; i < bath.n_modes(); ++i) {
        const auto& c = bath.coupling_blocks[i];
        m0 -= c * c / (bath.omega_grid[i] * bath.omega_grid[i]);
    }
    const Eigen::LLT<RealMatrix<Dim>> m0_llt(m0);
    if (m0_llt.info() != Eigen::Success) throw UnstableBath("static stiffness not positive definite");
    const RealMatrix<Dim> m0_inv = m0_llt.solve(RealMatrix<Dim>::Identity());
    const RealMatrix<Dim> q_factor = Eigen::LLT<RealMatrix<Dim>>(kT * m0_inv).matrixL();

    const int samples = cfg.n_steps - cfg.burn_in;
    const int half = samples / 2;
    std::vector<int> lags;
    for (int l = 0; l <= cfg.acf_lags; ++l) {
        if (l * cfg.acf_stride < samples) lags.push_back(l * cfg.acf_stride);
    }

    const Stepper<Dim> stepper(op, cfg.dt);
    std::vector<TrajectoryStats<Dim>> stats(static_cast<std::size_t>(cfg.n_traj));

    auto run = [&](int traj) {
        BasicPhaseState<Dim> s;
        for (int a = 0; a < Dim; ++a) {
            CounterEngine engine(CounterEngine::derive_key(cfg.seed, traj, 0, a));
            std::normal_distribution<double> normal(0.0, 1.0);
            s.q[a] = normal(engine);
            s.p[a] = std::sqrt(kT) * normal(engine);
        }
        s.q = q_factor * s.q;
        s.bath = sample_bath_initials(bath, cfg.T, cfg.seed, traj);
        for (int i = 0; i < bath.n_modes(); ++i) {
            const double w = bath.omega_grid[i];
            s.bath.X.col(i) += bath.coupling_blocks[i] * s.q / (w * w);
        }

        std::vector<RealVector<Dim>> qs;
        qs.reserve(static_cast<std::size_t>(samples));
        TrajectoryStats<Dim>& st = stats[traj];
        for (int k = 1; k <= cfg.n_steps; ++k) {
            stepper.step(s);
            if (k <= cfg.burn_in) continue;
            const int idx = k - cfg.burn_in - 1;
            const RealMatrix<Dim> qq = s.q * s.q.transpose();
            st.qq += qq;
            st.pp += s.p * s.p.transpose();
            (idx < half ? st.qq_first : st.qq_second) += qq;
            st.q4 += s.q.array().square().square().matrix();
            qs.push_back(s.q);
        }
        st.qq /= samples;
        st.pp /= samples;
        st.q4 /= samples;
        st.qq_first /= std::max(half, 1);
        st.qq_second /= std::max(samples - half, 1);
        st.acf.resize(lags.size());
        for (std::size_t l = 0; l < lags.size(); ++l) {
            RealMatrix<Dim> acc = RealMatrix<Dim>::Zero();
            const int count = samples - lags[l];
            for (int t = 0; t < count; ++t) acc += qs[t + lags[l]] * qs[t].transpose();
            st.acf[l] = acc / count;
        }
    };

    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.n_traj)));
    if (n_threads == 1) {
        for (int t = 0; t < cfg.n_traj; ++t) run(t);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_threads; ++w) {
            pool.emplace_back([&, w] {
                for (int t = static_cast<int>(w); t < cfg.n_traj; t += static_cast<int>(n_threads)) run(t);
            });
        }
        for (auto& th : pool) th.join();
    }

    // Fixed-order reduction over trajectories.
    std::vector<RealMatrix<Dim>> qq, pp, first, second;
    for (const auto& st : stats) {
        qq.push_back(st.qq);
        pp.push_back(st.pp);
        first.push_back(st.qq_first);
        second.push_back(st.qq_second);
    }
    accumulate_estimate(qq, out.position_cov);
    accumulate_estimate(pp, out.velocity_cov);
    accumulate_estimate(first, out.position_cov_first_half);
    accumulate_estimate(second, out.position_cov_second_half);
    for (std::size_t l = 0; l < lags.size(); ++l) {
        AcfSample<Dim> sample;
        sample.lag = lags[l] * cfg.dt;
        for (const auto& st : stats) sample.value += st.acf[l];
        sample.value /= cfg.n_traj;
        out.acf_samples.push_back(sample);
    }

    RealVector<Dim> q4 = RealVector<Dim>::Zero();
    for (const auto& st : stats) q4 += st.q4;
    q4 /= cfg.n_traj;
    double n_eff = 0.0;
    for (int a = 0; a < Dim; ++a) {
        const double var_single = q4[a] - out.position_cov.value(a, a) * out.position_cov.value(a, a);
        const double se = out.position_cov.std_error(a, a);
        n_eff += se > 0.0 ? var_single / (se * se)
                          : static_cast<double>(cfg.n_traj) * samples;
    }
    out.n_effective = n_eff / Dim;
    out.n_traj = cfg.n_traj;
    out.samples_per_traj = samples;
    return out;
}

#define MEANFORCE_INSTANTIATE(D)                                                                  \
    template BasicBathState<D> sample_bath_initials<D>(const BasicDiscreteBath<D>&, double,       \
                                                       std::uint64_t, std::uint64_t);             \
    template BasicBathState<D> sample_bath_initials<D>(const BasicSusceptibilityModel<D>&, int,   \
                                                       double, double, std::uint64_t,             \
                                                       std::uint64_t);                            \
    template RealVector<D> noise_force<D>(const BasicDiscreteBath<D>&, const BasicBathState<D>&,  \
                                          double);                                                \
    template std::vector<RealVector<D>> noise_series<D>(const BasicDiscreteBath<D>&,              \
                                                        const BasicBathState<D>&, double, int);   \
    template double total_energy<D>(const BasicDiscreteBath<D>&, const BasicPhaseState<D>&);      \
    template std::vector<RealVector<D>> integrate_explicit_bath<D>(const BasicDiscreteBath<D>&,   \
                                                                   BasicPhaseState<D>&, double,   \
                                                                   int);                          \
    template double energy_drift_per_period<D>(const BasicDiscreteBath<D>&, double, int);         \
    template RealVector<D> memory_force<D>(const std::vector<RealVector<D>>&,                     \
                                           const std::vector<RealMatrix<D>>&, double, double);    \
    template std::vector<RealVector<D>> integrate_gle<D>(const BasicSusceptibilityModel<D>&,      \
                                                         const RealVector<D>&,                    \
                                                         const RealVector<D>&,                    \
                                                         const std::vector<RealVector<D>>&,       \
                                                         double, int);                            \
    template BasicTrajectoryEnsemble<D> simulate<D>(const BasicSusceptibilityModel<D>&,           \
                                                    const SimConfig&);

MEANFORCE_INSTANTIATE(1)
MEANFORCE_INSTANTIATE(3)

#undef MEANFORCE_INSTANTIATE

} // namespace meanforce
