#include "meanforce/oracle.hpp"

#include "meanforce/errors.hpp"
#include "meanforce/response.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace meanforce {

namespace {

/// Separation, relative to the distance to the nearest pole, below which dressed
/// eigenvalues share one invariant subspace.
constexpr double kClusterTolerance = 1e-9;

/// Compensated (Neumaier) summation.
class StableSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

void require_temperature(double T) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("temperature must be positive and finite");
    }
}

/// Bath sites with their couplings truncated to the numerically nonzero directions.
template <int Dim>
struct PoleData {
    using Mat = RealMatrix<Dim>;
    double w02 = 1.0;
    std::vector<double> d;              ///< squared frequency of each coupled site
    std::vector<Mat> C;                 ///< truncated c_n c_n
    std::vector<int> site;              ///< index into the bath grid
    std::vector<int> rank;
    /// Orthonormal basis of the dropped directions at every grid site.
    std::vector<Eigen::Matrix<double, Dim, Eigen::Dynamic>> dropped;
    std::vector<Mat> truncated_blocks;  ///< per grid site

    /// Upper-triangle entries of every C_n stored entry-major for vectorized sums.
    std::vector<std::vector<double>> packed;

    void pack() {
        packed.assign(Dim * (Dim + 1) / 2, std::vector<double>(d.size()));
        for (std::size_t n = 0; n < d.size(); ++n) {
            int e = 0;
            for (int i = 0; i < Dim; ++i) {
                for (int j = i; j < Dim; ++j) packed[e++][n] = C[n](i, j);
            }
        }
    }

    /// sum C_n r_n^power with r_n = 1 / ((d_n - anchor) - offset), power 1 or 2.
    Mat weighted_sum(double anchor, double offset, int power) const {
        constexpr int kEntries = Dim * (Dim + 1) / 2;
        const std::size_t n_poles = d.size();
        std::array<const double*, kEntries> c{};
        for (int e = 0; e < kEntries; ++e) c[e] = packed[e].data();
        std::array<double, kEntries> acc{};
        const double* dd = d.data();
        for (std::size_t n = 0; n < n_poles; ++n) {
            double r = 1.0 / ((dd[n] - anchor) - offset);
            if (power == 2) r *= r;
            for (int e = 0; e < kEntries; ++e) acc[e] += c[e][n] * r;
        }
        Mat m;
        int e = 0;
        for (int i = 0; i < Dim; ++i) {
            for (int j = i; j < Dim; ++j) {
                m(i, j) = acc[e];
                m(j, i) = acc[e];
                ++e;
            }
        }
        return m;
    }

    /// M(z) = (w0^2 - z) I - sum C_n / (d_n - z) at z = anchor + offset. Keeping the
    /// offset separate resolves roots that sit extremely close to a bath frequency.
    Mat secular(double anchor, double offset) const {
        Mat m = -weighted_sum(anchor, offset, 1);
        m.diagonal().array() += w02 - (anchor + offset);
        return m;
    }

    /// -M'(z) = I + sum C_n / (d_n - z)^2.
    Mat metric(double anchor, double offset) const {
        Mat b = weighted_sum(anchor, offset, 2);
        b.diagonal().array() += 1.0;
        return b;
    }
};

template <int Dim>
PoleData<Dim> make_poles(const BasicDiscreteBath<Dim>& bath) {
    using Mat = RealMatrix<Dim>;
    PoleData<Dim> p;
    p.w02 = bath.omega0 * bath.omega0;
    const int n = bath.n_modes();
    std::vector<Eigen::SelfAdjointEigenSolver<Mat>> eig(n);
    double s_max = 0.0;
    for (int i = 0; i < n; ++i) {
        eig[i].compute(bath.coupling_blocks[i]);
        s_max = std::max(s_max, eig[i].eigenvalues().cwiseAbs().maxCoeff());
    }
    const double cut = kCouplingDropTolerance * s_max;
    p.dropped.resize(n);
    p.truncated_blocks.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& s = eig[i].eigenvalues();
        const auto& u = eig[i].eigenvectors();
        Mat c = Mat::Zero();
        Mat cc = Mat::Zero();
        int r = 0;
        std::vector<int> drop;
        for (int k = 0; k < Dim; ++k) {
            if (s_max > 0.0 && std::abs(s[k]) > cut) {
                c += s[k] * u.col(k) * u.col(k).transpose();
                cc += s[k] * s[k] * u.col(k) * u.col(k).transpose();
                ++r;
            } else {
                drop.push_back(k);
            }
        }
        p.dropped[i].resize(Dim, static_cast<Eigen::Index>(drop.size()));
        for (std::size_t k = 0; k < drop.size(); ++k) p.dropped[i].col(k) = u.col(drop[k]);
        p.truncated_blocks[i] = c;
        if (r > 0) {
            const double w = bath.omega_grid[i];
            p.d.push_back(w * w);
            p.C.push_back(cc);
            p.site.push_back(i);
            p.rank.push_back(r);
        }
    }
    p.pack();
    return p;
}

template <int Dim>
RealVector<Dim> sorted_eigenvalues(const RealMatrix<Dim>& m) {
    Eigen::SelfAdjointEigenSolver<RealMatrix<Dim>> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Upper bound on the spectrum of the stiffness matrix (largest absolute row sum).
template <int Dim>
double spectral_upper_bound(const BasicDiscreteBath<Dim>& bath) {
    const double w02 = bath.omega0 * bath.omega0;
    Eigen::Matrix<double, Dim, 1> osc_rows = Eigen::Matrix<double, Dim, 1>::Constant(w02);
    double bound = 0.0;
    for (int i = 0; i < bath.n_modes(); ++i) {
        const auto row_abs = bath.coupling_blocks[i].cwiseAbs().rowwise().sum();
        osc_rows += row_abs;
        const double w = bath.omega_grid[i];
        bound = std::max(bound, w * w + row_abs.maxCoeff());
    }
    bound = std::max(bound, osc_rows.maxCoeff());
    return bound * (1.0 + 1e-12) + 1e-300;
}

struct ModeRecord {
    double z = 0.0;
    double anchor = 0.0;
    double offset = 0.0;
    Eigen::Matrix<double, 3, 1> v = Eigen::Matrix<double, 3, 1>::Zero();
    double bath_norm = 0.0;
    double bath_potential = 0.0;
    double overlap = 0.0;
    int pure_site = -1;  ///< grid site of an uncoupled bath mode, -1 otherwise
    int pure_column = -1;
};

template <int Dim>
void fill_mode_sums(const PoleData<Dim>& p, ModeRecord& rec, const RealVector<Dim>& v) {
    StableSum norm, potential, overlap;
    for (std::size_t n = 0; n < p.d.size(); ++n) {
        const double r = 1.0 / ((p.d[n] - rec.anchor) - rec.offset);
        const double q = v.dot(p.C[n] * v);
        norm.add(q * r * r);
        potential.add(p.d[n] * q * r * r);
        overlap.add(q * r);
    }
    rec.bath_norm = norm.value();
    rec.bath_potential = potential.value();
    rec.overlap = overlap.value();
    rec.v.template head<Dim>() = v;
}

/// Finds the roots of every sorted eigenvalue branch of M inside (lo, hi); M is
/// analytic there and each branch strictly decreasing. Roots are located as offsets from
/// the nearer bath frequency.
template <int Dim>
void solve_interval(const PoleData<Dim>& p, double lo, double hi, bool lo_is_pole,
                    bool hi_is_pole, std::vector<ModeRecord>& out) {
    constexpr double kPoleGap = 1e-24;
    auto eig_at = [&](double anchor, double offset) {
        return sorted_eigenvalues<Dim>(p.secular(anchor, offset));
    };
    // Extreme points of the interval, each expressed relative to its own anchor.
    const double lo_offset = lo_is_pole ? kPoleGap * lo : 0.0;
    const double hi_anchor = hi_is_pole ? hi : lo;
    const double hi_offset = hi_is_pole ? -kPoleGap * hi : hi - lo;
    const RealVector<Dim> mu_a = eig_at(lo, lo_offset);
    const RealVector<Dim> mu_b = eig_at(hi_anchor, hi_offset);
    const double mid = 0.5 * (lo + hi);
    RealVector<Dim> mu_mid = RealVector<Dim>::Zero();
    const bool split = lo_is_pole && hi_is_pole;
    if (split) mu_mid = eig_at(lo, mid - lo);

    std::vector<ModeRecord> found;
    for (int i = 0; i < Dim; ++i) {
        if (!(mu_a[i] > 0.0 && mu_b[i] <= 0.0)) continue;
        double anchor, x0, x1, f0, f1;
        if (split && mu_mid[i] > 0.0) {
            anchor = hi;
            x0 = mid - hi;
            x1 = hi_offset;
            f0 = eig_at(anchor, x0)[i];
            f1 = mu_b[i];
        } else if (split) {
            anchor = lo;
            x0 = lo_offset;
            x1 = mid - lo;
            f0 = mu_a[i];
            f1 = mu_mid[i];
        } else if (hi_is_pole) {
            anchor = hi;
            x0 = lo - hi;
            x1 = hi_offset;
            f0 = eig_at(anchor, x0)[i];
            f1 = mu_b[i];
        } else {
            anchor = lo;
            x0 = lo_offset;
            x1 = hi - lo;
            f0 = mu_a[i];
            f1 = mu_b[i];
        }
        ModeRecord rec;
        rec.anchor = anchor;
        if (f1 == 0.0) {
            rec.offset = x1;
        } else if (f0 == 0.0) {
            rec.offset = x0;
        } else {
            auto branch = [&](double x) { return eig_at(anchor, x)[i]; };
            // Near a pole the branch varies like 1/offset over many decades, so the
            // bracket is first narrowed geometrically.
            while (x0 != 0.0 && x1 != 0.0 && (x0 > 0.0) == (x1 > 0.0) &&
                   std::max(std::abs(x0), std::abs(x1)) > 4.0 * std::min(std::abs(x0), std::abs(x1))) {
                const double xm = std::copysign(std::sqrt(std::abs(x0) * std::abs(x1)), x0);
                const double fm = branch(xm);
                if ((fm > 0.0) == (f0 > 0.0)) {
                    x0 = xm;
                    f0 = fm;
                } else {
                    x1 = xm;
                    f1 = fm;
                }
            }
            std::uintmax_t iterations = 200;
            const auto bracket = boost::math::tools::toms748_solve(
                branch, x0, x1, f0, f1, boost::math::tools::eps_tolerance<double>(52), iterations);
            if (iterations >= 200) throw EigenFailure("secular root search did not converge");
            rec.offset = 0.5 * (bracket.first + bracket.second);
        }
        rec.z = rec.anchor + rec.offset;
        found.push_back(rec);
    }
    std::sort(found.begin(), found.end(), [](const ModeRecord& x, const ModeRecord& y) {
        return x.anchor != y.anchor ? x.anchor < y.anchor : x.offset < y.offset;
    });
    std::size_t start = 0;
    while (start < found.size()) {
        std::size_t end = start + 1;
        while (end < found.size() && found[end].anchor == found[start].anchor &&
               found[end].offset - found[end - 1].offset <=
                   kClusterTolerance * std::min(std::abs(found[end].offset),
                                                std::abs(found[end - 1].offset))) {
            ++end;
        }
        const std::size_t k = end - start;
        double mean = 0.0;
        for (std::size_t j = start; j < end; ++j) mean += found[j].offset / static_cast<double>(k);
        const double anchor = found[start].anchor;
        // M v = mu B v with B = -M' positive definite; B-normalized null vectors are
        // exactly the oscillator parts of unit-norm mode vectors.
        Eigen::GeneralizedSelfAdjointEigenSolver<RealMatrix<Dim>> ges(p.secular(anchor, mean),
                                                                     p.metric(anchor, mean));
        if (ges.info() != Eigen::Success) throw EigenFailure("generalized eigensolve failed");
        std::vector<int> order(Dim);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            return std::abs(ges.eigenvalues()[x]) < std::abs(ges.eigenvalues()[y]);
        });
        for (std::size_t j = 0; j < k; ++j) {
            ModeRecord rec = found[start + j];
            fill_mode_sums<Dim>(p, rec, ges.eigenvectors().col(order[j]));
            out.push_back(rec);
        }
        start = end;
    }
}

template <int Dim>
BasicNormalModes<Dim> assemble(const BasicDiscreteBath<Dim>& bath, std::vector<ModeRecord> recs) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const ModeRecord& x, const ModeRecord& y) { return x.z < y.z; });
    BasicNormalModes<Dim> modes;
    modes.omega0 = bath.omega0;
    modes.units = bath.units;
    const auto m = static_cast<Eigen::Index>(recs.size());
    modes.frequencies.resize(m);
    modes.oscillator_rows.resize(Dim, m);
    modes.bath_norm.resize(m);
    modes.bath_potential.resize(m);
    modes.coupling_overlap.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(recs[i].z > 0.0)) throw UnstableBath("non-positive normal-mode eigenvalue");
        modes.frequencies[i] = std::sqrt(recs[i].z);
        modes.oscillator_rows.col(i) = recs[i].v.template head<Dim>();
        modes.bath_norm[i] = recs[i].bath_norm;
        modes.bath_potential[i] = recs[i].bath_potential;
        modes.coupling_overlap[i] = recs[i].overlap;
    }
    return modes;
}

template <int Dim>
void check_stable(const PoleData<Dim>& p) {
    const RealVector<Dim> mu = sorted_eigenvalues<Dim>(p.secular(0.0, 0.0));
    if (!(mu[0] > 0.0)) {
        throw UnstableBath("discrete-bath stiffness is not positive definite (min static eigenvalue " +
                           std::to_string(mu[0]) + ")");
    }
}

double mode_weight(double omega, double hbar, double kT) {
    return hbar / (2.0 * omega) * coth_guarded(hbar * omega / (2.0 * kT));
}

} // namespace

template <int Dim>
Eigen::MatrixXd BasicDiscreteBath<Dim>::stiffness() const {
    const int n = n_modes();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dimension(), dimension());
    k.template topLeftCorner<Dim, Dim>().diagonal().setConstant(omega0 * omega0);
    for (int i = 0; i < n; ++i) {
        const int o = Dim * (i + 1);
        k.block(o, o, Dim, Dim).diagonal().setConstant(omega_grid[i] * omega_grid[i]);
        k.block(0, o, Dim, Dim) = -coupling_blocks[i];
        k.block(o, 0, Dim, Dim) = -coupling_blocks[i].transpose();
    }
    return k;
}

template <int Dim>
double default_bath_cutoff(const BasicSusceptibilityModel<Dim>& model) {
    return 60.0 * model.frequency_scale();
}

template <int Dim>
BasicDiscreteBath<Dim> build_discrete_bath(const BasicSusceptibilityModel<Dim>& model,
                                           int n_modes, double omega_max) {
    if (n_modes < 10) throw std::invalid_argument("n_modes must be at least 10");
    if (!(omega_max > model.frequency_scale()) || !std::isfinite(omega_max)) {
        throw std::invalid_argument("omega_max must exceed the model's largest frequency");
    }
    BasicDiscreteBath<Dim> bath;
    bath.omega0 = model.omega0();
    bath.units = model.units();
    const double dw = omega_max / n_modes;
    bath.omega_grid.resize(n_modes);
    bath.weights.assign(n_modes, dw);
    bath.coupling_blocks.resize(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        const double w = (i + 0.5) * dw;
        bath.omega_grid[i] = w;
        bath.coupling_blocks[i] = coupling_tensor(model, w) * std::sqrt(dw);
    }
    check_stable(make_poles(bath));
    return bath;
}

template <int Dim>
BasicNormalModes<Dim> diagonalize(const BasicDiscreteBath<Dim>& bath, bool with_transform) {
    const PoleData<Dim> p = make_poles(bath);
    check_stable(p);
    std::vector<ModeRecord> recs;
    recs.reserve(static_cast<std::size_t>(bath.dimension()));

    const double top = spectral_upper_bound(bath);
    double lo = 0.0;
    bool lo_pole = false;
    for (std::size_t k = 0; k <= p.d.size(); ++k) {
        const bool hi_pole = k < p.d.size();
        const double hi = hi_pole ? p.d[k] : top;
        solve_interval(p, lo, hi, lo_pole, hi_pole, recs);
        lo = hi;
        lo_pole = true;
    }
    std::size_t expected = Dim;
    for (int r : p.rank) expected += static_cast<std::size_t>(r);
    if (recs.size() != expected) {
        throw EigenFailure("secular solver found " + std::to_string(recs.size()) + " of " +
                           std::to_string(expected) + " coupled modes");
    }
    for (int i = 0; i < bath.n_modes(); ++i) {
        for (Eigen::Index c = 0; c < p.dropped[i].cols(); ++c) {
            ModeRecord rec;
            const double w = bath.omega_grid[i];
            rec.z = w * w;
            rec.bath_norm = 1.0;
            rec.bath_potential = w * w;
            rec.pure_site = i;
            rec.pure_column = static_cast<int>(c);
            recs.push_back(rec);
        }
    }
    std::stable_sort(recs.begin(), recs.end(),
                     [](const ModeRecord& x, const ModeRecord& y) { return x.z < y.z; });
    BasicNormalModes<Dim> modes = assemble(bath, recs);
    if (with_transform) {
        Eigen::MatrixXd o = Eigen::MatrixXd::Zero(bath.dimension(), modes.size());
        for (int m = 0; m < modes.size(); ++m) {
            const ModeRecord& rec = recs[m];
            if (rec.pure_site >= 0) {
                o.block(Dim * (rec.pure_site + 1), m, Dim, 1) = p.dropped[rec.pure_site].col(rec.pure_column);
                continue;
            }
            const RealVector<Dim> v = rec.v.template head<Dim>();
            o.block(0, m, Dim, 1) = v;
            for (int i = 0; i < bath.n_modes(); ++i) {
                const double w = bath.omega_grid[i];
                o.block(Dim * (i + 1), m, Dim, 1) =
                    p.truncated_blocks[i] * v / ((w * w - rec.anchor) - rec.offset);
            }
        }
        modes.transform = std::move(o);
    }
    return modes;
}

template <int Dim>
BasicNormalModes<Dim> diagonalize_dense(const BasicDiscreteBath<Dim>& bath) {
    const Eigen::MatrixXd k = bath.stiffness();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    if (es.info() != Eigen::Success) throw EigenFailure("dense eigensolve did not converge");
    const Eigen::MatrixXd& o = es.eigenvectors();
    std::vector<ModeRecord> recs(static_cast<std::size_t>(o.cols()));
    for (Eigen::Index m = 0; m < o.cols(); ++m) {
        ModeRecord& rec = recs[m];
        rec.z = es.eigenvalues()[m];
        rec.v.template head<Dim>() = o.block(0, m, Dim, 1);
        StableSum norm, potential, overlap;
        for (int i = 0; i < bath.n_modes(); ++i) {
            const RealVector<Dim> y = o.block(Dim * (i + 1), m, Dim, 1);
            const double w2 = bath.omega_grid[i] * bath.omega_grid[i];
            norm.add(y.squaredNorm());
            potential.add(w2 * y.squaredNorm());
            overlap.add(rec.v.template head<Dim>().dot(bath.coupling_blocks[i] * y));
        }
        rec.bath_norm = norm.value();
        rec.bath_potential = potential.value();
        rec.overlap = overlap.value();
    }
    BasicNormalModes<Dim> modes = assemble(bath, recs);
    modes.transform = o;
    return modes;
}

template <int Dim>
RealMatrix<Dim> oracle_position_covariance(const BasicNormalModes<Dim>& modes, double T) {
    require_temperature(T);
    const double kT = modes.units.kB * T;
    RealMatrix<Dim> acc = RealMatrix<Dim>::Zero();
    for (int m = 0; m < modes.size(); ++m) {
        const auto v = modes.oscillator_rows.col(m);
        acc.noalias() += mode_weight(modes.frequencies[m], modes.units.hbar, kT) * v * v.transpose();
    }
    return 0.5 * (acc + acc.transpose());
}

template <int Dim>
RealMatrix<Dim> oracle_momentum_covariance(const BasicNormalModes<Dim>& modes, double T) {
    require_temperature(T);
    const double kT = modes.units.kB * T;
    RealMatrix<Dim> acc = RealMatrix<Dim>::Zero();
    for (int m = 0; m < modes.size(); ++m) {
        const double w = modes.frequencies[m];
        const auto v = modes.oscillator_rows.col(m);
        acc.noalias() += w * w * mode_weight(w, modes.units.hbar, kT) * v * v.transpose();
    }
    return 0.5 * (acc + acc.transpose());
}

template <int Dim>
ThermoPoint oracle_thermo(const BasicNormalModes<Dim>& modes,
                          const std::vector<double>& bare_frequencies, double T) {
    require_temperature(T);
    const double hbar = modes.units.hbar;
    const double kB = modes.units.kB;
    const double kT = kB * T;

    // Zero-point, thermal energy, thermal free energy and entropy per mode, with
    // x = hbar w / 2 kT: hbar w / 2, hbar w / (e^2x - 1), kT ln(1 - e^-2x),
    // kB [2x / (e^2x - 1) - ln(1 - e^-2x)].
    StableSum zero_point, energy, free, entropy, bath_energy, interaction;
    auto add_mode = [&](double w, double sign) {
        const double x = hbar * w / (2.0 * kT);
        const double occupation = 1.0 / std::expm1(2.0 * x);
        const double log_term = std::log(-std::expm1(-2.0 * x));
        zero_point.add(sign * 0.5 * hbar * w);
        energy.add(sign * hbar * w * occupation);
        free.add(sign * kT * log_term);
        entropy.add(sign * kB * (2.0 * x * occupation - log_term));
    };
    for (int m = 0; m < modes.size(); ++m) {
        const double w = modes.frequencies[m];
        add_mode(w, 1.0);
        const double q2 = mode_weight(w, hbar, kT);
        bath_energy.add(0.5 * q2 * (w * w * modes.bath_norm[m] + modes.bath_potential[m]));
        interaction.add(-q2 * modes.coupling_overlap[m]);
    }
    for (double w : bare_frequencies) {
        for (int k = 0; k < Dim; ++k) {
            add_mode(w, -1.0);
            bath_energy.add(-0.5 * hbar * w * coth_guarded(hbar * w / (2.0 * kT)));
        }
    }

    ThermoPoint p;
    p.T = T;
    p.U_star = zero_point.value() + energy.value();
    p.F_star = zero_point.value() + free.value();
    p.S_star = entropy.value();
    const RealMatrix<Dim> qq = oracle_position_covariance(modes, T);
    const RealMatrix<Dim> pp = oracle_momentum_covariance(modes, T);
    p.U_alt = 0.5 * (pp.trace() + modes.omega0 * modes.omega0 * qq.trace());
    p.E_bath = bath_energy.value();
    p.E_int = interaction.value();
    const double scale = std::abs(p.U_star) > 0.0 ? std::abs(p.U_star) : 1.0;
    p.legendre_residual = std::abs(p.U_star - p.F_star - T * p.S_star) / scale;
    p.energy_balance_residual = std::abs(p.U_star - (p.U_alt + p.E_bath + p.E_int)) / scale;
    return p;
}

template <int Dim>
RealMatrix<Dim> oracle_broadened_green_imag(const BasicNormalModes<Dim>& modes, double omega,
                                            double eta) {
    if (!(omega > 0.0) || !(eta > 0.0)) {
        throw std::invalid_argument("broadened resolvent needs omega > 0 and eta > 0");
    }
    RealMatrix<Dim> acc = RealMatrix<Dim>::Zero();
    for (int m = 0; m < modes.size(); ++m) {
        const double w = modes.frequencies[m];
        const double re = w * w - omega * omega;
        const double im = eta * omega;
        const auto v = modes.oscillator_rows.col(m);
        acc.noalias() += (im / (re * re + im * im)) * v * v.transpose();
    }
    return acc;
}

#define MEANFORCE_INSTANTIATE(D)                                                                 \
    template struct BasicDiscreteBath<D>;                                                        \
    template double default_bath_cutoff<D>(const BasicSusceptibilityModel<D>&);                  \
    template BasicDiscreteBath<D> build_discrete_bath<D>(const BasicSusceptibilityModel<D>&, int, \
                                                         double);                                \
    template BasicNormalModes<D> diagonalize<D>(const BasicDiscreteBath<D>&, bool);              \
    template BasicNormalModes<D> diagonalize_dense<D>(const BasicDiscreteBath<D>&);              \
    template RealMatrix<D> oracle_position_covariance<D>(const BasicNormalModes<D>&, double);    \
    template RealMatrix<D> oracle_momentum_covariance<D>(const BasicNormalModes<D>&, double);    \
    template ThermoPoint oracle_thermo<D>(const BasicNormalModes<D>&, const std::vector<double>&, \
                                          double);                                               \
    template RealMatrix<D> oracle_broadened_green_imag<D>(const BasicNormalModes<D>&, double,    \
                                                          double);

MEANFORCE_INSTANTIATE(1)
MEANFORCE_INSTANTIATE(3)

#undef MEANFORCE_INSTANTIATE

} // namespace meanforce
