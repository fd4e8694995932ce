#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace meanforce {

/// Tolerances and cutoff policy shared by every frequency integral.
struct QuadratureSpec {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    int max_subdivisions = 2000;
    /// Finite part of the half line ends at omega_max_factor * (largest model frequency);
    /// the remainder is integrated after the map omega = omega_cut / (1 - u).
    double omega_max_factor = 60.0;

    /// Throws std::invalid_argument on non-positive tolerances or max_subdivisions < 10.
    void validate() const;

    bool operator==(const QuadratureSpec&) const = default;
};

template <int N> using QuadVector = Eigen::Matrix<double, N, 1>;

template <int N>
struct QuadratureResult {
    QuadVector<N> value = QuadVector<N>::Zero();
    double est_error = 0.0;
    int evaluations = 0;
    int subdivisions = 0;
};

template <int N> using Integrand = std::function<QuadVector<N>(double)>;

/// Globally adaptive Gauss-Kronrod (7-15) on [a, b]. The error budget is
/// max(abs_tol, rel_tol * ||I||_max) over all components; the worst
/// segment is bisected until it is met. Throws QuadratureFailure when the
/// subdivision budget runs out or the integrand is not finite.
template <int N>
QuadratureResult<N> integrate_interval(const Integrand<N>& f, double a, double b,
                                       const QuadratureSpec& spec);

/// Same engine over [0, inf). The finite part [0, omega_cut] starts out
/// partitioned at every breakpoint inside it; [omega_cut, inf) is mapped to
/// u in [0, 1) with omega = omega_cut / (1 - u). Integrands must decay at
/// least like omega^-2.
template <int N>
QuadratureResult<N> integrate_half_line(const Integrand<N>& f, std::vector<double> breakpoints,
                                        double omega_cut, const QuadratureSpec& spec);

} // namespace meanforce
