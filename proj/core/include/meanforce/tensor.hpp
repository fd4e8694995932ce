#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

namespace meanforce {

using complex = std::complex<double>;

template <int Dim> using RealMatrix = Eigen::Matrix<double, Dim, Dim>;
template <int Dim> using RealVector = Eigen::Matrix<double, Dim, 1>;
template <int Dim> using ComplexMatrix = Eigen::Matrix<complex, Dim, Dim>;

using Mat3 = RealMatrix<3>;
using Vec3 = RealVector<3>;

/// Max-norm of any Eigen expression.
template <typename Derived>
double max_norm(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : static_cast<double>(m.cwiseAbs().maxCoeff());
}

/// Symmetry tolerance (max-norm) enforced when a tensor carries the symmetric flag.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Dim x Dim complex matrix carrying chi(omega), Lambda(omega) or G(omega).
/// When `symmetric()` is set the entries satisfy ||M - M^T||_max < 1e-12.
template <int Dim>
class BasicComplexTensor {
public:
    BasicComplexTensor() : entries_(ComplexMatrix<Dim>::Zero()), symmetric_(true) {}
    explicit BasicComplexTensor(const ComplexMatrix<Dim>& entries, bool symmetric = false);

    /// Returns (M + M^T)/2 flagged symmetric; exact symmetry regardless of rounding in M.
    static BasicComplexTensor symmetrized(const ComplexMatrix<Dim>& entries);

    const ComplexMatrix<Dim>& entries() const noexcept { return entries_; }
    bool symmetric() const noexcept { return symmetric_; }

    complex operator()(int i, int j) const { return entries_(i, j); }
    RealMatrix<Dim> real() const { return entries_.real(); }
    RealMatrix<Dim> imag() const { return entries_.imag(); }
    complex trace() const { return entries_.trace(); }

private:
    ComplexMatrix<Dim> entries_;
    bool symmetric_;
};

template <int Dim>
BasicComplexTensor<Dim>::BasicComplexTensor(const ComplexMatrix<Dim>& entries, bool symmetric)
    : entries_(entries), symmetric_(symmetric) {
    if (symmetric_ && max_norm(entries_ - entries_.transpose()) >= kSymmetryTolerance) {
        throw std::invalid_argument("ComplexTensor flagged symmetric but ||M - M^T|| >= 1e-12");
    }
}

template <int Dim>
BasicComplexTensor<Dim> BasicComplexTensor<Dim>::symmetrized(const ComplexMatrix<Dim>& entries) {
    ComplexMatrix<Dim> sym = 0.5 * (entries + entries.transpose());
    return BasicComplexTensor(sym, true);
}

using ComplexTensor = BasicComplexTensor<3>;

} // namespace meanforce
