#pragma once

#include "meanforce/bath_model.hpp"
#include "meanforce/quadrature.hpp"

#include <vector>

namespace meanforce::detail {

/// chi, d chi/d omega and G at one frequency, computed once per quadrature node.
template <int Dim>
struct ResolventSample {
    ComplexMatrix<Dim> chi;
    ComplexMatrix<Dim> dchi;
    ComplexMatrix<Dim> green;
};

template <int Dim>
ComplexMatrix<Dim> lambda_of(const BasicSusceptibilityModel<Dim>& model,
                             const ComplexMatrix<Dim>& chi, double omega) {
    const double w02 = model.omega0() * model.omega0();
    ComplexMatrix<Dim> lambda = -w02 * chi;
    lambda.diagonal().array() += w02 - omega * omega;
    return lambda;
}

/// Inverts Lambda, throwing SingularResolvent on cond_1 > kMaxResolventCondition.
template <int Dim>
ComplexMatrix<Dim> invert_lambda(const ComplexMatrix<Dim>& lambda, double omega);

template <int Dim>
ResolventSample<Dim> sample_resolvent(const BasicSusceptibilityModel<Dim>& model, double omega) {
    ResolventSample<Dim> s;
    s.chi = eval_chi(model, omega).entries();
    s.dchi = eval_chi_derivative(model, omega).entries();
    s.green = invert_lambda<Dim>(lambda_of(model, s.chi, omega), omega);
    return s;
}

template <int Dim>
QuadVector<Dim * Dim> flatten(const RealMatrix<Dim>& m) {
    return Eigen::Map<const QuadVector<Dim * Dim>>(m.data());
}

template <int Dim>
RealMatrix<Dim> unflatten(const QuadVector<Dim * Dim>& v) {
    RealMatrix<Dim> m = Eigen::Map<const RealMatrix<Dim>>(v.data());
    return 0.5 * (m + m.transpose());
}

} // namespace meanforce::detail
