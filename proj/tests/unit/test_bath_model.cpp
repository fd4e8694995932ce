#include "meanforce/bath_model.hpp"
#include "meanforce/errors.hpp"

#include "support/frozen_values.hpp"
#include "support/reference_models.hpp"

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace meanforce;
using namespace meanforce::testing;

namespace {

ModelSpec zero_strength_spec() {
    ModelSpec spec;
    spec.bands.push_back(LorentzBand{});
    return spec;
}

ModelSpec diagonal_spec(const Vec3& strengths, double resonance, double damping) {
    ModelSpec spec;
    LorentzBand band;
    band.strengths = strengths;
    band.resonances.setConstant(resonance);
    band.dampings.setConstant(damping);
    spec.bands.push_back(band);
    return spec;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int k = 0; k < n; ++k) g.push_back(lo * std::pow(hi / lo, double(k) / (n - 1)));
    return g;
}

} // namespace

TEST(EvalChi, ZeroStrengthGivesZeroTensor) {
    const SusceptibilityModel model(zero_strength_spec());
    for (double w : {0.0, 0.3, 1.0, 7.0}) {
        EXPECT_EQ(max_norm(eval_chi(model, w).entries()), 0.0);
    }
}

TEST(EvalChi, UnitStrengthIsIdentityAtZeroFrequency) {
    ModelSpec spec = diagonal_spec(Vec3::Constant(0.5), 1.0, 0.1);
    // Unit strength on every axis is statically unstable, so check the band itself.
    LorentzBand band;
    band.strengths.setOnes();
    band.dampings.setConstant(0.1);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(band.axis_response(i, 0.0), complex(1.0, 0.0));
    }
    const SusceptibilityModel model(spec);
    EXPECT_LT(max_norm(eval_chi(model, 0.0).entries() - ComplexMatrix<3>(0.5 * Mat3::Identity())),
              1e-15);
}

TEST(EvalChi, TwoRotatedBandsMatchIndependentSummation) {
    const auto chi = eval_chi(reference_model(), 0.7);
    EXPECT_LT(max_norm(chi.real() - frozen::reference_chi_real_0_7()), 1e-14);
    EXPECT_LT(max_norm(chi.imag() - frozen::reference_chi_imag_0_7()), 1e-14);
}

TEST(EvalChi, SymmetricAndConjugatePairedOnGrid) {
    const auto model = reference_model();
    for (double w : log_grid(1e-3, 1e3, 61)) {
        const auto chi = eval_chi(model, w);
        EXPECT_TRUE(chi.symmetric());
        EXPECT_EQ(max_norm(chi.entries() - chi.entries().transpose()), 0.0);
        EXPECT_LT(max_norm(eval_chi_signed(model, -w).entries() - chi.entries().conjugate()), 1e-15);
    }
}

TEST(EvalChi, DerivativeMatchesCentralDifference) {
    const auto model = reference_model();
    for (double w : {0.3, 0.9, 1.4, 4.0}) {
        const double h = 1e-5;
        const ComplexMatrix<3> fd =
            (eval_chi(model, w + h).entries() - eval_chi(model, w - h).entries()) / (2 * h);
        EXPECT_LT(max_norm(eval_chi_derivative(model, w).entries() - fd), 1e-8);
    }
}

TEST(CouplingTensor, VanishesWithoutDissipation) {
    const SusceptibilityModel model(zero_strength_spec());
    EXPECT_EQ(max_norm(coupling_tensor(model, 0.8)), 0.0);
}

TEST(CouplingTensor, IdentityWhenImChiIsUnitNormalized) {
    // Pick omega0 so that (2 omega omega0^2 / pi) Im chi = I at omega = 0.9.
    ModelSpec spec = diagonal_spec(Vec3::Constant(0.3), 1.1, 0.4);
    const double w = 0.9;
    const double im = spec.bands[0].axis_response(0, w).imag();
    spec.omega0 = std::sqrt(std::numbers::pi / (2.0 * w * im));
    const SusceptibilityModel model(spec);
    EXPECT_LT(max_norm(coupling_tensor(model, w) - Mat3::Identity()), 1e-12);
}

TEST(CouplingTensor, SquaresBackToScaledImChiForRotatedBands) {
    const auto model = reference_model();
    for (double w : {0.2, 0.77, 1.3, 2.9, 15.0}) {
        const Mat3 f = coupling_tensor(model, w);
        const Mat3 target = 2.0 * w * model.omega0() * model.omega0() / std::numbers::pi *
                            eval_chi(model, w).imag();
        EXPECT_LT(max_norm(f * f - target), 1e-12 * std::max(1.0, max_norm(target)));
        EXPECT_LT(max_norm(f - f.transpose()), 1e-14);
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat3>(f).eigenvalues().minCoeff(), -1e-14);
    }
}

TEST(CouplingTensor, ClosureHoldsForRandomModels) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> freq(0.01, 20.0);
    for (int m = 0; m < 20; ++m) {
        const SusceptibilityModel model(random_spec(rng));
        const double w02 = model.omega0() * model.omega0();
        for (int k = 0; k < 25; ++k) {
            const double w = freq(rng);
            const Mat3 f = coupling_tensor(model, w);
            const Mat3 target = 2.0 * w * w02 / std::numbers::pi * eval_chi(model, w).imag();
            EXPECT_LT(max_norm(f * f - target), 1e-10);
        }
    }
}

TEST(RotationCovariance, ChiAndCouplingConjugate) {
    const auto model = reference_model();
    std::mt19937_64 rng(5);
    const Mat3 R = random_rotation(rng);
    const auto rotated = model.rotated(R);
    for (double w : {0.4, 1.0, 2.5}) {
        const ComplexMatrix<3> expect = R.cast<complex>() * eval_chi(model, w).entries() *
                                        R.transpose().cast<complex>();
        EXPECT_LT(max_norm(eval_chi(rotated, w).entries() - expect), 1e-12);
        EXPECT_LT(max_norm(coupling_tensor(rotated, w) -
                           R * coupling_tensor(model, w) * R.transpose()),
                  1e-12);
    }
}

TEST(KramersKronig, ZeroModelGivesZero) {
    const SusceptibilityModel model(zero_strength_spec());
    EXPECT_EQ(max_norm(kk_real_part(model, 0.5)), 0.0);
}

TEST(KramersKronig, IsotropicLorentzianMatchesClosedForm) {
    const SusceptibilityModel model(diagonal_spec(Vec3::Constant(0.4), 1.3, 0.3));
    const Mat3 kk = kk_real_part(model, 0.5);
    const double exact = eval_chi(model, 0.5).real()(0, 0);
    EXPECT_LT(std::abs(kk(0, 0) - exact) / exact, 1e-4);
    EXPECT_LT(std::abs(kk(0, 0) - frozen::kIsotropicKramersKronigAt05) / exact, 1e-4);
    EXPECT_LT(std::abs(kk(0, 1)), 1e-10);
}

TEST(KramersKronig, RotatedAnisotropicBandsElementwise) {
    const auto model = reference_model();
    for (double w : {0.1, 0.5, 3.0, 6.0}) {
        const Mat3 kk = kk_real_part(model, w);
        const Mat3 re = eval_chi(model, w).real();
        EXPECT_LT(max_norm(kk - re) / max_norm(re), 1e-4) << "omega = " << w;
    }
}

TEST(MemoryKernel, VanishesAtZeroLag) {
    EXPECT_EQ(max_norm(memory_kernel_time(reference_model(), 0.0)), 0.0);
}

TEST(MemoryKernel, VanishesWithoutCoupling) {
    const SusceptibilityModel model(zero_strength_spec());
    for (double t : {0.1, 1.0, 10.0}) EXPECT_EQ(max_norm(memory_kernel_time(model, t)), 0.0);
}

TEST(MemoryKernel, IsotropicBandMatchesSineTransform) {
    const SusceptibilityModel model(diagonal_spec(Vec3::Constant(0.4), 1.3, 0.3));
    const Mat3 k = memory_kernel_time(model, 1.3);
    EXPECT_NEAR(k(0, 0), frozen::kIsotropicMemoryKernelT13, 1e-6);
    EXPECT_NEAR(k(0, 1), 0.0, 1e-15);
}

TEST(MemoryKernel, RotatedBandsMatchOouraSineTransform) {
    const auto model = reference_model();
    boost::math::quadrature::ooura_fourier_sin<double> sine;
    for (double t : {0.5, 2.0, 4.5}) {
        const Mat3 k = memory_kernel_time(model, t);
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                auto im = [&](double w) { return eval_chi(model, w).imag()(i, j); };
                const double ref = 2.0 / std::numbers::pi * sine.integrate(im, t).first;
                EXPECT_NEAR(k(i, j), ref, 1e-6) << "t = " << t << " (" << i << "," << j << ")";
            }
        }
    }
}

TEST(NoiseKernel, StartsAtStaticSusceptibility) {
    const auto model = reference_model();
    EXPECT_LT(max_norm(noise_kernel_time(model, 0.0) - eval_chi(model, 0.0).real()), 1e-15);
}

TEST(NoiseKernel, IsotropicBandMatchesCosineTransform) {
    const SusceptibilityModel model(diagonal_spec(Vec3::Constant(0.4), 1.3, 0.3));
    EXPECT_NEAR(noise_kernel_time(model, 1.3)(0, 0), frozen::kIsotropicNoiseKernelT13, 1e-7);
    EXPECT_LT(max_norm(noise_kernel_time(model, -1.3) - noise_kernel_time(model, 1.3)), 1e-15);
}

TEST(NoiseKernel, DerivativeIsMinusMemoryKernel) {
    const auto model = reference_model();
    for (double t : {0.3, 1.7}) {
        const double h = 1e-5;
        const Mat3 d = (noise_kernel_time(model, t + h) - noise_kernel_time(model, t - h)) / (2 * h);
        EXPECT_LT(max_norm(d + memory_kernel_time(model, t)), 1e-8);
    }
}

TEST(ValidateModel, WeaklyDampedIsotropicModelPasses) {
    const auto report =
        validate_model(isotropic_spec<3>(1.0, 0.2, 1.5, 0.05), log_grid(1e-2, 1e2, 81));
    EXPECT_TRUE(report.passed());
}

TEST(ValidateModel, FlagsStaticInstability) {
    const auto report =
        validate_model(diagonal_spec(Vec3(2.0, 0.0, 0.0), 1.0, 0.5), log_grid(1e-2, 1e2, 41));
    EXPECT_FALSE(report.static_stability);
    EXPECT_TRUE(report.passivity);
    EXPECT_TRUE(report.parameters_valid);
    EXPECT_NEAR(report.static_eigenvalues.front(), -1.0, 1e-14);
    EXPECT_FALSE(report.passed());
}

TEST(ValidateModel, RandomValidModelsAllPass) {
    std::mt19937_64 rng(2024);
    const auto grid = log_grid(1e-2, 1e2, 41);
    int failures = 0;
    for (int m = 0; m < 100; ++m) failures += validate_model(random_spec(rng), grid).passed() ? 0 : 1;
    EXPECT_EQ(failures, 0);
}

TEST(ValidateModel, RejectsBadGrid) {
    EXPECT_THROW(validate_model(reference_spec(), {}), std::invalid_argument);
    EXPECT_THROW(validate_model(reference_spec(), {1.0, 0.5}), std::invalid_argument);
}

TEST(SusceptibilityModel, ConstructionEnforcesInvariants) {
    EXPECT_THROW(SusceptibilityModel(ModelSpec{}), ModelError);

    ModelSpec zero_damping = reference_spec();
    zero_damping.bands[0].dampings[1] = 0.0;
    EXPECT_THROW(SusceptibilityModel{zero_damping}, ModelError);

    ModelSpec bad_rotation = reference_spec();
    bad_rotation.bands[1].rotation(0, 0) += 1e-9;
    EXPECT_THROW(SusceptibilityModel{bad_rotation}, ModelError);

    ModelSpec negative_omega = reference_spec();
    negative_omega.omega0 = -1.0;
    EXPECT_THROW(SusceptibilityModel{negative_omega}, ModelError);

    EXPECT_THROW(SusceptibilityModel(diagonal_spec(Vec3(2.0, 0.0, 0.0), 1.0, 0.5)), ModelError);
}

TEST(AxisAngleRotation, QuarterTurnAboutZ) {
    const Mat3 R = axis_angle_rotation(Vec3(0, 0, 1), std::numbers::pi / 4);
    const double s = std::sqrt(0.5);
    Mat3 expect;
    expect << s, -s, 0, s, s, 0, 0, 0, 1;
    EXPECT_LT(max_norm(R - expect), 1e-15);
    EXPECT_LT(max_norm(R.transpose() * R - Mat3::Identity()), 1e-15);
}
