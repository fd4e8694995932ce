#include "meanforce/errors.hpp"
#include "meanforce/oracle.hpp"
#include "meanforce/response.hpp"

#include "support/frozen_values.hpp"
#include "support/reference_models.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace meanforce;
using namespace meanforce::testing;

namespace {

SusceptibilityModel uncoupled_model(double omega0 = 1.2) {
    ModelSpec spec;
    spec.omega0 = omega0;
    spec.bands.push_back(LorentzBand{});
    return SusceptibilityModel(spec);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
double rel(const Mat3& a, const Mat3& b) { return (a - b).norm() / b.norm(); }

/// N = 4000 reference-model oracle, shared across tests because it takes seconds.
class ReferenceOracle : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        model_ = std::make_unique<SusceptibilityModel>(reference_model());
        bath_ = std::make_unique<DiscreteBath>(
            build_discrete_bath(*model_, 4000, default_bath_cutoff(*model_)));
        modes_ = std::make_unique<NormalModes>(diagonalize(*bath_));
    }
    static void TearDownTestSuite() {
        modes_.reset();
        bath_.reset();
        model_.reset();
    }

    static std::unique_ptr<SusceptibilityModel> model_;
    static std::unique_ptr<DiscreteBath> bath_;
    static std::unique_ptr<NormalModes> modes_;
};

std::unique_ptr<SusceptibilityModel> ReferenceOracle::model_;
std::unique_ptr<DiscreteBath> ReferenceOracle::bath_;
std::unique_ptr<NormalModes> ReferenceOracle::modes_;

} // namespace

TEST(DiscreteBath, UncoupledStiffnessIsBlockDiagonal) {
    const auto bath = build_discrete_bath(uncoupled_model(), 12, 6.0);
    const Eigen::MatrixXd K = bath.stiffness();
    EXPECT_EQ(K.topLeftCorner(3, 3), 1.44 * Eigen::Matrix3d::Identity());
    EXPECT_EQ(K.topRightCorner(3, 36).norm(), 0.0);
    for (int n = 0; n < 12; ++n) {
        EXPECT_DOUBLE_EQ(bath.omega_grid[n], (n + 0.5) * 0.5);
        EXPECT_EQ(K.block(3 + 3 * n, 3 + 3 * n, 3, 3),
                  bath.omega_grid[n] * bath.omega_grid[n] * Eigen::Matrix3d::Identity());
    }
}

TEST(DiscreteBath, ToyStiffnessIsSymmetricPositiveDefinite) {
    const auto model = reference_model();
    const auto bath = build_discrete_bath(model, 10, 8.0);
    const Eigen::MatrixXd K = bath.stiffness();
    EXPECT_EQ((K - K.transpose()).norm(), 0.0);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff(), 0.0);
    for (int n = 0; n < 10; ++n) {
        EXPECT_EQ(K.block(0, 3 + 3 * n, 3, 3), -bath.coupling_blocks[n]);
        const double w = bath.omega_grid[n];
        EXPECT_LT(max_norm(bath.coupling_blocks[n] -
                           coupling_tensor(model, w) * std::sqrt(bath.weights[n])),
                  1e-15);
    }
}

TEST(DiscreteBath, RejectsDegenerateGrids) {
    const auto model = reference_model();
    EXPECT_THROW(build_discrete_bath(model, 5, 50.0), std::invalid_argument);
    EXPECT_THROW(build_discrete_bath(model, 100, 1.0), std::invalid_argument);
}

TEST(Diagonalize, UncoupledFrequenciesAreTheBareSet) {
    const auto bath = build_discrete_bath(uncoupled_model(1.2), 20, 10.0);
    const auto modes = diagonalize(bath);
    std::vector<double> expect(3, 1.2);
    for (double w : bath.omega_grid) expect.insert(expect.end(), 3, w);
    std::sort(expect.begin(), expect.end());
    ASSERT_EQ(modes.size(), static_cast<int>(expect.size()));
    for (int m = 0; m < modes.size(); ++m) EXPECT_DOUBLE_EQ(modes.frequencies[m], expect[m]);
}

TEST(Diagonalize, MatchesIndependentDenseEigensolve) {
    const auto bath = build_discrete_bath(reference_model(), frozen::small_bath::kModes,
                                          frozen::small_bath::kOmegaMax);
    const auto modes = diagonalize(bath);
    for (int m = 0; m < 4; ++m) {
        EXPECT_NEAR(modes.frequencies[m], frozen::small_bath::kLowestFrequencies[m], 1e-12);
    }
    const auto p = oracle_thermo(modes, bath.omega_grid, 1.0);
    EXPECT_NEAR(p.U_star, frozen::small_bath::kUStarT1, 1e-11);
    EXPECT_NEAR(p.F_star, frozen::small_bath::kFStarT1, 1e-11);
    EXPECT_LT(max_norm(oracle_position_covariance(modes, 1.0) -
                       frozen::small_bath::position_covariance_T1()),
              1e-11);
}

TEST(Diagonalize, StructuredSolverAgreesWithDensePath) {
    const auto bath = build_discrete_bath(reference_model(), 150, 40.0);
    const auto fast = diagonalize(bath);
    const auto dense = diagonalize_dense(bath);
    ASSERT_EQ(fast.size(), dense.size());
    EXPECT_LT((fast.frequencies - dense.frequencies).cwiseAbs().maxCoeff(), 1e-11);
    for (double T : {0.2, 1.0, 5.0}) {
        EXPECT_LT(max_norm(oracle_position_covariance(fast, T) - oracle_position_covariance(dense, T)),
                  1e-11);
        EXPECT_LT(max_norm(oracle_momentum_covariance(fast, T) - oracle_momentum_covariance(dense, T)),
                  1e-11);
        const auto a = oracle_thermo(fast, bath.omega_grid, T);
        const auto b = oracle_thermo(dense, bath.omega_grid, T);
        EXPECT_NEAR(a.U_star, b.U_star, 1e-10);
        EXPECT_NEAR(a.E_bath, b.E_bath, 1e-10);
        EXPECT_NEAR(a.E_int, b.E_int, 1e-10);
    }
}

TEST(Diagonalize, TransformDiagonalizesStiffness) {
    const auto bath = build_discrete_bath(reference_model(), 80, 20.0);
    const auto modes = diagonalize(bath, true);
    ASSERT_TRUE(modes.transform.has_value());
    const Eigen::MatrixXd& O = *modes.transform;
    const Eigen::MatrixXd K = bath.stiffness();
    const Eigen::VectorXd omega2 = modes.frequencies.array().square();
    const Eigen::MatrixXd residual = O.transpose() * K * O - Eigen::MatrixXd(omega2.asDiagonal());
    EXPECT_LT(residual.norm() / K.norm(), 1e-8);
    EXPECT_LT((O.transpose() * O - Eigen::MatrixXd::Identity(O.rows(), O.cols())).norm(), 1e-10);
}

TEST(Diagonalize, CoupledFrequenciesInterlaceBareOnes) {
    // One axis: the oscillator adds one mode and each bare level is pushed between neighbours.
    const ScalarSusceptibilityModel model(isotropic_spec<1>(1.0, 0.4, 1.0, 0.3));
    const auto bath = build_discrete_bath(model, 200, 20.0);
    const auto modes = diagonalize(bath);
    ASSERT_EQ(modes.size(), 201);
    for (int n = 0; n < 200; ++n) {
        EXPECT_LT(modes.frequencies[n], bath.omega_grid[n]);
        EXPECT_GT(modes.frequencies[n + 1], bath.omega_grid[n]);
    }
}

TEST(OracleCovariance, UncoupledOscillatorClosedForm) {
    const double w0 = 1.2;
    const auto bath = build_discrete_bath(uncoupled_model(w0), 20, 10.0);
    const auto modes = diagonalize(bath);
    for (double T : {0.1, 1.0, 3.0}) {
        const double x = w0 / (2 * T);
        const Mat3 q = oracle_position_covariance(modes, T);
        const Mat3 p = oracle_momentum_covariance(modes, T);
        EXPECT_LT(max_norm(q - Mat3::Identity() / (2 * w0 * std::tanh(x))), 1e-14);
        EXPECT_LT(max_norm(p - Mat3::Identity() * w0 / (2 * std::tanh(x))), 1e-14);
        const auto t = oracle_thermo(modes, bath.omega_grid, T);
        EXPECT_NEAR(t.F_star, 3 * T * std::log(2 * std::sinh(x)), 1e-12);
        EXPECT_NEAR(t.U_star, 1.5 * w0 / std::tanh(x), 1e-12);
    }
}

TEST(OracleCovariance, ClassicalLimitIsThermalCompliance) {
    const auto bath = build_discrete_bath(reference_model(), 60, 12.0);
    const auto modes = diagonalize(bath);
    const double T = 1e5;
    const Eigen::MatrixXd K = bath.stiffness();
    const Mat3 compliance = K.inverse().topLeftCorner(3, 3);
    EXPECT_LT(rel(oracle_position_covariance(modes, T), T * compliance), 1e-3);
}

TEST(OracleCovariance, SymmetricPositiveDefinite) {
    const auto bath = build_discrete_bath(reference_model(), 300, 50.0);
    const auto modes = diagonalize(bath);
    for (double T : {0.01, 0.3, 3.0, 30.0}) {
        for (const Mat3& c : {oracle_position_covariance(modes, T), oracle_momentum_covariance(modes, T)}) {
            EXPECT_LT(max_norm(c - c.transpose()), 1e-14 * max_norm(c));
            EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat3>(c).eigenvalues().minCoeff(), 0.0);
        }
    }
}

TEST(OracleThermo, ModeSumsAreExactlyConsistent) {
    std::mt19937_64 rng(8);
    for (int m = 0; m < 4; ++m) {
        const SusceptibilityModel model(random_spec(rng));
        const auto bath = build_discrete_bath(model, 400, default_bath_cutoff(model));
        const auto modes = diagonalize(bath);
        for (double T : {0.2, 1.0, 5.0}) {
            EXPECT_LT(oracle_thermo(modes, bath.omega_grid, T).legendre_residual, 1e-12);
        }
    }
}

TEST(OracleConvergence, PositionVarianceConvergesAtLeastLinearly) {
    const auto model = reference_model();
    const double omega_max = default_bath_cutoff(model);
    const double T = 1.0;
    auto variance = [&](int n) {
        return oracle_position_covariance(diagonalize(build_discrete_bath(model, n, omega_max)), T);
    };
    const Mat3 reference = variance(8000);
    std::vector<double> errors;
    for (int n : {500, 1000, 2000, 4000}) errors.push_back((variance(n) - reference).norm());
    for (std::size_t k = 1; k + 1 < errors.size(); ++k) {
        // Orders from successive halvings of the grid spacing; the last pair is biased
        // by the finite reference, so it is left out.
        EXPECT_GE(std::log2(errors[k - 1] / errors[k]), 1.0) << "step " << k;
    }
}

TEST_F(ReferenceOracle, ThermodynamicsMatchContinuum) {
    for (const auto& ref : frozen::kReferenceThermo) {
        const auto p = oracle_thermo(*modes_, bath_->omega_grid, ref.T);
        EXPECT_LT(rel(p.U_star, ref.U_star), 0.01) << "T = " << ref.T;
        EXPECT_LT(rel(p.U_alt, ref.U_alt), 0.01) << "T = " << ref.T;
        EXPECT_LT(rel(p.F_star, ref.F_star), 0.01) << "T = " << ref.T;
        EXPECT_LT(rel(p.S_star, ref.S_star), 0.01) << "T = " << ref.T;
        EXPECT_LT(rel(p.E_bath, ref.E_bath), 0.02) << "T = " << ref.T;
        EXPECT_LT(rel(p.E_int, ref.E_int), 0.02) << "T = " << ref.T;
        EXPECT_LT(p.legendre_residual, 1e-12);
    }
}

TEST_F(ReferenceOracle, CovariancesMatchContinuum) {
    EXPECT_LT(rel(oracle_position_covariance(*modes_, 1.0), frozen::reference_position_covariance_T1()), 0.01);
    EXPECT_LT(rel(oracle_momentum_covariance(*modes_, 1.0), frozen::reference_momentum_covariance_T1()), 0.01);
    EXPECT_LT(rel(oracle_position_covariance(*modes_, 10.0), position_correlator(*model_, 0.0, 10.0).value), 0.01);
    EXPECT_LT(rel(oracle_momentum_covariance(*modes_, 10.0), momentum_correlator(*model_, 0.0, 10.0).value), 0.01);
}

TEST_F(ReferenceOracle, BroadenedSpectralDensityTracksContinuum) {
    // The oscillator spectral weight is (2 Omega / pi) Im G(Omega) dOmega, so the broadened
    // mode sum must equal the continuum Im G smoothed by the same Lorentzian kernel.
    const double eta = 0.15;
    const double omega_max = bath_->omega_grid.back() + 0.5 * bath_->weights.back();
    for (double w : {0.5, 0.9, 1.2, 2.0, 3.0}) {
        const Mat3 smooth = oracle_broadened_green_imag(*modes_, w, eta);
        Mat3 expect;
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                auto f = [&](double W) {
                    const double d = W * W - w * w;
                    return 2.0 * W / std::numbers::pi * green_tensor(*model_, W).imag()(i, j) * eta * w /
                           (d * d + eta * eta * w * w);
                };
                double total = 0.0;
                const double edges[] = {1e-12, std::max(1e-6, w - 1.0), w, w + 1.0, 10.0, omega_max};
                for (int k = 0; k + 1 < 6; ++k) {
                    if (edges[k + 1] <= edges[k]) continue;
                    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                        f, edges[k], edges[k + 1], 8, 1e-10);
                }
                expect(i, j) = expect(j, i) = total;
            }
        }
        EXPECT_LT(rel(smooth, expect), 1e-3) << "omega = " << w;
    }
}

TEST(OracleThermo, StrongCouplingEnergyDecomposition) {
    const SusceptibilityModel model(isotropic_spec<3>(1.0, 0.5, 1.5, 0.5));
    const auto bath = build_discrete_bath(model, 4000, default_bath_cutoff(model));
    const auto modes = diagonalize(bath);
    const double T = 0.2;
    const auto c = thermo_point(model, T);
    const auto o = oracle_thermo(modes, bath.omega_grid, T);
    EXPECT_GT(std::abs(c.U_star - c.U_alt), 0.05 * std::abs(c.U_star));
    EXPECT_LT(rel(c.U_star - c.U_alt, o.E_bath + o.E_int), 0.02);
    EXPECT_LT(rel(c.E_int, o.E_int), 0.02);
}

TEST(OracleThermo, WeakCouplingBathEnergy) {
    const SusceptibilityModel model(isotropic_spec<3>(1.0, 0.01, 1.5, 0.5));
    const auto bath = build_discrete_bath(model, 2000, default_bath_cutoff(model));
    const auto modes = diagonalize(bath);
    const auto c = thermo_point(model, 1.0);
    const auto o = oracle_thermo(modes, bath.omega_grid, 1.0);
    EXPECT_LT(rel(c.E_bath, o.E_bath), 0.02);
}
