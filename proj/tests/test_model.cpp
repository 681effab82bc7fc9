#include "sarma/model.hpp"
#include "sarma/varma.hpp"
#include "test_util.hpp"

using namespace sarma;
using sarma::testing::random_tensor;

TEST(Model, IndicatorLagReturnsSlice) {
    Rng rng(1);
    OmegaParams om;
    om.p = 1;
    om.lambdas = {0.3};
    const Tensor3 g = random_tensor(3, 3, 2, rng);
    EXPECT_EQ(ar_coefficient(om, g, 1), Matrix(g.slice(0)));
    EXPECT_THROW(ar_coefficient(om, g, 0), InvalidArgument);
}

TEST(Model, GeometricLag) {
    OmegaParams om;
    om.lambdas = {0.5};
    const Tensor3 g = Tensor3::from_slices({Matrix::Identity(2, 2)});
    EXPECT_LT((ar_coefficient(om, g, 3) - 0.125 * Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Model, MarginOfZeroModel) {
    OmegaParams om;
    om.lambdas = {0.5};
    const SarmaModel m = SarmaModel::zero(3, om);
    EXPECT_DOUBLE_EQ(stationarity_margin(m), 1.0);
}

TEST(Model, MarginScalarArithmetic) {
    OmegaParams om;
    om.lambdas = {0.5};
    SarmaModel m = SarmaModel::zero(1, om);
    m.g(0, 0, 0) = 0.9;
    EXPECT_NEAR(stationarity_margin(m), 0.1, 1e-14);
}

TEST(Model, MarginWithPureLagsUsesRhoBar) {
    OmegaParams om;
    om.p = 1;
    SarmaModel m = SarmaModel::zero(1, om);
    m.g(0, 0, 0) = 0.01;
    EXPECT_NEAR(stationarity_margin(m), 1 / kDefaultRhoBar - 1 - 0.01, 1e-14);
}

TEST(Model, MarginOfVmaOneDesign) {
    // Theta = -0.7 b b' gives lambda = -0.7 and G_1 = -b b', so the sufficient
    // condition evaluates to 1/0.7 - 1 - 1 < 0 even though the process is an
    // invertible MA(1). The margin is only a sufficient test.
    Rng rng(2);
    DgpConfig cfg;
    const Dgp dgp = build_dgp(cfg, rng);
    const SarmaModel m = varma_to_model(dgp.spec);
    EXPECT_NEAR(stationarity_margin(m), 1 / 0.7 - 2, 1e-8);
}

TEST(Model, PsiWeightsOfScalarAr) {
    OmegaParams om;
    om.p = 1;
    SarmaModel m = SarmaModel::zero(1, om);
    m.g(0, 0, 0) = 0.6;
    const auto psi = psi_weights(m, 10);
    ASSERT_EQ(psi.size(), 11u);
    EXPECT_EQ(psi[0](0, 0), 1.0);
    for (int j = 1; j <= 10; ++j)
        EXPECT_NEAR(psi[static_cast<std::size_t>(j)](0, 0), std::pow(0.6, j), 1e-14);
}

TEST(Model, FirstPsiWeightIsFirstArCoefficient) {
    Rng rng(3);
    OmegaParams om;
    om.lambdas = {0.4};
    om.pairs = {{0.5, 1.0}};
    SarmaModel m = SarmaModel::zero(3, om);
    m.g = random_tensor(3, 3, 3, rng);
    EXPECT_EQ(psi_weights(m, 5)[1], ar_coefficient(m, 1));
}

TEST(Model, ValidationCatchesBadPieces) {
    Rng rng(4);
    OmegaParams om;
    om.lambdas = {0.4};
    SarmaModel m = SarmaModel::zero(3, om);
    m.g = random_tensor(3, 3, 1, rng);
    EXPECT_NO_THROW(validate_model(m));
    attach_factors(m, {3, 3});
    EXPECT_NO_THROW(validate_model(m));
    m.factors->core *= 2.0;
    EXPECT_THROW(validate_model(m), InvalidArgument);
    m.factors.reset();
    m.noise_cov(0, 0) = -1;
    EXPECT_THROW(validate_model(m), InvalidArgument);
    m.noise_cov = Matrix::Identity(2, 2);
    EXPECT_THROW(validate_model(m), DimensionError);
}
