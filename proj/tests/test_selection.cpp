#include "sarma/selection.hpp"
#include "sarma/simulate.hpp"
#include "sarma/varma.hpp"
#include "test_util.hpp"

using namespace sarma;

namespace {

// N x N x 1 tensor whose mode-1 and mode-2 unfoldings have singular values s.
Tensor3 diagonal_tensor(const Vector& s) {
    const Index n = s.size();
    Tensor3 t(n, n, 1);
    for (Index i = 0; i < n; ++i)
        t(i, i, 0) = s(i);
    return t;
}

} // namespace

TEST(RatioTable, PicksTheGap) {
    const Tensor3 a = diagonal_tensor((Vector(4) << 5, 3, 1e-3, 1e-4).finished());
    const RatioTable t = ratio_table(a, 1, 0.1);
    EXPECT_EQ(t.selected, 2);
    ASSERT_EQ(t.ratios.size(), 3);
    EXPECT_NEAR(t.ratios(0), 3.1 / 5.1, 1e-12);
    EXPECT_NEAR(t.ratios(1), (1e-3 + 0.1) / 3.1, 1e-12);
    EXPECT_NEAR(t.ratios(2), (1e-4 + 0.1) / (1e-3 + 0.1), 1e-12);
}

TEST(RatioTable, RankOneAndBounds) {
    Rng rng(1);
    const Vector u = standard_normal(5, 1, rng).col(0), v = standard_normal(5, 1, rng).col(0);
    Tensor3 a(5, 5, 2);
    a.slice(0) = u * v.transpose();
    a.slice(1) = 0.5 * u * v.transpose();
    const auto tables = [&] {
        std::array<RatioTable, 2> t;
        EXPECT_EQ(select_ranks(a, 0.01, &t), (Ranks{1, 1}));
        return t;
    }();
    for (const auto& t : tables)
        for (Index j = 0; j < t.ratios.size(); ++j) {
            EXPECT_GT(t.ratios(j), 0);
            EXPECT_LE(t.ratios(j), 1 + 1e-12);
        }
}

TEST(RatioTable, HomogeneousInScaleAndTau) {
    Rng rng(2);
    const Tensor3 a = sarma::testing::random_tensor(4, 4, 3, rng);
    const RatioTable t1 = ratio_table(a, 2, 0.2);
    Tensor3 b = a;
    b.data() *= 7;
    const RatioTable t2 = ratio_table(b, 2, 1.4);
    EXPECT_LT((t1.ratios - t2.ratios).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(t1.selected, t2.selected);
}

TEST(RatioTable, RejectsDegenerateInput) {
    EXPECT_THROW(ratio_table(Tensor3(3, 3, 2), 1, 0.1), NumericalError);
    EXPECT_THROW(ratio_table(diagonal_tensor(Vector::Ones(3)), 1, 0), InvalidArgument);
    EXPECT_THROW(ratio_table(diagonal_tensor(Vector::Ones(3)), 3, 0.1), InvalidArgument);
}

TEST(DefaultTau, MatchesFormula) {
    // T = 1000, N = 20: P = 10, 0.5 sqrt(200 / 1000).
    EXPECT_NEAR(default_tau(1000, 20), 0.5 * std::sqrt(0.2), 1e-15);
    EXPECT_NEAR(default_tau(1000, 20), 0.2236, 1e-4);
    EXPECT_THROW(default_tau(10, 10), InvalidArgument);
}

TEST(Bic, DofAndValue) {
    EXPECT_EQ(bic_dof({2, 3}, {1, 1, 1}, 10, Estimator::rank), 2 * 3 * 4 + 5 * 10);
    EXPECT_NEAR(bic_dof({1, 1}, {0, 1, 0}, 10, Estimator::sltr), 1 + 2 * std::log(10.0), 1e-12);
    EXPECT_NEAR(bic_value(200, 100, 10, 0.1), std::log(2.0) + 0.1 * 10 * std::log(100.0) / 100, 1e-14);
    // More parameters cost more; a smaller loss helps.
    EXPECT_LT(bic_value(200, 100, 10, 0.1), bic_value(200, 100, 11, 0.1));
    EXPECT_LT(bic_value(190, 100, 10, 0.1), bic_value(200, 100, 10, 0.1));
}

TEST(OrderGrid, EnumeratesWithoutTheEmptyModel) {
    const auto pts = OrderGrid{}.points();
    EXPECT_EQ(pts.size(), 3u * 3u * 2u - 1u);
    for (const auto& o : pts)
        EXPECT_GT(o.p + o.r + o.s, 0);
    EXPECT_EQ(OrderGrid({0, 0, 0}).points().size(), 0u);
}

TEST(SelectOrders, OnePointGridAndEmptyGrid) {
    Rng rng(3);
    const Matrix y = standard_normal(150, 3, rng);
    const Tensor3 a0 = initial_var_estimator(y, InitialKind::nuclear, 5);
    const SelectionReport rep = select_orders(y, {1, 1}, OrderGrid{0, 1, 0}, 0.1, Estimator::rank, a0);
    ASSERT_EQ(rep.bic_table.size(), 1u);
    EXPECT_EQ(rep.orders, (Orders{0, 1, 0}));
    EXPECT_TRUE(rep.bic_table[0].ok);
    EXPECT_THROW(select_orders(y, {1, 1}, OrderGrid{0, 0, 0}, 0.1, Estimator::rank, a0), InvalidArgument);
}

TEST(SelectOrders, FailedPointsAreSkipped) {
    Rng rng(4);
    const Matrix y = standard_normal(150, 3, rng);
    const Tensor3 a0 = initial_var_estimator(y, InitialKind::nuclear, 5);
    // Ranks (3, 1) are only valid when d >= 3.
    const SelectionReport rep = select_orders(y, {3, 1}, OrderGrid{1, 2, 0}, 0.1, Estimator::rank, a0);
    int failed = 0;
    for (const auto& e : rep.bic_table) {
        if (!e.ok) {
            ++failed;
            EXPECT_FALSE(e.error.empty());
        }
    }
    EXPECT_GT(failed, 0);
    EXPECT_GE(rep.orders.d(), 3);
}

TEST(SelectOrders, ParallelMatchesSerial) {
    Rng rng(5);
    const Matrix y = standard_normal(150, 3, rng);
    const Tensor3 a0 = initial_var_estimator(y, InitialKind::nuclear, 5);
    const OrderGrid grid{1, 1, 1};
    const auto a = select_orders(y, {1, 1}, grid, 0.1, Estimator::rank, a0, {}, 1);
    const auto b = select_orders(y, {1, 1}, grid, 0.1, Estimator::rank, a0, {}, 3);
    ASSERT_EQ(a.bic_table.size(), b.bic_table.size());
    for (std::size_t i = 0; i < a.bic_table.size(); ++i)
        EXPECT_EQ(a.bic_table[i].bic, b.bic_table[i].bic);
    EXPECT_EQ(a.orders, b.orders);
}

TEST(SelectModel, FindsVma1Structure) {
    int rank_ok = 0, joint_ok = 0;
    const int reps = 4;
    for (int i = 0; i < reps; ++i) {
        Rng rng(derive_seed(40, i));
        DgpConfig dc;
        dc.n = 10;
        dc.lambdas = {-0.7};
        const Dgp dgp = build_dgp(dc, rng);
        const Matrix y = simulate(dgp.spec, 1000, 500, derive_seed(41, i));
        const SelectionReport rep = select_model(y, SelectionOptions{});
        rank_ok += rep.ranks == Ranks{1, 1};
        joint_ok += rep.ranks == Ranks{1, 1} && rep.orders == Orders{0, 1, 0};
    }
    EXPECT_GE(rank_ok, reps - 1);
    EXPECT_GE(joint_ok, reps - 1);
}
