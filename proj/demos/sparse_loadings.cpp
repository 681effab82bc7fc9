// Sparse loadings: only five of twenty series drive the dynamics. The SLTR fit
// puts exact zeros in the other rows of the response loading.

#include "sarma/sarma.hpp"

#include <cstdio>

using namespace sarma;

int main() {
    Rng rng(5);
    DgpConfig dc;
    dc.n = 20;
    dc.lambdas = {-0.7};
    dc.sparsity = 5;
    const Dgp dgp = build_dgp(dc, rng);
    const Matrix y = simulate(dgp.spec, 400, kDefaultBurnIn, 11);

    FitConfig cfg;
    cfg.ranks = {1, 1};
    cfg.orders = {0, 1, 0};
    cfg.lambda_l1 = default_lambda_l1(y);
    const FitReport fit = fit_sltr(y, cfg, initialize(y, cfg.ranks, cfg.orders, InitialKind::group_lasso));

    std::printf("true support:");
    for (Index k : dgp.support)
        std::printf(" %ld", static_cast<long>(k));
    std::printf("\nnonzero rows of U1:");
    const Matrix& u1 = fit.model.factors->u1;
    for (Index k = 0; k < u1.rows(); ++k)
        if (u1.row(k).norm() > 0)
            std::printf(" %ld", static_cast<long>(k));
    std::printf("\nlambda_l1 %.4f, decay rate %.3f (true -0.7)\n", fit.lambda_l1, fit.model.omega.lambdas[0]);
}
