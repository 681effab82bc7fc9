// Simulate a ten-dimensional VMA(1), pick ranks and orders, fit, and compare
// one-step forecasts on the last 100 observations with a VAR(1) fitted by OLS.

#include "sarma/sarma.hpp"

#include <cstdio>

using namespace sarma;

int main() {
    Rng rng(2024);
    DgpConfig dc;
    dc.n = 10;
    dc.lambdas = {-0.8};
    const Dgp dgp = build_dgp(dc, rng);
    const Matrix y = simulate(dgp.spec, 800, kDefaultBurnIn, 7);
    const Index n_train = 700;
    const Matrix train = y.topRows(n_train);

    const SelectionReport sel = select_model(train, SelectionOptions{});
    std::printf("selected ranks (%ld,%ld), orders (p,r,s) = (%d,%d,%d)\n", static_cast<long>(sel.ranks.first),
                static_cast<long>(sel.ranks.second), sel.orders.p, sel.orders.r, sel.orders.s);

    FitConfig cfg;
    cfg.ranks = sel.ranks;
    cfg.orders = sel.orders;
    const FitReport fit = fit_rank_constrained(train, cfg, initialize(train, cfg.ranks, cfg.orders, InitialKind::nuclear));
    std::printf("fit: %d iterations, loss %.2f, %s\n", fit.iters, fit.final_loss(),
                fit.converged ? "converged" : "not converged");

    SarmaModel var1 = SarmaModel::zero(10, OmegaParams{1, {}, {}});
    var1.g = var_ols(train, 1);

    const Index n_eval = y.rows() - n_train;
    const ForecastReport f_sarma = evaluate_model(fit.model, y, n_eval);
    const ForecastReport f_var = evaluate_model(var1, y, n_eval);
    const ForecastReport f_true = evaluate_model(varma_to_model(dgp.spec), y, n_eval);
    std::printf("one-step MSFE over %ld origins\n", static_cast<long>(n_eval));
    std::printf("  fitted SARMA  %.4f\n", f_sarma.msfe);
    std::printf("  VAR(1) OLS    %.4f\n", f_var.msfe);
    std::printf("  true model    %.4f\n", f_true.msfe);
}
