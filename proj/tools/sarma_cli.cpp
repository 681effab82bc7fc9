// sarma: simulate, fit, select, forecast and evaluate SARMA models from CSV data.

#include "sarma/io.hpp"
#include "sarma/sarma.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace sarma;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitWarn = 2;
constexpr int kExitNumerical = 3;

constexpr const char* kConfigEnv = "SARMA_CONFIG";
constexpr const char* kVersion = "1.0.0";

struct UsageError : Error {
    using Error::Error;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// "x.json" -> "x" + suffix; other names get the suffix appended.
std::string sibling(const std::string& path, const std::string& suffix) {
    const auto dot = path.rfind('.');
    const auto slash = path.rfind('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return path.substr(0, dot) + suffix;
    return path + suffix;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(what + ": not a number: '" + s + "'");
    }
}

std::ostream& log() { return std::cerr; }

// ---------------------------------------------------------------------------
// Shared state of one invocation

struct Run {
    std::string command;
    std::vector<std::string> argv;
    std::string manifest_path;
    std::string config_path;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool quiet = false;
    Json config = Json::object();
    Json inputs = Json::object();
    Json outputs = Json::object();
    Json extra = Json::object();

    void info(const std::string& msg) const {
        if (!quiet)
            log() << msg << '\n';
    }
};

Json load_config_file(const std::string& path) {
    const Json j = read_json(path);
    if (!j.is_object())
        throw DataError(path + ": config must be a JSON object");
    return j;
}

// Fit knobs shared by fit and evaluate. Flags win over the config file, which
// wins over the defaults.
struct FitFlags {
    std::string method = "rank";
    std::vector<int> ranks;
    std::vector<int> orders;
    std::optional<double> lambda_l1;
    std::string lambda_grid;
    std::string init;
    double init_reg = -1;
    std::optional<int> max_iters;
    std::optional<double> tol;
    std::optional<double> kappa;
    std::optional<double> rho1;
    std::optional<double> rho2;
    std::optional<int> admm_max_iters;
    std::optional<double> admm_tol;
    std::optional<double> tau;
    double c_tau = kDefaultTauConstant;
    double bic_c = kDefaultBicConstant;
    OrderGrid grid;
    bool no_standardize = false;

    void add(CLI::App* app) {
        app->add_option("--method", method, "Estimator")->check(CLI::IsMember({"rank", "sltr"}))->capture_default_str();
        app->add_option("--ranks", ranks, "Tucker ranks R1,R2 (selected when absent)")->delimiter(',')->expected(2);
        app->add_option("--orders", orders, "Orders p,r,s (selected when absent)")->delimiter(',')->expected(3);
        app->add_option("--lambda-l1", lambda_l1, "l1 weight for sltr (default: data-driven)");
        app->add_option("--lambda-grid", lambda_grid, "Comma-separated l1 weights; picks one by cross-validation");
        app->add_option("--init", init, "Initial estimator (default: nuclear for rank, group_lasso for sltr)")
            ->check(CLI::IsMember({"nuclear", "group_lasso"}));
        app->add_option("--init-reg", init_reg, "Initial estimator weight (negative: default)");
        app->add_option("--max-iters", max_iters, "Maximum outer iterations");
        app->add_option("--tol", tol, "Relative loss tolerance");
        app->add_option("--kappa", kappa, "Loading ADMM penalty (relative to data scale)");
        app->add_option("--rho1", rho1, "Core splitting penalty, mode 1");
        app->add_option("--rho2", rho2, "Core splitting penalty, mode 2");
        app->add_option("--admm-max-iters", admm_max_iters, "Inner ADMM iteration cap");
        app->add_option("--admm-tol", admm_tol, "Inner ADMM residual tolerance");
        add_selection(app);
        app->add_flag("--no-standardize", no_standardize, "Fit the raw series instead of z-scores");
    }

    void add_selection(CLI::App* app) {
        app->add_option("--tau", tau, "Ridge-ratio constant (default: c_tau sqrt(N P / T))");
        app->add_option("--c-tau", c_tau, "Multiplier of the default tau")->capture_default_str();
        app->add_option("--bic-c", bic_c, "BIC penalty constant")->capture_default_str();
        app->add_option("--p-max", grid.p_max, "Order grid cap for p")->capture_default_str();
        app->add_option("--r-max", grid.r_max, "Order grid cap for r")->capture_default_str();
        app->add_option("--s-max", grid.s_max, "Order grid cap for s")->capture_default_str();
    }

    Estimator estimator() const { return method == "sltr" ? Estimator::sltr : Estimator::rank; }

    InitialKind initial_kind() const {
        if (init.empty())
            return estimator() == Estimator::sltr ? InitialKind::group_lasso : InitialKind::nuclear;
        return init == "nuclear" ? InitialKind::nuclear : InitialKind::group_lasso;
    }

    std::vector<double> lambdas() const {
        std::vector<double> out;
        for (const auto& s : split(lambda_grid, ','))
            out.push_back(parse_double(s, "--lambda-grid"));
        return out;
    }

    SelectionOptions selection(unsigned threads) const {
        if (grid.points().empty())
            throw UsageError("order grid is empty (p-max = r-max = s-max = 0)");
        SelectionOptions so;
        so.grid = grid;
        so.c = bic_c;
        so.tau = tau.value_or(-1);
        so.c_tau = c_tau;
        so.estimator = estimator();
        so.initial = initial_kind();
        so.initial_reg = init_reg;
        so.threads = threads;
        return so;
    }

    /// Resolved configuration; `lambda_from_config` reports whether the config
    /// file fixed the l1 weight.
    FitConfig resolve(const Json& file, std::uint64_t seed, bool* lambda_from_config) const {
        FitConfig c;
        apply_config_json(file, c);
        *lambda_from_config = file.contains("lambda_l1");
        if (ranks.size() == 2)
            c.ranks = {ranks[0], ranks[1]};
        if (orders.size() == 3)
            c.orders = {orders[0], orders[1], orders[2]};
        if (lambda_l1)
            c.lambda_l1 = *lambda_l1;
        if (max_iters)
            c.max_outer_iters = *max_iters;
        if (tol)
            c.tol_rel_loss = *tol;
        if (kappa)
            c.admm_kappa = *kappa;
        if (rho1)
            c.admm_rhos[0] = *rho1;
        if (rho2)
            c.admm_rhos[1] = *rho2;
        if (admm_max_iters)
            c.admm_max_iters = *admm_max_iters;
        if (admm_tol)
            c.admm_tol = *admm_tol;
        c.seed = seed;
        return c;
    }

    bool structure_given(const Json& file) const {
        return (ranks.size() == 2 || file.contains("ranks")) && (orders.size() == 3 || file.contains("orders"));
    }
};

Json standardization_json(const Standardization& s) {
    return {{"means", vector_json(s.means)}, {"scales", vector_json(s.scales)}};
}

void print_selection(const SelectionReport& s, std::ostream& out) {
    char buf[160];
    for (int mode = 0; mode < 2; ++mode) {
        const auto& t = s.ratio_tables[static_cast<std::size_t>(mode)];
        std::snprintf(buf, sizeof buf, "ratio table, mode %d (tau = %.4g)\n", mode + 1, s.tau);
        out << buf << "   j      sigma_j      ratio_j\n";
        for (Index j = 0; j < t.ratios.size(); ++j) {
            const double sig = j < t.sigma.size() ? t.sigma(j) : 0.0;
            std::snprintf(buf, sizeof buf, "%4ld %12.5g %12.5g%s\n", static_cast<long>(j + 1), sig, t.ratios(j),
                          j + 1 == t.selected ? "  <-" : "");
            out << buf;
        }
    }
    out << "BIC table (c = " << s.c << ", estimator = " << to_string(s.estimator) << ")\n";
    out << "   p  r  s      loss     dof          bic\n";
    for (const auto& e : s.bic_table) {
        if (e.ok)
            std::snprintf(buf, sizeof buf, "%4d %2d %2d %9.4g %7.1f %12.6f%s\n", e.orders.p, e.orders.r, e.orders.s,
                          e.loss, e.dof, e.bic, e.orders == s.orders ? "  <-" : "");
        else
            std::snprintf(buf, sizeof buf, "%4d %2d %2d   failed: %.100s\n", e.orders.p, e.orders.r, e.orders.s,
                          e.error.c_str());
        out << buf;
    }
    out << "selected ranks (" << s.ranks.first << "," << s.ranks.second << "), orders (" << s.orders.p << ","
        << s.orders.r << "," << s.orders.s << ")\n";
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateFlags {
    int dgp = 1;
    Index n = 10;
    Index t = 500;
    std::vector<double> lambdas{-0.7};
    std::vector<std::string> pairs;
    double delta = 0.5;
    Index sparsity = 0;
    Index burn_in = kDefaultBurnIn;
    std::string out;
    std::string truth;
};

int cmd_simulate(const SimulateFlags& f, Run& run) {
    DgpConfig dc;
    dc.kind = f.dgp == 2 ? DgpKind::varma11 : DgpKind::vma1;
    dc.n = f.n;
    dc.lambdas = f.lambdas;
    for (const auto& p : f.pairs) {
        const auto parts = split(p, ',');
        if (parts.size() != 2)
            throw UsageError("--pair expects gamma,theta; got '" + p + "'");
        dc.pairs.push_back({parse_double(parts[0], "--pair"), parse_double(parts[1], "--pair")});
    }
    dc.delta = f.delta;
    dc.sparsity = f.sparsity;
    Rng rng(derive_seed(run.seed, 0));
    const Dgp dgp = build_dgp(dc, rng);
    const Matrix y = simulate(dgp.spec, f.t, f.burn_in, derive_seed(run.seed, 1));
    const auto names = default_series_names(f.n);
    write_csv(f.out, y, names);

    const std::string truth = f.truth.empty() ? sibling(f.out, ".truth.json") : f.truth;
    Json tj = to_json(varma_to_model(dgp.spec));
    Json theta = Json::array(), phi = Json::array();
    for (const auto& m : dgp.spec.theta)
        theta.push_back(to_json(m));
    for (const auto& m : dgp.spec.phi)
        phi.push_back(to_json(m));
    tj["varma"] = {{"theta", theta}, {"phi", phi}};
    tj["support"] = dgp.support;
    tj["series"] = names;
    write_json(truth, tj);

    Json pj = Json::array();
    for (const auto& p : dc.pairs)
        pj.push_back({p.gamma, p.theta});
    run.config = {{"dgp", f.dgp}, {"n", f.n},          {"t", f.t},   {"lambdas", f.lambdas}, {"pairs", pj},
                  {"delta", f.delta}, {"sparsity", f.sparsity}, {"burn_in", f.burn_in}};
    run.outputs = {{"data", f.out}, {"truth", truth}};
    run.info("wrote " + std::to_string(f.t) + " x " + std::to_string(f.n) + " sample to " + f.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitCmdFlags {
    std::string data;
    std::string out;
    std::string report;
    FitFlags fit;
};

int cmd_fit(const FitCmdFlags& f, Run& run) {
    const Json file = run.config_path.empty() ? Json::object() : load_config_file(run.config_path);
    const CsvTable table = read_csv(f.data);
    run.inputs = {{"data", f.data}};
    std::optional<Standardization> st;
    if (!f.fit.no_standardize)
        st = standardize(table.data);
    const Matrix& z = st ? st->data : table.data;

    bool lambda_from_config = false;
    FitConfig cfg = f.fit.resolve(file, run.seed, &lambda_from_config);
    Json report = Json::object();
    if (!f.fit.structure_given(file)) {
        run.info("selecting ranks and orders");
        const SelectionReport sel = select_model(z, f.fit.selection(run.threads), cfg);
        if (f.fit.ranks.size() != 2 && !file.contains("ranks"))
            cfg.ranks = sel.ranks;
        if (f.fit.orders.size() != 3 && !file.contains("orders"))
            cfg.orders = sel.orders;
        report["selection"] = to_json(sel);
    }
    const Estimator est = f.fit.estimator();
    const InitialKind kind = f.fit.initial_kind();
    if (est == Estimator::sltr) {
        if (!f.fit.lambda_grid.empty()) {
            const auto cv = cross_validate_lambda(z, cfg, f.fit.lambdas(), kind);
            cfg.lambda_l1 = cv.lambda;
            report["cross_validation"] = {{"grid", cv.grid}, {"scores", cv.scores}, {"lambda", cv.lambda}};
            run.info("cross-validation picked lambda_l1 = " + detail::format_double(cv.lambda));
        } else if (!f.fit.lambda_l1 && !lambda_from_config) {
            cfg.lambda_l1 = default_lambda_l1(z);
        }
    }
    validate_config(cfg);
    const SarmaModel init = initialize(z, cfg.ranks, cfg.orders, kind, f.fit.init_reg);
    const FitReport rep = est == Estimator::rank ? fit_rank_constrained(z, cfg, init) : fit_sltr(z, cfg, init);

    Json model = to_json(rep.model);
    model["series"] = table.names;
    if (st)
        model["standardization"] = standardization_json(*st);
    write_json(f.out, model);
    report["fit"] = to_json(rep);
    report["config"] = to_json(cfg);
    report["initial"] = to_string(kind);
    report["standardized"] = st.has_value();
    const std::string report_path = f.report.empty() ? sibling(f.out, ".report.json") : f.report;
    write_json(report_path, report);

    run.config = to_json(cfg);
    run.config["method"] = to_string(est);
    run.config["initial"] = to_string(kind);
    run.config["initial_reg"] = f.fit.init_reg;
    run.config["standardize"] = st.has_value();
    run.outputs = {{"model", f.out}, {"report", report_path}};
    run.extra["wall_time_fit_s"] = rep.wall_time_s;

    char buf[200];
    std::snprintf(buf, sizeof buf, "%s fit: ranks (%ld,%ld), orders (%d,%d,%d), loss %.6g, %d iterations, %s",
                  to_string(est).c_str(), static_cast<long>(cfg.ranks.first), static_cast<long>(cfg.ranks.second),
                  cfg.orders.p, cfg.orders.r, cfg.orders.s, rep.final_loss(), rep.iters,
                  rep.converged ? "converged" : "NOT converged");
    run.info(buf);
    for (const auto& w : rep.warnings)
        log() << "warning: " << w << '\n';
    return rep.converged && rep.warnings.empty() ? kExitOk : kExitWarn;
}

// ---------------------------------------------------------------------------
// select

struct SelectCmdFlags {
    std::string data;
    std::string out;
    std::string method = "rank";
    std::string init;
    double init_reg = -1;
    bool no_standardize = false;
    FitFlags fit;
};

int cmd_select(const SelectCmdFlags& f, Run& run) {
    const Json file = run.config_path.empty() ? Json::object() : load_config_file(run.config_path);
    const CsvTable table = read_csv(f.data);
    run.inputs = {{"data", f.data}};
    const Matrix z = f.no_standardize ? table.data : standardize(table.data).data;
    FitFlags ff = f.fit;
    ff.method = f.method;
    ff.init = f.init;
    ff.init_reg = f.init_reg;
    bool unused = false;
    const FitConfig cfg = ff.resolve(file, run.seed, &unused);
    const SelectionReport sel = select_model(z, ff.selection(run.threads), cfg);
    print_selection(sel, std::cout);
    write_json(f.out, to_json(sel));
    run.outputs = {{"selection", f.out}};
    run.config = to_json(cfg);
    run.config["method"] = f.method;
    run.config["initial"] = to_string(ff.initial_kind());
    run.config["tau"] = sel.tau;
    run.config["c_tau"] = ff.c_tau;
    run.config["bic_c"] = ff.bic_c;
    run.config["grid"] = {{"p_max", ff.grid.p_max}, {"r_max", ff.grid.r_max}, {"s_max", ff.grid.s_max}};
    run.config["standardize"] = !f.no_standardize;
    for (const auto& e : sel.bic_table)
        if (e.ok && !e.converged)
            return kExitWarn;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// forecast

struct ForecastCmdFlags {
    std::string model;
    std::string data;
    std::string out;
    Index eval = 0;
    std::string report;
    std::string per_origin;
};

int cmd_forecast(const ForecastCmdFlags& f, Run& run) {
    const Json mj = read_json(f.model);
    const SarmaModel m = model_from_json(mj);
    const CsvTable table = read_csv(f.data);
    run.inputs = {{"model", f.model}, {"data", f.data}};
    if (table.data.cols() != m.dim())
        throw DimensionError("data have " + std::to_string(table.data.cols()) + " series, model has " +
                             std::to_string(m.dim()));
    Matrix z = table.data;
    Vector means = Vector::Zero(m.dim()), scales = Vector::Ones(m.dim());
    if (mj.contains("standardization")) {
        means = matrix_from_json(Json::array({mj["standardization"]["means"]})).row(0).transpose();
        scales = matrix_from_json(Json::array({mj["standardization"]["scales"]})).row(0).transpose();
        if (means.size() != m.dim() || scales.size() != m.dim())
            throw DataError(f.model + ": standardization has the wrong length");
        z = (table.data.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
    }
    const Vector next = one_step_forecast(m, z).cwiseProduct(scales) + means;
    {
        std::ofstream out(f.out);
        if (!out)
            throw DataError("cannot write '" + f.out + "'");
        out << "origin";
        for (const auto& nm : table.names)
            out << ',' << nm;
        out << '\n' << table.data.rows() + 1;
        for (Index j = 0; j < next.size(); ++j)
            out << ',' << detail::format_double(next(j));
        out << '\n';
    }
    run.outputs = {{"forecast", f.out}};
    if (f.eval > 0) {
        ForecastReport r = evaluate_model(m, z, f.eval);
        const std::string rp = f.report.empty() ? sibling(f.out, ".report.json") : f.report;
        const std::string op = f.per_origin.empty() ? sibling(f.out, ".origins.csv") : f.per_origin;
        Json rj = to_json(r);
        rj["units"] = mj.contains("standardization") ? "standardized" : "original";
        write_json(rp, rj);
        std::ofstream out(op);
        if (!out)
            throw DataError("cannot write '" + op + "'");
        write_forecast_csv(out, r, table.names);
        run.outputs["report"] = rp;
        run.outputs["per_origin"] = op;
        run.info("in-sample one-step MSFE over the last " + std::to_string(f.eval) +
                 " rows: " + detail::format_double(r.msfe));
    }
    run.config = {{"eval", f.eval}};
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateCmdFlags {
    std::string data;
    std::string out;
    std::string per_origin;
    double holdout = 0.1;
    std::string refit = "each_origin";
    FitFlags fit;
};

int cmd_evaluate(const EvaluateCmdFlags& f, Run& run) {
    const Json file = run.config_path.empty() ? Json::object() : load_config_file(run.config_path);
    const CsvTable table = read_csv(f.data);
    run.inputs = {{"data", f.data}};
    Matrix z = table.data;
    if (!f.fit.no_standardize) {
        // Scale with the statistics of the first training window only.
        const Index n_eval = static_cast<Index>(std::floor(f.holdout * static_cast<double>(z.rows())));
        const Standardization st = standardize(z.topRows(std::max<Index>(2, z.rows() - n_eval)));
        z = (z.rowwise() - st.means.transpose()).array().rowwise() / st.scales.transpose().array();
    }
    bool lambda_from_config = false;
    FitConfig cfg = f.fit.resolve(file, run.seed, &lambda_from_config);
    RollingOptions opt;
    opt.holdout_fraction = f.holdout;
    opt.refit = f.refit == "never" ? Refit::never : Refit::each_origin;
    opt.estimator = f.fit.estimator();
    opt.initial = f.fit.initial_kind();
    if (f.fit.ranks.size() == 2 || file.contains("ranks"))
        opt.ranks = cfg.ranks;
    if (f.fit.orders.size() == 3 || file.contains("orders"))
        opt.orders = cfg.orders;
    opt.selection = f.fit.selection(run.threads);
    opt.threads = run.threads;
    if (opt.estimator == Estimator::sltr && !f.fit.lambda_l1 && !lambda_from_config) {
        const Index n_eval = static_cast<Index>(std::floor(f.holdout * static_cast<double>(z.rows())));
        cfg.lambda_l1 = default_lambda_l1(z.topRows(std::max<Index>(2, z.rows() - n_eval)));
    }
    const ForecastReport r = rolling_evaluate(z, cfg, opt);

    Json rj = to_json(r);
    rj["units"] = f.fit.no_standardize ? "original" : "standardized";
    write_json(f.out, rj);
    const std::string op = f.per_origin.empty() ? sibling(f.out, ".origins.csv") : f.per_origin;
    std::ofstream out(op);
    if (!out)
        throw DataError("cannot write '" + op + "'");
    write_forecast_csv(out, r, table.names);

    run.config = to_json(cfg);
    run.config["ranks"] = {r.ranks.first, r.ranks.second};
    run.config["orders"] = to_json(r.orders);
    run.config["method"] = f.fit.method;
    run.config["initial"] = to_string(opt.initial);
    run.config["holdout"] = f.holdout;
    run.config["refit"] = f.refit;
    run.config["standardize"] = !f.fit.no_standardize;
    run.outputs = {{"report", f.out}, {"per_origin", op}};
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu origins: MSFE %.6g, MAFE %.6g", r.origins.size(), r.msfe, r.mafe);
    run.info(buf);
    return r.nonconverged_fits == 0 ? kExitOk : kExitWarn;
}

void write_manifest(const Run& run, int code, const std::string& started, double seconds) {
    if (run.manifest_path.empty())
        return;
    Json j = {{"format", "sarma-manifest"},
              {"tool_version", kVersion},
              {"command", run.command},
              {"argv", run.argv},
              {"config_file", run.config_path},
              {"seed", run.seed},
              {"threads", run.threads},
              {"config", run.config},
              {"inputs", run.inputs},
              {"outputs", run.outputs},
              {"started_at", started},
              {"finished_at", utc_now()},
              {"wall_time_s", seconds},
              {"exit_code", code}};
    for (const auto& [k, v] : run.extra.items())
        j[k] = v;
    try {
        write_json(run.manifest_path, j);
    } catch (const std::exception& e) {
        log() << "warning: " << e.what() << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SARMA models for high-dimensional time series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Run run;
    for (int i = 0; i < argc; ++i)
        run.argv.emplace_back(argv[i]);
    std::string manifest;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", run.seed, "Root random seed")->capture_default_str();
        sub->add_option("--threads", run.threads, "Worker cap (0: all cores)")->capture_default_str();
        sub->add_option("--config", run.config_path, std::string("JSON config file (default: $") + kConfigEnv + ")");
        sub->add_option("--manifest", manifest, "Manifest path (default: next to the main output)");
        sub->add_flag("-q,--quiet", run.quiet, "Only report errors");
    };

    SimulateFlags sim;
    auto* s_sim = app.add_subcommand("simulate", "Simulate a VMA(1) or VARMA(1,1) design to CSV");
    s_sim->add_option("--dgp", sim.dgp, "1: VMA(1), 2: VARMA(1,1)")->check(CLI::IsMember({1, 2}))->capture_default_str();
    s_sim->add_option("--n", sim.n, "Number of series")->capture_default_str();
    s_sim->add_option("--t", sim.t, "Sample length")->capture_default_str();
    s_sim->add_option("--lambda", sim.lambdas, "Real MA eigenvalues")->delimiter(',');
    s_sim->add_option("--pair", sim.pairs, "Complex MA eigenvalue pair as gamma,theta (repeatable)");
    s_sim->add_option("--delta", sim.delta, "AR eigenvalue of design 2")->capture_default_str();
    s_sim->add_option("--sparsity", sim.sparsity, "Nonzero rows of the mixing matrix (0: dense)")->capture_default_str();
    s_sim->add_option("--burn-in", sim.burn_in, "Discarded initial draws")->capture_default_str();
    s_sim->add_option("--out,-o", sim.out, "Output CSV")->required();
    s_sim->add_option("--truth", sim.truth, "Ground-truth model file (default: <out>.truth.json)");
    common(s_sim);

    FitCmdFlags fit;
    auto* s_fit = app.add_subcommand("fit", "Standardize, initialize and fit a model");
    s_fit->add_option("--data,-d", fit.data, "Input CSV")->required();
    s_fit->add_option("--out,-o", fit.out, "Model file")->required();
    s_fit->add_option("--report", fit.report, "Fit report (default: <out>.report.json)");
    fit.fit.add(s_fit);
    common(s_fit);

    SelectCmdFlags sel;
    auto* s_sel = app.add_subcommand("select", "Select ranks by ridge ratios and orders by BIC");
    s_sel->add_option("--data,-d", sel.data, "Input CSV")->required();
    s_sel->add_option("--out,-o", sel.out, "Selection report")->required();
    s_sel->add_option("--method", sel.method, "Estimator used for the BIC fits")
        ->check(CLI::IsMember({"rank", "sltr"}))
        ->capture_default_str();
    s_sel->add_option("--init", sel.init, "Initial estimator")->check(CLI::IsMember({"nuclear", "group_lasso"}));
    s_sel->add_option("--init-reg", sel.init_reg, "Initial estimator weight (negative: default)");
    s_sel->add_flag("--no-standardize", sel.no_standardize, "Use the raw series");
    sel.fit.add_selection(s_sel);
    common(s_sel);

    ForecastCmdFlags fc;
    auto* s_fc = app.add_subcommand("forecast", "One-step forecast from a saved model (no refit)");
    s_fc->add_option("--model,-m", fc.model, "Model file")->required();
    s_fc->add_option("--data,-d", fc.data, "History CSV")->required();
    s_fc->add_option("--out,-o", fc.out, "Forecast CSV")->required();
    s_fc->add_option("--eval", fc.eval, "Also score forecasts of the last N rows")->capture_default_str();
    s_fc->add_option("--report", fc.report, "Report for --eval (default: <out>.report.json)");
    s_fc->add_option("--per-origin", fc.per_origin, "Per-origin CSV for --eval (default: <out>.origins.csv)");
    common(s_fc);

    EvaluateCmdFlags ev;
    auto* s_ev = app.add_subcommand("evaluate", "Rolling one-step evaluation over a holdout");
    s_ev->add_option("--data,-d", ev.data, "Input CSV")->required();
    s_ev->add_option("--out,-o", ev.out, "Forecast report")->required();
    s_ev->add_option("--per-origin", ev.per_origin, "Per-origin CSV (default: <out>.origins.csv)");
    s_ev->add_option("--holdout", ev.holdout, "Fraction of rows held out")->capture_default_str();
    s_ev->add_option("--refit", ev.refit, "Refit policy")
        ->check(CLI::IsMember({"never", "each_origin"}))
        ->capture_default_str();
    ev.fit.add(s_ev);
    common(s_ev);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    if (run.config_path.empty())
        if (const char* env = std::getenv(kConfigEnv))
            run.config_path = env;
    if (run.threads == 0)
        run.threads = default_threads();

    int code = kExitOk;
    std::string primary;
    try {
        if (*s_sim) {
            run.command = "simulate";
            primary = sim.out;
            code = cmd_simulate(sim, run);
        } else if (*s_fit) {
            run.command = "fit";
            primary = fit.out;
            code = cmd_fit(fit, run);
        } else if (*s_sel) {
            run.command = "select";
            primary = sel.out;
            code = cmd_select(sel, run);
        } else if (*s_fc) {
            run.command = "forecast";
            primary = fc.out;
            code = cmd_forecast(fc, run);
        } else if (*s_ev) {
            run.command = "evaluate";
            primary = ev.out;
            code = cmd_evaluate(ev, run);
        }
    } catch (const NumericalError& e) {
        log() << "numerical failure: " << e.what() << '\n';
        code = kExitNumerical;
    } catch (const StationarityError& e) {
        log() << "numerical failure: " << e.what() << '\n';
        code = kExitNumerical;
    } catch (const IdentifiabilityError& e) {
        log() << "numerical failure: " << e.what() << '\n';
        code = kExitNumerical;
    } catch (const std::exception& e) {
        log() << "error: " << e.what() << '\n';
        code = kExitUsage;
    }
    run.manifest_path = !manifest.empty() ? manifest : primary.empty() ? "" : sibling(primary, ".manifest.json");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(run, code, started, seconds);
    return code;
}
