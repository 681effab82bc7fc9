#pragma once

#include "sarma/error.hpp"
#include "sarma/fit.hpp"
#include "sarma/forecast.hpp"
#include "sarma/model.hpp"
#include "sarma/selection.hpp"
#include "sarma/tensor.hpp"

#include "json.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sarma {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> names;
    Matrix data; ///< T x N
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parses a header row plus one numeric row per time point. `source` is used
/// in error messages.
inline CsvTable parse_csv(std::istream& in, const std::string& source = "<input>") {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::vector<double> values;
    Index rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
            line.erase(0, 3);
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split_commas(line);
        if (!header) {
            for (auto c : cells) {
                if (c.empty())
                    throw DataError(source + ":" + std::to_string(lineno) + ": empty column name");
                t.names.emplace_back(c);
            }
            header = true;
            continue;
        }
        if (cells.size() != t.names.size())
            throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.names.size()) +
                            " fields, found " + std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto c = cells[j];
            double v = 0;
            const char* first = c.data();
            const char* last = c.data() + c.size();
            if (!c.empty() && *first == '+')
                ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (c.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
                throw DataError(source + ":" + std::to_string(lineno) + ": column " + std::to_string(j + 1) + " ('" +
                                t.names[j] + "'): not a finite number: '" + std::string(c) + "'");
            values.push_back(v);
        }
        ++rows;
    }
    if (!header)
        throw DataError(source + ": empty file");
    if (rows == 0)
        throw DataError(source + ": no data rows");
    const Index n = static_cast<Index>(t.names.size());
    t.data = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, n);
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    return parse_csv(in, path);
}

inline std::vector<std::string> default_series_names(Index n) {
    std::vector<std::string> names;
    for (Index j = 1; j <= n; ++j)
        names.push_back("s" + std::to_string(j));
    return names;
}

inline void write_csv(std::ostream& out, const Matrix& data, const std::vector<std::string>& names) {
    if (static_cast<Index>(names.size()) != data.cols())
        throw DimensionError("write_csv: header and data widths differ");
    for (std::size_t j = 0; j < names.size(); ++j)
        out << (j ? "," : "") << names[j];
    out << '\n';
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.cols(); ++j)
            out << (j ? "," : "") << detail::format_double(data(i, j));
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const Matrix& data, const std::vector<std::string>& names) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write '" + path + "'");
    write_csv(out, data, names);
    if (!out)
        throw DataError("write failed for '" + path + "'");
}

/// Per-origin rows: origin, then actual, forecast and error for each series.
inline void write_forecast_csv(std::ostream& out, const ForecastReport& r, const std::vector<std::string>& names) {
    out << "origin";
    for (const char* kind : {"actual", "forecast", "error"})
        for (const auto& nm : names)
            out << ',' << kind << '_' << nm;
    out << '\n';
    for (Index i = 0; i < r.errors.rows(); ++i) {
        out << r.origins[static_cast<std::size_t>(i)] + 1;
        for (const Matrix* m : {&r.actual, &r.forecasts, &r.errors})
            for (Index j = 0; j < m->cols(); ++j)
                out << ',' << detail::format_double((*m)(i, j));
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

inline Matrix matrix_from_json(const Json& j) {
    if (!j.is_array())
        throw DataError("json: matrix must be an array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw DataError("json: ragged matrix");
        for (Index c = 0; c < cols; ++c)
            m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

inline Json to_json(const Tensor3& t) {
    return {{"dims", {t.dim(1), t.dim(2), t.dim(3)}}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

inline Tensor3 tensor_from_json(const Json& j) {
    const auto dims = j.at("dims").get<std::vector<Index>>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (dims.size() != 3)
        throw DataError("json: tensor needs three dims");
    Vector v = Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size()));
    return Tensor3(dims[0], dims[1], dims[2], std::move(v));
}

inline Json to_json(const OmegaParams& om) {
    Json pairs = Json::array();
    for (const auto& p : om.pairs)
        pairs.push_back({{"gamma", p.gamma}, {"theta", p.theta}});
    return {{"p", om.p}, {"lambdas", om.lambdas}, {"pairs", pairs}};
}

inline OmegaParams omega_from_json(const Json& j) {
    OmegaParams om;
    om.p = j.at("p").get<int>();
    om.lambdas = j.at("lambdas").get<std::vector<double>>();
    for (const auto& p : j.at("pairs"))
        om.pairs.push_back({p.at("gamma").get<double>(), p.at("theta").get<double>()});
    return om;
}

inline Json to_json(const SarmaModel& m) {
    Json j = {{"format", "sarma-model"},
              {"version", 1},
              {"n", m.dim()},
              {"orders", {{"p", m.omega.p}, {"r", m.omega.r()}, {"s", m.omega.s()}}},
              {"omega", to_json(m.omega)},
              {"g", to_json(m.g)},
              {"noise_cov", to_json(m.noise_cov)}};
    if (m.factors)
        j["factors"] = {{"ranks", {m.factors->u1.cols(), m.factors->u2.cols()}},
                        {"core", to_json(m.factors->core)},
                        {"u1", to_json(m.factors->u1)},
                        {"u2", to_json(m.factors->u2)}};
    return j;
}

inline SarmaModel model_from_json(const Json& j) {
    try {
        if (j.value("format", "") != "sarma-model")
            throw DataError("not a sarma-model document");
        SarmaModel m;
        m.omega = omega_from_json(j.at("omega"));
        m.g = tensor_from_json(j.at("g"));
        m.noise_cov = matrix_from_json(j.at("noise_cov"));
        if (j.contains("factors")) {
            const Json& f = j.at("factors");
            m.factors = TuckerFactors{tensor_from_json(f.at("core")), matrix_from_json(f.at("u1")),
                                      matrix_from_json(f.at("u2"))};
        }
        validate_model(m);
        return m;
    } catch (const Json::exception& e) {
        throw DataError(std::string("model json: ") + e.what());
    }
}

inline Json to_json(const Orders& o) { return {{"p", o.p}, {"r", o.r}, {"s", o.s}}; }

inline Json to_json(const FitConfig& c) {
    return {{"ranks", {c.ranks.first, c.ranks.second}},
            {"orders", to_json(c.orders)},
            {"max_outer_iters", c.max_outer_iters},
            {"tol_rel_loss", c.tol_rel_loss},
            {"lambda_l1", c.lambda_l1},
            {"admm_rhos", {c.admm_rhos[0], c.admm_rhos[1]}},
            {"admm_kappa", c.admm_kappa},
            {"admm_max_iters", c.admm_max_iters},
            {"admm_tol", c.admm_tol},
            {"newton", {{"max_steps", c.newton.max_steps}, {"step_tol", c.newton.step_tol}}},
            {"omega_box", {{"rho_bar", c.omega_box.rho_bar}, {"eps", c.omega_box.eps}}},
            {"omega_multistart", c.omega_multistart},
            {"seed", c.seed}};
}

/// Overrides the fields of `c` present in `j` (same keys as to_json).
/// Unknown keys are rejected so that typos do not pass silently.
inline void apply_config_json(const Json& j, FitConfig& c) {
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "ranks")
                c.ranks = {v.at(0).get<Index>(), v.at(1).get<Index>()};
            else if (key == "orders")
                c.orders = {v.at("p").get<int>(), v.at("r").get<int>(), v.at("s").get<int>()};
            else if (key == "max_outer_iters")
                c.max_outer_iters = v.get<int>();
            else if (key == "tol_rel_loss")
                c.tol_rel_loss = v.get<double>();
            else if (key == "lambda_l1")
                c.lambda_l1 = v.get<double>();
            else if (key == "admm_rhos")
                c.admm_rhos = {v.at(0).get<double>(), v.at(1).get<double>()};
            else if (key == "admm_kappa")
                c.admm_kappa = v.get<double>();
            else if (key == "admm_max_iters")
                c.admm_max_iters = v.get<int>();
            else if (key == "admm_tol")
                c.admm_tol = v.get<double>();
            else if (key == "newton") {
                c.newton.max_steps = v.value("max_steps", c.newton.max_steps);
                c.newton.step_tol = v.value("step_tol", c.newton.step_tol);
            } else if (key == "omega_box") {
                c.omega_box.rho_bar = v.value("rho_bar", c.omega_box.rho_bar);
                c.omega_box.eps = v.value("eps", c.omega_box.eps);
            } else if (key == "omega_multistart")
                c.omega_multistart = v.get<bool>();
            else if (key == "seed")
                c.seed = v.get<std::uint64_t>();
            else
                throw DataError("config: unknown key '" + key + "'");
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
}

/// Timing lives outside the report so that reports are reproducible byte for byte.
inline Json to_json(const FitReport& r) {
    return {{"format", "sarma-fit-report"},
            {"method", r.method},
            {"converged", r.converged},
            {"iters", r.iters},
            {"loss_trajectory", r.loss_trajectory},
            {"final_loss", r.final_loss()},
            {"hyperparameters",
             {{"lambda_l1", r.lambda_l1}, {"admm_rhos", {r.admm_rhos[0], r.admm_rhos[1]}}, {"admm_kappa", r.admm_kappa}}},
            {"ridge_events", r.ridge_events},
            {"omega_clamp_events", r.omega_clamp_events},
            {"warnings", r.warnings}};
}

inline Json to_json(const RatioTable& t) {
    return {{"sigma", vector_json(t.sigma)}, {"ratios", vector_json(t.ratios)}, {"selected", t.selected}};
}

inline Json to_json(const SelectionReport& s) {
    Json bic = Json::array();
    for (const auto& e : s.bic_table) {
        Json row = {{"orders", to_json(e.orders)}, {"ok", e.ok}, {"converged", e.converged}};
        if (e.ok) {
            row["loss"] = e.loss;
            row["dof"] = e.dof;
            row["bic"] = e.bic;
        } else {
            row["error"] = e.error;
        }
        bic.push_back(std::move(row));
    }
    return {{"format", "sarma-selection"},
            {"ranks", {s.ranks.first, s.ranks.second}},
            {"orders", to_json(s.orders)},
            {"tau", s.tau},
            {"c", s.c},
            {"estimator", to_string(s.estimator)},
            {"ratio_tables", {to_json(s.ratio_tables[0]), to_json(s.ratio_tables[1])}},
            {"bic_table", bic}};
}

inline Json to_json(const ForecastReport& r) {
    return {{"format", "sarma-forecast-report"},
            {"origins", r.origins.size()},
            {"first_origin", r.origins.empty() ? 0 : r.origins.front() + 1},
            {"msfe", r.msfe},
            {"mafe", r.mafe},
            {"refit", to_string(r.refit)},
            {"estimator", to_string(r.estimator)},
            {"ranks", {r.ranks.first, r.ranks.second}},
            {"orders", to_json(r.orders)},
            {"nonconverged_fits", r.nonconverged_fits}};
}

inline Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out)
        throw DataError("write failed for '" + path + "'");
}

} // namespace sarma
