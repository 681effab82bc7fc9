#pragma once

#include "sarma/basis.hpp"
#include "sarma/features.hpp"
#include "sarma/tensor.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace sarma {

struct NewtonOptions {
    int max_steps = 50;
    double step_tol = 1e-10;
};

struct OmegaSearchOptions {
    NewtonOptions newton;
    OmegaBox box;
    /// Also start from a coarse grid over the admissible region.
    bool multistart = true;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
/// Decay parameters closer than this to another block's are treated as infeasible.
inline constexpr double kSeparation = 1e-6;

/// sum_t ||r_t - w_t(lambda)||^2 where w_t = lambda (gy_{t-p-1} + w_{t-1}),
/// i.e. the contribution of one geometric column with its slice applied.
class GeometricObjective {
public:
    GeometricObjective(Matrix r, Matrix gy, int p) : r_(std::move(r)), gy_(std::move(gy)), p_(p) {}

    struct Eval {
        double f = kInf, g = 0, h = 0;
    };

    Eval eval(double lam, int order) const {
        const auto w = geometric_series<double>(gy_, p_, lam, gy_.cols(), order);
        const Matrix e = r_ - w.value;
        Eval out;
        out.f = e.squaredNorm();
        if (order >= 1)
            out.g = -2 * (e.array() * w.d1.array()).sum();
        if (order >= 2)
            out.h = 2 * (w.d1.squaredNorm() - (e.array() * w.d2.array()).sum());
        return out;
    }

    Matrix contribution(double lam) const { return geometric_series<double>(gy_, p_, lam, gy_.cols(), 0).value; }

private:
    Matrix r_, gy_;
    int p_;
};

/// Same for a damped-sinusoid pair: w_t = Re(h_t(mu)), h_t = mu (hy_{t-p-1} + h_{t-1}),
/// hy = (G_cos - i G_sin) y, mu = gamma e^{i theta}.
class SinusoidObjective {
public:
    SinusoidObjective(Matrix r, CMatrix hy, int p) : r_(std::move(r)), hy_(std::move(hy)), p_(p) {}

    struct Eval {
        double f = kInf;
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    };

    Eval eval(double gamma, double theta, int order) const {
        using C = std::complex<double>;
        const C e1 = std::polar(1.0, theta);
        const C mu = gamma * e1;
        const auto w = geometric_series<C>(hy_, p_, mu, hy_.cols(), order);
        const Matrix e = r_ - w.value.real();
        Eval out;
        out.f = e.squaredNorm();
        if (order < 1)
            return out;
        const C i(0, 1);
        const Matrix dg = (w.d1 * e1).real();
        const Matrix dt = (w.d1 * (i * mu)).real();
        out.g << -2 * (e.array() * dg.array()).sum(), -2 * (e.array() * dt.array()).sum();
        if (order < 2)
            return out;
        const Matrix dgg = (w.d2 * (e1 * e1)).real();
        const Matrix dgt = (w.d2 * (e1 * i * mu) + w.d1 * (i * e1)).real();
        const Matrix dtt = (w.d2 * (-mu * mu) - w.d1 * mu).real();
        out.h(0, 0) = 2 * (dg.squaredNorm() - (e.array() * dgg.array()).sum());
        out.h(1, 1) = 2 * (dt.squaredNorm() - (e.array() * dtt.array()).sum());
        out.h(0, 1) = out.h(1, 0) = 2 * ((dg.array() * dt.array()).sum() - (e.array() * dgt.array()).sum());
        return out;
    }

    Matrix contribution(double gamma, double theta) const {
        return geometric_series<std::complex<double>>(hy_, p_, std::polar(gamma, theta), hy_.cols(), 0).value.real();
    }

private:
    Matrix r_;
    CMatrix hy_;
    int p_;
};

/// Golden-section search for a minimum of f on [a, b].
template <typename F>
std::pair<double, double> golden_section(F&& f, double a, double b, int iters = 60) {
    const double phi = (std::sqrt(5.0) - 1) / 2;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int k = 0; k < iters && b - a > 1e-12; ++k) {
        if (f1 <= f2) {
            b = x2, x2 = x1, f2 = f1;
            x1 = b - phi * (b - a), f1 = f(x1);
        } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + phi * (b - a), f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

/// Safeguarded Newton on [lo, hi] for a 1-D objective with analytic
/// derivatives. Steps are accepted only when they decrease f; a non-convex
/// point falls back to golden-section along the descent direction.
template <typename Eval>
std::pair<double, double> newton_1d(Eval&& eval, double x, double lo, double hi, const NewtonOptions& opt) {
    auto f_only = [&](double v) { return eval(v, 0).f; };
    auto cur = eval(x, 2);
    for (int step = 0; step < opt.max_steps; ++step) {
        if (!std::isfinite(cur.f))
            break;
        double cand = x;
        if (cur.h > 0) {
            double s = -cur.g / cur.h;
            // Predicted decrease at round-off level: x is a minimizer.
            if (0.5 * cur.g * cur.g / cur.h <= 1e-15 * std::abs(cur.f))
                break;
            for (int bt = 0; bt < 40; ++bt) {
                const double y = std::clamp(x + s, lo, hi);
                const double fy = f_only(y);
                if (fy < cur.f) {
                    cand = y;
                    break;
                }
                s *= 0.5;
                if (std::abs(s) < opt.step_tol)
                    break;
            }
        } else if (cur.g != 0) {
            const double edge = cur.g > 0 ? lo : hi;
            if (edge != x) {
                const auto [y, fy] = golden_section(f_only, std::min(x, edge), std::max(x, edge));
                if (fy < cur.f)
                    cand = y;
            }
        }
        if (cand == x)
            break;
        const double moved = std::abs(cand - x);
        x = cand;
        cur = eval(x, 2);
        if (moved < opt.step_tol)
            break;
    }
    return {x, cur.f};
}

/// Newton in (gamma, theta) over a box; when the Hessian is not positive
/// definite (or the Newton step fails) a 3 x 3 stencil around the point is
/// searched and its spacing halved on failure.
template <typename Eval>
std::pair<Eigen::Vector2d, double> newton_2d(Eval&& eval, Eigen::Vector2d x, const Eigen::Vector2d& lo,
                                             const Eigen::Vector2d& hi, const NewtonOptions& opt) {
    auto clampv = [&](Eigen::Vector2d v) { return v.cwiseMax(lo).cwiseMin(hi).eval(); };
    auto f_only = [&](const Eigen::Vector2d& v) { return eval(v[0], v[1], 0).f; };
    auto cur = eval(x[0], x[1], 2);
    Eigen::Vector2d spacing = 0.05 * (hi - lo);
    for (int step = 0; step < opt.max_steps; ++step) {
        if (!std::isfinite(cur.f))
            break;
        Eigen::Vector2d cand = x;
        double f_cand = cur.f;
        Eigen::LLT<Eigen::Matrix2d> llt(cur.h);
        const bool convex = llt.info() == Eigen::Success && cur.h.determinant() > 0;
        if (convex) {
            Eigen::Vector2d s = -llt.solve(cur.g);
            if (-0.5 * cur.g.dot(s) <= 1e-15 * std::abs(cur.f))
                break;
            for (int bt = 0; bt < 40 && s.norm() >= opt.step_tol; ++bt, s *= 0.5) {
                const Eigen::Vector2d y = clampv(x + s);
                const double fy = f_only(y);
                if (fy < cur.f) {
                    cand = y, f_cand = fy;
                    break;
                }
            }
        }
        if (cand == x && !convex) {
            const double floor = std::max(opt.step_tol, 1e-6 * (hi - lo).minCoeff());
            while (spacing.maxCoeff() >= floor && cand == x) {
                for (int a = -1; a <= 1; ++a)
                    for (int b = -1; b <= 1; ++b) {
                        if (a == 0 && b == 0)
                            continue;
                        const Eigen::Vector2d y = clampv(x + Eigen::Vector2d(a * spacing[0], b * spacing[1]));
                        const double fy = f_only(y);
                        if (fy < f_cand)
                            cand = y, f_cand = fy;
                    }
                if (cand == x)
                    spacing *= 0.5;
            }
        }
        if (cand == x)
            break;
        const double moved = (cand - x).norm();
        x = cand;
        cur = eval(x[0], x[1], 2);
        if (moved < opt.step_tol)
            break;
    }
    return {x, cur.f};
}

inline bool too_close(double v, const std::vector<double>& others) {
    for (double o : others)
        if (std::abs(v - o) < kSeparation)
            return true;
    return false;
}

} // namespace detail

/// Minimizes over one lambda in (-rho_bar, -eps] U [eps, rho_bar), holding
/// everything else fixed. Both sign regions are searched and the best point
/// is kept; the current value is returned unless the loss strictly drops.
inline std::pair<double, double> minimize_lambda(const detail::GeometricObjective& obj, double current,
                                                 const std::vector<double>& others,
                                                 const OmegaSearchOptions& opt) {
    const double eps = opt.box.eps, top = opt.box.max_rate();
    auto eval = [&](double v, int order) {
        if (detail::too_close(v, others))
            return detail::GeometricObjective::Eval{};
        return obj.eval(v, order);
    };
    const double f0 = eval(current, 0).f;
    double best = current, f_best = f0;
    for (int sign : {1, -1}) {
        const double lo = sign > 0 ? eps : -top, hi = sign > 0 ? top : -eps;
        std::vector<double> starts{std::clamp(sign * std::abs(current), lo, hi)};
        if (opt.multistart) {
            double g_best = detail::kInf, g_arg = starts.front();
            for (double a = 0.05; a < top; a += 0.1) {
                const double v = sign * a;
                const double fv = eval(v, 0).f;
                if (fv < g_best)
                    g_best = fv, g_arg = v;
            }
            starts.push_back(g_arg);
        }
        for (double s : starts) {
            const auto [x, fx] = detail::newton_1d(eval, s, lo, hi, opt.newton);
            if (fx < f_best)
                best = x, f_best = fx;
        }
    }
    return {best, f_best};
}

/// Minimizes over one (gamma, theta) pair in the box, holding the rest fixed.
inline std::pair<ComplexPair, double> minimize_pair(const detail::SinusoidObjective& obj, ComplexPair current,
                                                    const std::vector<ComplexPair>& others,
                                                    const OmegaSearchOptions& opt) {
    const double eps = opt.box.eps;
    const Eigen::Vector2d lo(eps, eps), hi(opt.box.max_rate(), std::numbers::pi - eps);
    auto eval = [&](double g, double t, int order) {
        for (const auto& o : others)
            if (std::abs(o.gamma - g) < detail::kSeparation && std::abs(o.theta - t) < detail::kSeparation)
                return detail::SinusoidObjective::Eval{};
        return obj.eval(g, t, order);
    };
    const double f0 = eval(current.gamma, current.theta, 0).f;
    Eigen::Vector2d best(current.gamma, current.theta);
    double f_best = f0;
    std::vector<Eigen::Vector2d> starts{
        Eigen::Vector2d(current.gamma, current.theta).cwiseMax(lo).cwiseMin(hi)};
    if (opt.multistart) {
        double g_best = detail::kInf;
        Eigen::Vector2d g_arg = starts.front();
        for (double g = 0.1; g < hi[0]; g += 0.2)
            for (int k = 1; k <= 7; ++k) {
                const double t = k * std::numbers::pi / 8;
                const double fv = eval(g, t, 0).f;
                if (fv < g_best)
                    g_best = fv, g_arg = Eigen::Vector2d(g, t);
            }
        starts.push_back(g_arg);
    }
    for (const auto& s : starts) {
        const auto [x, fx] = detail::newton_2d(eval, s, lo, hi, opt.newton);
        if (fx < f_best)
            best = x, f_best = fx;
    }
    return {{best[0], best[1]}, f_best};
}

/// One Gauss-Seidel sweep over the lambda and (gamma, theta) blocks with the
/// slices g held fixed. `series` is N x T. Returns the updated omega and
/// writes the resulting loss; the loss never increases.
inline OmegaParams update_omega(const Matrix& series, const OmegaParams& omega, const Tensor3& g,
                                const OmegaSearchOptions& opt, double* loss_out = nullptr) {
    OmegaParams om = omega;
    const int p = om.p, r = om.r(), s = om.s();
    const auto z = feature_series(series, om);
    Matrix pred = predict_series(g, z);
    for (int k = 0; k < r; ++k) {
        const auto gk = g.slice(p + k);
        if (gk.norm() == 0)
            continue;
        const Matrix own = gk * z[static_cast<std::size_t>(p + k)];
        detail::GeometricObjective obj(series - pred + own, gk * series, p);
        std::vector<double> others;
        for (int j = 0; j < r; ++j)
            if (j != k)
                others.push_back(om.lambdas[static_cast<std::size_t>(j)]);
        const auto [lam, f] = minimize_lambda(obj, om.lambdas[static_cast<std::size_t>(k)], others, opt);
        (void)f;
        if (lam != om.lambdas[static_cast<std::size_t>(k)]) {
            om.lambdas[static_cast<std::size_t>(k)] = lam;
            pred += obj.contribution(lam) - own;
        }
    }
    for (int h = 0; h < s; ++h) {
        const Index kc = p + r + 2 * h;
        const auto gc = g.slice(kc), gs = g.slice(kc + 1);
        if (gc.norm() == 0 && gs.norm() == 0)
            continue;
        const Matrix own = gc * z[static_cast<std::size_t>(kc)] + gs * z[static_cast<std::size_t>(kc + 1)];
        const CMatrix hy = gc * series.cast<std::complex<double>>() -
                           std::complex<double>(0, 1) * (gs * series).cast<std::complex<double>>();
        detail::SinusoidObjective obj(series - pred + own, hy, p);
        std::vector<ComplexPair> others;
        for (int j = 0; j < s; ++j)
            if (j != h)
                others.push_back(om.pairs[static_cast<std::size_t>(j)]);
        const auto [pr, f] = minimize_pair(obj, om.pairs[static_cast<std::size_t>(h)], others, opt);
        (void)f;
        if (!(pr == om.pairs[static_cast<std::size_t>(h)])) {
            om.pairs[static_cast<std::size_t>(h)] = pr;
            pred += obj.contribution(pr.gamma, pr.theta) - own;
        }
    }
    if (loss_out)
        *loss_out = (series - pred).squaredNorm();
    return om;
}

} // namespace sarma
