#include "qtunnel/wkb.hpp"

#include "numerics.hpp"
#include "qtunnel/error.hpp"
#include "qtunnel/io.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>

namespace qtunnel {

namespace {

void require_positive_gamma(const ModelSpec& model) {
    if (!(model.gamma() > 0.0)) throw Error(ErrorCode::Domain, "WKB quantities require gamma > 0");
}

double spike_term(const ModelSpec& model, double m) {
    const auto& s = model.spike();
    if (!s) return 0.0;
    return -s->height() * shape_value(s->shape, (m - s->m_b) / s->width());
}

// (g(m) - g(a)) / (m - a) without cancellation in the polynomial part.
double g_divided(const ModelSpec& model, double m, double a) {
    const auto& c = model.g_poly();
    double acc = 0.0, h = 1.0, apow = 1.0;
    for (std::size_t k = 1; k < c.size(); ++k) {
        if (k > 1) {
            apow *= a;
            h = m * h + apow;
        }
        acc += c[k] * h;
    }
    if (model.spike()) {
        if (m == a) {
            const auto& s = *model.spike();
            acc -= s.height() / s.width() * shape_slope(s.shape, (m - s.m_b) / s.width());
        } else {
            acc += (spike_term(model, m) - spike_term(model, a)) / (m - a);
        }
    }
    return acc;
}

// (U_l(m) - U_l(r)) / (m - r).
double u_divided(const ModelSpec& model, double ell, double m, double r) {
    double qm = std::sqrt(std::max(0.0, ell * ell - m * m));
    double qr = std::sqrt(std::max(0.0, ell * ell - r * r));
    double s = qm + qr;
    double sq = s > 0.0 ? model.gamma() * (m + r) / s : 0.0;
    return sq - g_divided(model, m, r);
}

// An energy level inside a sector landscape stored as offsets from the three
// stationary values, so that levels exponentially close to a minimum or to the
// top keep their relative precision.
struct Level {
    double e;
    double de0;    // e - e_meta
    double dtop;   // e_top - e
    double ddeep;  // e - e_deep
};

Level level_from_energy(const SectorLandscape& L, double e) {
    return {e, e - L.e_meta, L.e_top - e, e - L.e_deep};
}

// t in [0, 1] is the fraction of the barrier height above e_meta; t = σ(y).
Level level_from_logit(const SectorLandscape& L, double y) {
    double h = L.barrier();
    double t0 = 1.0 / (1.0 + std::exp(-y));
    double t1 = 1.0 / (1.0 + std::exp(y));
    Level lv;
    lv.de0 = h * t0;
    lv.dtop = h * t1;
    lv.e = lv.de0 <= lv.dtop ? L.e_meta + lv.de0 : L.e_top - lv.dtop;
    lv.ddeep = lv.de0 + (L.e_meta - L.e_deep);
    return lv;
}

// U_l(m) - e evaluated relative to the nearest stationary point.
struct Excess {
    const ModelSpec* model;
    double ell;
    double ref;
    double offset;  // U(ref) - e

    double operator()(double m) const { return (m - ref) * u_divided(*model, ell, m, ref) + offset; }
};

class Barrier {
public:
    Barrier(const ModelSpec& model, const SectorLandscape& L, const Level& lv) : model_(model), L_(L), lv_(lv) {
        left_ = lv.de0 <= lv.dtop ? Excess{&model, L.ell, L.m_meta, -lv.de0} : Excess{&model, L.ell, L.m_top, lv.dtop};
        right_ = lv.ddeep <= lv.dtop ? Excess{&model, L.ell, L.m_deep, -lv.ddeep} : Excess{&model, L.ell, L.m_top, lv.dtop};
        if (lv.dtop < 0.0 || lv.de0 < 0.0) throw Error(ErrorCode::NoBarrier, "energy outside the metastable well below the barrier top");
        if (lv.dtop == 0.0) {
            a0_ = a1_ = L.m_top;
        } else {
            a0_ = lv.de0 == 0.0 ? L.m_meta : detail::polish_root(left_, L.m_meta, L.m_top);
            a1_ = lv.ddeep == 0.0 ? L.m_deep : detail::polish_root(right_, L.m_top, L.m_deep);
        }
        dir_ = L.m_top > L.m_meta ? 1.0 : -1.0;
    }

    double a0() const { return a0_; }
    double a1() const { return a1_; }
    const Level& level() const { return lv_; }

    // ∫_{a0}^{a1} h(u, D, q) dm with m = a + u^2 near each turning point a,
    // D = (U - e)/u^2 >= 0 and q = sqrt(l^2 - m^2); h already carries the 2u Jacobian.
    template <class H>
    double integrate(H&& h, double tol = 1e-13) const {
        auto [l, r] = integrate_halves(h, tol);
        return l + r;
    }

    template <class H>
    std::pair<double, double> integrate_halves(H&& h, double tol = 1e-13) const {
        double mid = 0.5 * (a0_ + a1_);
        double w0 = std::sqrt(std::abs(mid - a0_));
        double w1 = std::sqrt(std::abs(a1_ - mid));
        if (w0 == 0.0 && w1 == 0.0) return {0.0, 0.0};
        double ell = L_.ell;
        auto eval = [&](double a, double s, double u) {
            double m = a + s * u * u;
            double q = std::sqrt(std::max(0.0, ell * ell - m * m));
            double d = std::max(0.0, s * u_divided(model_, ell, m, a));
            return h(u, d, q);
        };
        double left = detail::integrate_endpoint([&](double u) { return eval(a0_, dir_, u); }, 0.0, w0, tol);
        double right = detail::integrate_endpoint([&](double u) { return eval(a1_, -dir_, u); }, 0.0, w1, tol);
        return {left, right};
    }

    double action() const {
        double g = model_.gamma();
        return integrate([g](double u, double d, double q) {
            double w = d * u * u;
            return 2.0 * u * std::asinh(std::sqrt(w * (w + 2.0 * g * q)) / (g * q));
        });
    }

    // 2u / v = 2 / sqrt(D (W + 2Γq)).
    double period() const {
        auto [l, r] = period_halves();
        return l + r;
    }

    // ∫ dm / v from a0 and from a1 up to the midpoint (a0 + a1)/2.
    std::pair<double, double> period_halves() const {
        double g = model_.gamma();
        auto h = [g](double u, double d, double q) {
            double den = d * (d * u * u + 2.0 * g * q);
            return den > 0.0 ? 2.0 / std::sqrt(den) : 0.0;
        };
        return integrate_halves(h);
    }

    // l [∫ (f - f(a0)) dm / v + f(a0) T], f = |e + g| / (l^2 - m^2) = (Γq + W)/q^2; exact for T = s0.
    double script_i(double t) const {
        double g = model_.gamma();
        double ell = L_.ell;
        double qa = std::sqrt(std::max(0.0, ell * ell - a0_ * a0_));
        double fa = g / qa;
        double body = integrate([g, fa](double u, double d, double q) {
            double w = d * u * u;
            double den = d * (w + 2.0 * g * q);
            if (!(den > 0.0)) return 0.0;
            double f = (g * q + w) / (q * q);
            return 2.0 * (f - fa) / std::sqrt(den);
        });
        return ell * (body + fa * t);
    }

private:
    const ModelSpec& model_;
    SectorLandscape L_;
    Level lv_;
    Excess left_{}, right_{};
    double a0_ = 0.0, a1_ = 0.0, dir_ = 1.0;
};

Barrier barrier_at(double e, double ell, const ModelSpec& model) {
    require_positive_gamma(model);
    auto L = sector_landscape(ell, model);
    return Barrier(model, L, level_from_energy(L, e));
}

}  // namespace

SectorLandscape sector_landscape(double ell, const ModelSpec& model) {
    auto ext = potential_extrema(ell, model);
    std::vector<std::size_t> minima;
    for (std::size_t k = 0; k < ext.size(); ++k)
        if (ext[k].kind == ExtremumKind::Minimum) minima.push_back(k);
    if (minima.size() < 2) throw Error(ErrorCode::NoBarrier, "effective potential is monostable at ell = " + format_double(ell));

    double hi = -INFINITY, lo = INFINITY;
    for (auto k : minima) {
        hi = std::max(hi, ext[k].value);
        lo = std::min(lo, ext[k].value);
    }
    double tie = 1e-14 * std::max(1.0, std::abs(hi));
    std::size_t meta = ext.size(), deep = ext.size();
    for (auto k : minima)
        if (meta == ext.size() && ext[k].value >= hi - tie) meta = k;
    for (auto k : minima)
        if (k != meta && (deep == ext.size() || ext[k].value < ext[deep].value)) deep = k;

    std::size_t top = ext.size();
    for (std::size_t k = std::min(meta, deep) + 1; k < std::max(meta, deep); ++k)
        if (ext[k].kind == ExtremumKind::Maximum && (top == ext.size() || ext[k].value > ext[top].value)) top = k;
    if (top == ext.size()) throw Error(ErrorCode::NoBarrier, "no barrier between the wells");

    SectorLandscape L;
    L.ell = ell;
    L.m_meta = ext[meta].m;
    L.m_top = ext[top].m;
    L.m_deep = ext[deep].m;
    L.e_meta = ext[meta].value;
    L.e_top = ext[top].value;
    L.e_deep = ext[deep].value;
    return L;
}

double momentum(double m, double e, double ell, const ModelSpec& model) {
    require_positive_gamma(model);
    if (std::abs(m) > ell) throw Error(ErrorCode::Domain, "momentum requires |m| <= ell");
    double q = std::sqrt(ell * ell - m * m);
    double w = effective_potential(m, ell, model) - e;
    double scale = 1e-12 * std::max(1.0, std::abs(e));
    if (w < -scale) throw Error(ErrorCode::Domain, "momentum evaluated outside the forbidden region");
    w = std::max(0.0, w);
    if (q == 0.0) throw Error(ErrorCode::Domain, "momentum is unbounded at |m| = ell");
    return std::asinh(std::sqrt(w * (w + 2.0 * model.gamma() * q)) / (model.gamma() * q));
}

double velocity(double m, double e, double ell, const ModelSpec& model) {
    require_positive_gamma(model);
    if (std::abs(m) > ell) throw Error(ErrorCode::Domain, "velocity requires |m| <= ell");
    double q = std::sqrt(ell * ell - m * m);
    double w = effective_potential(m, ell, model) - e;
    double scale = 1e-12 * std::max(1.0, std::abs(e));
    if (w < -scale) throw Error(ErrorCode::Domain, "velocity evaluated outside the forbidden region");
    w = std::max(0.0, w);
    return std::sqrt(w * (w + 2.0 * model.gamma() * q));
}

TurningPoints turning_points(double e, double ell, const ModelSpec& model) {
    auto b = barrier_at(e, ell, model);
    return {b.a0(), b.a1()};
}

double action(double e, double ell, const ModelSpec& model) { return barrier_at(e, ell, model).action(); }

double period(double e, double ell, const ModelSpec& model) {
    auto b = barrier_at(e, ell, model);
    if (b.a0() == b.a1()) return top_period(ell, model);
    return b.period();
}

double integral_I(double e, double ell, const ModelSpec& model) {
    auto b = barrier_at(e, ell, model);
    if (b.a0() == b.a1()) {
        double q = std::sqrt(ell * ell - b.a0() * b.a0());
        return ell * model.gamma() / q * top_period(ell, model);
    }
    return b.script_i(b.period());
}

namespace {

double top_period(const SectorLandscape& L, const ModelSpec& model) {
    double ell = L.ell;
    double m = L.m_top;
    double q2 = ell * ell - m * m;
    double q = std::sqrt(q2);
    double u2 = model.gamma() * ell * ell / (q2 * q) - model.d2g(m);
    double kappa = -u2;
    if (!(kappa > 0.0)) throw Error(ErrorCode::Degenerate, "barrier top has no negative curvature");
    return std::numbers::pi / std::sqrt(kappa * model.gamma() * q);
}

}  // namespace

double top_period(double ell, const ModelSpec& model) {
    require_positive_gamma(model);
    return top_period(sector_landscape(ell, model), model);
}

std::vector<TrajectoryPoint> instanton_trajectory(double e, double ell, const ModelSpec& model, int n_grid) {
    namespace ode = boost::numeric::odeint;
    if (n_grid < 2 || n_grid % 2 != 0) throw Error(ErrorCode::Domain, "n_grid must be even and >= 2");
    auto b = barrier_at(e, ell, model);
    if (b.a0() == b.a1()) throw Error(ErrorCode::Degenerate, "energy at the barrier top: the orbit is a point");
    auto [left, right] = b.period_halves();
    const double s0 = left + right;
    const double gamma = model.gamma();

    // (m_x, u = i m_y, m_z); u = ν and dm_z/dτ = 2Γu = 2v on the first half.
    using State = std::array<double, 3>;
    auto rhs = [&](const State& x, State& dx, double) {
        double lam = model.dg(x[2]);
        dx[0] = -2.0 * lam * x[1];
        dx[1] = 2.0 * gamma * x[2] - 2.0 * lam * x[0];
        dx[2] = 2.0 * gamma * x[1];
    };
    auto at_rest = [&](double a) { return State{std::sqrt(std::max(0.0, ell * ell - a * a)), 0.0, a}; };

    // The orbit lingers near slow turning points, where integration errors grow
    // exponentially; integrate forward from a0 and backward from a1 and join the
    // two pieces where m_z crosses the midpoint, at τ* = left/2.
    const int half = n_grid / 2;
    const double join = 0.5 * left;
    std::vector<TrajectoryPoint> out(n_grid + 1);
    auto tau = [&](int k) { return k == half ? 0.5 * s0 : s0 * k / n_grid; };
    int k_join = 0;
    while (k_join + 1 <= half && tau(k_join + 1) <= join) ++k_join;

    auto stepper = ode::make_controlled(1e-14, 1e-13, ode::runge_kutta_fehlberg78<State>());
    const double dt = s0 / n_grid / 4.0;

    std::vector<double> fwd_times;
    for (int k = 0; k <= k_join; ++k) fwd_times.push_back(tau(k));
    fwd_times.push_back(join);
    State xa = at_rest(b.a0());
    int idx = 0;
    ode::integrate_times(stepper, rhs, xa, fwd_times.begin(), fwd_times.end(), dt, [&](const State& s, double t) {
        if (idx <= k_join) out[idx] = {t, s[2], s[0], s[1]};
        ++idx;
    });

    std::vector<double> bwd_times;
    for (int k = half; k > k_join; --k) bwd_times.push_back(tau(k));
    bwd_times.push_back(join);
    State xb = at_rest(b.a1());
    idx = half;
    ode::integrate_times(stepper, rhs, xb, bwd_times.begin(), bwd_times.end(), -dt, [&](const State& s, double t) {
        if (idx > k_join) out[idx] = {t, s[2], s[0], s[1]};
        --idx;
    });

    // both pieces must meet at τ*; convert the m_z gap to a time offset
    double gap = std::abs(xa[2] - xb[2]) / (2.0 * gamma * std::max(std::abs(xa[1]), std::abs(xb[1])));
    if (!(gap <= 1e-6 * 0.5 * s0))
        throw Error(ErrorCode::Tolerance, "half-period mismatch " + format_double(gap) + " exceeds 1e-6 relative");

    for (int k = half + 1; k <= n_grid; ++k) {
        const auto& mirror = out[n_grid - k];
        out[k] = {s0 * k / n_grid, mirror.m_z, mirror.m_x, -mirror.nu};
    }
    out[n_grid].tau = s0;
    return out;
}

double integral_I(const std::vector<TrajectoryPoint>& trajectory, double e, double ell, const ModelSpec& model) {
    if (trajectory.size() < 2) throw Error(ErrorCode::Domain, "trajectory needs at least two samples");
    auto f = [&](const TrajectoryPoint& p) { return ell * std::abs(e + model.g(p.m_z)) / (ell * ell - p.m_z * p.m_z); };
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < trajectory.size(); ++k)
        acc += 0.5 * (f(trajectory[k]) + f(trajectory[k + 1])) * (trajectory[k + 1].tau - trajectory[k].tau);
    return acc;
}

std::string_view to_string(SaddleRegime regime) {
    switch (regime) {
        case SaddleRegime::Instanton: return "instanton";
        case SaddleRegime::StaticFallback: return "static";
        case SaddleRegime::ZeroTemperatureLimit: return "zero_temperature";
    }
    return "instanton";
}

namespace {

constexpr double kLogitLow = -32.0;  // e - e_meta ~ 1e-14 of the barrier height
constexpr double kLogitHigh = 28.0;  // e_top - e ~ 7e-13 of the barrier height

struct SectorSolution {
    SectorLandscape landscape;
    Level level;
    SaddleRegime regime;
    double a0, a1;
    double action, period, script_i;
};

// Energy of the β-periodic orbit in sector l, or the boundary value when none exists.
SectorSolution solve_sector(const ModelSpec& model, double ell, double beta) {
    auto L = sector_landscape(ell, model);
    auto period_at = [&](double y) { return Barrier(model, L, level_from_logit(L, y)).period(); };

    SectorSolution out{L, {}, SaddleRegime::Instanton, 0, 0, 0, 0, 0};
    double s_top = top_period(L, model);
    if (beta <= s_top) {
        out.regime = SaddleRegime::StaticFallback;
        out.level = level_from_energy(L, L.e_top);
        out.level.dtop = 0.0;
        out.a0 = out.a1 = L.m_top;
        out.period = beta;
        double q = std::sqrt(ell * ell - L.m_top * L.m_top);
        out.script_i = ell * beta * model.gamma() / q;
        return out;
    }
    double f_lo = period_at(kLogitLow) - beta;
    if (f_lo <= 0.0) {
        out.regime = SaddleRegime::ZeroTemperatureLimit;
        out.level = level_from_energy(L, L.e_meta);
        out.level.de0 = 0.0;
    } else {
        double f_hi = period_at(kLogitHigh) - beta;
        double y = kLogitHigh;
        if (f_hi < 0.0) {
            std::uintmax_t iters = 200;
            auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)); };
            auto r = boost::math::tools::toms748_solve([&](double yy) { return period_at(yy) - beta; }, kLogitLow, kLogitHigh,
                                                       f_lo, f_hi, tol, iters);
            y = 0.5 * (r.first + r.second);
        }
        out.level = level_from_logit(L, y);
    }
    Barrier b(model, L, out.level);
    out.a0 = b.a0();
    out.a1 = b.a1();
    out.action = b.action();
    out.period = out.regime == SaddleRegime::ZeroTemperatureLimit ? INFINITY : b.period();
    out.script_i = b.script_i(out.regime == SaddleRegime::ZeroTemperatureLimit ? beta : out.period);
    return out;
}

std::vector<TrajectoryPoint> constant_trajectory(double m, double ell, double beta, int n_grid) {
    std::vector<TrajectoryPoint> out(n_grid + 1);
    double mx = std::sqrt(ell * ell - m * m);
    for (int k = 0; k <= n_grid; ++k) out[k] = {beta * k / n_grid, m, mx, 0.0};
    return out;
}

}  // namespace

double metastable_beta_free_energy(const ModelSpec& model, double beta) {
    auto objective = [&](double ell) { return beta * sector_landscape(ell, model).e_meta - entropic_factor(ell); };
    auto bistable = [&](double ell) {
        try {
            sector_landscape(ell, model);
            return true;
        } catch (const Error&) {
            return false;
        }
    };
    const double hi = 1.0 - 1e-15;
    if (!bistable(hi)) throw Error(ErrorCode::NoBarrier, "no metastable well in any sector");
    // lowest bistable l by bisection, assuming a single bistable interval reaching l = 1
    double lo = 0.0, up = hi;
    if (bistable(1e-3)) {
        up = 1e-3;
    } else {
        lo = 1e-3;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + up);
            (bistable(mid) ? up : lo) = mid;
        }
    }
    auto r = boost::math::tools::brent_find_minima(objective, up, hi, 52);
    return r.second;
}

std::vector<SectorStationary> ell_optimized_extrema(const ModelSpec& model, double beta) {
    require_positive_gamma(model);
    const double gamma = model.gamma();
    auto branch_m = [&](const SectorLandscape& L, int b) { return b == 0 ? L.m_meta : b == 1 ? L.m_top : L.m_deep; };
    std::vector<SectorStationary> out;
    for (int b = 0; b < 3; ++b) {
        auto phi = [&](double z, bool& ok) {
            double ell = std::tanh(z);
            try {
                auto L = sector_landscape(ell, model);
                double m = branch_m(L, b);
                ok = true;
                return z - beta * gamma * ell / std::sqrt(ell * ell - m * m);
            } catch (const Error&) {
                ok = false;
                return 0.0;
            }
        };
        const int n = 400;
        const double z_lo = 1e-3, z_hi = 17.0;
        double z_prev = 0.0, f_prev = 0.0;
        bool have_prev = false;
        for (int i = 0; i <= n; ++i) {
            double z = z_lo + (z_hi - z_lo) * i / n;
            bool ok = false;
            double f = phi(z, ok);
            if (!ok) {
                have_prev = false;
                continue;
            }
            if (have_prev && (f_prev < 0.0) != (f < 0.0)) {
                auto g = [&](double zz) {
                    bool okk = false;
                    double v = phi(zz, okk);
                    return v;
                };
                double zr = detail::polish_root(g, z_prev, z, f_prev, f);
                double ell = std::tanh(zr);
                auto L = sector_landscape(ell, model);
                SectorStationary st;
                st.m = branch_m(L, b);
                st.ell = ell;
                st.beta_value = beta * effective_potential(st.m, ell, model) - entropic_factor(ell);
                st.kind = b == 1 ? ExtremumKind::Maximum : ExtremumKind::Minimum;
                out.push_back(st);
            }
            z_prev = z;
            f_prev = f;
            have_prev = true;
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.m < b.m; });
    return out;
}

InstantonSolution solve_instanton(const ModelSpec& model, double beta, const InstantonOptions& options) {
    require_positive_gamma(model);
    if (!(beta > 0.0)) throw Error(ErrorCode::Domain, "beta must be positive");
    auto ext = static_extrema(model, beta);

    double ell = ext.ell0;
    SectorSolution sec{};
    int it = 0;
    bool converged = false;
    for (; it < options.max_iter; ++it) {
        sec = solve_sector(model, ell, beta);
        double target = std::tanh(sec.script_i);
        double res = target - ell;
        if (std::abs(res) < options.ell_tol) {
            converged = true;
            break;
        }
        ell = (1.0 - options.damping) * ell + options.damping * target;
    }
    if (!converged) throw Error(ErrorCode::NonConverged, "outer ell iteration did not converge in " + std::to_string(options.max_iter) + " steps");
    // Near l = 1 quantities like 1/sqrt(1 - l^2) amplify the residual by ~1e7,
    // so finish with undamped steps while they still reduce it.
    if (sec.regime == SaddleRegime::Instanton) {
        double res = std::abs(std::tanh(sec.script_i) - ell);
        for (int k = 0; k < 4 && res > 0.0; ++k) {
            double next = std::tanh(sec.script_i);
            auto trial = solve_sector(model, next, beta);
            double r = std::abs(std::tanh(trial.script_i) - next);
            if (!(r < res) || trial.regime != sec.regime) break;
            ell = next;
            sec = trial;
            res = r;
        }
    }
    if (sec.regime == SaddleRegime::StaticFallback && !options.allow_static_fallback)
        throw Error(ErrorCode::NoPeriodicInstanton, "beta is below the minimal instanton period: no periodic orbit");

    InstantonSolution sol;
    sol.beta = beta;
    sol.ell = ell;
    sol.energy = sec.level.e;
    sol.a0 = sec.a0;
    sol.a1 = sec.a1;
    sol.action = sec.action;
    sol.period = sec.period;
    sol.script_i = sec.script_i;
    sol.regime = sec.regime;
    sol.iterations = it;
    sol.period_residual = sec.regime == SaddleRegime::ZeroTemperatureLimit ? INFINITY : sec.period - beta;
    sol.ell_residual = ell - std::tanh(sec.script_i);
    double beta_f = beta * sol.energy + sol.action - entropic_factor(ell);
    double beta_f0 = metastable_beta_free_energy(model, beta);
    sol.frak_f = beta_f / beta;
    sol.frak_f0 = beta_f0 / beta;
    sol.alpha = beta_f - beta_f0;
    if (options.with_trajectory) {
        if (sec.regime == SaddleRegime::Instanton)
            sol.trajectory = instanton_trajectory(sol.energy, ell, model, options.n_grid);
        else if (sec.regime == SaddleRegime::StaticFallback)
            sol.trajectory = constant_trajectory(sol.a0, ell, beta, options.n_grid);
    }
    return sol;
}

AlphaResult wkb_alpha(const ModelSpec& model, double beta, const InstantonOptions& options) {
    AlphaResult out;
    out.solution = solve_instanton(model, beta, options);
    const auto& sol = out.solution;
    out.alpha = sol.alpha;
    out.beta_frak_f = beta * sol.frak_f;
    out.beta_frak_f0 = beta * sol.frak_f0;
    auto ext = static_extrema(model, beta);
    out.beta_f_m0 = beta * ext.f0;
    out.regime = sol.regime;
    if (std::abs(out.beta_frak_f0 - out.beta_f_m0) > 1e-8)
        throw Error(ErrorCode::Tolerance, "metastable free energy mismatch: beta*F0 = " + format_double(out.beta_frak_f0) +
                                              " vs beta*F(m0) = " + format_double(out.beta_f_m0));
    return out;
}

void write_solution_csv(std::ostream& out, const InstantonSolution& sol) {
    KeyValues kv{{"ell", format_double(sol.ell)},
                 {"e", format_double(sol.energy)},
                 {"action", format_double(sol.action)},
                 {"alpha", format_double(sol.alpha)},
                 {"beta", format_double(sol.beta)},
                 {"a0", format_double(sol.a0)},
                 {"a1", format_double(sol.a1)},
                 {"period", format_double(sol.period)},
                 {"script_i", format_double(sol.script_i)},
                 {"frak_f", format_double(sol.frak_f)},
                 {"frak_f0", format_double(sol.frak_f0)},
                 {"regime", std::string(to_string(sol.regime))},
                 {"iterations", std::to_string(sol.iterations)},
                 {"period_residual", format_double(sol.period_residual)},
                 {"ell_residual", format_double(sol.ell_residual)}};
    write_key_values(out, kv);
    out << "tau,m_z,m_x,nu\n";
    for (const auto& p : sol.trajectory)
        out << format_double(p.tau) << ',' << format_double(p.m_z) << ',' << format_double(p.m_x) << ',' << format_double(p.nu) << '\n';
}

InstantonSolution read_solution_csv(std::istream& in) {
    InstantonSolution sol;
    std::string line;
    bool table = false;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (!table) {
            if (t == "tau,m_z,m_x,nu") {
                table = true;
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string_view::npos) throw Error(ErrorCode::Io, "malformed preamble line: " + std::string(t));
            std::string key(trim(t.substr(0, eq)));
            auto val = trim(t.substr(eq + 1));
            if (key == "ell") sol.ell = parse_double(val, key);
            else if (key == "e") sol.energy = parse_double(val, key);
            else if (key == "action") sol.action = parse_double(val, key);
            else if (key == "alpha") sol.alpha = parse_double(val, key);
            else if (key == "beta") sol.beta = parse_double(val, key);
            else if (key == "a0") sol.a0 = parse_double(val, key);
            else if (key == "a1") sol.a1 = parse_double(val, key);
            else if (key == "period") sol.period = parse_double(val, key);
            else if (key == "script_i") sol.script_i = parse_double(val, key);
            else if (key == "frak_f") sol.frak_f = parse_double(val, key);
            else if (key == "frak_f0") sol.frak_f0 = parse_double(val, key);
            else if (key == "iterations") sol.iterations = static_cast<int>(parse_int(val, key));
            else if (key == "period_residual") sol.period_residual = parse_double(val, key);
            else if (key == "ell_residual") sol.ell_residual = parse_double(val, key);
            else if (key == "regime") {
                if (val == "instanton") sol.regime = SaddleRegime::Instanton;
                else if (val == "static") sol.regime = SaddleRegime::StaticFallback;
                else if (val == "zero_temperature") sol.regime = SaddleRegime::ZeroTemperatureLimit;
                else throw Error(ErrorCode::Io, "unknown regime '" + std::string(val) + "'");
            }
            continue;
        }
        auto cols = split(t, ',');
        if (cols.size() != 4) throw Error(ErrorCode::Io, "trajectory rows need 4 columns");
        sol.trajectory.push_back({parse_double(cols[0], "tau"), parse_double(cols[1], "m_z"), parse_double(cols[2], "m_x"),
                                  parse_double(cols[3], "nu")});
    }
    if (!table) throw Error(ErrorCode::Io, "missing trajectory header");
    return sol;
}

}  // namespace qtunnel
