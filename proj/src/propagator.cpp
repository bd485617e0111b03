#include "qtunnel/propagator.hpp"

#include "qtunnel/error.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace qtunnel {

namespace {

Mat2 multiply(const Mat2& a, const Mat2& b) {
    Mat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

// exp of the traceless matrix [[b, a - c], [a + c, -b]].
Mat2 exp_traceless(double a, double b, double c) {
    double d = a * a + b * b - c * c;
    double ch, sh;
    if (d > 0.0) {
        double r = std::sqrt(d);
        ch = std::cosh(r);
        sh = std::sinh(r) / r;
    } else if (d < 0.0) {
        double r = std::sqrt(-d);
        ch = std::cos(r);
        sh = std::sin(r) / r;
    } else {
        ch = 1.0;
        sh = 1.0;
    }
    return {{{ch + sh * b, sh * (a - c)}, {sh * (a + c), ch - sh * b}}};
}

// cubic Lagrange weights on nodes -1, 0, 1, 2 at x
std::array<double, 4> cubic_weights(double x) {
    return {-x * (x - 1.0) * (x - 2.0) / 6.0, (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
            -(x + 1.0) * x * (x - 2.0) / 2.0, (x + 1.0) * x * (x - 1.0) / 6.0};
}

}  // namespace

Propagator2 evolve(const std::vector<double>& lambda, double gamma, double beta, EvolveScheme scheme) {
    if (lambda.size() < 3) throw Error(ErrorCode::Domain, "evolve needs at least two segments");
    if (!(beta > 0.0)) throw Error(ErrorCode::Domain, "beta must be positive");
    const int n = static_cast<int>(lambda.size()) - 1;
    const double h = beta / n;
    auto at = [&](int k) { return lambda[((k % n) + n) % n]; };
    auto interp = [&](int k, const std::array<double, 4>& w) {
        return w[0] * at(k - 1) + w[1] * at(k) + w[2] * at(k + 1) + w[3] * at(k + 2);
    };

    Mat2 k{{{1.0, 0.0}, {0.0, 1.0}}};
    if (scheme == EvolveScheme::Midpoint) {
        auto w = cubic_weights(0.5);
        for (int s = 0; s < n; ++s) k = multiply(exp_traceless(h * gamma, h * interp(s, w), 0.0), k);
    } else {
        const double off = std::sqrt(3.0) / 6.0;
        auto w1 = cubic_weights(0.5 - off);
        auto w2 = cubic_weights(0.5 + off);
        for (int s = 0; s < n; ++s) {
            double l1 = interp(s, w1), l2 = interp(s, w2);
            // Ω = h/2 (A1 + A2) + (√3 h²/12) [A2, A1], [A2, A1] = Γ(λ1 - λ2)[σx, σz]
            double c = std::sqrt(3.0) * h * h / 6.0 * gamma * (l1 - l2);
            k = multiply(exp_traceless(h * gamma, 0.5 * h * (l1 + l2), c), k);
        }
    }
    Propagator2 out;
    out.k = k;
    out.trace = k[0][0] + k[1][1];
    out.grid = n;
    return out;
}

double ell_estimate(const Propagator2& k) {
    const auto& m = k.k;
    double sx = m[0][1] + m[1][0];
    double sy2 = -(m[0][1] - m[1][0]) * (m[0][1] - m[1][0]);  // (Tr Kσy)^2, real since Tr Kσy is imaginary
    double sz = m[0][0] - m[1][1];
    return std::sqrt(std::max(0.0, sx * sx + sy2 + sz * sz)) / k.trace;
}

double functional_free_energy(const std::vector<double>& m, const ModelSpec& model, double beta, EvolveScheme scheme) {
    if (m.size() < 3) throw Error(ErrorCode::Domain, "functional_free_energy needs at least two segments");
    const int n = static_cast<int>(m.size()) - 1;
    std::vector<double> lam(m.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (std::abs(m[k]) >= 1.0) throw Error(ErrorCode::Domain, "functional_free_energy requires |m| < 1");
        lam[k] = model.dg(m[k]);
        double w = (k == 0 || k + 1 == m.size()) ? 0.5 : 1.0;
        acc += w * (m[k] * lam[k] - model.g(m[k]));
    }
    acc *= beta / n;
    auto k = evolve(lam, model.gamma(), beta, scheme);
    return (acc - std::log(k.trace)) / beta;
}

ReplicaCheck replica_check(const InstantonSolution& solution, const ModelSpec& model) {
    namespace ode = boost::numeric::odeint;
    const auto& traj = solution.trajectory;
    if (traj.size() < 3) throw Error(ErrorCode::Domain, "replica_check needs a solution with a trajectory");
    const double gamma = model.gamma();
    const double beta = traj.back().tau;
    const double ell = solution.ell;

    ReplicaCheck rc;
    std::vector<double> lam(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) lam[k] = model.dg(traj[k].m_z);
    auto K = evolve(lam, gamma, beta, EvolveScheme::Magnus4);
    rc.trace_k = K.trace;
    rc.det_k = K.det();
    rc.ell_from_k = ell_estimate(K);
    rc.script_i = integral_I(solution.energy, ell, model);
    if (solution.regime == SaddleRegime::StaticFallback) rc.script_i = solution.script_i;
    rc.two_cosh_i = 2.0 * std::cosh(rc.script_i);
    rc.ell_from_i = std::tanh(rc.script_i);
    rc.trace_closed_form = 2.0 / std::sqrt((1.0 - ell) * (1.0 + ell));

    // K⊗K in the basis |00>, |01>, |10>, |11>; P_A = |s><s| with |s> = (|01> - |10>)/√2.
    std::array<std::array<double, 4>, 4> kk{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) kk[i][j] = K.k[i / 2][j / 2] * K.k[i % 2][j % 2];
    double tr = 0.0;
    for (int i = 0; i < 4; ++i) tr += kk[i][i];
    std::array<double, 4> s{0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
    double anti = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) anti += s[i] * kk[i][j] * s[j];
    rc.antisym_trace = anti;
    rc.sym_trace = tr - anti;

    // m and a replica vector ξ in the real parametrisation (x, i y, z), both
    // driven by the same linear flow with λ = g'(m_z).
    using State = std::array<double, 6>;
    auto rhs = [&](const State& x, State& dx, double) {
        double l = model.dg(x[2]);
        for (int b = 0; b < 2; ++b) {
            const double* v = &x[3 * b];
            double* dv = &dx[3 * b];
            dv[0] = -2.0 * l * v[1];
            dv[1] = 2.0 * gamma * v[2] - 2.0 * l * v[0];
            dv[2] = 2.0 * gamma * v[1];
        }
    };
    const auto& p0 = traj.front();
    double norm = std::sqrt(p0.m_x * p0.m_x + p0.m_z * p0.m_z);
    if (norm == 0.0) throw Error(ErrorCode::Degenerate, "m_x(0)^2 + m_z(0)^2 vanishes");
    auto bilinear = [](const double* v) { return v[0] * v[0] - v[1] * v[1] + v[2] * v[2]; };
    auto sq = [](const double* v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; };
    std::vector<double> times(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) times[k] = traj[k].tau;
    auto stepper = ode::make_controlled(1e-14, 1e-13, ode::runge_kutta_fehlberg78<State>());

    // Each mode is propagated in the direction in which it grows: the decaying
    // one forward would be swamped by the growing one after e^{4𝓘}. Running
    // backward from τ = β with the same initial vector yields ξ(0) = ξ(β)/κ,
    // which is the same monodromy eigenvalue since the flow is β-periodic.
    double drift = 0.0, unit = 0.0;
    auto run = [&](double sign, bool backward) {
        State x0{p0.m_x, p0.nu, p0.m_z, -p0.m_z, -sign * norm, p0.m_x};
        State x = x0;
        double b0 = bilinear(&x0[3]);
        auto obs = [&](const State& st, double) { drift = std::max(drift, std::abs(bilinear(&st[3]) - b0) / sq(&st[3])); };
        if (!backward) {
            ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), beta / traj.size(), obs);
        } else {
            ode::integrate_times(stepper, rhs, x, times.rbegin(), times.rend(), -beta / traj.size(), obs);
        }
        unit = std::max(unit, std::sqrt((x[0] - x0[0]) * (x[0] - x0[0]) + (x[1] - x0[1]) * (x[1] - x0[1]) +
                                        (x[2] - x0[2]) * (x[2] - x0[2])));
        double ratio = x[5] / x0[5];
        return backward ? 1.0 / ratio : ratio;
    };
    // trial forward runs decide which initial vector grows
    double ka = run(1.0, false), kb = run(-1.0, false);
    drift = 0.0;
    unit = 0.0;
    double grow_sign = ka >= kb ? 1.0 : -1.0;
    rc.kappa_plus = run(grow_sign, false);
    rc.kappa_minus = run(-grow_sign, true);
    rc.bilinear_drift = drift;
    rc.unit_eigen_residual = unit;
    rc.kappa_plus_closed = std::exp(2.0 * rc.script_i);
    rc.kappa_minus_closed = std::exp(-2.0 * rc.script_i);

    // ξ_z'/ξ_z = 2Γ ϱ±, ϱ± = (m_z ν ± l m_x)/(l^2 - m_z^2)
    double ip = 0.0, im = 0.0;
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        auto rho = [&](const TrajectoryPoint& p, double sign) {
            return (p.m_z * p.nu + sign * ell * p.m_x) / (ell * ell - p.m_z * p.m_z);
        };
        double dt = traj[k + 1].tau - traj[k].tau;
        ip += 0.5 * dt * (rho(traj[k], 1.0) + rho(traj[k + 1], 1.0));
        im += 0.5 * dt * (rho(traj[k], -1.0) + rho(traj[k + 1], -1.0));
    }
    rc.kappa_plus_rho = std::exp(2.0 * gamma * ip);
    rc.kappa_minus_rho = std::exp(2.0 * gamma * im);
    return rc;
}

DeltaF delta_F(const ModelSpec& model, double beta, const InstantonOptions& options) {
    DeltaF out;
    InstantonOptions opt = options;
    opt.with_trajectory = true;
    out.solution = solve_instanton(model, beta, opt);
    const auto& sol = out.solution;
    if (sol.trajectory.empty())
        throw Error(ErrorCode::Degenerate, "no trajectory in the zero-temperature limit: the functional is not evaluated");
    std::vector<double> m(sol.trajectory.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = sol.trajectory[k].m_z;
    out.frak_f = functional_free_energy(m, model, sol.trajectory.back().tau);
    out.f_m0 = static_extrema(model, beta).f0;
    out.delta = out.frak_f - out.f_m0;
    out.beta_delta = beta * out.delta;
    out.wkb_form = sol.frak_f;
    return out;
}

std::vector<IdentityLine> verify_identities(const ModelSpec& model, double beta, const InstantonOptions& options) {
    std::vector<IdentityLine> lines;
    auto add = [&](std::string name, double residual, double threshold) {
        lines.push_back({std::move(name), std::isnan(residual) ? INFINITY : residual, threshold});
    };

    // static extrema and the Appendix equivalence
    auto ext = static_extrema(model, beta);
    double a4 = 0.0, a2 = 0.0;
    for (const auto& e : ext.all) {
        a4 = std::max(a4, std::abs(static_extremum_residual(e.m, model, beta)));
        a2 = std::max(a2, std::abs(e.ell - static_ell(e.m, model, beta)));
    }
    add("extremum_residual", a4, 1e-10);
    add("extremum_ell_roundtrip", a2, 1e-12);
    double q0 = std::sqrt(ext.ell0 * ext.ell0 - ext.m0 * ext.m0);
    add("static_wkb_form_m0", std::abs(ext.f0 - (-model.gamma() * q0 - model.g(ext.m0) - entropic_factor(ext.ell0) / beta)), 1e-9);
    auto sectors = ell_optimized_extrema(model, beta);
    double dm = 0.0, df = 0.0;
    for (const auto& s : sectors) {
        double best = INFINITY, fbest = 0.0;
        for (const auto& e : ext.all)
            if (std::abs(e.m - s.m) < std::abs(best)) {
                best = e.m - s.m;
                fbest = e.value;
            }
        dm = std::max(dm, std::abs(best));
        df = std::max(df, std::abs(beta * fbest - s.beta_value));
    }
    if (sectors.size() != ext.all.size()) dm = INFINITY;
    add("appendix_extrema_m", dm, 1e-8);
    add("appendix_extrema_beta_f", df, 1e-8);

    auto df_res = delta_F(model, beta, options);
    const auto& sol = df_res.solution;
    add("metastable_beta_f0", std::abs(beta * sol.frak_f0 - beta * ext.f0), 1e-8);

    // solver self-consistency
    if (sol.regime == SaddleRegime::Instanton) add("period_minus_beta", std::abs(sol.period_residual), 1e-8);
    add("ell_minus_tanh_i", std::abs(sol.ell_residual), 1e-10);
    double h0 = 0.0, l2 = 0.0, mx = 0.0;
    for (const auto& p : sol.trajectory) {
        h0 = std::max(h0, std::abs(-model.gamma() * p.m_x - model.g(p.m_z) - sol.energy));
        l2 = std::max(l2, std::abs(p.m_x * p.m_x - p.nu * p.nu + p.m_z * p.m_z - sol.ell * sol.ell));
        mx = std::max(mx, std::abs(p.m_x - std::abs(sol.energy + model.g(p.m_z)) / model.gamma()));
    }
    add("h0_conservation", h0, 1e-8);
    add("ell2_conservation", l2, 1e-8);
    add("mx_identity", mx, 1e-8);
    add("trajectory_integral_i",
        std::abs(integral_I(sol.trajectory, sol.energy, sol.ell, model) - sol.script_i) / sol.script_i, 1e-6);

    // central equivalence
    add("functional_vs_wkb", std::abs(beta * df_res.frak_f - beta * df_res.wkb_form), 1e-6);
    add("beta_delta_f_vs_alpha", std::abs(df_res.beta_delta - sol.alpha), 1e-6);

    // replica identities
    auto rc = replica_check(sol, model);
    add("det_k", std::abs(rc.det_k - 1.0), 1e-9);
    add("antisym_trace", std::abs(rc.antisym_trace - 1.0), 1e-8);
    add("kappa_product", std::abs(rc.kappa_plus * rc.kappa_minus - 1.0), 1e-8);
    add("kappa_plus_vs_exp_2i", std::abs(rc.kappa_plus / rc.kappa_plus_closed - 1.0), 1e-6);
    add("kappa_minus_vs_exp_m2i", std::abs(rc.kappa_minus / rc.kappa_minus_closed - 1.0), 1e-6);
    add("kappa_plus_rho", std::abs(rc.kappa_plus_rho / rc.kappa_plus_closed - 1.0), 1e-6);
    add("kappa_minus_rho", std::abs(rc.kappa_minus_rho / rc.kappa_minus_closed - 1.0), 1e-6);
    add("sym_trace_vs_kappa", std::abs(rc.sym_trace / (1.0 + rc.kappa_plus + rc.kappa_minus) - 1.0), 1e-7);
    add("trace_k_vs_closed_form", std::abs(rc.trace_k - rc.trace_closed_form), 1e-6);
    add("trace_k_vs_2cosh_i", std::abs(rc.trace_k - rc.two_cosh_i), 1e-6);
    add("ell_estimate_vs_ell", std::abs(rc.ell_from_k - sol.ell), 1e-7);
    add("bilinear_conservation", rc.bilinear_drift, 1e-8);
    add("unit_eigenvector", rc.unit_eigen_residual, 1e-7);
    return lines;
}

void write_identity_report(std::ostream& out, const std::vector<IdentityLine>& lines) {
    for (const auto& l : lines)
        out << l.name << " = " << format_double(l.residual) << "  # threshold " << format_double(l.threshold) << ' '
            << (l.ok() ? "ok" : "FAIL") << '\n';
}

}  // namespace qtunnel
