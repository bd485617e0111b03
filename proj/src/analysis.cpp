#include "qtunnel/analysis.hpp"

#include "qtunnel/error.hpp"
#include "qtunnel/io.hpp"
#include "qtunnel/wkb.hpp"

#include "numerics.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

namespace qtunnel {

namespace {

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    Line l;
    l.slope = sxy / sxx;
    l.intercept = my - l.slope * mx;
    return l;
}

double mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

}  // namespace

ScalingFit fit_alpha(const std::vector<EscapeRecord>& records, const FitOptions& options) {
    if (options.n_min > options.n_max) throw Error(ErrorCode::Domain, "fit window is empty");
    std::map<int, std::vector<double>> by_n;
    ScalingFit fit;
    fit.n_min = options.n_min;
    fit.n_max = options.n_max;
    const EscapeRecord* first = nullptr;
    for (const auto& r : records) {
        if (r.n_spins < options.n_min || r.n_spins > options.n_max) continue;
        if (!first) first = &r;
        if (r.beta != first->beta || r.gamma != first->gamma || r.h != first->h)
            throw Error(ErrorCode::Domain, "escape records mix parameter points");
        if (!r.escaped) {
            ++fit.n_unescaped;
            continue;
        }
        if (!(r.sweeps > 0.0)) throw Error(ErrorCode::Domain, "escaped record with non-positive sweep count");
        by_n[r.n_spins].push_back(r.sweeps);
    }
    if (by_n.size() < 3)
        throw Error(ErrorCode::InsufficientData, "need at least 3 distinct N in [" + std::to_string(options.n_min) + ", " +
                                                     std::to_string(options.n_max) + "], got " + std::to_string(by_n.size()));
    for (const auto& [n, s] : by_n)
        if (static_cast<int>(s.size()) < options.min_runs)
            throw Error(ErrorCode::InsufficientData, "N = " + std::to_string(n) + " has " + std::to_string(s.size()) +
                                                         " escaped runs, need " + std::to_string(options.min_runs));

    std::vector<double> x, y;
    for (const auto& [n, s] : by_n) {
        double m = mean(s);
        fit.n_values.push_back(n);
        fit.n_runs_per_n.push_back(static_cast<int>(s.size()));
        fit.mean_sweeps.push_back(m);
        x.push_back(n);
        y.push_back(std::log(m * n));
    }
    auto line = least_squares(x, y);
    fit.alpha = line.slope;
    fit.intercept = line.intercept;
    for (std::size_t i = 0; i < x.size(); ++i) fit.residuals.push_back(y[i] - (line.intercept + line.slope * x[i]));

    if (options.bootstrap > 1) {
        auto rng = make_rng(options.seed, 0xb0075ULL);
        std::vector<double> slopes;
        slopes.reserve(options.bootstrap);
        std::vector<double> yb(x.size());
        for (int b = 0; b < options.bootstrap; ++b) {
            std::size_t i = 0;
            for (const auto& [n, s] : by_n) {
                double acc = 0.0;
                for (std::size_t k = 0; k < s.size(); ++k) acc += s[rng() % s.size()];
                yb[i] = std::log(acc / static_cast<double>(s.size()) * n);
                ++i;
            }
            slopes.push_back(least_squares(x, yb).slope);
        }
        double ms = mean(slopes), var = 0.0;
        for (double s : slopes) var += (s - ms) * (s - ms);
        fit.std_error = std::sqrt(var / (slopes.size() - 1));
    }
    return fit;
}

void write_fit(std::ostream& out, const ScalingFit& fit) {
    std::string ns, runs, means, res;
    for (std::size_t i = 0; i < fit.n_values.size(); ++i) {
        const char* sep = i ? "," : "";
        ns += sep + std::to_string(fit.n_values[i]);
        runs += sep + std::to_string(fit.n_runs_per_n[i]);
        means += sep + format_double(fit.mean_sweeps[i]);
        res += sep + format_double(fit.residuals[i]);
    }
    write_key_values(out, {{"alpha", format_double(fit.alpha)},
                           {"stderr", format_double(fit.std_error)},
                           {"intercept", format_double(fit.intercept)},
                           {"n_min", std::to_string(fit.n_min)},
                           {"n_max", std::to_string(fit.n_max)},
                           {"n_values", ns},
                           {"n_runs_per_n", runs},
                           {"mean_sweeps", means},
                           {"residuals", res},
                           {"n_unescaped", std::to_string(fit.n_unescaped)}});
}

// ---------------------------------------------------------------------------

namespace {

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs task(i) for i in [0, count) on a pool; the first exception is rethrown.
template <class Task>
void parallel_for(std::size_t count, int workers, Task&& task) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                task(i);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    int nw = std::max(1, std::min<int>(resolve_workers(workers), static_cast<int>(count)));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<EscapeRecord> escape_campaign(const ModelSpec& model, double beta, const CampaignOptions& options,
                                          std::uint64_t seed_offset) {
    if (options.runs < 1) throw Error(ErrorCode::Domain, "runs must be >= 1");
    if (options.n_list.empty()) throw Error(ErrorCode::Domain, "n_list is empty");
    static_extrema(model, beta);  // fail early on a monostable point
    const std::size_t runs = static_cast<std::size_t>(options.runs);
    std::vector<EscapeRecord> out(options.n_list.size() * runs);
    parallel_for(out.size(), options.workers, [&](std::size_t k) {
        int n = options.n_list[k / runs];
        out[k] = escape_run(n, model, beta, options.seed_base + seed_offset + k, options.escape);
    });
    return out;
}

CompareResult compare(const std::vector<GridPoint>& grid, const CampaignOptions& options) {
    CompareResult res;
    const std::uint64_t stride = options.n_list.size() * static_cast<std::uint64_t>(std::max(options.runs, 0));
    for (std::size_t p = 0; p < grid.size(); ++p) {
        CompareRow row;
        row.point = grid[p];
        row.alpha_wkb = row.alpha_qmc = row.alpha_qmc_err = std::numeric_limits<double>::quiet_NaN();
        std::vector<std::string> problems;
        try {
            auto model = ModelSpec::curie_weiss(grid[p].gamma, grid[p].h);
            try {
                row.alpha_wkb = wkb_alpha(model, grid[p].beta).alpha;
            } catch (const Error& e) {
                problems.push_back("wkb:" + std::string(to_string(e.code())));
            }
            auto recs = escape_campaign(model, grid[p].beta, options, p * stride);
            res.raw.insert(res.raw.end(), recs.begin(), recs.end());
            auto fit = fit_alpha(recs, options.fit);
            row.alpha_qmc = fit.alpha;
            row.alpha_qmc_err = fit.std_error;
        } catch (const Error& e) {
            problems.push_back("qmc:" + std::string(to_string(e.code())));
        }
        if (!problems.empty()) {
            row.status.clear();
            for (std::size_t i = 0; i < problems.size(); ++i) row.status += (i ? ";" : "") + problems[i];
        }
        res.rows.push_back(row);
    }
    return res;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
    out << "gamma,h,beta,alpha_wkb,alpha_qmc,alpha_qmc_err,status\n";
    for (const auto& r : rows)
        out << format_double(r.point.gamma) << ',' << format_double(r.point.h) << ',' << format_double(r.point.beta) << ','
            << format_double(r.alpha_wkb) << ',' << format_double(r.alpha_qmc) << ',' << format_double(r.alpha_qmc_err) << ','
            << r.status << '\n';
}

// ---------------------------------------------------------------------------

std::string_view to_string(SpikeRegime regime) {
    switch (regime) {
        case SpikeRegime::QuantumPolyClassicalExp: return "QUANTUM_POLY_CLASSICAL_EXP";
        case SpikeRegime::BothExp: return "BOTH_EXP";
        case SpikeRegime::WkbInvalid: return "WKB_INVALID";
    }
    return "?";
}

namespace {

double poly_slope(const std::vector<double>& c, double m) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) acc = acc * m + k * c[k];
    return acc;
}

struct SpikeSlice {
    double level = 0.0;
    double action = 0.0;
    double p_mb = 0.0;
    double t_c = 0.0;
};

SpikeSlice analyse_spike(const ModelSpec& model, const SpikeSpec& s) {
    const double mb = s.m_b, dm = s.width();
    const double reach = s.shape == SpikeShape::Gaussian ? 12.0 * dm : 2.0 * dm;
    const double lo = std::max(-1.0 + 1e-9, mb - reach), hi = std::min(1.0 - 1e-9, mb + reach);
    auto u = [&](double m) { return effective_potential(m, 1.0, model); };

    // lowest point of U on each side of the spike: grid scan then Brent
    auto side_min = [&](double a, double b) {
        const int n = 2000;
        double best = a, fb = u(a);
        for (int i = 1; i <= n; ++i) {
            double m = a + (b - a) * i / n;
            double f = u(m);
            if (f < fb) {
                fb = f;
                best = m;
            }
        }
        double h = (b - a) / n;
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::brent_find_minima(u, std::max(a, best - h), std::min(b, best + h), 52, iters);
        return r.second < fb ? std::pair{r.first, r.second} : std::pair{best, fb};
    };
    const auto left = side_min(lo, mb), right = side_min(mb, hi);
    const double e = std::max(left.second, right.second);
    if (!(u(mb) > e)) throw Error(ErrorCode::NoBarrier, "spike does not rise above the well level");

    // turning points: crossings of U = e between the top and each well
    auto crossing = [&](double inside, double outside) {
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (inside + outside);
            if (mid == inside || mid == outside) break;
            (u(mid) > e ? inside : outside) = mid;
        }
        return inside;
    };
    const double a0 = crossing(mb, left.first), a1 = crossing(mb, right.first);
    auto p = [&](double m) { return momentum(m, e, 1.0, model); };

    SpikeSlice out;
    out.level = e;
    out.p_mb = p(mb);
    out.action = detail::integrate_endpoint(p, a0, mb, 1e-12) + detail::integrate_endpoint(p, mb, a1, 1e-12);

    // crossover temperature from the small-oscillation period at the top
    const double gamma = model.gamma();
    double kappa = 0.0;
    switch (s.shape) {
        case SpikeShape::Rectangular: kappa = 0.0; break;
        case SpikeShape::Triangular: kappa = std::numeric_limits<double>::infinity(); break;
        case SpikeShape::Gaussian: {
            std::uintmax_t iters = 200;
            auto r = boost::math::tools::brent_find_minima([&](double m) { return -u(m); }, mb - dm, mb + dm, 52, iters);
            double mt = r.first, q = std::sqrt(1.0 - mt * mt);
            kappa = -(gamma / (q * q * q) - model.d2g(mt));
            break;
        }
    }
    double q_top = std::sqrt(1.0 - mb * mb);
    if (kappa <= 0.0)
        out.t_c = 0.0;
    else if (std::isinf(kappa))
        out.t_c = std::numeric_limits<double>::infinity();
    else
        out.t_c = std::sqrt(kappa * gamma * q_top) / std::numbers::pi;
    return out;
}

}  // namespace

SpikeReport spike_report(const SpikeSpec& spike, const std::vector<double>& g0_poly, const std::vector<int>& n_list) {
    if (n_list.empty()) throw Error(ErrorCode::Domain, "n_list is empty");
    if (!(spike.m_b > 0.0 && spike.m_b < 1.0)) throw Error(ErrorCode::Domain, "m_b must lie in (0, 1)");
    const double mb = spike.m_b;
    const double slope = poly_slope(g0_poly, mb);
    if (!(slope > 0.0)) throw Error(ErrorCode::Domain, "g0'(m_b) must be positive");
    SpikeReport rep;
    rep.gamma_c = slope * std::sqrt(1.0 / (mb * mb) - 1.0);
    // p(m_b)^2 ≈ 2Δg / (Γ_c sqrt(1 - m_b^2)) and Γ_c sqrt(1 - m_b^2) = 2 g0' sinh(ln 1/m_b)
    rep.gamma_factor = 1.0 / std::sqrt(slope * std::sinh(std::log(1.0 / mb)));
    double se = 1.0 - spike.delta - 0.5 * spike.chi;
    rep.scaling_exponent = std::abs(se) < 1e-12 ? 0.0 : se;
    rep.classical_exponent = 1.0 - spike.chi;

    for (int n : n_list) {
        if (n < 1) throw Error(ErrorCode::Domain, "spin counts must be positive");
        auto s = spike.at_size(n);
        ModelSpec model(rep.gamma_c, g0_poly, s);
        auto slice = analyse_spike(model, s);
        rep.n_values.push_back(n);
        rep.height.push_back(s.height());
        rep.width.push_back(s.width());
        rep.level.push_back(slice.level);
        rep.action.push_back(slice.action);
        rep.p_mb.push_back(slice.p_mb);
        rep.t_c_estimate.push_back(slice.t_c);
    }
    const std::size_t last = rep.n_values.size() - 1;
    rep.mu_est = rep.action[last] / (rep.p_mb[last] * rep.width[last]);
    rep.kappa = std::sqrt(spike.c) * spike.d * rep.gamma_factor * rep.mu_est;

    const double tol = 1e-12;
    bool window = spike.chi < 1.0 && spike.chi + tol >= 2.0 * (1.0 - spike.delta) && 1.0 - spike.delta >= -tol;
    if (!(rep.n_values[last] * rep.action[last] > 1.0))
        rep.regime = SpikeRegime::WkbInvalid;
    else if (window)
        rep.regime = SpikeRegime::QuantumPolyClassicalExp;
    else
        rep.regime = SpikeRegime::BothExp;
    return rep;
}

void write_spike_report(std::ostream& out, const SpikeReport& r) {
    auto join = [](const auto& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            if constexpr (std::is_same_v<std::decay_t<decltype(v[i])>, int>)
                s += std::to_string(v[i]);
            else
                s += format_double(v[i]);
        }
        return s;
    };
    write_key_values(out, {{"gamma_c", format_double(r.gamma_c)},
                           {"gamma_factor", format_double(r.gamma_factor)},
                           {"mu_est", format_double(r.mu_est)},
                           {"kappa", format_double(r.kappa)},
                           {"scaling_exponent", format_double(r.scaling_exponent)},
                           {"classical_exponent", format_double(r.classical_exponent)},
                           {"regime", std::string(to_string(r.regime))},
                           {"n_values", join(r.n_values)},
                           {"height", join(r.height)},
                           {"width", join(r.width)},
                           {"level", join(r.level)},
                           {"action", join(r.action)},
                           {"p_mb", join(r.p_mb)},
                           {"t_c_estimate", join(r.t_c_estimate)}});
}

}  // namespace qtunnel
