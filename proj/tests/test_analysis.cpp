#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qtunnel/analysis.hpp"
#include "qtunnel/error.hpp"
#include "qtunnel/model.hpp"
#include "qtunnel/wkb.hpp"

#include "oracles.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

using namespace qtunnel;

namespace {

std::vector<EscapeRecord> synthetic(auto&& sweeps, std::vector<int> ns, int runs) {
    std::vector<EscapeRecord> out;
    std::uint64_t seed = 1;
    for (int n : ns)
        for (int r = 0; r < runs; ++r) out.push_back({n, 4.0, 0.5, 0.0, seed++, sweeps(n, r), true});
    return out;
}

// ordinary least squares slope of ln(mean · N) on N
double ols_slope(const std::vector<EscapeRecord>& recs, int lo, int hi) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& r : recs)
        if (r.n_spins >= lo && r.n_spins <= hi && r.escaped) {
            acc[r.n_spins].first += r.sweeps;
            acc[r.n_spins].second += 1;
        }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
    for (auto [n, v] : acc) {
        double y = std::log(v.first / v.second * n);
        sx += n;
        sy += y;
        sxx += double(n) * n;
        sxy += n * y;
        k += 1;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

struct SpikeOracle {
    double level, action, p_mb;
};

// grid minima on each side of m_b, bisection crossings, cos-substituted midpoint rule
SpikeOracle spike_oracle(const ModelSpec& model, double mb) {
    double gamma = model.gamma();
    auto u = [&](double m) { return -gamma * std::sqrt(1.0 - m * m) - model.g(m); };
    auto side = [&](double a, double b) {
        const int n = 200000;
        double best = a, fb = u(a);
        for (int i = 0; i <= n; ++i) {
            double m = a + (b - a) * i / n;
            if (u(m) < fb) {
                fb = u(m);
                best = m;
            }
        }
        double h = (b - a) / n;
        return oracle::golden_min(u, std::max(a, best - h), std::min(b, best + h));
    };
    auto l = side(-0.999, mb), r = side(mb, 0.999);
    double e = std::max(l.second, r.second);
    auto f = [&](double m) { return u(m) - e; };
    double a0 = oracle::bisect(f, l.first, mb), a1 = oracle::bisect(f, mb, r.first);
    auto p = [&](double m) {
        double c = -(e + model.g(m)) / (gamma * std::sqrt(1.0 - m * m));
        return c > 1.0 ? std::acosh(c) : 0.0;
    };
    auto integrate = [&](double a, double b) {
        const int n = 400000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double th = std::numbers::pi * (i + 0.5) / n;
            double m = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(th);
            acc += p(m) * 0.5 * (b - a) * std::sin(th);
        }
        return acc * std::numbers::pi / n;
    };
    return {e, integrate(a0, mb) + integrate(mb, a1), p(mb)};
}

}  // namespace

TEST_CASE("exact synthetic scaling") {
    auto recs = synthetic([](int n, int) { return std::exp(0.3 * n) / n; }, {10, 12, 13, 14, 15, 16, 18}, 50);
    auto fit = fit_alpha(recs);
    CHECK(fit.alpha == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(fit.std_error < 1e-12);
    CHECK(fit.std_error >= 0.0);
    CHECK(fit.n_min == 12);
    CHECK(fit.n_max == 16);
    CHECK(fit.n_values == std::vector<int>{12, 13, 14, 15, 16});
    CHECK(fit.n_runs_per_n == std::vector<int>(5, 50));
    for (double r : fit.residuals) CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("constant sweeps fit the inverse size correction") {
    auto recs = synthetic([](int, int) { return 1000.0; }, {12, 14, 16}, 50);
    auto fit = fit_alpha(recs);
    CHECK(fit.alpha == doctest::Approx(ols_slope(recs, 12, 16)).epsilon(1e-12));
    CHECK(fit.alpha == doctest::Approx(std::log(16.0 / 12.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("noisy synthetic scaling") {
    auto rng = make_rng(42);
    auto recs = synthetic(
        [&](int n, int) { return std::exp(0.45 * n) / n * (1.0 + 0.1 * (2.0 * uniform01(rng) - 1.0) * std::sqrt(3.0)); },
        {12, 13, 14, 15, 16}, 200);
    FitOptions opt;
    opt.seed = 3;
    auto fit = fit_alpha(recs, opt);
    CHECK(fit.alpha == doctest::Approx(ols_slope(recs, 12, 16)).epsilon(1e-12));
    CHECK(fit.std_error > 0.0);
    CHECK(std::abs(fit.alpha - 0.45) <= 2.0 * fit.std_error);
    auto again = fit_alpha(recs, opt);
    CHECK(again.std_error == fit.std_error);

    // exponential escape times, as from a Poisson process
    auto rng2 = make_rng(43);
    auto expo = synthetic([&](int n, int) { return -std::log(1.0 - uniform01(rng2)) * std::exp(0.5 * n) / n; }, {12, 14, 16}, 400);
    auto fe = fit_alpha(expo);
    CHECK(std::abs(fe.alpha - 0.5) <= 3.0 * fe.std_error);
}

TEST_CASE("insufficient data") {
    auto two = synthetic([](int n, int) { return std::exp(0.3 * n); }, {12, 16}, 60);
    CHECK(oracle::code_of([&] { fit_alpha(two); }) == ErrorCode::InsufficientData);
    auto thin = synthetic([](int n, int) { return std::exp(0.3 * n); }, {12, 14, 16}, 49);
    CHECK(oracle::code_of([&] { fit_alpha(thin); }) == ErrorCode::InsufficientData);
    auto outside = synthetic([](int n, int) { return std::exp(0.3 * n); }, {4, 6, 8}, 60);
    CHECK(oracle::code_of([&] { fit_alpha(outside); }) == ErrorCode::InsufficientData);
    CHECK(oracle::code_of([&] { fit_alpha({}); }) == ErrorCode::InsufficientData);

    auto mixed = synthetic([](int n, int) { return std::exp(0.3 * n); }, {12, 14, 16}, 60);
    mixed[5].gamma = 0.6;
    CHECK(oracle::code_of([&] { fit_alpha(mixed); }) == ErrorCode::Domain);
}

TEST_CASE("unescaped runs are excluded") {
    auto recs = synthetic([](int n, int) { return std::exp(0.3 * n) / n; }, {12, 14, 16}, 55);
    for (int i = 0; i < 3; ++i) {
        recs[i].escaped = false;
        recs[i].sweeps = 1e8;
    }
    auto fit = fit_alpha(recs);
    CHECK(fit.n_unescaped == 3);
    CHECK(fit.n_runs_per_n[0] == 52);
    CHECK(fit.alpha == doctest::Approx(0.3).epsilon(1e-12));
    std::ostringstream out;
    write_fit(out, fit);
    for (const char* key : {"alpha = ", "stderr = ", "n_min = 12", "n_max = 16", "n_unescaped = 3", "residuals = "})
        CHECK(out.str().find(key) != std::string::npos);
}

TEST_CASE("campaign is independent of the worker count") {
    auto model = ModelSpec::curie_weiss(0.5, 0.0);
    CampaignOptions opt;
    opt.n_list = {4, 6};
    opt.runs = 6;
    opt.seed_base = 10;
    opt.workers = 1;
    auto a = escape_campaign(model, 2.0, opt, 100);
    opt.workers = 3;
    auto b = escape_campaign(model, 2.0, opt, 100);
    REQUIRE(a.size() == 12);
    REQUIRE(b.size() == 12);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == 110 + i);
        CHECK(a[i].seed == b[i].seed);
        CHECK(a[i].sweeps == b[i].sweeps);
        CHECK(a[i].n_spins == (i < 6 ? 4 : 6));
    }
}

TEST_CASE("compare table") {
    CampaignOptions opt;
    opt.n_list = {4, 6, 8};
    opt.runs = 12;
    opt.workers = 2;
    opt.fit.n_min = 4;
    opt.fit.n_max = 8;
    opt.fit.min_runs = 10;
    opt.fit.bootstrap = 50;
    std::vector<GridPoint> grid{{0.5, 0.0, 2.0}, {2.0, 0.0, 2.0}};
    auto res = compare(grid, opt);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].status == "ok");
    CHECK(res.rows[0].alpha_wkb == doctest::Approx(wkb_alpha(ModelSpec::curie_weiss(0.5, 0.0), 2.0).alpha).epsilon(1e-12));
    CHECK(std::isfinite(res.rows[0].alpha_qmc));
    CHECK(res.rows[1].status == "wkb:MONOSTABLE;qmc:MONOSTABLE");
    CHECK(res.raw.size() == 36);

    std::ostringstream a, b;
    write_compare_csv(a, res.rows);
    write_compare_csv(b, compare(grid, opt).rows);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("gamma,h,beta,alpha_wkb,alpha_qmc,alpha_qmc_err,status\n", 0) == 0);
}

TEST_CASE("wkb exponents across the biased grid") {
    double prev = 1e300;
    for (double g : {0.4, 0.5, 0.6}) {
        double a = wkb_alpha(ModelSpec::curie_weiss(g, 0.0), 4.0).alpha;
        CHECK(a < prev);
        prev = a;
    }
    for (double g : {0.3, 0.4, 0.5})
        for (double b : {2.0, 4.0, 6.0, 8.0, 10.0}) CHECK_NOTHROW(wkb_alpha(ModelSpec::curie_weiss(g, 0.1), b));
}

TEST_CASE("spike crossing field and momentum factor") {
    SpikeSpec s;
    s.chi = 0.4;
    s.delta = 0.8;
    auto rep = spike_report(s, {0.0, 1.0}, {64, 128});
    CHECK(rep.gamma_c == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(rep.gamma_factor == doctest::Approx(std::sqrt(15.0 / 8.0)).epsilon(1e-14));
    CHECK(rep.scaling_exponent == 0.0);
    CHECK(rep.classical_exponent == doctest::Approx(0.6));
    CHECK(rep.regime == SpikeRegime::QuantumPolyClassicalExp);
    CHECK(to_string(rep.regime) == "QUANTUM_POLY_CLASSICAL_EXP");
    CHECK(rep.n_values == std::vector<int>{64, 128});
    CHECK(rep.height[0] == doctest::Approx(std::pow(64.0, -0.4)));
    CHECK(rep.width[1] == doctest::Approx(std::pow(128.0, -0.8)));

    // g0 with slope 2 at m_b = 0.5
    SpikeSpec half = s;
    half.m_b = 0.5;
    auto r2 = spike_report(half, {0.0, 1.0, 1.0}, {64});
    CHECK(r2.gamma_c == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("spike regimes") {
    auto regime = [](double chi, double delta) {
        SpikeSpec s;
        s.chi = chi;
        s.delta = delta;
        return spike_report(s, {0.0, 1.0}, {256}).regime;
    };
    CHECK(regime(0.4, 0.8) == SpikeRegime::QuantumPolyClassicalExp);
    CHECK(regime(0.5, 0.9) == SpikeRegime::QuantumPolyClassicalExp);
    CHECK(regime(0.4, 0.5) == SpikeRegime::BothExp);
    CHECK(regime(0.1, 0.9) == SpikeRegime::BothExp);
    // tiny action: the WKB description does not apply
    SpikeSpec small;
    small.c = 1e-3;
    small.d = 1e-3;
    CHECK(spike_report(small, {0.0, 1.0}, {64}).regime == SpikeRegime::WkbInvalid);
}

TEST_CASE("spike action against an independent quadrature") {
    for (auto shape : {SpikeShape::Gaussian, SpikeShape::Triangular}) {
        SpikeSpec s;
        s.shape = shape;
        s.chi = 0.4;
        s.delta = 0.8;
        auto rep = spike_report(s, {0.0, 1.0}, {64, 256});
        for (size_t i = 0; i < rep.n_values.size(); ++i) {
            ModelSpec model(rep.gamma_c, {0.0, 1.0}, s.at_size(rep.n_values[i]));
            auto o = spike_oracle(model, s.m_b);
            CHECK(rep.level[i] == doctest::Approx(o.level).epsilon(1e-12));
            CHECK(rep.p_mb[i] == doctest::Approx(o.p_mb).epsilon(1e-9));
            CHECK(rep.action[i] == doctest::Approx(o.action).epsilon(1e-6));
        }
    }
}

TEST_CASE("spike asymptotics") {
    SpikeSpec rect;
    rect.shape = SpikeShape::Rectangular;
    rect.chi = 0.4;
    rect.delta = 0.8;
    auto r = spike_report(rect, {0.0, 1.0});
    CHECK(r.mu_est == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.kappa == doctest::Approx(r.gamma_factor * r.mu_est).epsilon(1e-14));
    for (size_t i = 0; i < r.n_values.size(); ++i)
        CHECK(r.p_mb[i] / std::sqrt(r.height[i]) == doctest::Approx(r.gamma_factor).epsilon(0.1));

    SpikeSpec gauss;
    gauss.chi = 0.4;
    gauss.delta = 0.8;
    auto g = spike_report(gauss, {0.0, 1.0});
    for (size_t i = 1; i < g.n_values.size(); ++i) CHECK(g.t_c_estimate[i] > g.t_c_estimate[i - 1]);
    // N S(N) approaches a constant when δ + χ/2 = 1
    double prev = 1e300;
    for (size_t i = 1; i < g.n_values.size(); ++i) {
        double dev = std::abs(g.n_values[i] * g.action[i] / (g.n_values[i - 1] * g.action[i - 1]) - 1.0);
        CHECK(dev < prev);
        prev = dev;
    }
    std::ostringstream out;
    write_spike_report(out, g);
    for (const char* key : {"gamma_c = ", "kappa = ", "mu_est = ", "regime = ", "t_c_estimate = "})
        CHECK(out.str().find(key) != std::string::npos);

    CHECK(oracle::code_of([] { spike_report(SpikeSpec{}, {0.0, -1.0}); }) == ErrorCode::Domain);
}
