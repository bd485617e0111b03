#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qtunnel/error.hpp"
#include "qtunnel/model.hpp"
#include "qtunnel/propagator.hpp"
#include "qtunnel/wkb.hpp"

#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qtunnel;

namespace {

std::vector<double> samples(int n, double beta, auto&& f) {
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = f(beta * i / n);
    v[n] = v[0];
    return v;
}

// RK4 on dK/dτ = (Γσx + λ(τ)σz) K
Mat2 rk4(auto&& lambda, double gamma, double beta, int steps) {
    Mat2 k{{{1.0, 0.0}, {0.0, 1.0}}};
    auto rhs = [&](double t, const Mat2& m) {
        double l = lambda(t);
        Mat2 d{};
        for (int j = 0; j < 2; ++j) {
            d[0][j] = l * m[0][j] + gamma * m[1][j];
            d[1][j] = gamma * m[0][j] - l * m[1][j];
        }
        return d;
    };
    auto axpy = [](const Mat2& a, double s, const Mat2& b) {
        Mat2 r{};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r[i][j] = a[i][j] + s * b[i][j];
        return r;
    };
    double h = beta / steps;
    for (int s = 0; s < steps; ++s) {
        double t = s * h;
        auto k1 = rhs(t, k);
        auto k2 = rhs(t + h / 2, axpy(k, h / 2, k1));
        auto k3 = rhs(t + h / 2, axpy(k, h / 2, k2));
        auto k4 = rhs(t + h, axpy(k, h, k3));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) k[i][j] += h / 6 * (k1[i][j] + 2 * k2[i][j] + 2 * k3[i][j] + k4[i][j]);
    }
    return k;
}

}  // namespace

TEST_CASE("constant field") {
    double gamma = 0.4, lam = 0.3, beta = 3.0;
    auto k = evolve(samples(16, beta, [&](double) { return lam; }), gamma, beta);
    double r = std::hypot(gamma, lam);
    CHECK(k.trace == doctest::Approx(2.0 * std::cosh(beta * r)).epsilon(1e-13));
    CHECK(k.det() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ell_estimate(k) == doctest::Approx(std::tanh(beta * r)).epsilon(1e-13));
    CHECK(k.grid == 16);

    auto diag = evolve(samples(8, beta, [&](double) { return lam; }), 0.0, beta);
    CHECK(diag.k[0][0] == doctest::Approx(std::exp(beta * lam)).epsilon(1e-13));
    CHECK(diag.k[1][1] == doctest::Approx(std::exp(-beta * lam)).epsilon(1e-13));
    CHECK(diag.k[0][1] == 0.0);
    CHECK(diag.k[1][0] == 0.0);

    auto tiny = evolve(samples(8, 1e-6, [&](double) { return lam; }), gamma, 1e-6);
    CHECK(ell_estimate(tiny) < 1e-5);
}

TEST_CASE("time ordered product against RK4") {
    double gamma = 0.5, beta = 4.0;
    auto lam = [&](double t) { return 0.3 + 0.5 * std::cos(2 * std::numbers::pi * t / beta) + 0.2 * std::sin(4 * std::numbers::pi * t / beta); };
    auto ref = rk4(lam, gamma, beta, 200000);
    for (auto scheme : {EvolveScheme::Midpoint, EvolveScheme::Magnus4}) {
        auto k = evolve(samples(scheme == EvolveScheme::Magnus4 ? 400 : 20000, beta, lam), gamma, beta, scheme);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(k.k[i][j] == doctest::Approx(ref[i][j]).epsilon(1e-8));
    }
}

TEST_CASE("grid refinement orders") {
    double gamma = 0.5, beta = 4.0;
    auto lam = [&](double t) { return 0.4 * std::cos(2 * std::numbers::pi * t / beta) + 0.1; };
    auto ref = rk4(lam, gamma, beta, 400000);
    double tr_ref = ref[0][0] + ref[1][1];
    auto err = [&](int n, EvolveScheme s) { return std::abs(evolve(samples(n, beta, lam), gamma, beta, s).trace - tr_ref); };
    double r2 = err(64, EvolveScheme::Midpoint) / err(128, EvolveScheme::Midpoint);
    CHECK(r2 == doctest::Approx(4.0).epsilon(0.05));
    double r4 = err(16, EvolveScheme::Magnus4) / err(32, EvolveScheme::Magnus4);
    CHECK(r4 == doctest::Approx(16.0).epsilon(0.1));
    // successive differences shrink at the same rate
    auto tr = [&](int n) { return evolve(samples(n, beta, lam), gamma, beta).trace; };
    double d1 = std::abs(tr(100) - tr(200)), d2 = std::abs(tr(200) - tr(400));
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("unit determinant and the trace identity") {
    for (double beta : {0.5, 3.0, 9.0}) {
        for (int seed = 1; seed <= 5; ++seed) {
            auto lam = [&](double t) { return 0.7 * std::sin(seed * 2 * std::numbers::pi * t / beta + seed) - 0.2 * seed / 5; };
            auto k = evolve(samples(257, beta, lam), 0.3 * seed, beta);
            double big = 0.0;
            for (const auto& row : k.k)
                for (double x : row) big = std::max(big, std::abs(x));
            CHECK(std::abs(k.det() - 1.0) < 1e-9 * std::max(1.0, big * big));
            CHECK(k.trace >= 2.0);
            // Tr(Kσy) is imaginary for real K, so it enters with the opposite sign
            double tx = k.k[0][1] + k.k[1][0], tz = k.k[0][0] - k.k[1][1], ty = k.k[0][1] - k.k[1][0];
            double id = k.trace * k.trace - tx * tx - tz * tz + ty * ty;
            CHECK(std::abs(id - 4.0) < 1e-8 * k.trace * k.trace);
        }
    }
}

TEST_CASE("functional reduces to the static free energy") {
    for (auto [g, h] : {std::pair{0.4, 0.0}, {0.5, 0.1}, {1.2, -0.3}}) {
        auto model = ModelSpec::curie_weiss(g, h);
        for (double m : {-0.7, 0.0, 0.25, 0.9}) {
            std::vector<double> path(65, m);
            CHECK(functional_free_energy(path, model, 3.5) == doctest::Approx(static_free_energy(m, model, 3.5)).epsilon(1e-12));
        }
    }
}

TEST_CASE("functional on the instanton") {
    for (auto [g, h, b] : {std::tuple{0.5, 0.0, 8.0}, {0.4, 0.1, 10.0}}) {
        auto model = ModelSpec::curie_weiss(g, h);
        auto d = delta_F(model, b);
        REQUIRE(d.solution.regime == SaddleRegime::Instanton);
        CHECK(std::abs(b * d.frak_f - b * d.wkb_form) < 1e-6);
        CHECK(std::abs(d.beta_delta - d.solution.alpha) < 1e-6);
        CHECK(d.delta > 0.0);

        const auto& tr = d.solution.trajectory;
        int n = 4096;
        std::vector<double> lam(n + 1);
        for (int i = 0; i <= n; ++i) {
            double t = b * i / n;
            size_t j = 1;
            while (j + 1 < tr.size() && tr[j].tau < t) ++j;
            double w = (t - tr[j - 1].tau) / (tr[j].tau - tr[j - 1].tau);
            lam[i] = model.dg(tr[j - 1].m_z + w * (tr[j].m_z - tr[j - 1].m_z));
        }
        auto k = evolve(lam, g, b, EvolveScheme::Magnus4);
        double ell = d.solution.ell;
        CHECK(k.trace == doctest::Approx(2.0 / std::sqrt(1.0 - ell * ell)).epsilon(1e-4));
        CHECK(ell_estimate(k) == doctest::Approx(ell).epsilon(1e-7));
    }
}

TEST_CASE("central equivalence in the fallback regime") {
    auto model = ModelSpec::curie_weiss(0.4, 0.0);
    double beta = 4.0;
    auto d = delta_F(model, beta);
    CHECK(d.solution.regime == SaddleRegime::StaticFallback);
    auto ext = static_extrema(model, beta);
    REQUIRE(ext.m2.has_value());
    double f2 = static_free_energy(*ext.m2, model, beta);
    CHECK(d.beta_delta == doctest::Approx(beta * (f2 - ext.f0)).epsilon(1e-10));
    CHECK(std::abs(d.beta_delta - wkb_alpha(model, beta).alpha) < 1e-6);
    CHECK(d.beta_delta == doctest::Approx(oracle::alpha({0.4, 0.0}, beta)).epsilon(1e-6));
}

TEST_CASE("replica identities") {
    auto model = ModelSpec::curie_weiss(0.5, 0.0);
    auto s = solve_instanton(model, 8.0);
    auto r = replica_check(s, model);
    CHECK(std::abs(r.antisym_trace - 1.0) < 1e-8);
    CHECK(std::abs(r.kappa_plus * r.kappa_minus - 1.0) < 1e-8);
    CHECK(r.kappa_plus > 1.0);
    CHECK(r.kappa_plus == doctest::Approx(std::exp(2.0 * s.script_i)).epsilon(1e-6));
    CHECK(r.kappa_minus == doctest::Approx(std::exp(-2.0 * s.script_i)).epsilon(1e-6));
    CHECK(r.kappa_plus == doctest::Approx(r.kappa_plus_rho).epsilon(1e-6));
    CHECK(r.sym_trace == doctest::Approx(1.0 + r.kappa_plus + r.kappa_minus).epsilon(1e-7));
    CHECK(r.trace_k == doctest::Approx(r.trace_closed_form).epsilon(1e-6));
    CHECK(r.trace_k == doctest::Approx(2.0 * std::cosh(s.script_i)).epsilon(1e-6));
    CHECK(std::abs(r.det_k - 1.0) < 1e-9);
    CHECK(std::abs(r.ell_from_k - s.ell) < 1e-7);
    CHECK(r.bilinear_drift < 1e-8);
    CHECK(r.unit_eigen_residual < 1e-7);

    InstantonSolution bare = s;
    bare.trajectory.clear();
    CHECK(oracle::code_of([&] { replica_check(bare, model); }).has_value());
}

TEST_CASE("identity suite") {
    for (auto [g, h, b] : {std::tuple{0.4, 0.0, 4.0}, {0.5, 0.0, 4.0}, {0.4, 0.1, 6.0}, {0.5, 0.0, 8.0}, {0.4, 0.1, 10.0}}) {
        auto lines = verify_identities(ModelSpec::curie_weiss(g, h), b);
        CHECK(lines.size() >= 10);
        for (const auto& l : lines) {
            INFO(l.name, " ", l.residual, " > ", l.threshold);
            CHECK(l.ok());
        }
        std::ostringstream out;
        write_identity_report(out, lines);
        CHECK(out.str().find("FAIL") == std::string::npos);
        CHECK(out.str().find("functional_vs_wkb") != std::string::npos);
    }
}
