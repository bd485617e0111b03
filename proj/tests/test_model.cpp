#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qtunnel/error.hpp"
#include "qtunnel/model.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace qtunnel;

TEST_CASE("effective potential closed forms") {
    auto m = ModelSpec::curie_weiss(0.4, 0.0);
    CHECK(effective_potential(0.0, 1.0, m) == doctest::Approx(-0.4).epsilon(1e-15));
    for (double ell : {0.3, 0.7, 1.0}) {
        CHECK(effective_potential(ell, ell, m) == doctest::Approx(-m.g(ell)));
        CHECK(effective_potential(-ell, ell, m) == doctest::Approx(-m.g(-ell)));
    }
    for (int i = 0; i <= 200; ++i) {
        double x = -0.95 + 1.9 * i / 200;
        CHECK(effective_potential(x, 0.95, m) == doctest::Approx(effective_potential(-x, 0.95, m)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(effective_potential(0.6, 0.5, m), Error);
}

TEST_CASE("entropic factor") {
    CHECK(entropic_factor(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(entropic_factor(1.0) == 0.0);
    CHECK(entropic_factor(0.5) == doctest::Approx(0.562335).epsilon(1e-6));
    for (double ell : {0.1, 0.4, 0.9, 0.999}) {
        CHECK(entropic_factor(ell) == doctest::Approx(oracle::entropy(ell)).epsilon(1e-14));
        double h = 1e-6;
        double fd = (entropic_factor(ell + h) - entropic_factor(ell - h)) / (2 * h);
        CHECK(entropic_factor_slope(ell) == doctest::Approx(fd).epsilon(1e-7));
    }
    CHECK_THROWS_AS(entropic_factor(1.1), Error);
    CHECK_THROWS_AS(entropic_factor(-0.1), Error);
}

TEST_CASE("static free energy") {
    auto m = ModelSpec::curie_weiss(0.5, 0.0);
    for (int i = 0; i <= 100; ++i) {
        double x = -0.99 + 1.98 * i / 100;
        CHECK(static_free_energy(x, m, 3.0) == doctest::Approx(static_free_energy(-x, m, 3.0)).epsilon(1e-14));
    }
    auto free = ModelSpec::curie_weiss(0.0, 0.0);
    for (double beta : {0.5, 2.0, 7.0}) CHECK(static_free_energy(0.0, free, beta) == doctest::Approx(-std::log(2.0) / beta));
    // cosh asymptotics at large β
    double x = 0.3, beta = 40.0;
    double r = std::hypot(m.dg(x), m.gamma());
    double limit = x * m.dg(x) - m.g(x) - r;
    CHECK(std::abs(static_free_energy(x, m, beta) - limit) < 2.0 * std::exp(-2.0 * beta * r) / beta + 1e-15);
    // slope against finite differences
    auto mb = ModelSpec::curie_weiss(0.4, 0.1);
    for (double y : {-0.6, -0.1, 0.2, 0.7}) {
        double h = 1e-6;
        double fd = (static_free_energy(y + h, mb, 5.0) - static_free_energy(y - h, mb, 5.0)) / (2 * h);
        CHECK(static_free_energy_slope(y, mb, 5.0) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("static extrema classification") {
    auto sym = static_extrema(ModelSpec::curie_weiss(0.5, 0.0), 4.0);
    bool has_zero = false;
    for (const auto& e : sym.all) has_zero |= std::abs(e.m) < 1e-12;
    CHECK(has_zero);
    REQUIRE(sym.m2.has_value());
    CHECK(std::abs(*sym.m2) < 1e-12);

    auto biased = static_extrema(ModelSpec::curie_weiss(0.4, 0.015), 10.0);
    CHECK(biased.m0 < 0.0);
    CHECK(biased.m1 > 0.0);
    CHECK(biased.f0 > biased.f1);

    CHECK_THROWS_AS(static_extrema(ModelSpec::curie_weiss(2.0, 0.0), 1.0), Error);
    try {
        static_extrema(ModelSpec::curie_weiss(2.0, 0.0), 1.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Monostable);
    }
}

TEST_CASE("static extrema invariants") {
    for (auto [g, h, b] : {std::tuple{0.4, 0.0, 4.0}, {0.5, 0.0, 4.0}, {0.4, 0.1, 6.0}, {0.4, 0.015, 10.0}}) {
        auto model = ModelSpec::curie_weiss(g, h);
        auto ext = static_extrema(model, b);
        CHECK(ext.f0 >= ext.f1);
        for (const auto& e : ext.all) {
            CHECK(std::abs(static_extremum_residual(e.m, model, b)) < 1e-10);
            CHECK(std::abs(e.ell - static_ell(e.m, model, b)) < 1e-12);
            CHECK(std::abs(e.m) < 1.0);
        }
        // F at the metastable point in the sector form -Γ sqrt(l^2 - m^2) - g - Q/β
        double q = std::sqrt(ext.ell0 * ext.ell0 - ext.m0 * ext.m0);
        CHECK(std::abs(ext.f0 - (-g * q - model.g(ext.m0) - entropic_factor(ext.ell0) / b)) < 1e-9);
    }
}

TEST_CASE("critical ell") {
    double closed = std::pow(std::pow(0.21, 2.0 / 3.0) + std::pow(0.1, 2.0 / 3.0), 1.5);
    CHECK(critical_ell(ModelSpec::curie_weiss(0.21, 0.1)) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(std::abs(critical_ell(ModelSpec::curie_weiss(0.21, 0.1)) - 0.4289) < 5e-5);
    CHECK(critical_ell(ModelSpec::curie_weiss(0.3, 0.0)) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(critical_ell(ModelSpec::curie_weiss(1.0, 0.0)) == 1.0);
    CHECK(critical_ell(ModelSpec::curie_weiss(1.5, 0.2)) == 1.0);
    CHECK_THROWS_AS(critical_ell(ModelSpec(0.5, {0.0, 0.0, 0.0, 1.0})), Error);
}

TEST_CASE("sector potential bistability switches at the critical ell") {
    auto model = ModelSpec::curie_weiss(0.21, 0.1);
    double lc = critical_ell(model);
    auto count = [&](double ell) {
        const int n = 40000;
        int changes = 0;
        double prev = 0.0;
        for (int i = 1; i < n; ++i) {
            double a = -ell + 2.0 * ell * i / n, b = -ell + 2.0 * ell * (i + 1) / n;
            double d = effective_potential(b, ell, model) - effective_potential(a, ell, model);
            if (i > 1 && (d < 0.0) != (prev < 0.0)) ++changes;
            prev = d;
        }
        return changes;
    };
    for (double ell : {lc + 0.02, 0.6, 0.8, 1.0}) {
        CHECK(count(ell) == 3);
        CHECK(potential_extrema(ell, model).size() == 3);
    }
    for (double ell : {0.2, 0.3, lc - 0.02}) {
        CHECK(count(ell) == 1);
        CHECK(potential_extrema(ell, model).size() == 1);
    }
}

TEST_CASE("spike shapes") {
    for (auto s : {SpikeShape::Gaussian, SpikeShape::Rectangular, SpikeShape::Triangular}) {
        CHECK(shape_value(s, 0.0) == 1.0);
        CHECK(shape_value(s, 5.0) < 1e-5);
        CHECK(parse_spike_shape(to_string(s)) == s);
    }
    CHECK(shape_curvature(SpikeShape::Gaussian, 0.0) < 0.0);
    CHECK(shape_slope(SpikeShape::Gaussian, 0.0) == 0.0);
    CHECK_THROWS_AS(parse_spike_shape("lorentzian"), Error);

    SpikeSpec s;
    s.c = 2.0;
    s.d = 3.0;
    s.chi = 0.3;
    s.delta = 0.7;
    s.n_ref = 100.0;
    CHECK(s.height() == doctest::Approx(2.0 * std::pow(100.0, -0.3)));
    CHECK(s.width() == doctest::Approx(3.0 * std::pow(100.0, -0.7)));
    CHECK(s.in_scaling_window());
    s.delta = 0.2;
    CHECK_FALSE(s.in_scaling_window());

    // g = g0 - Δg f((m - m_b)/Δm)
    SpikeSpec sp;
    sp.shape = SpikeShape::Gaussian;
    ModelSpec model(0.5, {0.0, 1.0}, sp);
    double mb = sp.m_b, dg = sp.height();
    CHECK(model.g(mb) == doctest::Approx(mb - dg).epsilon(1e-14));
    for (double x : {0.55, 0.6, 0.61}) {
        double h = 1e-6;
        CHECK(model.dg(x) == doctest::Approx((model.g(x + h) - model.g(x - h)) / (2 * h)).epsilon(1e-6));
        CHECK(model.d2g(x) == doctest::Approx((model.dg(x + h) - model.dg(x - h)) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(ModelSpec(-0.1, {0.0, 0.0, 0.5}), Error);
    CHECK_THROWS_AS(ModelSpec(0.5, {0.0, NAN}), Error);
    CHECK(ModelSpec::curie_weiss(0.5, 0.1).is_curie_weiss());
    CHECK_FALSE(ModelSpec(0.5, {0.0, 0.0, 0.5, 0.1}).is_curie_weiss());
    auto mir = ModelSpec::curie_weiss(0.5, 0.1).mirrored();
    CHECK(mir.g(0.3) == doctest::Approx(ModelSpec::curie_weiss(0.5, 0.1).g(-0.3)));
}
