#pragma once

// Internal numerical helpers shared by the solvers.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace qtunnel::detail {

/// Root of f inside [a, b] where f(a), f(b) have opposite signs (or one is zero).
template <class F>
double polish_root(F&& f, double a, double b, double fa, double fb) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    std::uintmax_t iters = 200;
    auto tol = [](double x, double y) { return std::abs(x - y) <= 4e-16 * std::max(1.0, std::abs(x)); };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    double lo = r.first, hi = r.second;
    double flo = f(lo);
    double fhi = f(hi);
    return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

template <class F>
double polish_root(F&& f, double a, double b) {
    return polish_root(f, a, b, f(a), f(b));
}

/// Brackets from sign changes of samples; exact zeros become degenerate brackets.
inline std::vector<std::pair<std::size_t, std::size_t>> sign_changes(const std::vector<double>& values) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t last = values.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 0.0) {
            out.emplace_back(i, i);
            last = values.size();
            continue;
        }
        if (last != values.size() && (values[last] < 0.0) != (values[i] < 0.0)) out.emplace_back(last, i);
        last = i;
    }
    return out;
}

/// Adaptive Gauss-Kronrod on [a, b].
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-13) {
    if (a == b) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 25, tol, &err);
}

/// Double-exponential quadrature on [a, b]; robust for integrands with sharp
/// features at the endpoints, and bounded in cost when roundoff limits accuracy.
template <class F>
double integrate_endpoint(F&& f, double a, double b, double tol = 1e-13) {
    if (a == b) return 0.0;
    thread_local boost::math::quadrature::tanh_sinh<double> rule(12);
    double err = 0.0;
    return rule.integrate(f, a, b, tol, &err);
}

/// ∫_{a0}^{a1} f(m) dm for integrands with square-root behaviour at both ends,
/// using m = a0 + u^2 on the left half and m = a1 - u^2 on the right half.
template <class F>
double integrate_between_turning_points(F&& f, double a0, double a1, double tol = 1e-13) {
    if (!(a1 > a0)) return 0.0;
    double mid = 0.5 * (a0 + a1);
    double w0 = std::sqrt(mid - a0);
    double w1 = std::sqrt(a1 - mid);
    double left = integrate([&](double u) { return 2.0 * u * f(a0 + u * u); }, 0.0, w0, tol);
    double right = integrate([&](double u) { return 2.0 * u * f(a1 - u * u); }, 0.0, w1, tol);
    return left + right;
}

}  // namespace qtunnel::detail
