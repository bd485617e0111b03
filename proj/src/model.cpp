#include "qtunnel/model.hpp"

#include "numerics.hpp"
#include "qtunnel/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace qtunnel {

SpikeShape parse_spike_shape(std::string_view name) {
    if (name == "gaussian") return SpikeShape::Gaussian;
    if (name == "rectangular") return SpikeShape::Rectangular;
    if (name == "triangular") return SpikeShape::Triangular;
    throw Error(ErrorCode::Config, "unknown spike shape '" + std::string(name) + "'");
}

std::string_view to_string(SpikeShape shape) {
    switch (shape) {
        case SpikeShape::Gaussian: return "gaussian";
        case SpikeShape::Rectangular: return "rectangular";
        case SpikeShape::Triangular: return "triangular";
    }
    return "gaussian";
}

double shape_value(SpikeShape shape, double q) {
    switch (shape) {
        case SpikeShape::Gaussian: return std::exp(-0.5 * q * q);
        case SpikeShape::Rectangular: return std::abs(q) <= 0.5 ? 1.0 : 0.0;
        case SpikeShape::Triangular: return std::max(0.0, 1.0 - std::abs(q));
    }
    return 0.0;
}

double shape_slope(SpikeShape shape, double q) {
    switch (shape) {
        case SpikeShape::Gaussian: return -q * std::exp(-0.5 * q * q);
        case SpikeShape::Rectangular: return 0.0;
        case SpikeShape::Triangular:
            if (q == 0.0 || std::abs(q) >= 1.0) return 0.0;
            return q > 0.0 ? -1.0 : 1.0;
    }
    return 0.0;
}

double shape_curvature(SpikeShape shape, double q) {
    switch (shape) {
        case SpikeShape::Gaussian: return (q * q - 1.0) * std::exp(-0.5 * q * q);
        case SpikeShape::Rectangular: return 0.0;
        // the peak is a corner: curvature is unbounded at q = 0
        case SpikeShape::Triangular: return q == 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    return 0.0;
}

double SpikeSpec::height() const { return c * std::pow(n_ref, -chi); }
double SpikeSpec::width() const { return d * std::pow(n_ref, -delta); }
bool SpikeSpec::in_scaling_window() const { return 0.0 <= chi && chi < delta && delta < 1.0; }

SpikeSpec SpikeSpec::at_size(double n) const {
    SpikeSpec out = *this;
    out.n_ref = n;
    return out;
}

ModelSpec::ModelSpec(double gamma, std::vector<double> g_poly, std::optional<SpikeSpec> spike)
    : gamma_(gamma), g_poly_(std::move(g_poly)), spike_(spike) {
    if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) throw Error(ErrorCode::Domain, "gamma must be a finite non-negative number");
    if (g_poly_.empty()) g_poly_.push_back(0.0);
    for (double c : g_poly_)
        if (!std::isfinite(c)) throw Error(ErrorCode::Domain, "g_poly coefficients must be finite");
    if (spike_) {
        const auto& s = *spike_;
        if (!(s.c > 0.0) || !(s.d > 0.0)) throw Error(ErrorCode::Domain, "spike amplitudes c and d must be positive");
        if (!(s.m_b > 0.0 && s.m_b < 1.0)) throw Error(ErrorCode::Domain, "spike centre m_b must lie in (0, 1)");
        if (!(s.n_ref >= 1.0)) throw Error(ErrorCode::Domain, "spike n_ref must be >= 1");
    }
}

ModelSpec ModelSpec::curie_weiss(double gamma, double h) { return ModelSpec(gamma, {0.0, h, 0.5}); }

double ModelSpec::g(double m) const {
    double acc = 0.0;
    for (auto it = g_poly_.rbegin(); it != g_poly_.rend(); ++it) acc = acc * m + *it;
    if (spike_) acc -= spike_->height() * shape_value(spike_->shape, (m - spike_->m_b) / spike_->width());
    return acc;
}

double ModelSpec::dg(double m) const {
    double acc = 0.0;
    for (std::size_t k = g_poly_.size(); k-- > 1;) acc = acc * m + static_cast<double>(k) * g_poly_[k];
    if (spike_) {
        double w = spike_->width();
        acc -= spike_->height() / w * shape_slope(spike_->shape, (m - spike_->m_b) / w);
    }
    return acc;
}

double ModelSpec::d2g(double m) const {
    double acc = 0.0;
    for (std::size_t k = g_poly_.size(); k-- > 2;) acc = acc * m + static_cast<double>(k * (k - 1)) * g_poly_[k];
    if (spike_) {
        double w = spike_->width();
        acc -= spike_->height() / (w * w) * shape_curvature(spike_->shape, (m - spike_->m_b) / w);
    }
    return acc;
}

bool ModelSpec::is_curie_weiss() const {
    if (spike_) return false;
    for (std::size_t k = 0; k < g_poly_.size(); ++k) {
        double expected = k == 2 ? 0.5 : 0.0;
        if (k == 1) continue;
        if (g_poly_[k] != expected) return false;
    }
    return g_poly_.size() >= 3;
}

double ModelSpec::bias() const { return g_poly_.size() > 1 ? g_poly_[1] : 0.0; }

ModelSpec ModelSpec::with_gamma(double gamma) const { return ModelSpec(gamma, g_poly_, spike_); }

ModelSpec ModelSpec::mirrored() const {
    if (spike_) throw Error(ErrorCode::UnsupportedModel, "mirroring is not defined for spike models");
    std::vector<double> poly = g_poly_;
    for (std::size_t k = 1; k < poly.size(); k += 2) poly[k] = -poly[k];
    return ModelSpec(gamma_, std::move(poly));
}

double effective_potential(double m, double ell, const ModelSpec& model) {
    if (std::abs(m) > ell * (1.0 + 1e-14))
        throw Error(ErrorCode::Domain, "effective_potential requires |m| <= ell");
    double r2 = std::max(0.0, ell * ell - m * m);
    return -model.gamma() * std::sqrt(r2) - model.g(m);
}

namespace {

// -x ln x with the removable singularity at x = 0.
double entropy_term(double x) { return x <= 0.0 ? 0.0 : -x * std::log(x); }

double log_two_cosh(double x) {
    x = std::abs(x);
    return x + std::log1p(std::exp(-2.0 * x));
}

}  // namespace

double entropic_factor(double ell) {
    if (!(ell >= 0.0 && ell <= 1.0)) throw Error(ErrorCode::Domain, "entropic_factor requires 0 <= ell <= 1");
    return entropy_term(0.5 * (1.0 + ell)) + entropy_term(0.5 * (1.0 - ell));
}

double entropic_factor_slope(double ell) {
    if (!(ell >= 0.0 && ell <= 1.0)) throw Error(ErrorCode::Domain, "entropic_factor_slope requires 0 <= ell <= 1");
    return -std::atanh(ell);
}

double static_free_energy(double m, const ModelSpec& model, double beta) {
    if (std::abs(m) > 1.0) throw Error(ErrorCode::Domain, "static_free_energy requires |m| <= 1");
    if (!(beta > 0.0)) throw Error(ErrorCode::Domain, "beta must be positive");
    double gp = model.dg(m);
    double r = std::hypot(gp, model.gamma());
    return m * gp - model.g(m) - log_two_cosh(beta * r) / beta;
}

double static_free_energy_slope(double m, const ModelSpec& model, double beta) {
    double gp = model.dg(m);
    double r = std::hypot(gp, model.gamma());
    double ratio = r > 0.0 ? std::tanh(beta * r) * gp / r : beta * gp;
    return model.d2g(m) * (m - ratio);
}

double static_ell(double m, const ModelSpec& model, double beta) {
    return std::tanh(beta * std::hypot(model.gamma(), model.dg(m)));
}

double static_extremum_residual(double m, const ModelSpec& model, double beta) {
    double gp = model.dg(m);
    double r = std::hypot(model.gamma(), gp);
    return m * r - gp * std::tanh(beta * r);
}

namespace {

constexpr int kScanPoints = 4096;

ExtremumKind classify(double left_slope, double right_slope) {
    return left_slope <= 0.0 && right_slope >= 0.0 ? ExtremumKind::Minimum : ExtremumKind::Maximum;
}

}  // namespace

StaticExtrema static_extrema(const ModelSpec& model, double beta) {
    if (!(beta > 0.0)) throw Error(ErrorCode::Domain, "beta must be positive");
    auto residual = [&](double m) { return static_extremum_residual(m, model, beta); };

    std::vector<double> grid(kScanPoints), values(kScanPoints);
    for (int i = 0; i < kScanPoints; ++i) {
        grid[i] = -1.0 + (i + 0.5) * 2.0 / kScanPoints;
        values[i] = residual(grid[i]);
    }

    std::vector<Extremum> found;
    for (auto [i, j] : detail::sign_changes(values)) {
        double m = i == j ? grid[i] : detail::polish_root(residual, grid[i], grid[j], values[i], values[j]);
        double h = 1e-6;
        double sl = static_free_energy_slope(std::max(-1.0, m - h), model, beta);
        double sr = static_free_energy_slope(std::min(1.0, m + h), model, beta);
        if ((sl < 0.0) == (sr < 0.0) && sl != 0.0 && sr != 0.0) continue;  // inflection of g, not an extremum of F
        Extremum e;
        e.m = m;
        e.value = static_free_energy(m, model, beta);
        e.kind = classify(sl, sr);
        e.ell = static_ell(m, model, beta);
        found.push_back(e);
    }

    std::vector<std::size_t> minima;
    for (std::size_t k = 0; k < found.size(); ++k)
        if (found[k].kind == ExtremumKind::Minimum) minima.push_back(k);
    if (minima.size() < 2)
        throw Error(ErrorCode::Monostable, "free energy has a single minimum: no metastable state");

    // Global minimum; near-ties resolve to the rightmost well so that the
    // left well is metastable for symmetric models.
    double fmin = found[minima.front()].value;
    for (auto k : minima) fmin = std::min(fmin, found[k].value);
    double tie = 1e-12 * std::max(1.0, std::abs(fmin));
    std::size_t global = minima.front();
    for (auto k : minima)
        if (found[k].value <= fmin + tie) global = k;
    std::size_t meta = minima.front() != global ? minima.front() : minima.back();

    StaticExtrema out;
    out.all = found;
    out.m0 = found[meta].m;
    out.f0 = found[meta].value;
    out.ell0 = found[meta].ell;
    out.m1 = found[global].m;
    out.f1 = found[global].value;
    out.ell1 = found[global].ell;
    double lo = std::min(out.m0, out.m1), hi = std::max(out.m0, out.m1);
    for (const auto& e : found) {
        if (e.kind != ExtremumKind::Maximum || e.m <= lo || e.m >= hi) continue;
        if (!out.m2 || e.value > out.f2) {
            out.m2 = e.m;
            out.f2 = e.value;
            out.ell2 = e.ell;
        }
    }
    return out;
}

std::vector<Extremum> potential_extrema(double ell, const ModelSpec& model) {
    if (!(ell > 0.0 && ell <= 1.0)) throw Error(ErrorCode::Domain, "potential_extrema requires 0 < ell <= 1");
    const double gamma = model.gamma();
    // sqrt(l^2 - m^2) U_l'(m): bounded, same sign as U_l'.
    auto slope = [&](double m) { return gamma * m - model.dg(m) * std::sqrt(std::max(0.0, ell * ell - m * m)); };

    std::vector<double> grid(kScanPoints), values(kScanPoints);
    for (int i = 0; i < kScanPoints; ++i) {
        double theta = -0.5 * std::numbers::pi + (i + 0.5) * std::numbers::pi / kScanPoints;
        grid[i] = ell * std::sin(theta);
        values[i] = slope(grid[i]);
    }
    std::vector<Extremum> out;
    for (auto [i, j] : detail::sign_changes(values)) {
        double m = i == j ? grid[i] : detail::polish_root(slope, grid[i], grid[j], values[i], values[j]);
        double sl = i == j ? (i > 0 ? values[i - 1] : -1.0) : values[i];
        double sr = i == j ? (j + 1 < values.size() ? values[j + 1] : 1.0) : values[j];
        Extremum e;
        e.m = m;
        e.value = effective_potential(m, ell, model);
        e.kind = classify(sl, sr);
        e.ell = ell;
        out.push_back(e);
    }
    return out;
}

double critical_ell(const ModelSpec& model) {
    if (!model.is_curie_weiss()) throw Error(ErrorCode::UnsupportedModel, "critical_ell is defined for Curie-Weiss models only");
    double h = std::abs(model.bias());
    double lc = std::pow(std::pow(h, 2.0 / 3.0) + std::pow(model.gamma(), 2.0 / 3.0), 1.5);
    return std::min(1.0, lc);
}

}  // namespace qtunnel
