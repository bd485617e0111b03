#pragma once

// Mean-field transverse-field spin models H = -2Γ S_x - N g(2 S_z / N):
// interaction densities, the sector effective potential, the static free
// energy and their extrema.

#include <optional>
#include <string_view>
#include <vector>

namespace qtunnel {

enum class SpikeShape { Gaussian, Rectangular, Triangular };

SpikeShape parse_spike_shape(std::string_view name);
std::string_view to_string(SpikeShape shape);

/// Barrier profile f(q): single maximum f(0) = 1, decaying for |q| >> 1.
/// Gaussian e^{-q^2/2}; rectangular of unit total width; triangular 1-|q|.
double shape_value(SpikeShape shape, double q);
double shape_slope(SpikeShape shape, double q);
double shape_curvature(SpikeShape shape, double q);

/// Narrow barrier -g += Δg f((m - m_b)/Δm) with Δg = c N^-χ, Δm = d N^-δ
/// instantiated at N = n_ref.
struct SpikeSpec {
    double c = 1.0;
    double d = 1.0;
    double chi = 0.4;
    double delta = 0.8;
    double m_b = 0.6;
    SpikeShape shape = SpikeShape::Gaussian;
    double n_ref = 64.0;

    double height() const;
    double width() const;
    /// 0 <= chi < delta < 1.
    bool in_scaling_window() const;
    SpikeSpec at_size(double n) const;
};

class ModelSpec {
public:
    /// g_poly holds polynomial coefficients from degree 0 upwards.
    ModelSpec(double gamma, std::vector<double> g_poly, std::optional<SpikeSpec> spike = std::nullopt);

    /// g(m) = m^2/2 + h m.
    static ModelSpec curie_weiss(double gamma, double h);

    double gamma() const { return gamma_; }
    const std::vector<double>& g_poly() const { return g_poly_; }
    const std::optional<SpikeSpec>& spike() const { return spike_; }

    double g(double m) const;
    double dg(double m) const;
    double d2g(double m) const;

    bool is_curie_weiss() const;
    /// Linear coefficient of g_poly (the bias h for Curie-Weiss).
    double bias() const;

    ModelSpec with_gamma(double gamma) const;
    /// g(m) -> g(-m); swaps the roles of the two wells.
    ModelSpec mirrored() const;

private:
    double gamma_;
    std::vector<double> g_poly_;
    std::optional<SpikeSpec> spike_;
};

/// U_l(m) = -Γ sqrt(l^2 - m^2) - g(m). Throws Domain when |m| > l.
double effective_potential(double m, double ell, const ModelSpec& model);

/// Binary entropy of total-spin sectors, Q_l; Q_0 = ln 2, Q_1 = 0.
double entropic_factor(double ell);

/// dQ/dl = -atanh(l).
double entropic_factor_slope(double ell);

/// F(m) = m g'(m) - g(m) - (1/β) ln(2 cosh(β sqrt(g'(m)^2 + Γ^2))).
double static_free_energy(double m, const ModelSpec& model, double beta);

double static_free_energy_slope(double m, const ModelSpec& model, double beta);

/// l = tanh(β sqrt(Γ^2 + g'(m)^2)), the total-spin fraction attached to a static point.
double static_ell(double m, const ModelSpec& model, double beta);

/// m sqrt(Γ^2 + g'^2) - g'(m) l; zero at every extremum of F.
double static_extremum_residual(double m, const ModelSpec& model, double beta);

enum class ExtremumKind { Minimum, Maximum };

struct Extremum {
    double m = 0.0;
    double value = 0.0;  // F(m) or U_l(m), depending on the producer
    ExtremumKind kind = ExtremumKind::Minimum;
    double ell = 1.0;
};

struct StaticExtrema {
    double m0 = 0.0;  // metastable minimum
    double m1 = 0.0;  // global minimum
    std::optional<double> m2;  // barrier top between m0 and m1
    double f0 = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double ell0 = 0.0;
    double ell1 = 0.0;
    double ell2 = 0.0;
    std::vector<Extremum> all;

    double m_mid() const { return 0.5 * (m0 + m1); }
};

/// All extrema of F on (-1, 1) from a 4096-point sign scan of the extremum
/// residual, polished to |dm| < 1e-12. Throws Monostable with fewer than two minima.
StaticExtrema static_extrema(const ModelSpec& model, double beta);

/// Extrema of U_l on (-l, l), ascending in m.
std::vector<Extremum> potential_extrema(double ell, const ModelSpec& model);

/// Curie-Weiss only: l_c = (h^{2/3} + Γ^{2/3})^{3/2}, clamped to 1.
double critical_ell(const ModelSpec& model);

}  // namespace qtunnel
