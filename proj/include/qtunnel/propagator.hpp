#pragma once

// Imaginary-time spin-1/2 propagator K = T exp ∫ (Γσx + λ(τ)σz) dτ and the
// identities it obeys on the instanton.

#include "qtunnel/io.hpp"
#include "qtunnel/model.hpp"
#include "qtunnel/wkb.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace qtunnel {

using Mat2 = std::array<std::array<double, 2>, 2>;

struct Propagator2 {
    Mat2 k{};
    double trace = 0.0;
    int grid = 0;

    double det() const { return k[0][0] * k[1][1] - k[0][1] * k[1][0]; }
};

enum class EvolveScheme {
    Midpoint,  // exact segment exponentials at interpolated midpoint fields, O(n^-2)
    Magnus4,   // fourth-order Magnus step on two Gauss points per segment, O(n^-4)
};

/// lambda holds n + 1 samples on a uniform grid over [0, β] with lambda[n] = lambda[0].
Propagator2 evolve(const std::vector<double>& lambda, double gamma, double beta, EvolveScheme scheme = EvolveScheme::Midpoint);

/// sqrt(Σ_j (Tr K σ_j)^2) / Tr K.
double ell_estimate(const Propagator2& k);

/// (1/β) ∫ [m g' - g] dτ - (1/β) ln Tr K with λ = g'(m(τ)); m holds n + 1 periodic samples.
double functional_free_energy(const std::vector<double>& m, const ModelSpec& model, double beta,
                              EvolveScheme scheme = EvolveScheme::Magnus4);

struct ReplicaCheck {
    double trace_k = 0.0;
    double two_cosh_i = 0.0;
    double trace_closed_form = 0.0;  // 2 / sqrt(1 - l^2)
    double det_k = 0.0;
    double kappa_plus = 0.0;
    double kappa_minus = 0.0;
    double kappa_plus_closed = 0.0;   // e^{2𝓘}
    double kappa_minus_closed = 0.0;  // e^{-2𝓘}
    double kappa_plus_rho = 0.0;      // exp(2Γ ∫ ϱ+ dτ)
    double kappa_minus_rho = 0.0;
    double antisym_trace = 0.0;  // Tr(K⊗K P_A)
    double sym_trace = 0.0;      // Tr(K⊗K P_S)
    double ell_from_k = 0.0;
    double ell_from_i = 0.0;
    double script_i = 0.0;
    double bilinear_drift = 0.0;  // max |B(ξ, ξ) - B(ξ0, ξ0)| over the flow, both ξ±
    double unit_eigen_residual = 0.0;  // |m(β) - m(0)| under the same flow
};

/// Requires a solution carrying a trajectory. Throws Degenerate when m_x(0)^2 + m_z(0)^2 = 0.
ReplicaCheck replica_check(const InstantonSolution& solution, const ModelSpec& model);

struct DeltaF {
    double frak_f = 0.0;     // 𝓕[m_z(τ)]
    double f_m0 = 0.0;       // F(m0)
    double delta = 0.0;      // 𝓕 - F(m0)
    double beta_delta = 0.0;  // β Δ𝓕
    double wkb_form = 0.0;   // (S + βe - Q) / β at the same saddle
    InstantonSolution solution;
};

DeltaF delta_F(const ModelSpec& model, double beta, const InstantonOptions& options = {});

struct IdentityLine {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool ok() const { return residual <= threshold; }
};

/// Every identity of the propagator and Appendix suites at (model, β).
std::vector<IdentityLine> verify_identities(const ModelSpec& model, double beta, const InstantonOptions& options = {});

/// `name = residual  # threshold  ok|FAIL` lines.
void write_identity_report(std::ostream& out, const std::vector<IdentityLine>& lines);

}  // namespace qtunnel
