#pragma once

// Under-barrier WKB quantities of a total-spin sector, the periodic
// instanton and the thermally assisted tunneling exponent α.

#include "qtunnel/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qtunnel {

/// Stationary points of U_l that bound the tunneling problem in sector l.
/// The metastable well is the higher of the two outer minima (left on ties).
struct SectorLandscape {
    double ell = 1.0;
    double m_meta = 0.0;  // metastable minimum of U_l
    double m_top = 0.0;   // barrier top
    double m_deep = 0.0;  // minimum on the far side
    double e_meta = 0.0;
    double e_top = 0.0;
    double e_deep = 0.0;

    double barrier() const { return e_top - e_meta; }
};

/// Throws NoBarrier when U_l has fewer than two minima.
SectorLandscape sector_landscape(double ell, const ModelSpec& model);

double momentum(double m, double e, double ell, const ModelSpec& model);

/// v_l(e, m) = sqrt((e + g)^2 - Γ^2 (l^2 - m^2)); dm_z/dτ = 2v on the instanton.
double velocity(double m, double e, double ell, const ModelSpec& model);

struct TurningPoints {
    double a0 = 0.0;
    double a1 = 0.0;
};

TurningPoints turning_points(double e, double ell, const ModelSpec& model);

/// S_l(e) = ∫ p dm between the turning points.
double action(double e, double ell, const ModelSpec& model);

/// s0 = ∫ dm / v; the τ-period of the orbit with dm_z/dτ = 2v.
double period(double e, double ell, const ModelSpec& model);

/// l ∫ |e + g| / (l^2 - m^2) dm / v over one period (= |∂S/∂l|).
double integral_I(double e, double ell, const ModelSpec& model);

/// Period of small oscillations about the barrier top, 2π / ω_top.
double top_period(double ell, const ModelSpec& model);

struct TrajectoryPoint {
    double tau = 0.0;
    double m_z = 0.0;
    double m_x = 0.0;
    double nu = 0.0;  // (1/2Γ) dm_z/dτ
};

/// n_grid + 1 samples on [0, s0] (first and last coincide), starting at a0.
/// Throws Tolerance if the integrated half period misses s0/2 by more than 1e-6.
std::vector<TrajectoryPoint> instanton_trajectory(double e, double ell, const ModelSpec& model, int n_grid = 4096);

/// Trapezoid quadrature of l |e + g(m_z)| / (l^2 - m_z^2) over a sampled orbit.
double integral_I(const std::vector<TrajectoryPoint>& trajectory, double e, double ell, const ModelSpec& model);

enum class SaddleRegime { Instanton, StaticFallback, ZeroTemperatureLimit };

std::string_view to_string(SaddleRegime regime);

struct InstantonOptions {
    double damping = 0.5;
    double ell_tol = 1e-13;
    int max_iter = 500;
    int n_grid = 4096;
    bool allow_static_fallback = true;
    bool with_trajectory = true;
};

struct InstantonSolution {
    double beta = 0.0;
    double ell = 0.0;
    double energy = 0.0;
    double a0 = 0.0;
    double a1 = 0.0;
    double action = 0.0;
    double period = 0.0;
    double script_i = 0.0;
    double alpha = 0.0;
    double frak_f = 0.0;
    double frak_f0 = 0.0;
    SaddleRegime regime = SaddleRegime::Instanton;
    int iterations = 0;
    double period_residual = 0.0;  // s0 - β
    double ell_residual = 0.0;     // l - tanh 𝓘
    std::vector<TrajectoryPoint> trajectory;
};

/// Self-consistent (e, l): s0(e, l) = β and l = tanh 𝓘(e, l). Below the
/// crossover temperature no orbit of period β exists and the saddle is the
/// static barrier top (regime StaticFallback), unless the fallback is disabled,
/// in which case NoPeriodicInstanton is thrown.
InstantonSolution solve_instanton(const ModelSpec& model, double beta, const InstantonOptions& options = {});

/// β𝔉0 = min_l (β e_meta(l) - Q_l).
double metastable_beta_free_energy(const ModelSpec& model, double beta);

struct AlphaResult {
    double alpha = 0.0;
    double beta_frak_f = 0.0;
    double beta_frak_f0 = 0.0;
    double beta_f_m0 = 0.0;  // β F(m0) from the static free energy
    SaddleRegime regime = SaddleRegime::Instanton;
    InstantonSolution solution;
};

/// Throws Tolerance if β𝔉0 and β F(m0) disagree by more than 1e-8.
AlphaResult wkb_alpha(const ModelSpec& model, double beta, const InstantonOptions& options = {});

/// Stationary point of β U_l(m) - Q_l jointly in the sector extremum m and in l.
struct SectorStationary {
    double m = 0.0;
    double ell = 0.0;
    double beta_value = 0.0;  // β U_l(m) - Q_l
    ExtremumKind kind = ExtremumKind::Minimum;
};

/// For each branch of U_l extrema (metastable, top, deep), the l where
/// atanh l = βΓ l / sqrt(l^2 - m^2); sorted by m.
std::vector<SectorStationary> ell_optimized_extrema(const ModelSpec& model, double beta);

/// Key-value preamble followed by a `tau,m_z,m_x,nu` table.
void write_solution_csv(std::ostream& out, const InstantonSolution& sol);
InstantonSolution read_solution_csv(std::istream& in);

}  // namespace qtunnel
