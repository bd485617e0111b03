#pragma once

// Escape-time scaling fits, the WKB vs QMC comparison campaign and the
// narrow-spike barrier analysis.

#include "qtunnel/model.hpp"
#include "qtunnel/qmc.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qtunnel {

struct FitOptions {
    int n_min = 12;
    int n_max = 16;
    int bootstrap = 1000;
    std::uint64_t seed = 0;
    int min_runs = 50;
};

/// Line through (N, ln(mean sweeps · N)); the slope is α.
struct ScalingFit {
    double alpha = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;  // bootstrap over runs within each N
    int n_min = 0;
    int n_max = 0;
    std::vector<int> n_values;
    std::vector<int> n_runs_per_n;
    std::vector<double> mean_sweeps;
    std::vector<double> residuals;
    int n_unescaped = 0;  // in-window runs that hit the budget; excluded
};

/// Throws InsufficientData with fewer than three N values in the window or
/// fewer than min_runs escaped runs at any of them, Domain for mixed parameters.
ScalingFit fit_alpha(const std::vector<EscapeRecord>& records, const FitOptions& options = {});

void write_fit(std::ostream& out, const ScalingFit& fit);

struct GridPoint {
    double gamma = 0.0;
    double h = 0.0;
    double beta = 0.0;
};

struct CampaignOptions {
    std::vector<int> n_list{8, 10, 12, 14, 16};
    int runs = 200;
    std::uint64_t seed_base = 1;
    int workers = 0;  // 0: hardware concurrency
    EscapeOptions escape;
    FitOptions fit;
};

/// Escape runs for every N in n_list, `runs` each, ordered by (N, run). Run
/// k of the campaign uses seed seed_base + seed_offset + k, so the output is
/// independent of the worker count.
std::vector<EscapeRecord> escape_campaign(const ModelSpec& model, double beta, const CampaignOptions& options,
                                          std::uint64_t seed_offset = 0);

struct CompareRow {
    GridPoint point;
    double alpha_wkb = 0.0;
    double alpha_qmc = 0.0;
    double alpha_qmc_err = 0.0;
    std::string status = "ok";  // otherwise the error code of the failing stage
};

struct CompareResult {
    std::vector<CompareRow> rows;
    std::vector<EscapeRecord> raw;
};

/// Curie-Weiss model at each grid point: WKB α and the fitted QMC α. A failing
/// point keeps its row with the error recorded in `status`.
CompareResult compare(const std::vector<GridPoint>& grid, const CampaignOptions& options);

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

enum class SpikeRegime { QuantumPolyClassicalExp, BothExp, WkbInvalid };

std::string_view to_string(SpikeRegime regime);

struct SpikeReport {
    double gamma_c = 0.0;
    double gamma_factor = 0.0;  // p(m_b) = γ Δg^{1/2} at leading order
    double mu_est = 0.0;
    double kappa = 0.0;
    double scaling_exponent = 0.0;  // 1 - δ - χ/2
    double classical_exponent = 0.0;  // 1 - χ
    SpikeRegime regime = SpikeRegime::BothExp;
    std::vector<int> n_values;
    std::vector<double> height;    // Δg(N)
    std::vector<double> width;     // Δm(N)
    std::vector<double> level;     // e at the degenerate minima
    std::vector<double> action;    // S(N), per spin
    std::vector<double> p_mb;      // p(m_b)
    std::vector<double> t_c_estimate;  // 1 / s0(e_b); 0 on a flat top, inf on a cusp
};

/// Spike on top of the baseline density g0 (polynomial coefficients), analysed
/// at Γ = Γ_c and l = 1 for every N in n_list.
SpikeReport spike_report(const SpikeSpec& spike, const std::vector<double>& g0_poly, const std::vector<int>& n_list = {64, 128, 256, 512});

void write_spike_report(std::ostream& out, const SpikeReport& report);

}  // namespace qtunnel
