#pragma once

// Continuous-time worldline path-integral Monte Carlo for the Gibbs path
// measure W ∝ Γ^{#kinks} exp(N ∫ g(m(τ)) dτ), plus the metastable escape
// experiment.

#include "qtunnel/model.hpp"

#include <cstdint>
#include <array>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace qtunnel {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);

/// Independent stream for (seed, stream) pairs.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform on [0, 1) from the top 53 bits.
double uniform01(Rng& rng);

struct Worldline {
    int base_sign = -1;         // σ(0)
    std::vector<double> kinks;  // strictly increasing, in [0, β), even count

    int sign_at(double tau) const;
};

class WorldlineConfig {
public:
    WorldlineConfig(int n_spins, double beta);

    int n_spins() const { return static_cast<int>(lines_.size()); }
    double beta() const { return beta_; }
    const std::vector<Worldline>& worldlines() const { return lines_; }
    const Worldline& worldline(int j) const { return lines_[j]; }

    /// Σ_j σ_j(0).
    int total_sign_at_zero() const { return sum0_; }
    int total_kinks() const { return static_cast<int>(events_.size()); }

    /// Breakpoints of m(τ) = (1/N) Σ σ_j(τ): all kink times with their spin, ascending.
    struct Event {
        double tau;
        int spin;
    };
    const std::vector<Event>& events() const { return events_; }

    /// Piecewise-constant m(τ) as (start time, m) pairs covering [0, β).
    std::vector<std::pair<double, double>> m_profile() const;

    /// Replaces worldline j and refreshes the cached profile.
    void set_worldline(int j, Worldline w);
    /// Toggles the sign of worldline j on the cyclic interval [a, b); when
    /// a == b the whole worldline flips. Kinks are added or removed at a and b.
    void flip_interval(int j, double a, double b, bool whole = false);

    /// Throws Domain when a kink list is odd, unsorted, out of [0, β), or the cache is stale.
    void validate() const;

private:
    void rebuild();

    double beta_;
    std::vector<Worldline> lines_;
    std::vector<Event> events_;
    int sum0_ = 0;
};

/// Σ κ_j ln Γ + N ∫_0^β g(m(τ)) dτ, the integral summed exactly over segments.
double log_weight(const WorldlineConfig& config, const ModelSpec& model);

/// All worldlines σ = -1 without kinks.
WorldlineConfig init_metastable(int n, double beta);

struct SweepStats {
    std::uint64_t attempted[4] = {0, 0, 0, 0};  // insert, remove, shift, flip
    std::uint64_t accepted[4] = {0, 0, 0, 0};
};

struct SamplerOptions {
    int max_kinks_per_line = -1;  // < 0: no cap
    bool debug_validate = false;
};

/// Metropolis chain on one configuration. A sweep is N attempts, each on a
/// uniformly chosen worldline with move probabilities insert 0.3, remove 0.3,
/// shift 0.2, whole flip 0.2.
class Sampler {
public:
    Sampler(WorldlineConfig config, ModelSpec model, Rng rng, SamplerOptions options = {});

    void sweep();
    void sweeps(std::uint64_t count);

    const WorldlineConfig& config() const { return config_; }
    const ModelSpec& model() const { return model_; }
    const SweepStats& stats() const { return stats_; }
    Rng& rng() { return rng_; }
    std::uint64_t sweeps_done() const { return sweeps_done_; }

    /// Running log weight maintained from accepted moves.
    double running_log_weight() const { return log_w_; }
    /// |running - recomputed|; also resynchronises the running value.
    double resync_log_weight();

    void save_checkpoint(std::ostream& out) const;
    static Sampler load_checkpoint(std::istream& in, const ModelSpec& model, SamplerOptions options = {});

private:
    void attempt();
    bool try_insert(int j);
    bool try_remove(int j);
    bool try_shift(int j);
    bool try_flip(int j);
    /// N ∫ [g(m') - g(m)] over the cyclic interval [a, b) (or all of [0, β)
    /// when whole) if worldline j were flipped there.
    double delta_interaction(int j, double a, double b, bool whole) const;
    bool accept(double log_ratio);

    WorldlineConfig config_;
    ModelSpec model_;
    Rng rng_;
    SamplerOptions options_;
    SweepStats stats_;
    std::uint64_t sweeps_done_ = 0;
    double log_w_ = 0.0;
    double log_gamma_ = 0.0;
};

struct EquilibriumOptions {
    std::uint64_t burn_in = 1000;
    std::uint64_t n_samples = 100000;
    std::uint64_t thin = 1;
};

/// Normalised histogram of M = Σ σ_j(0) / 2 over M = -N/2..N/2 (index M + N/2),
/// starting from a random product state.
std::vector<double> equilibrium_sample(int n, const ModelSpec& model, double beta, Rng& rng,
                                       const EquilibriumOptions& options = {});

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

struct EscapeRecord {
    int n_spins = 0;
    double beta = 0.0;
    double gamma = 0.0;
    double h = 0.0;
    std::uint64_t seed = 0;
    double sweeps = 0.0;  // integral for simulated runs
    bool escaped = false;
};

struct EscapeOptions {
    std::uint64_t max_sweeps = 100000000;
    double reversal_fraction = 0.25;
    std::string checkpoint_path;  // empty: no checkpoints
    std::uint64_t checkpoint_every = 1000000;
};

/// Fraction of [0, β) on which m(τ) > m_mid.
double time_fraction_above(const WorldlineConfig& config, double m_mid);

/// From init_metastable, sweeps until the time fraction above the midpoint of
/// the static minima exceeds options.reversal_fraction. escaped = false when
/// the budget runs out.
EscapeRecord escape_run(int n, const ModelSpec& model, double beta, std::uint64_t seed, const EscapeOptions& options = {});

void write_escape_header(std::ostream& out);
void write_escape_record(std::ostream& out, const EscapeRecord& record);
/// Reads `n,beta,gamma,h,seed,sweeps,escaped` rows; '#' lines are skipped.
std::vector<EscapeRecord> read_escape_records(std::istream& in);

}  // namespace qtunnel
