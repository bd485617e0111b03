#include "qtunnel/qmc.hpp"

#include "qtunnel/error.hpp"
#include "qtunnel/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qtunnel {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (stream * 0xd1b54a32d192ed03ULL);
    std::vector<std::uint32_t> words;
    for (int i = 0; i < 8; ++i) {
        auto x = splitmix64(s);
        words.push_back(static_cast<std::uint32_t>(x));
        words.push_back(static_cast<std::uint32_t>(x >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

int uniform_index(Rng& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

// position of t measured forward from origin on the circle of length beta
double forward(double t, double origin, double beta) {
    double d = t - origin;
    return d < 0.0 ? d + beta : d;
}

void toggle_kink(std::vector<double>& kinks, double t) {
    auto it = std::lower_bound(kinks.begin(), kinks.end(), t);
    if (it != kinks.end() && *it == t)
        kinks.erase(it);
    else
        kinks.insert(it, t);
}

}  // namespace

int Worldline::sign_at(double tau) const {
    auto crossed = std::upper_bound(kinks.begin(), kinks.end(), tau) - kinks.begin();
    return crossed % 2 == 0 ? base_sign : -base_sign;
}

WorldlineConfig::WorldlineConfig(int n_spins, double beta) : beta_(beta), lines_(n_spins) {
    if (n_spins < 1) throw Error(ErrorCode::Domain, "need at least one spin");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::Domain, "beta must be positive");
    rebuild();
}

void WorldlineConfig::rebuild() {
    events_.clear();
    sum0_ = 0;
    for (int j = 0; j < n_spins(); ++j) {
        sum0_ += lines_[j].base_sign;
        for (double t : lines_[j].kinks) events_.push_back({t, j});
    }
    std::sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
        return a.tau < b.tau || (a.tau == b.tau && a.spin < b.spin);
    });
}

std::vector<std::pair<double, double>> WorldlineConfig::m_profile() const {
    std::vector<int> sig(n_spins());
    for (int j = 0; j < n_spins(); ++j) sig[j] = lines_[j].base_sign;
    int total = sum0_;
    const double n = n_spins();
    std::vector<std::pair<double, double>> out{{0.0, total / n}};
    for (const auto& e : events_) {
        total -= 2 * sig[e.spin];
        sig[e.spin] = -sig[e.spin];
        if (out.back().first == e.tau)
            out.back().second = total / n;
        else
            out.emplace_back(e.tau, total / n);
    }
    return out;
}

void WorldlineConfig::set_worldline(int j, Worldline w) {
    lines_.at(j) = std::move(w);
    rebuild();
}

void WorldlineConfig::flip_interval(int j, double a, double b, bool whole) {
    auto& w = lines_.at(j);
    if (whole) {
        w.base_sign = -w.base_sign;
    } else {
        if (a > b) w.base_sign = -w.base_sign;
        toggle_kink(w.kinks, a);
        toggle_kink(w.kinks, b);
    }
    rebuild();
}

void WorldlineConfig::validate() const {
    for (int j = 0; j < n_spins(); ++j) {
        const auto& w = lines_[j];
        if (w.base_sign != 1 && w.base_sign != -1) throw Error(ErrorCode::Domain, "base sign must be +-1");
        if (w.kinks.size() % 2 != 0) throw Error(ErrorCode::Domain, "odd kink count on worldline " + std::to_string(j));
        for (std::size_t k = 0; k < w.kinks.size(); ++k) {
            if (!(w.kinks[k] >= 0.0 && w.kinks[k] < beta_)) throw Error(ErrorCode::Domain, "kink time outside [0, beta)");
            if (k > 0 && !(w.kinks[k - 1] < w.kinks[k])) throw Error(ErrorCode::Domain, "kink times not strictly increasing");
        }
    }
    WorldlineConfig fresh(n_spins(), beta_);
    fresh.lines_ = lines_;
    fresh.rebuild();
    if (fresh.sum0_ != sum0_ || fresh.events_.size() != events_.size())
        throw Error(ErrorCode::Domain, "cached magnetization profile is stale");
    for (std::size_t k = 0; k < events_.size(); ++k)
        if (fresh.events_[k].tau != events_[k].tau || fresh.events_[k].spin != events_[k].spin)
            throw Error(ErrorCode::Domain, "cached magnetization profile is stale");
    for (auto [t, m] : m_profile()) {
        double k = (m + 1.0) * n_spins() / 2.0;
        if (std::abs(k - std::round(k)) > 1e-9 || m < -1.0 - 1e-12 || m > 1.0 + 1e-12)
            throw Error(ErrorCode::Domain, "magnetization profile off the 2/N lattice");
    }
}

double log_weight(const WorldlineConfig& config, const ModelSpec& model) {
    const auto profile = config.m_profile();
    double integral = 0.0;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        double t1 = k + 1 < profile.size() ? profile[k + 1].first : config.beta();
        integral += model.g(profile[k].second) * (t1 - profile[k].first);
    }
    double out = config.n_spins() * integral;
    if (config.total_kinks() > 0) out += config.total_kinks() * std::log(model.gamma());
    return out;
}

WorldlineConfig init_metastable(int n, double beta) { return WorldlineConfig(n, beta); }

// ---------------------------------------------------------------------------

Sampler::Sampler(WorldlineConfig config, ModelSpec model, Rng rng, SamplerOptions options)
    : config_(std::move(config)), model_(std::move(model)), rng_(rng), options_(options) {
    log_gamma_ = std::log(model_.gamma());
    log_w_ = log_weight(config_, model_);
}

double Sampler::delta_interaction(int j, double a, double b, bool whole) const {
    const int n = config_.n_spins();
    const double beta = config_.beta();
    const auto& events = config_.events();
    std::vector<int> sig(n);
    for (int s = 0; s < n; ++s) sig[s] = config_.worldline(s).base_sign;
    int total = config_.total_sign_at_zero();

    std::array<double, 2> cuts{std::min(a, b), std::max(a, b)};
    auto in_flip = [&](double t0) {
        if (whole) return true;
        return a < b ? (t0 >= a && t0 < b) : (t0 >= a || t0 < b);
    };
    double acc = 0.0, t0 = 0.0;
    std::size_t ie = 0;
    int ic = whole ? 2 : 0;
    auto piece = [&](double t1) {
        if (t1 > t0 && in_flip(t0)) {
            double m = static_cast<double>(total) / n;
            double m_new = static_cast<double>(total - 2 * sig[j]) / n;
            acc += (model_.g(m_new) - model_.g(m)) * (t1 - t0);
        }
        t0 = std::max(t0, t1);
    };
    while (ie < events.size() || ic < 2) {
        bool take_cut = ic < 2 && (ie >= events.size() || cuts[ic] <= events[ie].tau);
        if (take_cut) {
            piece(cuts[ic]);
            ++ic;
        } else {
            const auto& e = events[ie++];
            piece(e.tau);
            total -= 2 * sig[e.spin];
            sig[e.spin] = -sig[e.spin];
        }
    }
    piece(beta);
    return n * acc;
}

bool Sampler::accept(double log_ratio) {
    if (log_ratio >= 0.0) return true;
    return uniform01(rng_) < std::exp(log_ratio);
}

// Insertion: t_a uniform on [0, β), t_b uniform on the kink-free arc of
// length L that follows t_a; the arc [t_a, t_b) flips. Density 1 / (β L).
// Its reverse picks one of the k + 2 kinks and removes it with its cyclic
// successor. Acceptance Γ² e^{ΔV} β L / (k + 2).
bool Sampler::try_insert(int j) {
    const double beta = config_.beta();
    const auto& kinks = config_.worldline(j).kinks;
    const int k = static_cast<int>(kinks.size());
    if (options_.max_kinks_per_line >= 0 && k + 2 > options_.max_kinks_per_line) return false;
    if (model_.gamma() == 0.0) return false;
    double ta = beta * uniform01(rng_);
    double len = beta;
    if (k > 0) {
        auto it = std::upper_bound(kinks.begin(), kinks.end(), ta);
        double next = it == kinks.end() ? kinks.front() + beta : *it;
        len = next - ta;
    }
    double tb = ta + len * uniform01(rng_);
    if (tb >= beta) tb -= beta;
    if (tb == ta || !(tb >= 0.0 && tb < beta) || std::binary_search(kinks.begin(), kinks.end(), tb) ||
        std::binary_search(kinks.begin(), kinks.end(), ta))
        return false;
    double dv = delta_interaction(j, ta, tb, false);
    double log_ratio = 2.0 * log_gamma_ + dv + std::log(beta * len / (k + 2));
    if (!accept(log_ratio)) return false;
    config_.flip_interval(j, ta, tb);
    log_w_ += 2.0 * log_gamma_ + dv;
    return true;
}

// Removal of kink i and its cyclic successor; the reverse insertion lands on
// t_i and draws t_{i+1} from the arc up to t_{i+2} (length L', β if k = 2).
bool Sampler::try_remove(int j) {
    const double beta = config_.beta();
    const auto& kinks = config_.worldline(j).kinks;
    const int k = static_cast<int>(kinks.size());
    if (k < 2) return false;
    int i = uniform_index(rng_, k);
    double ta = kinks[i], tb = kinks[(i + 1) % k];
    double len = k == 2 ? beta : forward(kinks[(i + 2) % k], ta, beta);
    double dv = delta_interaction(j, ta, tb, false);
    double log_ratio = -2.0 * log_gamma_ + dv + std::log(k / (beta * len));
    if (!accept(log_ratio)) return false;
    config_.flip_interval(j, ta, tb);
    log_w_ += -2.0 * log_gamma_ + dv;
    return true;
}

// Moves one kink uniformly within the open arc between its neighbours; symmetric.
bool Sampler::try_shift(int j) {
    const double beta = config_.beta();
    const auto& kinks = config_.worldline(j).kinks;
    const int k = static_cast<int>(kinks.size());
    if (k < 2) return false;
    int i = uniform_index(rng_, k);
    double prev = kinks[(i + k - 1) % k], next = kinks[(i + 1) % k], old = kinks[i];
    double arc = k == 2 ? beta : forward(next, prev, beta);
    double off = arc * uniform01(rng_);
    if (off == 0.0) return false;
    double t = prev + off;
    if (t >= beta) t -= beta;
    if (t == old || !(t >= 0.0 && t < beta)) return false;
    double a = old, b = t;
    if (forward(t, prev, beta) < forward(old, prev, beta)) std::swap(a, b);
    double dv = delta_interaction(j, a, b, false);
    if (!accept(dv)) return false;
    config_.flip_interval(j, a, b);
    log_w_ += dv;
    return true;
}

bool Sampler::try_flip(int j) {
    double dv = delta_interaction(j, 0.0, 0.0, true);
    if (!accept(dv)) return false;
    config_.flip_interval(j, 0.0, 0.0, true);
    log_w_ += dv;
    return true;
}

void Sampler::attempt() {
    int j = uniform_index(rng_, config_.n_spins());
    double u = uniform01(rng_);
    int move = u < 0.3 ? 0 : u < 0.6 ? 1 : u < 0.8 ? 2 : 3;
    bool ok = false;
    switch (move) {
        case 0: ok = try_insert(j); break;
        case 1: ok = try_remove(j); break;
        case 2: ok = try_shift(j); break;
        default: ok = try_flip(j); break;
    }
    ++stats_.attempted[move];
    if (ok) ++stats_.accepted[move];
}

void Sampler::sweep() {
    for (int a = 0; a < config_.n_spins(); ++a) attempt();
    ++sweeps_done_;
    if (options_.debug_validate) config_.validate();
}

void Sampler::sweeps(std::uint64_t count) {
    for (std::uint64_t s = 0; s < count; ++s) sweep();
}

double Sampler::resync_log_weight() {
    double fresh = log_weight(config_, model_);
    double drift = std::abs(fresh - log_w_);
    log_w_ = fresh;
    return drift;
}

void Sampler::save_checkpoint(std::ostream& out) const {
    out << "qtunnel-checkpoint 1\n";
    out << config_.n_spins() << ' ' << format_double(config_.beta()) << ' ' << sweeps_done_ << ' ' << format_double(log_w_) << '\n';
    for (int m = 0; m < 4; ++m) out << stats_.attempted[m] << ' ' << stats_.accepted[m] << (m < 3 ? ' ' : '\n');
    for (const auto& w : config_.worldlines()) {
        out << w.base_sign << ' ' << w.kinks.size();
        for (double t : w.kinks) out << ' ' << format_double(t);
        out << '\n';
    }
    out << rng_ << '\n';
}

Sampler Sampler::load_checkpoint(std::istream& in, const ModelSpec& model, SamplerOptions options) {
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "qtunnel-checkpoint" || version != 1) throw Error(ErrorCode::Io, "not a checkpoint file");
    int n = 0;
    std::string beta_s, logw_s;
    std::uint64_t done = 0;
    in >> n >> beta_s >> done >> logw_s;
    if (!in) throw Error(ErrorCode::Io, "truncated checkpoint header");
    WorldlineConfig config(n, parse_double(beta_s, "beta"));
    SweepStats stats;
    for (int m = 0; m < 4; ++m) in >> stats.attempted[m] >> stats.accepted[m];
    for (int j = 0; j < n; ++j) {
        Worldline w;
        std::size_t k = 0;
        in >> w.base_sign >> k;
        for (std::size_t i = 0; i < k; ++i) {
            std::string t;
            in >> t;
            w.kinks.push_back(parse_double(t, "kink time"));
        }
        if (!in) throw Error(ErrorCode::Io, "truncated checkpoint worldline");
        config.set_worldline(j, std::move(w));
    }
    config.validate();
    Rng rng;
    in >> rng;
    if (!in) throw Error(ErrorCode::Io, "truncated checkpoint rng state");
    Sampler s(std::move(config), model, rng, options);
    s.stats_ = stats;
    s.sweeps_done_ = done;
    s.log_w_ = parse_double(logw_s, "log weight");
    return s;
}

// ---------------------------------------------------------------------------

namespace {

void check_drift(Sampler& s) {
    const auto& c = s.config();
    double drift = s.resync_log_weight();
    if (drift > 1e-8 * c.n_spins() * c.beta())
        throw Error(ErrorCode::Tolerance, "running log weight drifted by " + format_double(drift));
}

}  // namespace

std::vector<double> equilibrium_sample(int n, const ModelSpec& model, double beta, Rng& rng, const EquilibriumOptions& options) {
    if (options.thin < 1) throw Error(ErrorCode::Domain, "thin must be >= 1");
    WorldlineConfig config(n, beta);
    for (int j = 0; j < n; ++j) {
        Worldline w;
        w.base_sign = uniform01(rng) < 0.5 ? -1 : 1;
        config.set_worldline(j, w);
    }
    Sampler s(std::move(config), model, rng);
    s.sweeps(options.burn_in);
    std::vector<double> hist(n + 1, 0.0);
    for (std::uint64_t k = 0; k < options.n_samples; ++k) {
        s.sweeps(options.thin);
        hist[(s.config().total_sign_at_zero() + n) / 2] += 1.0;
        if (s.sweeps_done() % 10000 == 0) check_drift(s);
    }
    rng = s.rng();
    for (double& x : hist) x /= static_cast<double>(options.n_samples);
    return hist;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw Error(ErrorCode::Domain, "distributions differ in support size");
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(p[k] - q[k]);
    return 0.5 * acc;
}

double time_fraction_above(const WorldlineConfig& config, double m_mid) {
    auto profile = config.m_profile();
    double above = 0.0;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        double t1 = k + 1 < profile.size() ? profile[k + 1].first : config.beta();
        if (profile[k].second > m_mid) above += t1 - profile[k].first;
    }
    return above / config.beta();
}

EscapeRecord escape_run(int n, const ModelSpec& model, double beta, std::uint64_t seed, const EscapeOptions& options) {
    if (!(options.reversal_fraction > 0.0 && options.reversal_fraction < 1.0))
        throw Error(ErrorCode::Domain, "reversal fraction must lie in (0, 1)");
    const double m_mid = static_extrema(model, beta).m_mid();
    Sampler s(init_metastable(n, beta), model, make_rng(seed));
    EscapeRecord rec;
    rec.n_spins = n;
    rec.beta = beta;
    rec.gamma = model.gamma();
    rec.h = model.bias();
    rec.seed = seed;
    while (s.sweeps_done() < options.max_sweeps) {
        s.sweep();
        if (time_fraction_above(s.config(), m_mid) > options.reversal_fraction) {
            rec.escaped = true;
            break;
        }
        if (s.sweeps_done() % 10000 == 0) check_drift(s);
        if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 && s.sweeps_done() % options.checkpoint_every == 0) {
            std::ofstream out(options.checkpoint_path);
            s.save_checkpoint(out);
        }
    }
    rec.sweeps = static_cast<double>(s.sweeps_done());
    return rec;
}

void write_escape_header(std::ostream& out) { out << "n,beta,gamma,h,seed,sweeps,escaped\n"; }

void write_escape_record(std::ostream& out, const EscapeRecord& r) {
    out << r.n_spins << ',' << format_double(r.beta) << ',' << format_double(r.gamma) << ',' << format_double(r.h) << ','
        << r.seed << ',' << format_double(r.sweeps) << ',' << (r.escaped ? 1 : 0) << '\n';
}

std::vector<EscapeRecord> read_escape_records(std::istream& in) {
    std::vector<EscapeRecord> out;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!header) {
            if (body != "n,beta,gamma,h,seed,sweeps,escaped")
                throw Error(ErrorCode::Io, "expected escape header `n,beta,gamma,h,seed,sweeps,escaped`");
            header = true;
            continue;
        }
        auto f = split(body, ',');
        if (f.size() != 7) throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": expected 7 fields");
        EscapeRecord r;
        r.n_spins = static_cast<int>(parse_int(f[0], "n"));
        r.beta = parse_double(f[1], "beta");
        r.gamma = parse_double(f[2], "gamma");
        r.h = parse_double(f[3], "h");
        r.seed = static_cast<std::uint64_t>(parse_int(f[4], "seed"));
        r.sweeps = parse_double(f[5], "sweeps");
        r.escaped = parse_int(f[6], "escaped") != 0;
        out.push_back(r);
    }
    if (!header) throw Error(ErrorCode::Io, "missing escape header");
    return out;
}

}  // namespace qtunnel
