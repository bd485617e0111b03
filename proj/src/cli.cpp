#include "qtunnel/cli.hpp"

#include "qtunnel/analysis.hpp"
#include "qtunnel/config.hpp"
#include "qtunnel/error.hpp"
#include "qtunnel/io.hpp"
#include "qtunnel/propagator.hpp"
#include "qtunnel/qmc.hpp"
#include "qtunnel/spectra.hpp"
#include "qtunnel/wkb.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace qtunnel {

namespace {

namespace fs = std::filesystem;

const KeyValues instanton_defaults{{"damping", "0.5"},  {"ell_tol", "1e-13"}, {"max_iter", "500"},
                                   {"n_grid", "4096"},  {"allow_static_fallback", "true"}};
const KeyValues campaign_defaults{{"n_list", "8,10,12,14,16"}, {"runs", "200"},          {"seed_base", "1"},
                                  {"workers", "auto"},         {"reversal_fraction", "0.25"}, {"max_sweeps", "100000000"}};
const KeyValues fit_defaults{{"fit.n_min", "12"}, {"fit.n_max", "16"}, {"fit.bootstrap", "1000"}, {"fit.seed", "0"}, {"fit.min_runs", "50"}};

struct Command {
    std::string name;
    bool uses_model = false;
    std::vector<std::string> required;
    KeyValues defaults;
};

Command command_spec(const std::string& name) {
    auto cat = [](std::initializer_list<KeyValues> parts) {
        KeyValues out;
        for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
        return out;
    };
    if (name == "instanton") return {name, true, {"beta"}, cat({instanton_defaults, {{"output", "instanton.csv"}}})};
    if (name == "verify") return {name, true, {"beta"}, cat({instanton_defaults, {{"output", "verify.txt"}}})};
    if (name == "escape") return {name, true, {"beta"}, cat({campaign_defaults, {{"checkpoint", "none"}, {"output", "escape_raw.csv"}}})};
    if (name == "fit") return {name, false, {"input"}, cat({fit_defaults, {{"output", "fit.txt"}}})};
    if (name == "compare")
        return {name, false, {"grid.gamma", "grid.h", "grid.beta"},
                cat({campaign_defaults, fit_defaults, {{"output", "compare.csv"}, {"raw_output", "escape_raw.csv"}}})};
    if (name == "equilibrium")
        return {name, true, {"n", "beta"},
                {{"samples", "100000"}, {"thin", "1"}, {"burn_in", "1000"}, {"seed_base", "1"}, {"output", "equilibrium.csv"}}};
    if (name == "spike")
        return {name, false, {}, {{"g_poly", "0,1"}, {"n_list", "64,128,256,512"}, {"output", "spike_report.txt"}}};
    throw Error(ErrorCode::Config, "unknown command '" + name + "'");
}

bool parse_bool(const std::string& v, std::string_view key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::Config, "key '" + std::string(key) + "': expected a boolean, got '" + v + "'");
}

// The resolved plan: defaults filled in, model keys canonicalised.
struct Plan {
    std::string command;
    Config values;
    std::optional<ModelSpec> model;
    fs::path output_dir;

    fs::path output(std::string_view key = "output") const { return output_dir / values.get_string(key, ""); }
};

Plan resolve(const std::string& command, const Config& given) {
    auto spec = command_spec(command);
    std::vector<std::string> allowed{"output_dir"};
    for (const auto& [k, v] : spec.defaults) allowed.push_back(k);
    for (const auto& k : spec.required) allowed.push_back(k);
    if (spec.uses_model)
        for (const auto& k : model_keys()) allowed.push_back(k);
    if (command == "spike")
        for (const auto& k : model_keys())
            if (k.rfind("spike.", 0) == 0) allowed.push_back(k);
    given.check_keys(allowed);
    for (const auto& k : spec.required)
        if (!given.has(k)) throw Error(ErrorCode::Config, "missing key '" + k + "' for command " + command);

    Plan plan;
    plan.command = command;
    if (spec.uses_model) {
        plan.model = model_from_config(given);
        for (const auto& [k, v] : model_to_key_values(*plan.model)) plan.values.set(k, v);
    }
    for (const auto& k : spec.required) plan.values.set(k, *given.get(k));
    for (const auto& [k, v] : spec.defaults) plan.values.set(k, given.get_string(k, v));
    if (command == "spike")
        for (const auto& k : model_keys())
            if (k.rfind("spike.", 0) == 0 && given.has(k)) plan.values.set(k, *given.get(k));

    std::string dir = given.get_string("output_dir", ".");
    if (const char* env = std::getenv("QTUNNEL_OUTPUT_DIR"); env && *env) dir = env;
    plan.output_dir = dir;
    return plan;
}

std::ofstream open_output(const Plan& plan, const fs::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    f << "# qtunnel " << plan.command << '\n';
    write_key_values(f, plan.values.entries(), "# ");
    return f;
}

InstantonOptions instanton_options(const Config& v) {
    InstantonOptions o;
    o.damping = v.get_double("damping", o.damping);
    o.ell_tol = v.get_double("ell_tol", o.ell_tol);
    o.max_iter = static_cast<int>(v.get_int("max_iter", o.max_iter));
    o.n_grid = static_cast<int>(v.get_int("n_grid", o.n_grid));
    o.allow_static_fallback = parse_bool(v.get_string("allow_static_fallback", "true"), "allow_static_fallback");
    if (!(o.damping > 0.0 && o.damping <= 1.0)) throw Error(ErrorCode::Config, "key 'damping' must lie in (0, 1]");
    if (!(o.ell_tol > 0.0)) throw Error(ErrorCode::Config, "key 'ell_tol' must be positive");
    if (o.max_iter < 1) throw Error(ErrorCode::Config, "key 'max_iter' must be >= 1");
    if (o.n_grid < 2 || o.n_grid % 2) throw Error(ErrorCode::Config, "key 'n_grid' must be even and >= 2");
    return o;
}

std::vector<int> int_list(const Config& v, std::string_view key) {
    std::vector<int> out;
    for (long long x : v.get_ints(key, {})) {
        if (x < 1) throw Error(ErrorCode::Config, "key '" + std::string(key) + "' needs positive entries");
        out.push_back(static_cast<int>(x));
    }
    if (out.empty()) throw Error(ErrorCode::Config, "key '" + std::string(key) + "' is empty");
    return out;
}

FitOptions fit_options(const Config& v) {
    FitOptions f;
    f.n_min = static_cast<int>(v.get_int("fit.n_min", f.n_min));
    f.n_max = static_cast<int>(v.get_int("fit.n_max", f.n_max));
    f.bootstrap = static_cast<int>(v.get_int("fit.bootstrap", f.bootstrap));
    f.seed = static_cast<std::uint64_t>(v.get_int("fit.seed", 0));
    f.min_runs = static_cast<int>(v.get_int("fit.min_runs", f.min_runs));
    if (f.n_min > f.n_max) throw Error(ErrorCode::Config, "key 'fit.n_min' exceeds 'fit.n_max'");
    return f;
}

CampaignOptions campaign_options(const Config& v) {
    CampaignOptions c;
    c.n_list = int_list(v, "n_list");
    c.runs = static_cast<int>(v.get_int("runs", c.runs));
    if (c.runs < 1) throw Error(ErrorCode::Config, "key 'runs' must be >= 1");
    c.seed_base = static_cast<std::uint64_t>(v.get_int("seed_base", 1));
    auto w = v.get_string("workers", "auto");
    c.workers = w == "auto" ? 0 : static_cast<int>(parse_int(w, "workers"));
    if (c.workers < 0) throw Error(ErrorCode::Config, "key 'workers' must be >= 0 or auto");
    c.escape.reversal_fraction = v.get_double("reversal_fraction", 0.25);
    if (!(c.escape.reversal_fraction > 0.0 && c.escape.reversal_fraction < 1.0))
        throw Error(ErrorCode::Config, "key 'reversal_fraction' must lie in (0, 1)");
    long long ms = v.get_int("max_sweeps", 100000000);
    if (ms < 1) throw Error(ErrorCode::Config, "key 'max_sweeps' must be >= 1");
    c.escape.max_sweeps = static_cast<std::uint64_t>(ms);
    c.fit = fit_options(v);
    return c;
}

double beta_of(const Config& v) {
    double b = v.require_double("beta");
    if (!(b > 0.0)) throw Error(ErrorCode::Config, "key 'beta' must be positive");
    return b;
}

int cmd_instanton(const Plan& p, std::ostream& out) {
    auto res = wkb_alpha(*p.model, beta_of(p.values), instanton_options(p.values));
    auto f = open_output(p, p.output());
    write_solution_csv(f, res.solution);
    out << "alpha = " << format_double(res.alpha) << "\nregime = " << to_string(res.regime) << "\nell = "
        << format_double(res.solution.ell) << "\ne = " << format_double(res.solution.energy) << '\n';
    return 0;
}

int cmd_verify(const Plan& p, std::ostream& out, std::ostream& err) {
    auto lines = verify_identities(*p.model, beta_of(p.values), instanton_options(p.values));
    write_identity_report(out, lines);
    auto f = open_output(p, p.output());
    write_identity_report(f, lines);
    int bad = 0;
    for (const auto& l : lines) bad += l.ok() ? 0 : 1;
    if (bad) {
        err << "error: TOLERANCE: " << bad << " identity line(s) above threshold\n";
        return 1;
    }
    return 0;
}

int cmd_escape(const Plan& p, std::ostream& out) {
    auto opt = campaign_options(p.values);
    if (auto cp = p.values.get_string("checkpoint", "none"); cp != "none") opt.escape.checkpoint_path = cp;
    const double beta = beta_of(p.values);
    auto f = open_output(p, p.output());
    write_escape_header(f);
    std::uint64_t offset = 0;
    int escaped = 0, total = 0;
    for (int n : opt.n_list) {
        auto one = opt;
        one.n_list = {n};
        for (const auto& r : escape_campaign(*p.model, beta, one, offset)) {
            write_escape_record(f, r);
            escaped += r.escaped;
            ++total;
        }
        f.flush();
        offset += static_cast<std::uint64_t>(opt.runs);
    }
    out << "runs = " << total << "\nescaped = " << escaped << '\n';
    return 0;
}

int cmd_fit(const Plan& p, std::ostream& out) {
    std::ifstream in(p.values.get_string("input", ""));
    if (!in) throw Error(ErrorCode::Io, "cannot open input '" + p.values.get_string("input", "") + "'");
    auto fit = fit_alpha(read_escape_records(in), fit_options(p.values));
    write_fit(out, fit);
    auto f = open_output(p, p.output());
    write_fit(f, fit);
    return 0;
}

int cmd_compare(const Plan& p, std::ostream& out) {
    std::vector<GridPoint> grid;
    auto gs = p.values.get_doubles("grid.gamma", {}), hs = p.values.get_doubles("grid.h", {}), bs = p.values.get_doubles("grid.beta", {});
    if (gs.empty() || hs.empty() || bs.empty()) throw Error(ErrorCode::Config, "grid lists must be non-empty");
    for (double g : gs)
        for (double h : hs)
            for (double b : bs) grid.push_back({g, h, b});
    auto res = compare(grid, campaign_options(p.values));
    write_compare_csv(out, res.rows);
    auto f = open_output(p, p.output());
    write_compare_csv(f, res.rows);
    auto raw = open_output(p, p.output("raw_output"));
    write_escape_header(raw);
    for (const auto& r : res.raw) write_escape_record(raw, r);
    return 0;
}

int cmd_equilibrium(const Plan& p, std::ostream& out) {
    int n = static_cast<int>(p.values.get_int("n", 0));
    double beta = beta_of(p.values);
    EquilibriumOptions o;
    long long samples = p.values.get_int("samples", 100000), thin = p.values.get_int("thin", 1), burn = p.values.get_int("burn_in", 1000);
    if (samples < 1 || thin < 1 || burn < 0) throw Error(ErrorCode::Config, "samples and thin must be >= 1, burn_in >= 0");
    o.n_samples = static_cast<std::uint64_t>(samples);
    o.thin = static_cast<std::uint64_t>(thin);
    o.burn_in = static_cast<std::uint64_t>(burn);
    auto exact = equilibrium_mz_distribution(n, *p.model, beta);
    auto rng = make_rng(static_cast<std::uint64_t>(p.values.get_int("seed_base", 1)));
    auto qmc = equilibrium_sample(n, *p.model, beta, rng, o);
    double tv = total_variation(qmc, exact);
    auto f = open_output(p, p.output());
    f << "M,p_qmc,p_exact\n";
    for (int k = 0; k <= n; ++k) f << format_double(k - 0.5 * n) << ',' << format_double(qmc[k]) << ',' << format_double(exact[k]) << '\n';
    out << "tv = " << format_double(tv) << '\n';
    return 0;
}

int cmd_spike(const Plan& p, std::ostream& out) {
    SpikeSpec s;
    s.c = p.values.get_double("spike.c", s.c);
    s.d = p.values.get_double("spike.d", s.d);
    s.chi = p.values.get_double("spike.chi", s.chi);
    s.delta = p.values.get_double("spike.delta", s.delta);
    s.m_b = p.values.get_double("spike.m_b", s.m_b);
    s.n_ref = p.values.get_double("spike.n_ref", s.n_ref);
    if (auto shape = p.values.get("spike.shape")) s.shape = parse_spike_shape(*shape);
    auto rep = spike_report(s, p.values.get_doubles("g_poly", {}), int_list(p.values, "n_list"));
    write_spike_report(out, rep);
    auto f = open_output(p, p.output());
    write_spike_report(f, rep);
    return 0;
}

int exit_code(ErrorCode c) { return c == ErrorCode::Config || c == ErrorCode::Io ? 2 : 1; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Thermally assisted tunneling: WKB instantons, QMC escape and their comparison", "qtunnel"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::vector<std::string> sets;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"instanton", "solve the periodic instanton and report alpha"},
        {"escape", "run the QMC escape campaign"},
        {"fit", "fit alpha to escape records"},
        {"compare", "WKB vs QMC exponents over a parameter grid"},
        {"equilibrium", "QMC slice distribution vs exact diagonalization"},
        {"spike", "narrow-spike barrier scaling report"},
        {"verify", "propagator and free-energy identity suite"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "key = value plan file");
        sub->add_option("-s,--set", sets, "override a plan key, key=value")->allow_extra_args(false);
    }
    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: USAGE: " << e.what() << '\n';
        return 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Config given = config_path.empty() ? Config{} : Config::load(config_path);
        for (const auto& s : sets) given.set_assignment(s);
        Plan plan = resolve(command, given);
        if (command == "instanton") return cmd_instanton(plan, out);
        if (command == "verify") return cmd_verify(plan, out, err);
        if (command == "escape") return cmd_escape(plan, out);
        if (command == "fit") return cmd_fit(plan, out);
        if (command == "compare") return cmd_compare(plan, out);
        if (command == "equilibrium") return cmd_equilibrium(plan, out);
        return cmd_spike(plan, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: INTERNAL: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace qtunnel
