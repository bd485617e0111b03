#include "qtunnel/config.hpp"

#include "qtunnel/error.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

namespace qtunnel {

Config Config::parse(std::istream& in) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto body = trim(line);
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected `key = value`");
        std::string key(trim(body.substr(0, eq)));
        std::string value(trim(body.substr(eq + 1)));
        if (key.empty()) throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": empty key");
        if (c.has(key)) throw Error(ErrorCode::Config, "duplicate key '" + key + "'");
        c.entries_.emplace_back(std::move(key), std::move(value));
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
    return parse(in);
}

bool Config::has(std::string_view key) const { return get(key).has_value(); }

void Config::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_)
        if (k == key) {
            v = value;
            return;
        }
    entries_.emplace_back(key, value);
}

void Config::set_assignment(std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::Config, "expected key=value, got '" + std::string(assignment) + "'");
    auto key = trim(assignment.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::Config, "empty key in '" + std::string(assignment) + "'");
    set(std::string(key), std::string(trim(assignment.substr(eq + 1))));
}

std::optional<std::string> Config::get(std::string_view key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return std::nullopt;
}

std::string Config::get_string(std::string_view key, std::string_view fallback) const {
    auto v = get(key);
    return v ? *v : std::string(fallback);
}

double Config::get_double(std::string_view key, double fallback) const {
    auto v = get(key);
    return v ? parse_double(*v, key) : fallback;
}

double Config::require_double(std::string_view key) const {
    auto v = get(key);
    if (!v) throw Error(ErrorCode::Config, "missing key '" + std::string(key) + "'");
    return parse_double(*v, key);
}

long long Config::get_int(std::string_view key, long long fallback) const {
    auto v = get(key);
    return v ? parse_int(*v, key) : fallback;
}

std::vector<double> Config::get_doubles(std::string_view key, const std::vector<double>& fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split(*v, ',')) out.push_back(parse_double(trim(item), key));
    return out;
}

std::vector<long long> Config::get_ints(std::string_view key, const std::vector<long long>& fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<long long> out;
    for (const auto& item : split(*v, ',')) out.push_back(parse_int(trim(item), key));
    return out;
}

void Config::check_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [k, v] : entries_)
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw Error(ErrorCode::Config, "unknown key '" + k + "'");
}

const std::vector<std::string>& model_keys() {
    static const std::vector<std::string> keys{"gamma",     "h",           "g_poly",      "spike.c",
                                               "spike.d",   "spike.chi",   "spike.delta", "spike.m_b",
                                               "spike.shape", "spike.n_ref"};
    return keys;
}

ModelSpec model_from_config(const Config& config) {
    double gamma = config.require_double("gamma");
    if (config.has("h") && config.has("g_poly"))
        throw Error(ErrorCode::Config, "key 'h' conflicts with 'g_poly'");
    std::vector<double> poly;
    if (config.has("g_poly")) {
        poly = config.get_doubles("g_poly", {});
        if (poly.empty()) throw Error(ErrorCode::Config, "key 'g_poly' is empty");
    } else {
        poly = {0.0, config.get_double("h", 0.0), 0.5};
    }
    std::optional<SpikeSpec> spike;
    bool any_spike = false;
    for (const auto& k : model_keys())
        if (k.rfind("spike.", 0) == 0 && config.has(k)) any_spike = true;
    if (any_spike) {
        SpikeSpec s;
        s.c = config.get_double("spike.c", s.c);
        s.d = config.get_double("spike.d", s.d);
        s.chi = config.get_double("spike.chi", s.chi);
        s.delta = config.get_double("spike.delta", s.delta);
        s.m_b = config.get_double("spike.m_b", s.m_b);
        s.n_ref = config.get_double("spike.n_ref", s.n_ref);
        if (auto shape = config.get("spike.shape")) {
            try {
                s.shape = parse_spike_shape(*shape);
            } catch (const Error& e) {
                throw Error(ErrorCode::Config, "key 'spike.shape': " + std::string(e.what()));
            }
        }
        spike = s;
    }
    try {
        return ModelSpec(gamma, std::move(poly), spike);
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, std::string("invalid model: ") + e.what());
    }
}

KeyValues model_to_key_values(const ModelSpec& model) {
    KeyValues kv{{"gamma", format_double(model.gamma())}};
    if (model.is_curie_weiss()) {
        kv.emplace_back("h", format_double(model.bias()));
    } else {
        std::string poly;
        for (std::size_t i = 0; i < model.g_poly().size(); ++i) {
            if (i) poly += ',';
            poly += format_double(model.g_poly()[i]);
        }
        kv.emplace_back("g_poly", poly);
    }
    if (const auto& s = model.spike()) {
        kv.emplace_back("spike.c", format_double(s->c));
        kv.emplace_back("spike.d", format_double(s->d));
        kv.emplace_back("spike.chi", format_double(s->chi));
        kv.emplace_back("spike.delta", format_double(s->delta));
        kv.emplace_back("spike.m_b", format_double(s->m_b));
        kv.emplace_back("spike.shape", std::string(to_string(s->shape)));
        kv.emplace_back("spike.n_ref", format_double(s->n_ref));
    }
    return kv;
}

}  // namespace qtunnel
