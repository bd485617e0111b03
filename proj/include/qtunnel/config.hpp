#pragma once

// Flat `key = value` configuration files with `#` comments.

#include "qtunnel/io.hpp"
#include "qtunnel/model.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtunnel {

class Config {
public:
    Config() = default;

    /// Throws Config naming the line on malformed input or duplicate keys.
    static Config parse(std::istream& in);
    static Config load(const std::string& path);

    bool has(std::string_view key) const;
    void set(const std::string& key, const std::string& value);
    /// Applies `key=value`; throws Config when there is no '='.
    void set_assignment(std::string_view assignment);

    std::optional<std::string> get(std::string_view key) const;
    std::string get_string(std::string_view key, std::string_view fallback) const;
    double get_double(std::string_view key, double fallback) const;
    double require_double(std::string_view key) const;
    long long get_int(std::string_view key, long long fallback) const;
    std::vector<double> get_doubles(std::string_view key, const std::vector<double>& fallback) const;
    std::vector<long long> get_ints(std::string_view key, const std::vector<long long>& fallback) const;

    /// Keys in insertion order.
    const KeyValues& entries() const { return entries_; }

    /// Throws Config for the first key outside `allowed`.
    void check_keys(const std::vector<std::string>& allowed) const;

private:
    KeyValues entries_;
};

/// gamma, h or g_poly (comma separated, low degree first), spike.{c,d,chi,delta,m_b,shape,n_ref}.
ModelSpec model_from_config(const Config& config);

/// Inverse of model_from_config; parsing the output reproduces the model bit for bit.
KeyValues model_to_key_values(const ModelSpec& model);

const std::vector<std::string>& model_keys();

}  // namespace qtunnel
