#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "flowdirector/errors.hpp"

namespace flowdirector {

struct SiteConfig {
    std::string name;
    int capacity_gbps = 0;
    std::vector<std::string> endpoints;
};

struct TuningConfig {
    double per_transfer_cap_gbps = 2.0;
    double window_gbit = 0.5;  // ~64 MB TCP window
    int min_active = 2;
    int max_active = 500;
};

// Thin wrapper over a JSON document with dotted-key lookup and defaults.
// Missing keys fall back to the provided default; type mismatches throw
// ConfigError with the offending key.
class Config {
public:
    Config() : root_(nlohmann::json::object()) {}
    explicit Config(nlohmann::json root) : root_(std::move(root)) {}

    static Config from_file(const std::string& path);
    static Config from_text(const std::string& text);

    template <typename T>
    T get(const std::string& dotted_key, T fallback) const {
        const nlohmann::json* node = find(dotted_key);
        if (node == nullptr || node->is_null()) return fallback;
        try {
            return node->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config key '" + dotted_key + "' has the wrong type");
        }
    }

    bool has(const std::string& dotted_key) const { return find(dotted_key) != nullptr; }

    // sites: [{name, capacity_gbps, endpoints: [names...]}]
    std::vector<SiteConfig> sites() const;

    // links: [{a, b, rtt_ms}]; symmetric lookup, default 50 ms.
    double rtt_ms(const std::string& a, const std::string& b) const;

    TuningConfig tuning() const;

    const nlohmann::json& raw() const { return root_; }

private:
    const nlohmann::json* find(const std::string& dotted_key) const;

    nlohmann::json root_;
};

// Parse helper shared by every file-format entry point: maps nlohmann's
// byte-offset parse errors to a line/column diagnostic.
nlohmann::json parse_json_document(const std::string& text, const std::string& origin);
nlohmann::json load_json_file(const std::string& path);

}  // namespace flowdirector
