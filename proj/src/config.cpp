#include "flowdirector/config.hpp"

#include <fstream>
#include <sstream>

namespace flowdirector {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

nlohmann::json parse_json_document(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte is a 1-based offset into the input; turn it into line/column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << origin << ":" << line << ":" << col << ": " << e.what();
        throw ConfigError(msg.str());
    }
}

nlohmann::json load_json_file(const std::string& path) {
    return parse_json_document(read_file(path), path);
}

Config Config::from_file(const std::string& path) { return Config(load_json_file(path)); }

Config Config::from_text(const std::string& text) {
    return Config(parse_json_document(text, "<config>"));
}

const nlohmann::json* Config::find(const std::string& dotted_key) const {
    const nlohmann::json* node = &root_;
    std::size_t start = 0;
    while (start <= dotted_key.size()) {
        std::size_t dot = dotted_key.find('.', start);
        std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos
                                                                             : dot - start);
        if (!node->is_object() || !node->contains(part)) return nullptr;
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return node;
}

std::vector<SiteConfig> Config::sites() const {
    std::vector<SiteConfig> out;
    const nlohmann::json* arr = find("sites");
    if (arr == nullptr) return out;
    if (!arr->is_array()) throw ConfigError("config key 'sites' must be a list");
    for (const auto& s : *arr) {
        SiteConfig sc;
        if (!s.contains("name")) throw ConfigError("sites[] entry missing field 'name'");
        sc.name = s["name"].get<std::string>();
        sc.capacity_gbps = s.value("capacity_gbps", 0);
        if (sc.capacity_gbps < 0)
            throw ConfigError("site '" + sc.name + "': capacity_gbps must be >= 0");
        if (s.contains("endpoints")) {
            for (const auto& e : s["endpoints"]) sc.endpoints.push_back(e.get<std::string>());
        }
        out.push_back(std::move(sc));
    }
    return out;
}

double Config::rtt_ms(const std::string& a, const std::string& b) const {
    const nlohmann::json* arr = find("links");
    if (arr != nullptr && arr->is_array()) {
        for (const auto& link : *arr) {
            std::string la = link.value("a", "");
            std::string lb = link.value("b", "");
            if ((la == a && lb == b) || (la == b && lb == a)) return link.value("rtt_ms", 50.0);
        }
    }
    return 50.0;
}

TuningConfig Config::tuning() const {
    TuningConfig t;
    t.per_transfer_cap_gbps = get<double>("tuning.per_transfer_cap_gbps", t.per_transfer_cap_gbps);
    t.window_gbit = get<double>("tuning.window_gbit", t.window_gbit);
    t.min_active = get<int>("tuning.min_active", t.min_active);
    t.max_active = get<int>("tuning.max_active", t.max_active);
    if (t.per_transfer_cap_gbps <= 0 || t.window_gbit <= 0 || t.min_active < 1 ||
        t.max_active < t.min_active)
        throw ConfigError("invalid tuning configuration");
    return t;
}

}  // namespace flowdirector
