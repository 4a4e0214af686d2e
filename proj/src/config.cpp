#include "ile/config.hpp"

#include <algorithm>
#include <cerrno>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ile/errors.hpp"

namespace ile {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues KeyValues::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_text(buf.str());
}

KeyValues KeyValues::parse_text(const std::string& text) {
    KeyValues kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.map_.count(key)) throw ConfigError("duplicate config key: " + key);
        kv.map_[key] = value;
    }
    return kv;
}

void KeyValues::set(const std::string& key, const std::string& value) { map_[key] = value; }

std::string KeyValues::get_string(const std::string& key) const {
    const auto it = map_.find(key);
    if (it == map_.end()) throw ConfigError("missing required config key: " + key);
    return it->second;
}

double KeyValues::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config key " + key + ": invalid number '" + raw + "'");
    return v;
}

int KeyValues::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE || v < INT_MIN || v > INT_MAX)
        throw ConfigError("config key " + key + ": invalid integer '" + raw + "'");
    return static_cast<int>(v);
}

std::uint64_t KeyValues::get_u64(const std::string& key) const {
    const std::string raw = get_string(key);
    if (!raw.empty() && raw[0] == '-') throw ConfigError("config key " + key + ": must be non-negative");
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config key " + key + ": invalid integer '" + raw + "'");
    return static_cast<std::uint64_t>(v);
}

double KeyValues::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int KeyValues::get_int_or(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValues::get_u64_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

void KeyValues::require_known(std::span<const std::string> allowed) const {
    for (const auto& [key, value] : map_)
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown config key: " + key);
}

std::string KeyValues::serialize() const {
    std::string out;
    for (const auto& [key, value] : map_) out += key + " = " + value + "\n";
    return out;  // std::map iterates sorted, so this is canonical
}

}  // namespace ile
