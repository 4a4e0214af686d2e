#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

namespace ile {

// Flat `key = value` text configuration. Full-line `#` comments and blank
// lines are ignored; keys are unique; serialization is canonical (sorted
// keys), so equal configurations serialize to equal bytes.
class KeyValues {
public:
    static KeyValues parse_file(const std::string& path);
    static KeyValues parse_text(const std::string& text);

    bool has(const std::string& key) const { return map_.count(key) != 0; }
    void set(const std::string& key, const std::string& value);

    // Typed getters throw ConfigError naming the key on absence or bad syntax.
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;

    double get_double_or(const std::string& key, double fallback) const;
    int get_int_or(const std::string& key, int fallback) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;

    // Rejects any key outside `allowed` (typo protection), naming the key.
    void require_known(std::span<const std::string> allowed) const;

    std::string serialize() const;
    const std::map<std::string, std::string>& entries() const { return map_; }

private:
    std::map<std::string, std::string> map_;
};

}  // namespace ile
