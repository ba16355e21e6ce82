#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace cnnrom::io {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses the TOML subset used for run configs: [table] and [a.b] headers,
/// key = value lines with bare or dotted keys, # comments, and values that are
/// integers, floats, booleans, basic "strings" or single-line arrays of those.
/// Throws ConfigError with the line number on anything else.
nlohmann::json parse_toml(const std::string& text);

/// Typed key/value run configuration. The defaults fix the accepted keys and
/// their types; files and --set overrides may only change existing keys.
/// Keys are dotted paths ("train.lr0") over nested objects.
class RunConfig {
public:
    explicit RunConfig(const nlohmann::json& defaults);

    /// .json or .toml by extension.
    void merge_file(const std::filesystem::path& path);
    void merge(const nlohmann::json& doc, const std::string& origin);
    /// "key=value"; the value is read as JSON when it parses, else as a string.
    void set(const std::string& assignment);

    const nlohmann::json& at(const std::string& key) const;
    template <class T>
    T get(const std::string& key) const
    {
        return at(key).get<T>();
    }
    /// Nested object below a dotted prefix.
    nlohmann::json section(const std::string& prefix) const;
    /// Everything, nested.
    nlohmann::json resolved() const;
    void write(const std::filesystem::path& path) const;

private:
    void assign(const std::string& key, const nlohmann::json& value, const std::string& origin);

    nlohmann::json flat_;
};

}  // namespace cnnrom::io
