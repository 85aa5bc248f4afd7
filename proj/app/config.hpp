#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "io.hpp"

namespace modfun::app {

/// Parameters of one run: the config file with flag overrides applied, plus the global flags.
struct RunConfig {
    json params = json::object();
    fs::path out_dir = "out";
    /// Directory relative paths in the config are resolved against.
    fs::path base_dir = ".";
    std::uint64_t seed = 0;
};

/// Reads `config_file` (when given) and applies `key=value` overrides. Values are parsed as
/// JSON when possible, otherwise taken as strings; dotted keys address nested objects. --dt
/// and --seed land in params["dt"] and the seed field.
RunConfig load_config(const std::optional<fs::path>& config_file, const std::vector<std::string>& overrides,
                      const fs::path& out_dir, std::optional<std::uint64_t> seed, std::optional<double> dt);

/// Read-only view of a JSON object with validated accessors; `where` prefixes error messages.
class Params {
public:
    Params(const json& j, std::string where);

    bool has(const std::string& key) const;
    const json& raw(const std::string& key) const;
    Params child(const std::string& key) const;

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) const;
    double positive(const std::string& key, std::optional<double> fallback = std::nullopt) const;
    int integer(const std::string& key, std::optional<int> fallback = std::nullopt) const;
    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
    Vector vector(const std::string& key) const;
    Matrix matrix(const std::string& key) const;

    const json& json_value() const noexcept { return j_; }
    const std::string& where() const noexcept { return where_; }

private:
    std::string name(const std::string& key) const;

    const json& j_;
    std::string where_;
};

}  // namespace modfun::app
