#include "config.hpp"

#include <cmath>

#include "modfun/errors.hpp"

namespace modfun::app {

namespace {

void set_dotted(json& root, const std::string& key, json value) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ValidationError("override '" + key + "': empty key segment");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        json& next = (*node)[part];
        if (!next.is_object()) next = json::object();
        node = &next;
        start = dot + 1;
    }
}

}  // namespace

RunConfig load_config(const std::optional<fs::path>& config_file, const std::vector<std::string>& overrides,
                      const fs::path& out_dir, std::optional<std::uint64_t> seed, std::optional<double> dt) {
    RunConfig cfg;
    if (config_file) {
        try {
            cfg.params = json::parse(read_text(*config_file));
        } catch (const json::parse_error& e) {
            throw ValidationError(config_file->string() + ": " + e.what());
        }
        if (!cfg.params.is_object()) throw ValidationError(config_file->string() + ": top level must be an object");
        cfg.base_dir = config_file->parent_path().empty() ? fs::path(".") : config_file->parent_path();
    }
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + item + "': expected key=value");
        const std::string text = item.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        set_dotted(cfg.params, item.substr(0, eq), std::move(value));
    }
    if (dt) cfg.params["dt"] = *dt;
    if (seed) cfg.seed = *seed;
    else if (cfg.params.contains("seed") && cfg.params["seed"].is_number_unsigned())
        cfg.seed = cfg.params["seed"].get<std::uint64_t>();
    cfg.params["seed"] = cfg.seed;
    cfg.out_dir = out_dir;
    return cfg;
}

Params::Params(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
}

std::string Params::name(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

bool Params::has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

const json& Params::raw(const std::string& key) const {
    if (!has(key)) throw ValidationError("config: missing '" + name(key) + "'");
    return j_.at(key);
}

Params Params::child(const std::string& key) const { return Params(raw(key), name(key)); }

double Params::number(const std::string& key, std::optional<double> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        throw ValidationError("config: missing '" + name(key) + "'");
    }
    const json& v = j_.at(key);
    if (!v.is_number()) throw ValidationError("config: '" + name(key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError("config: '" + name(key) + "' must be finite");
    return d;
}

double Params::positive(const std::string& key, std::optional<double> fallback) const {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ValidationError("config: '" + name(key) + "' must be positive");
    return d;
}

int Params::integer(const std::string& key, std::optional<int> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        throw ValidationError("config: missing '" + name(key) + "'");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ValidationError("config: '" + name(key) + "' must be an integer");
    return v.get<int>();
}

std::string Params::text(const std::string& key, std::optional<std::string> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        throw ValidationError("config: missing '" + name(key) + "'");
    }
    const json& v = j_.at(key);
    if (!v.is_string()) throw ValidationError("config: '" + name(key) + "' must be a string");
    return v.get<std::string>();
}

Vector Params::vector(const std::string& key) const { return vector_from_json(raw(key), "config: '" + name(key) + "'"); }

Matrix Params::matrix(const std::string& key) const { return matrix_from_json(raw(key), "config: '" + name(key) + "'"); }

}  // namespace modfun::app
