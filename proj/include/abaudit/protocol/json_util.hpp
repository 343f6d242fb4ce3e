#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "abaudit/core/errors.hpp"

namespace abaudit::protocol {

// Reads j[name] through convert; a missing field or a JSON type error
// becomes ValidationError naming the field.
template <typename F>
auto json_field(const nlohmann::json& j, const char* name, F&& convert) {
    if (!j.is_object() || !j.contains(name)) {
        throw ValidationError(std::string("missing field: ") + name);
    }
    try {
        return convert(j.at(name));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad field ") + name + ": " + e.what());
    }
}

template <typename T>
T json_get(const nlohmann::json& j, const char* name) {
    return json_field(j, name, [](const nlohmann::json& v) { return v.get<T>(); });
}

// Like json_get but returns fallback when the field is absent or null.
template <typename T>
T json_get_or(const nlohmann::json& j, const char* name, T fallback) {
    if (!j.is_object() || !j.contains(name) || j.at(name).is_null()) return fallback;
    return json_get<T>(j, name);
}

}  // namespace abaudit::protocol
