#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "mathpipe/error.hpp"

namespace mathpipe {

using ojson = nlohmann::ordered_json;

namespace jsonu {

inline ojson parse(const std::string& text, Errc code, const std::string& what) {
    ojson j = ojson::parse(text, nullptr, false);
    if (j.is_discarded()) raise(code, what + ": invalid JSON");
    return j;
}

inline const ojson& require(const ojson& obj, const char* key, Errc code, const std::string& what) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) raise(code, what + ": missing " + key);
    return *it;
}

inline std::string require_string(const ojson& obj, const char* key, Errc code, const std::string& what) {
    const ojson& v = require(obj, key, code, what);
    if (!v.is_string()) raise(code, what + ": " + key + " must be a string");
    return v.get<std::string>();
}

inline std::int64_t require_int(const ojson& obj, const char* key, Errc code, const std::string& what) {
    const ojson& v = require(obj, key, code, what);
    if (!v.is_number_integer()) raise(code, what + ": " + key + " must be an integer");
    return v.get<std::int64_t>();
}

inline double require_number(const ojson& obj, const char* key, Errc code, const std::string& what) {
    const ojson& v = require(obj, key, code, what);
    if (!v.is_number()) raise(code, what + ": " + key + " must be a number");
    return v.get<double>();
}

}  // namespace jsonu
}  // namespace mathpipe
