#pragma once

#include "pfloc/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>

namespace pfloc::detail {

using nlohmann::json;

/// Parses JSON, reporting syntax errors as "<source>:<line>:<column>: ...".
inline json parse_json(std::string_view text, std::string_view source) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::string what = e.what();
        auto colon = what.find("syntax error");
        throw ParseError(fmt::format("{}:{}:{}: {}", source, line, column,
                                     colon == std::string::npos ? what : what.substr(colon)));
    }
}

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ParseError(fmt::format("{}: unknown key '{}'", where, key));
    }
}

inline double as_number(const json& v, std::string_view where) {
    if (!v.is_number()) throw ParseError(fmt::format("{}: expected a number, got {}", where, v.dump()));
    double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(fmt::format("{}: number must be finite", where));
    return x;
}

inline double require_number(const json& obj, std::string_view key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(fmt::format("{}: missing key '{}'", where, key));
    return as_number(*it, fmt::format("{}: '{}'", where, key));
}

inline std::uint64_t as_index(const json& v, std::string_view where) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ParseError(fmt::format("{}: expected a nonnegative integer, got {}", where, v.dump()));
    return v.get<std::uint64_t>();
}

inline std::uint64_t require_index(const json& obj, std::string_view key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(fmt::format("{}: missing key '{}'", where, key));
    return as_index(*it, fmt::format("{}: '{}'", where, key));
}

}  // namespace pfloc::detail
