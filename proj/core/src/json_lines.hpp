#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace kgrag::detail {

// Parses one JSON document; floating-point numbers are returned as strings holding
// their exact source text so evidence values survive ingestion unchanged.
// Throws FormatError tagged with `line`.
nlohmann::json parse_line_keep_float_text(std::string_view text, std::size_t line);

// Plain parse of one JSON line; throws FormatError tagged with `line`.
nlohmann::json parse_line(std::string_view text, std::size_t line);

bool is_blank(std::string_view text);

// Renders a scalar JSON value as evidence text.
std::string scalar_text(const nlohmann::json& value);

}  // namespace kgrag::detail
