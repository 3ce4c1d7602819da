#include "json_lines.hpp"

#include "kgrag/errors.hpp"

#include <algorithm>
#include <cctype>

namespace kgrag::detail {

namespace {

using json = nlohmann::json;

class FloatTextSax : public nlohmann::json_sax<json> {
public:
    explicit FloatTextSax(json& root) : dom_(root, true) {}

    bool null() override { return dom_.null(); }
    bool boolean(bool v) override { return dom_.boolean(v); }
    bool number_integer(number_integer_t v) override { return dom_.number_integer(v); }
    bool number_unsigned(number_unsigned_t v) override { return dom_.number_unsigned(v); }
    bool number_float(number_float_t, const string_t& text) override {
        string_t copy = text;
        return dom_.string(copy);
    }
    bool string(string_t& v) override { return dom_.string(v); }
    bool binary(binary_t& v) override { return dom_.binary(v); }
    bool start_object(std::size_t n) override { return dom_.start_object(n); }
    bool key(string_t& v) override { return dom_.key(v); }
    bool end_object() override { return dom_.end_object(); }
    bool start_array(std::size_t n) override { return dom_.start_array(n); }
    bool end_array() override { return dom_.end_array(); }
    bool parse_error(std::size_t pos, const std::string& token,
                     const nlohmann::detail::exception& ex) override {
        return dom_.parse_error(pos, token, ex);
    }

private:
    nlohmann::detail::json_sax_dom_parser<json> dom_;
};

}  // namespace

bool is_blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

json parse_line_keep_float_text(std::string_view text, std::size_t line) {
    json root;
    FloatTextSax sax(root);
    try {
        json::sax_parse(text.begin(), text.end(), &sax);
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what(), line);
    }
    return root;
}

json parse_line(std::string_view text, std::size_t line) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what(), line);
    }
}

std::string scalar_text(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

}  // namespace kgrag::detail
