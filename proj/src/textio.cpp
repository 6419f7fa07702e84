#include "qkr/textio.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace qkr {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line, char delimiter)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, delimiter)) {
        out.push_back(trim(field));
    }
    if (!line.empty() && line.back() == delimiter) {
        out.emplace_back();
    }
    return out;
}

const std::string& DelimitedText::require_meta(const std::string& key) const
{
    auto it = meta.find(key);
    if (it == meta.end()) {
        throw FormatError("missing metadata key '" + key + "'");
    }
    return it->second;
}

bool DelimitedText::has_column(const std::string& name) const
{
    for (const auto& c : columns) {
        if (c == name) {
            return true;
        }
    }
    return false;
}

std::size_t DelimitedText::column(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) {
            return i;
        }
    }
    throw FormatError("missing column '" + name + "'");
}

DelimitedText read_delimited(std::istream& in)
{
    DelimitedText text;
    std::string line;
    while (std::getline(in, line)) {
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        if (body.front() == '#') {
            const auto content = body.substr(1);
            const auto eq = content.find('=');
            if (eq != std::string::npos) {
                auto key = trim(content.substr(0, eq));
                auto value = trim(content.substr(eq + 1));
                if (text.meta.find(key) == text.meta.end()) {
                    text.meta_order.push_back(key);
                }
                text.meta[key] = value;
            }
            continue;
        }
        auto fields = split_fields(body, ',');
        if (text.columns.empty()) {
            text.columns = std::move(fields);
            continue;
        }
        if (fields.size() != text.columns.size()) {
            throw FormatError("row has " + std::to_string(fields.size()) +
                              " fields, header has " +
                              std::to_string(text.columns.size()));
        }
        text.rows.push_back(std::move(fields));
    }
    return text;
}

std::string format_double(double value)
{
    std::array<char, 64> buffer{};
    const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return std::string(buffer.data(), result.ptr);
}

double parse_double(const std::string& text)
{
    const auto body = trim(text);
    double value = 0.0;
    const auto* first = body.data();
    const auto* last = body.data() + body.size();
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc() || result.ptr != last) {
        throw FormatError("not a number: '" + text + "'");
    }
    return value;
}

long long parse_integer(const std::string& text)
{
    const auto body = trim(text);
    long long value = 0;
    const auto* first = body.data();
    const auto* last = body.data() + body.size();
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc() || result.ptr != last) {
        throw FormatError("not an integer: '" + text + "'");
    }
    return value;
}

void write_meta(std::ostream& out, const std::string& key, const std::string& value)
{
    out << "# " << key << " = " << value << '\n';
}

std::string join(const std::vector<std::string>& fields, char delimiter)
{
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out += delimiter;
        }
        out += fields[i];
    }
    return out;
}

}  // namespace qkr
