#pragma once

// Comma-delimited text with a commented "# key = value" metadata header,
// the on-disk format of every table this project writes.

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkr {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DelimitedText {
    std::map<std::string, std::string> meta;
    /// Metadata keys in file order (for byte-stable rewriting).
    std::vector<std::string> meta_order;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    const std::string& require_meta(const std::string& key) const;
    /// Index of a column; throws FormatError if absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

DelimitedText read_delimited(std::istream& in);

std::string trim(const std::string& text);
/// Splits on `delimiter` and trims each field; a trailing delimiter yields a
/// final empty field.
std::vector<std::string> split_fields(const std::string& line, char delimiter);

/// Shortest representation that round-trips exactly.
std::string format_double(double value);

double parse_double(const std::string& text);
long long parse_integer(const std::string& text);

void write_meta(std::ostream& out, const std::string& key, const std::string& value);

std::string join(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace qkr
