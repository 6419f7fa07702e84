#include "qkr/config.hpp"

#include <fstream>
#include <istream>
#include <limits>

#include "qkr/textio.hpp"

namespace qkr {

namespace {

std::vector<std::string> list_items(const std::string& key, const std::string& value)
{
    std::vector<std::string> items;
    if (trim(value).empty()) {
        return items;
    }
    for (auto& item : split_fields(value, ',')) {
        if (item.empty()) {
            throw ConfigError("empty list item in '" + key + "'");
        }
        items.push_back(std::move(item));
    }
    return items;
}

template <class F>
auto convert(const std::string& key, const std::string& value, F parse)
{
    try {
        return parse(value);
    } catch (const FormatError&) {
        throw ConfigError("bad value for '" + key + "': '" + value + "'");
    }
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& origin)
{
    Config config;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(number) +
                              ": expected 'key = value'");
        }
        const auto key = trim(body.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
        }
        config.set(key, trim(body.substr(eq + 1)));
    }
    return config;
}

Config Config::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value)
{
    entries_[key] = value;
}

bool Config::has(const std::string& key) const
{
    return entries_.count(key) != 0;
}

void Config::merge(const Config& other)
{
    for (const auto& [key, value] : other.entries_) {
        entries_[key] = value;
    }
}

std::optional<std::string> Config::find(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    return find(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const
{
    const auto value = find(key);
    return value ? convert(key, *value, parse_double) : fallback;
}

long long Config::get_integer(const std::string& key, long long fallback) const
{
    const auto value = find(key);
    return value ? convert(key, *value, parse_integer) : fallback;
}

std::uint64_t Config::get_unsigned(const std::string& key, std::uint64_t fallback) const
{
    const auto value = find(key);
    if (!value) {
        return fallback;
    }
    const auto body = trim(*value);
    if (body.empty() || body.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("'" + key + "' must be a non-negative integer, got '" + *value +
                          "'");
    }
    try {
        return std::stoull(body);
    } catch (const std::out_of_range&) {
        throw ConfigError("'" + key + "' is too large");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const
{
    const auto value = find(key);
    if (!value) {
        return fallback;
    }
    if (*value == "true" || *value == "1" || *value == "yes" || *value == "on") {
        return true;
    }
    if (*value == "false" || *value == "0" || *value == "no" || *value == "off") {
        return false;
    }
    throw ConfigError("'" + key + "' must be true or false, got '" + *value + "'");
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const
{
    const auto value = find(key);
    if (!value) {
        return fallback;
    }
    std::vector<double> out;
    for (const auto& item : list_items(key, *value)) {
        out.push_back(convert(key, item, parse_double));
    }
    return out;
}

std::vector<int> Config::get_integers(const std::string& key,
                                      const std::vector<int>& fallback) const
{
    const auto value = find(key);
    if (!value) {
        return fallback;
    }
    std::vector<int> out;
    for (const auto& item : list_items(key, *value)) {
        const auto v = convert(key, item, parse_integer);
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            throw ConfigError("'" + key + "' item out of range: " + item);
        }
        out.push_back(static_cast<int>(v));
    }
    return out;
}

}  // namespace qkr
