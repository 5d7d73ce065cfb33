#include "cran/config.hpp"

#include <cerrno>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "cran/errors.hpp"

namespace cran {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
    return true;
}

}  // namespace

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf" || t == "infinity") return HUGE_VAL;
    double v = 0.0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end || std::isnan(v))
        throw InvalidInput(what + ": '" + text + "' is not a number");
    return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end)
        throw InvalidInput(what + ": '" + text + "' is not a nonnegative integer");
    return v;
}

Config Config::parse(std::istream& is, const std::string& origin) {
    Config c;
    std::string line;
    std::string section;
    std::size_t number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(number);
        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidInput(where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_key(section)) throw InvalidInput(where + ": invalid section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) throw InvalidInput(where + ": invalid key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (c.has(full)) throw InvalidInput(where + ": duplicate key '" + full + "'");
        c.entries_[full] = trim(line.substr(eq + 1));
    }
    return c;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file: " + path);
    return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw InvalidInput("invalid key '" + key + "'");
    entries_[key] = trim(value);
}

std::string Config::get_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw InvalidInput("missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const { return parse_double(get_string(key), key); }

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::size_t Config::get_size(const std::string& key) const {
    return static_cast<std::size_t>(parse_u64(get_string(key), key));
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
    return has(key) ? get_size(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) const { return parse_u64(get_string(key), key); }

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidInput(key + ": '" + v + "' is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get_string(key))) out.push_back(parse_double(item, key));
    return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(get_string(key))) out.push_back(static_cast<std::size_t>(parse_u64(item, key)));
    return out;
}

}  // namespace cran
