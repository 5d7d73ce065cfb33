#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cran {

// Flat key=value configuration. Keys under a "[section]" header are stored as
// "section.key". '#' and ';' start comments; lists are comma-separated.
class Config {
public:
    static Config parse(std::istream& is, const std::string& origin = "config");
    static Config parse_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::size_t> get_sizes(const std::string& key) const;

private:
    std::map<std::string, std::string> entries_;
};

double parse_double(const std::string& text, const std::string& what);
std::uint64_t parse_u64(const std::string& text, const std::string& what);

}  // namespace cran
