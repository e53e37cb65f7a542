/// @file toml.hpp
/// @brief Minimal TOML-subset reader for run configuration files.
///
/// Supported: comments, [table] / [table.subtable] headers, bare keys with
/// string / integer / float / boolean / homogeneous-array values, and dotted
/// keys inside a line (a.b = 1). Parsed into nlohmann::json.

#pragma once

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace vhr {

namespace toml_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

/// Strips a trailing comment that is not inside a string literal.
inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline std::vector<std::string> split_dotted(const std::string& key, int lineno) {
    std::vector<std::string> parts;
    std::string cur;
    for (const char c : key) {
        if (c == '.') {
            if (cur.empty()) throw std::runtime_error("toml line " + std::to_string(lineno) + ": empty key part");
            parts.push_back(cur);
            cur.clear();
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
            cur += c;
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            throw std::runtime_error("toml line " + std::to_string(lineno) + ": bad key character");
        }
    }
    if (cur.empty()) throw std::runtime_error("toml line " + std::to_string(lineno) + ": empty key");
    parts.push_back(cur);
    return parts;
}

inline nlohmann::json parse_scalar(const std::string& raw, int lineno) {
    const std::string v = trim(raw);
    if (v.empty()) throw std::runtime_error("toml line " + std::to_string(lineno) + ": missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw std::runtime_error("toml line " + std::to_string(lineno) + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                switch (v[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default:
                        throw std::runtime_error("toml line " + std::to_string(lineno) + ": bad escape");
                }
            } else {
                out += v[i];
            }
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    // Number: integer when it round-trips as one, float otherwise.
    try {
        std::size_t used = 0;
        if (v.find_first_of(".eE") == std::string::npos) {
            const long long i = std::stoll(v, &used);
            if (used == v.size()) return i;
        }
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw std::runtime_error("toml line " + std::to_string(lineno) + ": cannot parse value '" + v + "'");
}

inline nlohmann::json parse_value(const std::string& raw, int lineno) {
    const std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']')
            throw std::runtime_error("toml line " + std::to_string(lineno) + ": unterminated array");
        nlohmann::json arr = nlohmann::json::array();
        std::string body = v.substr(1, v.size() - 2);
        std::string item;
        bool in_string = false;
        for (const char c : body) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                if (!trim(item).empty()) arr.push_back(parse_scalar(item, lineno));
                item.clear();
            } else {
                item += c;
            }
        }
        if (!trim(item).empty()) arr.push_back(parse_scalar(item, lineno));
        return arr;
    }
    return parse_scalar(v, lineno);
}

}  // namespace toml_detail

/// Parses the TOML subset into a json object tree.
inline nlohmann::json parse_toml(const std::string& text) {
    using namespace toml_detail;
    nlohmann::json root = nlohmann::json::object();
    std::vector<std::string> table;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml line " + std::to_string(lineno) + ": unterminated table header");
            table = split_dotted(line.substr(1, line.size() - 2), lineno);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml line " + std::to_string(lineno) + ": expected key = value");
        std::vector<std::string> path = table;
        for (const auto& part : split_dotted(trim(line.substr(0, eq)), lineno)) path.push_back(part);

        nlohmann::json* node = &root;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &(*node)[path[i]];
        const std::string& leaf = path.back();
        if (node->contains(leaf))
            throw std::runtime_error("toml line " + std::to_string(lineno) + ": duplicate key '" + leaf + "'");
        (*node)[leaf] = parse_value(line.substr(eq + 1), lineno);
    }
    return root;
}

}  // namespace vhr
