#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "slotqa/errors.hpp"

namespace slotqa {

using json = nlohmann::json;

/// Parse a line-delimited JSON file, calling fn(line_number, record) for
/// every non-blank line. Line numbers are 1-based and reported in errors.
inline void read_jsonl(const std::filesystem::path& path,
                       const std::function<void(size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        fn(line_no, record);
    }
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Open an output stream, creating parent directories as needed.
inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    return out;
}

inline void write_json_file(const std::filesystem::path& path, const json& value) {
    auto out = open_output(path);
    out << value.dump(2) << '\n';
}

/// Fetch a required field, reporting the record context on failure.
inline const json& require_field(const json& record, const char* key, const std::string& where) {
    auto it = record.find(key);
    if (it == record.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

inline std::string require_string(const json& record, const char* key, const std::string& where) {
    const json& v = require_field(record, key, where);
    if (!v.is_string()) throw ParseError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace slotqa
