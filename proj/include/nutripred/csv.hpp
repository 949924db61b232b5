#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nutripred/errors.hpp"

namespace nutripred {

/// Parses one RFC-4180 record starting at `pos`. Handles quoted fields with
/// doubled-quote escapes and embedded commas/newlines; accepts LF and CRLF.
/// Advances `pos` past the record terminator.
inline std::vector<std::string> csv_parse_record(const std::string& text, std::size_t& pos) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    const std::size_t n = text.size();
    while (pos < n) {
        char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < n && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                } else {
                    quoted = false;
                    ++pos;
                }
            } else {
                field.push_back(c);
                ++pos;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
            ++pos;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++pos;
        } else if (c == '\r' && pos + 1 < n && text[pos + 1] == '\n') {
            pos += 2;
            fields.push_back(std::move(field));
            return fields;
        } else if (c == '\n') {
            ++pos;
            fields.push_back(std::move(field));
            return fields;
        } else {
            field.push_back(c);
            ++pos;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

/// Reads a whole CSV file into rows of string fields. Skips a trailing blank
/// line if present.
inline std::vector<std::vector<std::string>> csv_read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto fields = csv_parse_record(text, pos);
        if (fields.size() == 1 && fields[0].empty() && pos >= text.size()) break;
        rows.push_back(std::move(fields));
    }
    return rows;
}

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void csv_write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(',');
        out << csv_escape(fields[i]);
    }
    out.put('\n');
}

} // namespace nutripred
