#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "confound/errors.hpp"

namespace confound {

// Numbers are serialized with 10 significant digits so golden files stay
// stable without false precision.
inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return static_cast<int>(j);
        return -1;
    }
};

// Split one line, honoring double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

// Quote a field only when it needs it (comma or quote inside).
inline std::string csv_escape(const std::string& field) {
    if (field.find(',') == std::string::npos && field.find('"') == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

// Comma-delimited CSV, UTF-8, header row required.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaMismatch("read_csv: cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("read_csv: empty file " + path);
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row = split_csv_line(line);
        if (row.size() != t.header.size())
            throw SchemaMismatch("read_csv: row width mismatch in " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream out(path);
    if (!out) throw Error("write_csv: cannot open " + path + " for writing");
    for (std::size_t j = 0; j < t.header.size(); ++j)
        out << csv_escape(t.header[j]) << (j + 1 < t.header.size() ? "," : "\n");
    for (const auto& row : t.rows)
        for (std::size_t j = 0; j < row.size(); ++j)
            out << csv_escape(row[j]) << (j + 1 < row.size() ? "," : "\n");
}

} // namespace confound
