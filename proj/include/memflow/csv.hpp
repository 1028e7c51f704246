#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "memflow/common.hpp"

namespace memflow {

/// Numeric formatting for all emitted tables: 17 significant digits, enough
/// to round-trip doubles bit-exactly.
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Column-ordered CSV writer with fixed formatting.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
        : path_(path), columns_(std::move(columns)) {
        out_.open(path);
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
        for (std::size_t i = 0; i < columns_.size(); ++i)
            out_ << (i ? "," : "") << columns_[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_.size())
            throw SchemaMismatch("CSV row width mismatch in " + path_.string());
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_g17(values[i]);
        out_ << "\n";
    }

    /// Free-form comment line ('#'-prefixed), used by checkpoint headers.
    void comment(const std::string& text) { out_ << "# " << text << "\n"; }

    void close() { out_.close(); }

  private:
    std::filesystem::path path_;
    std::vector<std::string> columns_;
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
    std::vector<double> column(const std::string& name) const {
        const int ix = column_index(name);
        if (ix < 0) throw SchemaMismatch("CSV column '" + name + "' missing");
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(ix)]);
        return out;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string tok;
        if (header) {
            while (std::getline(is, tok, ',')) t.columns.push_back(tok);
            header = false;
            continue;
        }
        std::vector<double> row;
        while (std::getline(is, tok, ',')) row.push_back(std::stod(tok));
        if (row.size() != t.columns.size())
            throw SchemaMismatch("ragged CSV row in " + path.string());
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

}  // namespace memflow
