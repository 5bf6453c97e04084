#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

// Report emission: delimiter-separated tables with a header comment
// carrying the master seed and the effective-config hash, plus a JSON
// mirror of every table.

namespace uavsched::io {

using cell = std::variant<std::int64_t, double, std::string>;

inline std::string format_cell(const cell& c) {
    if (std::holds_alternative<std::int64_t>(c)) return std::to_string(std::get<std::int64_t>(c));
    if (std::holds_alternative<double>(c)) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
        return buf;
    }
    return std::get<std::string>(c);
}

struct table {
    std::vector<std::string> columns;
    std::vector<std::vector<cell>> rows;

    void add_row(std::vector<cell> r) {
        if (r.size() != columns.size())
            throw std::logic_error("table: row width does not match columns");
        rows.push_back(std::move(r));
    }
};

struct run_header {
    std::uint64_t master_seed = 0;
    std::string config_hash;
};

inline void write_csv(const std::filesystem::path& path, const run_header& h, const table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io: cannot open '" + path.string() + "' for writing");
    out << "# master_seed=" << h.master_seed << " config_hash=" << h.config_hash << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_cell(row[i]);
        out << "\n";
    }
}

inline void write_json_mirror(const std::filesystem::path& path, const run_header& h,
                              const table& t) {
    nlohmann::json j;
    j["master_seed"] = h.master_seed;
    j["config_hash"] = h.config_hash;
    j["columns"] = t.columns;
    auto& rows = j["rows"] = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& c : row) {
            if (std::holds_alternative<std::int64_t>(c))
                r.push_back(std::get<std::int64_t>(c));
            else if (std::holds_alternative<double>(c))
                r.push_back(std::get<double>(c));
            else
                r.push_back(std::get<std::string>(c));
        }
        rows.push_back(std::move(r));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io: cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
}

// Emit the table in the formats requested ("csv", "json").
inline void write_table(const std::filesystem::path& dir, const std::string& name,
                        const run_header& h, const table& t,
                        const std::vector<std::string>& formats) {
    for (const auto& f : formats) {
        if (f == "csv")
            write_csv(dir / (name + ".csv"), h, t);
        else if (f == "json")
            write_json_mirror(dir / (name + ".json"), h, t);
    }
}

}  // namespace uavsched::io
