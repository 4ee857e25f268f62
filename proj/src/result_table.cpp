#include "irsotfs/simkit.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace irsotfs {

void ResultTable::validate() const {
    if (columns.empty()) throw std::logic_error("ResultTable: no columns");
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw std::logic_error("ResultTable: ragged row");
        for (double v : row)
            if (!std::isfinite(v)) throw std::logic_error("ResultTable: non-finite value");
    }
    if (code_version.empty() || scenario.empty())
        throw std::logic_error("ResultTable: missing metadata");
}

double ResultTable::at(int row, const std::string& column) const {
    for (size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == column) return rows.at(row).at(c);
    throw std::out_of_range("ResultTable: no column " + column);
}

std::string ResultTable::csv_text() const {
    validate();
    std::ostringstream out;
    for (size_t c = 0; c < columns.size(); ++c)
        out << (c ? "," : "") << columns[c];
    out << "\n";
    char buf[64];
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.12g", row[c]);
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
    return out.str();
}

void write_outputs(const ResultTable& table, const ExperimentConfig& cfg,
                   const std::string& stem) {
    const std::filesystem::path base(stem);
    if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());

    std::ofstream csv(stem + ".csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + stem + ".csv");
    csv << table.csv_text();

    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(cfg.to_json_text());
    meta["seed"] = table.seed;
    meta["config_hash"] = table.config_hash;
    meta["code_version"] = table.code_version;
    meta["scenario"] = table.scenario;
    std::ofstream js(stem + ".meta.json", std::ios::binary);
    if (!js) throw std::runtime_error("cannot write " + stem + ".meta.json");
    js << meta.dump(2) << "\n";
}

}  // namespace irsotfs
