#pragma once

// CSV persistence for samples, paths and result tables.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "sampler.hpp"

namespace sdelimit {

/// Shortest text that reads back to the same double.
inline std::string format_real(double v) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline Metadata scheme_metadata(const Scheme& s) {
    Metadata m{{"kind", std::string(to_string(s.kind))}, {"dt", format_real(s.dt)}};
    if (s.kind == SampleKind::prelimit) {
        m.emplace_back("scheme", std::string(to_string(s.prelimit.method)));
        if (s.prelimit.method == PrelimitMethod::scale_euler) {
            m.emplace_back("layer_resolution", format_real(s.prelimit.layer_resolution));
            m.emplace_back("max_substeps", std::to_string(s.prelimit.max_substeps));
            m.emplace_back("far_field_margin", format_real(s.prelimit.far_field_margin));
            m.emplace_back("boundary_fraction", format_real(s.prelimit.boundary_fraction));
        } else {
            m.emplace_back("taming_substeps", std::to_string(s.prelimit.taming_substeps));
            m.emplace_back("taming_layer", format_real(s.prelimit.taming_layer));
        }
    } else {
        m.emplace_back("exact_transitions", "besq");
    }
    return m;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write '" + path + "'");
    return out;
}

inline void write_metadata(std::ostream& out, const Metadata& meta) {
    for (const auto& [k, v] : meta) out << "# " << k << ": " << v << '\n';
}

/// `# key: value` header lines, then `index,value` rows.
inline void write_sample_csv(const std::string& path, const SampleSet& s, const Metadata& extra = {}) {
    auto out = open_output(path);
    Metadata meta = scheme_metadata(s.scheme);
    meta.emplace(meta.begin() + 1, "n", format_real(s.n));
    meta.emplace_back("T", format_real(s.time));
    meta.emplace_back("master_seed", std::to_string(s.master_seed));
    meta.insert(meta.end(), extra.begin(), extra.end());
    write_metadata(out, meta);
    out << "index,value\n";
    for (std::size_t i = 0; i < s.values.size(); ++i) out << i << ',' << format_real(s.values[i]) << '\n';
    if (!out) throw ResourceError("write failed for '" + path + "'");
}

/// `time,value` rows with the same comment header convention.
inline void write_path_csv(const std::string& path, const Path& p, const Metadata& meta = {}) {
    auto out = open_output(path);
    write_metadata(out, meta);
    out << "time,value\n";
    for (std::size_t k = 0; k < p.values.size(); ++k) {
        out << format_real(static_cast<double>(k) * p.dt) << ',' << format_real(p.values[k]) << '\n';
    }
    if (!out) throw ResourceError("write failed for '" + path + "'");
}

/// Values column of a sample CSV written by write_sample_csv.
inline std::vector<double> read_sample_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot read '" + path + "'");
    std::string line;
    bool header = false;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "index,value") throw DomainError("'" + path + "': expected header index,value");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DomainError("'" + path + "': malformed row");
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    return values;
}

/// Plain table: header row then rows of preformatted cells.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<std::string> row) {
        if (row.size() != columns_.size()) throw DomainError("csv row width does not match header");
        rows_.push_back(std::move(row));
    }

    void write(const std::string& path) const {
        auto out = open_output(path);
        for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
        out << '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
            out << '\n';
        }
        if (!out) throw ResourceError("write failed for '" + path + "'");
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace sdelimit
