#include "floqflow/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace floqflow::csv {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

Writer::Writer(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw std::invalid_argument("csv::Writer: no columns");
}

void Writer::add_metadata(const std::string& key, const std::string& value) {
    metadata_.emplace_back(key, value);
}

void Writer::add_row(const std::vector<double>& values) {
    if (values.size() != columns_.size())
        throw std::invalid_argument("csv::Writer: row width mismatch");
    rows_.push_back(values);
}

std::string Writer::str() const {
    std::ostringstream out;
    for (auto& [k, v] : metadata_) out << "# " << k << " = " << v << "\n";
    for (size_t i = 0; i < columns_.size(); ++i)
        out << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
    for (auto& row : rows_) {
        for (size_t i = 0; i < row.size(); ++i)
            out << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
    return out.str();
}

void Writer::write(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("csv::Writer: cannot open " + path);
    f << str();
}

}  // namespace floqflow::csv
