#pragma once

#include <string>
#include <utility>
#include <vector>

namespace floqflow::csv {

// 17 significant digits, scientific — lossless float64 round-trip.
std::string format_double(double v);

// Column-oriented CSV with '#'-prefixed metadata comments above the header.
class Writer {
  public:
    explicit Writer(std::vector<std::string> columns);

    void add_metadata(const std::string& key, const std::string& value);
    void add_row(const std::vector<double>& values);

    std::string str() const;
    void write(const std::string& path) const;

  private:
    std::vector<std::string> columns_;
    std::vector<std::pair<std::string, std::string>> metadata_;
    std::vector<std::vector<double>> rows_;
};

}  // namespace floqflow::csv
