#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taylorpn/gp.hpp"
#include "taylorpn/kernels.hpp"

namespace taylorpn {

// Decimal rendering with 17 significant digits (lossless for doubles).
std::string format_double(double v);

// Comma-separated table with a header row; numeric cells carry 17
// significant digits so files round-trip losslessly.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(const std::vector<double>& cells, const std::vector<std::string>& text_cells = {});
    void write(const std::filesystem::path& path) const;
    std::size_t rows() const { return rows_.size(); }

  private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    double number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// FNV-1a 64-bit content hash, hex encoded.
std::string fnv1a_hex(const std::filesystem::path& path);

// Kernel configuration from key=value lines (newline or semicolon
// separated): family, sigma2, lambda (scalar or comma list), radius
// ("inf" allowed). Built-in families only.
KernelSpec parse_kernel_config(const std::string& text);

// {"a": [...], "n": int, "values": [{"alpha": [...], "value": v, "noise_var": e?}]}
std::string derivative_data_to_json(const DerivativeData& data);
DerivativeData derivative_data_from_json(const std::string& text);

}  // namespace taylorpn
