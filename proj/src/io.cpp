#include "taylorpn/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taylorpn/errors.hpp"

namespace taylorpn {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<double>& cells, const std::vector<std::string>& text_cells) {
    if (cells.size() + text_cells.size() != header_.size())
        throw std::invalid_argument("CsvWriter: row width does not match the header");
    std::vector<std::string> all;
    all.reserve(header_.size());
    for (double v : cells) all.push_back(format_double(v));
    all.insert(all.end(), text_cells.begin(), text_cells.end());
    std::string row;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i) row += ',';
        row += all[i];
    }
    rows_.push_back(std::move(row));
}

void CsvWriter::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("CsvWriter: cannot open " + path.string());
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out << ',';
        out << header_[i];
    }
    out << '\n';
    for (const auto& row : rows_) out << row << '\n';
}

double CsvTable::number(std::size_t row, std::size_t col) const { return std::stod(rows.at(row).at(col)); }

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else if (!cells.empty()) {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

std::string fnv1a_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a_hex: cannot open " + path.string());
    std::uint64_t hash = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

KernelSpec parse_kernel_config(const std::string& text) {
    std::string family;
    double sigma2 = 1.0;
    std::vector<double> lambda{1.0};
    double radius = -1.0;  // family default

    std::string normalized = text;
    for (char& c : normalized)
        if (c == ';') c = '\n';
    std::stringstream ss(normalized);
    std::string line;
    while (std::getline(ss, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("kernel config: expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "family") {
            family = value;
        } else if (key == "sigma2") {
            sigma2 = std::stod(value);
        } else if (key == "lambda") {
            lambda.clear();
            std::stringstream ls(value);
            std::string item;
            while (std::getline(ls, item, ',')) lambda.push_back(std::stod(trim(item)));
            if (lambda.empty()) throw ValidationError("kernel config: empty lambda list");
        } else if (key == "radius") {
            radius = (value == "inf" || value == "infinity") ? KernelSpec::kInfiniteRadius : std::stod(value);
        } else {
            throw ValidationError("kernel config: unknown key '" + key + "'");
        }
    }
    Eigen::VectorXd lam = Eigen::Map<Eigen::VectorXd>(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
    if (family == "exponential") return KernelSpec::exponential(sigma2, lam);
    if (family == "szego") return KernelSpec::szego(sigma2, lam, radius > 0.0 ? radius : 1.0);
    if (family == "bergman") return KernelSpec::bergman(sigma2, lam, radius > 0.0 ? radius : 1.0);
    throw ValidationError("kernel config: unknown or missing family '" + family + "'");
}

std::string derivative_data_to_json(const DerivativeData& data) {
    nlohmann::json j;
    j["a"] = std::vector<double>(data.a.data(), data.a.data() + data.a.size());
    j["n"] = data.order;
    nlohmann::json values = nlohmann::json::array();
    const auto& idx = data.index_set();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        nlohmann::json entry;
        entry["alpha"] = idx[i].indices();
        entry["value"] = data.values[i];
        if (data.noise) entry["noise_var"] = (*data.noise)[i];
        values.push_back(std::move(entry));
    }
    j["values"] = std::move(values);
    return j.dump();
}

DerivativeData derivative_data_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const auto a_list = j.at("a").get<std::vector<double>>();
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(a_list.data(), static_cast<Eigen::Index>(a_list.size()));
    const int n = j.at("n").get<int>();

    const auto canonical = enumerate_upto(static_cast<int>(a.size()), n);
    std::vector<double> values(canonical.size(), 0.0);
    std::vector<double> noise(canonical.size(), 0.0);
    bool any_noise = false;
    std::vector<bool> seen(canonical.size(), false);
    for (const auto& entry : j.at("values")) {
        const MultiIndex alpha(entry.at("alpha").get<std::vector<int>>());
        std::size_t pos = canonical.size();
        for (std::size_t i = 0; i < canonical.size(); ++i)
            if (canonical[i] == alpha) {
                pos = i;
                break;
            }
        if (pos == canonical.size())
            throw ValidationError("derivative data: multi-index outside |alpha| <= n");
        if (seen[pos]) throw ValidationError("derivative data: duplicate multi-index");
        seen[pos] = true;
        values[pos] = entry.at("value").get<double>();
        if (entry.contains("noise_var")) {
            noise[pos] = entry.at("noise_var").get<double>();
            any_noise = true;
        }
    }
    for (bool s : seen)
        if (!s) throw ValidationError("derivative data: missing multi-index entries");
    if (any_noise) return DerivativeData(std::move(a), n, std::move(values), std::move(noise));
    return DerivativeData(std::move(a), n, std::move(values));
}

}  // namespace taylorpn
