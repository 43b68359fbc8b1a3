#include "aac/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "aac/core.hpp"

namespace aac::csv {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Writer::Writer(const std::filesystem::path& path, std::string_view schema, std::vector<std::string> columns)
    : out_(path), columns_(columns.size()) {
    if (!out_) throw InvalidInput("cannot open CSV for writing: " + path.string());
    out_ << "# aac-csv " << kSchemaVersion << ' ' << schema << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
}

Writer& Writer::cell(double v) {
    return cell(std::string_view(format_double(v)));
}

Writer& Writer::cell(long long v) {
    return cell(std::string_view(std::to_string(v)));
}

Writer& Writer::cell(std::string_view v) {
    require(filled_ < columns_, "too many CSV cells in a row");
    require(v.find_first_of(",\n\"") == std::string_view::npos, "CSV cell contains a separator");
    out_ << (filled_ ? "," : "") << v;
    ++filled_;
    return *this;
}

void Writer::end_row() {
    require(filled_ == columns_, "CSV row has too few cells");
    out_ << '\n';
    filled_ = 0;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw InvalidInput("CSV has no column '" + std::string(name) + "'");
}

double Table::number(std::size_t row, std::string_view column_name) const {
    return std::stod(rows.at(row).at(column(column_name)));
}

const std::string& Table::text(std::size_t row, std::string_view column_name) const {
    return rows.at(row).at(column(column_name));
}

Table read(const std::filesystem::path& path, std::string_view expected_schema,
           const std::vector<std::string>& expected_columns) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("empty CSV: " + path.string());

    const std::string prefix = "# aac-csv " + std::string(kSchemaVersion) + " ";
    if (line.rfind(prefix, 0) != 0) throw InvalidInput("CSV version line missing or unsupported: " + line);
    Table t;
    t.schema = line.substr(prefix.size());
    if (t.schema != expected_schema)
        throw InvalidInput("CSV schema '" + t.schema + "' where '" + std::string(expected_schema) + "' expected");

    if (!std::getline(in, line)) throw InvalidInput("CSV header missing");
    t.columns = split(line);
    if (!expected_columns.empty() && t.columns != expected_columns)
        throw InvalidInput("CSV columns drifted from schema '" + t.schema + "'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.columns.size()) throw InvalidInput("CSV row width does not match header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace aac::csv
