#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace aac::csv {

inline constexpr std::string_view kSchemaVersion = "v1";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Writes "# aac-csv v1 <schema>", the column header, then rows.
class Writer {
public:
    Writer(const std::filesystem::path& path, std::string_view schema, std::vector<std::string> columns);

    Writer& cell(double v);
    Writer& cell(long long v);
    Writer& cell(int v) { return cell(static_cast<long long>(v)); }
    Writer& cell(std::string_view v);
    void end_row();

private:
    std::ofstream out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

struct Table {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::string_view column_name) const;
    const std::string& text(std::size_t row, std::string_view column_name) const;
};

/// Reads a file written by Writer; rejects a missing/foreign version line, a different
/// schema name, or a column header that differs from `expected_columns` (when non-empty).
Table read(const std::filesystem::path& path, std::string_view expected_schema,
           const std::vector<std::string>& expected_columns = {});

std::string read_file(const std::filesystem::path& path);

}  // namespace aac::csv
