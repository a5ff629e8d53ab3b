#pragma once

// Minimal CSV line handling shared by the file readers. Not installed.

#include "wattledger/telemetry.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattledger::detail {

std::string_view trim(std::string_view s);

/// Splits one line on commas, honoring double-quoted fields, trimming whitespace.
std::vector<std::string> split_csv_line(std::string_view line);

/// Strict decimal parse of the whole field; accepts nan/inf spellings so the
/// caller can reject them with a useful message.
std::optional<double> parse_number(std::string_view s);

std::string to_lower(std::string_view s);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// `# key: value` preamble lines, the header and every non-empty row of a CSV.
struct Table {
    Metadata preamble;
    std::vector<std::string> header;
    std::vector<Row> rows;

    std::optional<std::size_t> column(std::string_view name) const;
    std::string header_list() const;
};

Table read_table(std::istream& in);

/// Cell `idx` of `row`; data_error naming the line when the row is short.
const std::string& field(const Row& row, std::size_t idx, const Table& table);

/// Finite number or data_error naming the line.
double parse_value(std::string_view text, std::size_t line, std::string_view what);

double parse_row_timestamp(std::string_view text, std::size_t line);

struct LinedSample {
    Sample sample;
    std::size_t line;
};

/// Sorts by timestamp and rejects duplicates, citing both source lines.
std::vector<Sample> sort_and_check(std::vector<LinedSample> rows);

} // namespace wattledger::detail
