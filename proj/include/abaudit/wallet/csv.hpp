#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace abaudit::wallet {

inline constexpr std::string_view kBulkCsvHeader = "counterparty_id,direction,amount_minor,date,details";

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

// Minimal RFC 4180 reader: comma separated, optional double-quoted fields
// with "" escapes, LF or CRLF line ends. Blank lines are skipped. Throws
// ValidationError("line N: ...") on an unterminated quote or stray quote.
std::vector<CsvRow> parse_csv(std::string_view text);

}  // namespace abaudit::wallet
