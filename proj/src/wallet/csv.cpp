#include "abaudit/wallet/csv.hpp"

#include "abaudit/core/errors.hpp"

namespace abaudit::wallet {

std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    std::size_t line = 1;
    std::size_t row_line = 1;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool row_has_content = false;

    auto fail = [&](const std::string& what) {
        throw ValidationError("line " + std::to_string(line) + ": " + what);
    };
    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_row = [&] {
        if (row_has_content || !row.fields.empty()) {
            end_field();
            row.line = row_line;
            rows.push_back(std::move(row));
        }
        row = CsvRow{};
        field.clear();
        field_was_quoted = false;
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) fail("unexpected quote");
                in_quotes = true;
                field_was_quoted = true;
                row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                fail("bare carriage return");
                break;
            case '\n':
                end_row();
                ++line;
                row_line = line;
                break;
            default:
                if (field_was_quoted) fail("text after closing quote");
                field.push_back(c);
                row_has_content = true;
        }
    }
    if (in_quotes) fail("unterminated quoted field");
    end_row();
    return rows;
}

}  // namespace abaudit::wallet
