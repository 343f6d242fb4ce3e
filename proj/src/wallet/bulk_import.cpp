#include <charconv>
#include <mutex>

#include "abaudit/core/errors.hpp"
#include "abaudit/wallet/csv.hpp"
#include "abaudit/wallet/wallet.hpp"

namespace abaudit::wallet {

namespace {

std::int64_t parse_amount(const std::string& text) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("amount_minor is not an integer: " + text);
    }
    return v;
}

Direction parse_direction(const std::string& text) {
    if (text == "0") return Direction::outgoing;
    if (text == "1") return Direction::incoming;
    throw ValidationError("direction must be 0 or 1: " + text);
}

}  // namespace

ImportResult Wallet::bulk_import(std::string_view csv) {
    auto rows = parse_csv(csv);
    if (rows.empty()) throw ValidationError("line 1: missing header");
    std::string header;
    for (std::size_t i = 0; i < rows[0].fields.size(); ++i) {
        if (i) header += ',';
        header += rows[0].fields[i];
    }
    if (rows[0].line != 1 || header != kBulkCsvHeader) {
        throw ValidationError("line " + std::to_string(rows[0].line) + ": header must be '" +
                              std::string(kBulkCsvHeader) + "'");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].fields.size() != 5) {
            throw ValidationError("line " + std::to_string(rows[i].line) + ": expected 5 fields, found " +
                                  std::to_string(rows[i].fields.size()));
        }
    }

    std::unique_lock lock(*mutex_);
    ImportResult result;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        try {
            StagedTransaction tx;
            tx.counterparty_id = f[0];
            tx.direction = parse_direction(f[1]);
            tx.amount = parse_amount(f[2]);
            tx.date = Date::parse_iso(f[3]);
            tx.details = f[4];
            stage_locked(std::move(tx));
            ++result.accepted;
        } catch (const ValidationError& e) {
            result.rejected.push_back({rows[i].line, e.what()});
        }
    }
    return result;
}

}  // namespace abaudit::wallet
