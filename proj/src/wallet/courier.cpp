#include "abaudit/wallet/courier.hpp"

#include <deque>

#include "abaudit/core/errors.hpp"

namespace abaudit::wallet {

DeliveryReport deliver_all(const std::map<CompanyId, Wallet*>& wallets) {
    DeliveryReport report;
    std::deque<Notification> queue;
    auto collect = [&] {
        for (const auto& [id, w] : wallets) {
            for (auto& n : w->take_outbox()) queue.push_back(std::move(n));
        }
    };
    collect();
    while (!queue.empty()) {
        auto note = std::move(queue.front());
        queue.pop_front();
        auto it = wallets.find(note.to);
        if (it == wallets.end()) {
            ++report.dropped;
            continue;
        }
        try {
            it->second->receive_counterparty_values(note);
            ++report.delivered;
        } catch (const StateError&) {
            ++report.dropped;
        }
        for (auto& n : it->second->take_outbox()) queue.push_back(std::move(n));
    }
    return report;
}

}  // namespace abaudit::wallet
