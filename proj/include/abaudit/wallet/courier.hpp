#pragma once

#include <map>
#include <vector>

#include "abaudit/wallet/wallet.hpp"

namespace abaudit::wallet {

struct DeliveryReport {
    std::size_t delivered = 0;
    // Stale confirmations and notifications for wallets that are not present.
    std::size_t dropped = 0;
};

// In-process stand-in for the wallet-to-wallet channel: drains every
// outbox and delivers until no notification is left in flight.
DeliveryReport deliver_all(const std::map<CompanyId, Wallet*>& wallets);

}  // namespace abaudit::wallet
