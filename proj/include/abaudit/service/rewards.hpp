#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "abaudit/core/clock.hpp"

namespace abaudit::service {

enum class RewardEvent : std::uint8_t { posted_message, fulfilled_opening, block_signed };
std::string_view to_string(RewardEvent e);

struct RewardConfig {
    std::uint64_t posted_message = 1;
    std::uint64_t fulfilled_opening = 5;
    std::uint64_t block_signed = 10;

    std::uint64_t points_for(RewardEvent e) const;
};

struct RewardEntry {
    std::string participant;
    RewardEvent event;
    std::uint64_t points = 0;
    Timestamp at = 0;
};

struct RewardAccount {
    std::string participant;
    std::uint64_t points = 0;
    std::vector<RewardEntry> events;
};

// Append-only credit log; balances are sums over it.
class RewardBook {
public:
    explicit RewardBook(RewardConfig config = {}) : config_(config) {}

    RewardEntry credit(const std::string& participant, RewardEvent event, Timestamp at);
    RewardAccount account(const std::string& participant) const;
    std::vector<RewardEntry> log() const;
    const RewardConfig& config() const { return config_; }

private:
    RewardConfig config_;
    mutable std::mutex mutex_;
    std::vector<RewardEntry> log_;
    std::map<std::string, std::uint64_t> balances_;
};

}  // namespace abaudit::service
