#include "abaudit/service/rewards.hpp"

namespace abaudit::service {

std::string_view to_string(RewardEvent e) {
    switch (e) {
        case RewardEvent::posted_message: return "posted_message";
        case RewardEvent::fulfilled_opening: return "fulfilled_opening";
        case RewardEvent::block_signed: return "block_signed";
    }
    return "?";
}

std::uint64_t RewardConfig::points_for(RewardEvent e) const {
    switch (e) {
        case RewardEvent::posted_message: return posted_message;
        case RewardEvent::fulfilled_opening: return fulfilled_opening;
        case RewardEvent::block_signed: return block_signed;
    }
    return 0;
}

RewardEntry RewardBook::credit(const std::string& participant, RewardEvent event, Timestamp at) {
    RewardEntry e{participant, event, config_.points_for(event), at};
    std::lock_guard lock(mutex_);
    log_.push_back(e);
    balances_[participant] += e.points;
    return e;
}

RewardAccount RewardBook::account(const std::string& participant) const {
    std::lock_guard lock(mutex_);
    RewardAccount a;
    a.participant = participant;
    auto it = balances_.find(participant);
    if (it != balances_.end()) a.points = it->second;
    for (const auto& e : log_) {
        if (e.participant == participant) a.events.push_back(e);
    }
    return a;
}

std::vector<RewardEntry> RewardBook::log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

}  // namespace abaudit::service
