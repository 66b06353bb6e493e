#include "tardos/strategies.hpp"

#include <algorithm>
#include <string>

#include "tardos/error.hpp"

namespace tardos {

std::string_view to_string(StrategyKind k) {
    switch (k) {
    case StrategyKind::interleaving: return "interleaving";
    case StrategyKind::scapegoat: return "scapegoat";
    case StrategyKind::majority: return "majority";
    case StrategyKind::minority: return "minority";
    case StrategyKind::coin_flip: return "coin-flip";
    }
    return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
    if (name == "interleaving") return StrategyKind::interleaving;
    if (name == "scapegoat") return StrategyKind::scapegoat;
    if (name == "majority") return StrategyKind::majority;
    if (name == "minority") return StrategyKind::minority;
    if (name == "coin-flip" || name == "coin_flip") return StrategyKind::coin_flip;
    throw DomainError("unknown strategy '" + std::string(name) + "'");
}

CoalitionState::CoalitionState(std::vector<UserId> members, StrategyKind kind, std::uint64_t stream_key)
    : members_(std::move(members)), active_(members_), kind_(kind), stream_(stream_key) {
    auto sorted = members_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw CoalitionError("coalition members must be distinct");
    if (kind_ == StrategyKind::scapegoat && !active_.empty())
        scapegoat_index_ = static_cast<std::size_t>(stream_.below(active_.size()));
}

bool CoalitionState::is_member(UserId u) const {
    return std::find(members_.begin(), members_.end(), u) != members_.end();
}

bool CoalitionState::is_active(UserId u) const {
    return std::find(active_.begin(), active_.end(), u) != active_.end();
}

std::optional<UserId> CoalitionState::scapegoat() const {
    if (kind_ != StrategyKind::scapegoat || active_.empty()) return std::nullopt;
    return active_[scapegoat_index_];
}

bool CoalitionState::forge(std::span<const std::uint8_t> active_bits) {
    if (active_.empty()) throw CoalitionError("forge called on a coalition with no active member");
    if (active_bits.size() != active_.size())
        throw CoalitionError("forge needs exactly one bit per active member");

    std::size_t ones = 0;
    for (auto b : active_bits) ones += b ? 1 : 0;
    const std::size_t size = active_bits.size();
    // Marking assumption: an undetectable position carries the common symbol.
    if (ones == 0) return false;
    if (ones == size) return true;

    switch (kind_) {
    case StrategyKind::interleaving:
        return active_bits[stream_.below(size)] != 0;
    case StrategyKind::scapegoat:
        return active_bits[scapegoat_index_] != 0;
    case StrategyKind::majority:
        if (2 * ones == size) return stream_.coin();
        return 2 * ones > size;
    case StrategyKind::minority:
        if (2 * ones == size) return stream_.coin();
        return 2 * ones < size;
    case StrategyKind::coin_flip:
        return stream_.coin();
    }
    return false;
}

void CoalitionState::on_disconnect(UserId user) {
    const auto it = std::find(active_.begin(), active_.end(), user);
    if (it == active_.end()) throw CoalitionError("user " + std::to_string(user) + " is not an active member");
    const auto idx = static_cast<std::size_t>(it - active_.begin());
    const bool was_scapegoat = kind_ == StrategyKind::scapegoat && idx == scapegoat_index_;
    active_.erase(it);
    if (kind_ != StrategyKind::scapegoat || active_.empty()) {
        scapegoat_index_ = 0;
        return;
    }
    if (was_scapegoat) {
        scapegoat_index_ = static_cast<std::size_t>(stream_.below(active_.size()));
    } else if (idx < scapegoat_index_) {
        --scapegoat_index_;
    }
}

DelayedCoalition::DelayedCoalition(CoalitionState inner, std::uint64_t B)
    : inner_(std::move(inner)), delay_(B) {}

void DelayedCoalition::advance_to(std::uint64_t position) {
    while (!pending_.empty() && pending_.front().effective <= position) {
        const UserId u = pending_.front().user;
        pending_.pop_front();
        if (inner_.is_active(u)) inner_.on_disconnect(u);
    }
}

void DelayedCoalition::schedule_disconnect(UserId user, std::uint64_t observed_position) {
    if (!inner_.is_active(user))
        throw CoalitionError("user " + std::to_string(user) + " is not an active member");
    // Observations arrive in position order, so the queue stays sorted.
    pending_.push_back({observed_position + delay_ + 1, user});
}

DelayedCoalition delay_wrap(CoalitionState inner, std::uint64_t B) {
    return DelayedCoalition(std::move(inner), B);
}

} // namespace tardos
