#ifndef TARDOS_STRATEGIES_HPP
#define TARDOS_STRATEGIES_HPP

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tardos/core_model.hpp"
#include "tardos/rng.hpp"

namespace tardos {

enum class StrategyKind { interleaving, scapegoat, majority, minority, coin_flip };

std::string_view to_string(StrategyKind k);
StrategyKind parse_strategy(std::string_view name);

/// A pirate coalition. Strategies only ever see the bits of active members,
/// passed in the order of active().
class CoalitionState {
public:
    CoalitionState(std::vector<UserId> members, StrategyKind kind, std::uint64_t stream_key);

    const std::vector<UserId>& members() const { return members_; }
    const std::vector<UserId>& active() const { return active_; }
    bool is_member(UserId u) const;
    bool is_active(UserId u) const;
    bool has_output() const { return !active_.empty(); }
    StrategyKind kind() const { return kind_; }

    /// Current scapegoat (scapegoat strategy only).
    std::optional<UserId> scapegoat() const;

    /// Forged symbol for one position. Unanimous columns always yield the
    /// common bit. Throws CoalitionError when no member is active.
    bool forge(std::span<const std::uint8_t> active_bits);

    /// Removes an active member; a removed scapegoat is replaced by a
    /// uniformly chosen remaining member.
    void on_disconnect(UserId user);

private:
    std::vector<UserId> members_;
    std::vector<UserId> active_;
    StrategyKind kind_;
    std::size_t scapegoat_index_ = 0; // index into active_
    rng::Stream stream_;
};

/// Delayed-feedback wrapper: a disconnection decided after observing
/// position i takes effect for forging from position i + B + 1, so the member
/// still feeds the forgeries for i+1..i+B. B = 0 behaves like the bare
/// coalition.
class DelayedCoalition {
public:
    DelayedCoalition(CoalitionState inner, std::uint64_t B);

    std::uint64_t delay() const { return delay_; }
    const CoalitionState& inner() const { return inner_; }

    /// Applies every pending removal effective at or before `position`.
    void advance_to(std::uint64_t position);

    bool has_output() const { return inner_.has_output(); }
    const std::vector<UserId>& active() const { return inner_.active(); }
    bool forge(std::span<const std::uint8_t> active_bits) { return inner_.forge(active_bits); }

    void schedule_disconnect(UserId user, std::uint64_t observed_position);

private:
    struct Pending {
        std::uint64_t effective;
        UserId user;
    };
    CoalitionState inner_;
    std::uint64_t delay_;
    std::deque<Pending> pending_;
};

DelayedCoalition delay_wrap(CoalitionState inner, std::uint64_t B);

} // namespace tardos

#endif // TARDOS_STRATEGIES_HPP
