#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tardos/error.hpp"
#include "tardos/strategies.hpp"

using namespace tardos;

namespace {

const StrategyKind all_kinds[] = {StrategyKind::interleaving, StrategyKind::scapegoat, StrategyKind::majority,
                                  StrategyKind::minority, StrategyKind::coin_flip};

std::vector<std::uint8_t> bits_for(const CoalitionState& c, const std::vector<UserId>& ones) {
    std::vector<std::uint8_t> out;
    for (UserId u : c.active()) out.push_back(std::count(ones.begin(), ones.end(), u) ? 1 : 0);
    return out;
}

} // namespace

TEST_CASE("strategy names") {
    for (auto k : all_kinds) CHECK(parse_strategy(to_string(k)) == k);
    CHECK(parse_strategy("coin-flip") == StrategyKind::coin_flip);
    CHECK_THROWS_AS(parse_strategy("omniscient"), DomainError);
}

TEST_CASE("unanimous columns keep their symbol") {
    for (auto k : all_kinds) {
        CoalitionState c({4, 9, 17}, k, 1);
        const std::vector<std::uint8_t> ones{1, 1, 1}, zeros{0, 0, 0};
        for (int r = 0; r < 200; ++r) {
            CHECK(c.forge(ones));
            CHECK_FALSE(c.forge(zeros));
        }
    }
}

TEST_CASE("scapegoat outputs the designated member") {
    CoalitionState c({1, 2, 3}, StrategyKind::scapegoat, 77);
    REQUIRE(c.scapegoat());
    const UserId goat = *c.scapegoat();
    std::vector<UserId> others;
    for (UserId u : c.active())
        if (u != goat) others.push_back(u);
    for (int r = 0; r < 100; ++r) CHECK_FALSE(c.forge(bits_for(c, others)));
    CHECK(c.forge(bits_for(c, {goat})));
}

TEST_CASE("majority and interleaving frequencies") {
    CoalitionState maj({0, 1, 2}, StrategyKind::majority, 3);
    CoalitionState inter({0, 1, 2}, StrategyKind::interleaving, 4);
    CoalitionState mino({0, 1, 2}, StrategyKind::minority, 5);
    const std::vector<std::uint8_t> col{1, 1, 0};
    int inter_ones = 0;
    const int N = 10000;
    for (int r = 0; r < N; ++r) {
        CHECK(maj.forge(col));
        CHECK_FALSE(mino.forge(col));
        inter_ones += inter.forge(col) ? 1 : 0;
    }
    CHECK(std::abs(inter_ones / double(N) - 2.0 / 3.0) <= 0.02);
}

TEST_CASE("interleaving copies a uniform active member") {
    CoalitionState c({0, 1, 2, 3, 4, 5, 6}, StrategyKind::interleaving, 12);
    const int N = 40000;
    for (int ones = 1; ones < 7; ++ones) {
        std::vector<std::uint8_t> col(7, 0);
        for (int k = 0; k < ones; ++k) col[k] = 1;
        int hits = 0;
        for (int r = 0; r < N; ++r) hits += c.forge(col) ? 1 : 0;
        const double p = ones / 7.0;
        CHECK(std::abs(hits / double(N) - p) <= 4 * std::sqrt(p * (1 - p) / N));
    }
}

TEST_CASE("ties and coin flips are fair") {
    const int N = 40000;
    for (auto k : {StrategyKind::majority, StrategyKind::minority, StrategyKind::coin_flip}) {
        CoalitionState c({0, 1, 2, 3}, k, 8);
        const std::vector<std::uint8_t> col{1, 0, 1, 0};
        int hits = 0;
        for (int r = 0; r < N; ++r) hits += c.forge(col) ? 1 : 0;
        CHECK(std::abs(hits / double(N) - 0.5) <= 4 * 0.5 / std::sqrt(N));
    }
}

TEST_CASE("marking assumption fuzz") {
    rng::Stream s(31337);
    std::uint64_t violations = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const auto size = static_cast<std::size_t>(1 + s.below(12));
        std::vector<UserId> members;
        for (std::size_t k = 0; k < size; ++k) members.push_back(k * 3 + 1);
        CoalitionState c(members, all_kinds[s.below(5)], s());
        for (int r = 0; r < 50; ++r) {
            std::vector<std::uint8_t> col(c.active().size());
            const bool unanimous = s.coin();
            const bool value = s.coin();
            for (auto& b : col) b = unanimous ? value : s.coin();
            const bool out = c.forge(col);
            if (std::all_of(col.begin(), col.end(), [&](auto b) { return b == col[0]; }) && out != (col[0] != 0))
                ++violations;
            if (c.active().size() > 1 && s.below(10) == 0) c.on_disconnect(c.active()[s.below(c.active().size())]);
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("disconnection bookkeeping") {
    CoalitionState c({10, 20}, StrategyKind::interleaving, 1);
    CHECK_THROWS_AS(c.on_disconnect(30), CoalitionError);
    c.on_disconnect(10);
    CHECK_THROWS_AS(c.on_disconnect(10), CoalitionError);
    CHECK(c.is_member(10));
    CHECK_FALSE(c.is_active(10));
    c.on_disconnect(20);
    CHECK_FALSE(c.has_output());
    CHECK_THROWS_AS(c.forge(std::vector<std::uint8_t>{}), CoalitionError);

    CoalitionState d({1, 2}, StrategyKind::majority, 1);
    CHECK_THROWS_AS(d.forge(std::vector<std::uint8_t>{1}), CoalitionError);
    CHECK_THROWS_AS(CoalitionState({1, 1}, StrategyKind::majority, 1), CoalitionError);
}

TEST_CASE("scapegoat redesignation") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CoalitionState c({1, 2, 3, 4}, StrategyKind::scapegoat, seed);
        const UserId goat = *c.scapegoat();
        UserId other = goat == 1 ? 2 : 1;
        c.on_disconnect(other);
        CHECK(*c.scapegoat() == goat);
        c.on_disconnect(goat);
        const UserId next = *c.scapegoat();
        CHECK(next != goat);
        CHECK(c.is_active(next));
        CHECK(c.active().size() == 2);
    }
    // Redesignation is spread over the remaining members.
    std::vector<int> seen(5, 0);
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        CoalitionState c({1, 2, 3, 4}, StrategyKind::scapegoat, seed);
        c.on_disconnect(*c.scapegoat());
        ++seen[*c.scapegoat()];
    }
    for (UserId u = 1; u <= 4; ++u) CHECK(seen[u] > 40);
}

TEST_CASE("delayed coalition keeps feeding for B positions") {
    for (std::uint64_t B : {1, 8}) {
        auto c = delay_wrap(CoalitionState({0, 1}, StrategyKind::interleaving, 3), B);
        const std::uint64_t i0 = 10;
        c.advance_to(i0);
        c.schedule_disconnect(0, i0);
        for (std::uint64_t i = i0 + 1; i <= i0 + B; ++i) {
            c.advance_to(i);
            CHECK(c.active().size() == 2);
        }
        c.advance_to(i0 + B + 1);
        CHECK(c.active() == std::vector<UserId>{1});
        CHECK_THROWS_AS(c.schedule_disconnect(0, i0 + B + 1), CoalitionError);
    }
}

TEST_CASE("B = 0 wrapper matches the bare coalition") {
    CoalitionState bare({0, 1, 2, 3, 4}, StrategyKind::interleaving, 55);
    auto wrapped = delay_wrap(CoalitionState({0, 1, 2, 3, 4}, StrategyKind::interleaving, 55), 0);
    rng::Stream s(2);
    for (std::uint64_t i = 1; i <= 2000 && bare.has_output(); ++i) {
        wrapped.advance_to(i);
        REQUIRE(wrapped.active() == bare.active());
        std::vector<std::uint8_t> col(bare.active().size());
        for (auto& b : col) b = s.coin();
        CHECK(bare.forge(col) == wrapped.forge(col));
        if (i % 300 == 0) {
            const UserId u = bare.active().front();
            bare.on_disconnect(u);
            wrapped.schedule_disconnect(u, i);
        }
    }
}
