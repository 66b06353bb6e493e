#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <vector>

#include "tardos/error.hpp"
#include "tardos/optimizer.hpp"
#include "tardos/tracers.hpp"

using namespace tardos;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

SchemeParameters desk_params(SchemeVariant v = SchemeVariant::dynamic, std::uint64_t B = 0) {
    const ProblemInstance in{10'000, 1e-3, 1e-3, 5, B, v};
    return derive_scheme_params(in, optimize_constants(in));
}

// Hand-made parameters around a fixed book; only ell, Z and delta matter.
SchemeParameters manual(std::uint64_t ell, double Z, double delta = 0.01) {
    SchemeParameters p;
    p.ell = ell;
    p.Z = Z;
    p.delta = delta;
    p.instance = {100, 1e-3, 1e-3, 2, 0, SchemeVariant::dynamic};
    p.constants.d_delta = 1.0;
    return p;
}

CodeBook half_book(std::uint64_t n, std::uint64_t length, const std::vector<std::vector<int>>& rows) {
    BitMatrix x(n, length);
    for (std::uint64_t j = 0; j < rows.size(); ++j)
        for (std::uint64_t i = 0; i < rows[j].size(); ++i) x.set(j, i, rows[j][i] != 0);
    return CodeBook(0, 0.0, std::vector<double>(length, 0.5), x);
}

} // namespace

TEST_CASE("position score values") {
    CHECK(position_score(true, true, 0.5) == 1.0);
    CHECK(position_score(true, false, 0.5) == -1.0);
    CHECK(position_score(false, true, 0.5) == -1.0);
    CHECK(position_score(false, false, 0.5) == 1.0);
    CHECK(position_score(true, true, 0.2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(position_score(false, false, 0.2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(position_score(true, true, 0.0), DomainError);
    CHECK_THROWS_AS(position_score(true, true, 1.0), DomainError);
}

TEST_CASE("innocent score has mean 0 and variance 1") {
    rng::Stream s(17);
    for (int k = 0; k < 1000; ++k) {
        const double p = 1e-4 + (1 - 2e-4) * s.uniform();
        for (bool y : {false, true}) {
            const double s1 = position_score(true, y, p);
            const double s0 = position_score(false, y, p);
            const double mean = p * s1 + (1 - p) * s0;
            const double second = p * s1 * s1 + (1 - p) * s0 * s0;
            CHECK(std::abs(mean) <= 1e-12);
            CHECK(std::abs(second - mean * mean - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("static trace accuses a perfect match only") {
    const std::uint64_t ell = 64;
    std::vector<int> row(ell);
    for (std::uint64_t i = 0; i < ell; ++i) row[i] = int((i * 7) % 3 == 0);
    const auto book = half_book(3, ell, {row});
    std::vector<std::uint8_t> y(ell), anti(ell);
    for (std::uint64_t i = 0; i < ell; ++i) {
        y[i] = static_cast<std::uint8_t>(row[i]);
        anti[i] = static_cast<std::uint8_t>(1 - row[i]);
    }
    const auto hit = static_trace(manual(ell, 0.0), book, y);
    CHECK(hit.scores[0] == doctest::Approx(double(ell)));
    CHECK(std::count(hit.accused.begin(), hit.accused.end(), 0) == 1);
    const auto miss = static_trace(manual(ell, 0.0), book, anti);
    CHECK(miss.scores[0] == doctest::Approx(-double(ell)));
    CHECK(std::count(miss.accused.begin(), miss.accused.end(), 0) == 0);
    CHECK_THROWS_AS(static_trace(manual(ell + 1, 0.0), book, y), DomainError);
}

TEST_CASE("dynamic step uses a strict threshold and disconnects all crossers") {
    ScoreState st({0, 1, 2});
    const std::vector<std::uint8_t> col{1, 1, 0};
    auto ev = dynamic_step(st, 1.0, col, true, 0.5);
    CHECK(ev.empty()); // scores equal Z exactly
    CHECK(st.scores[0] == 1.0);
    ev = dynamic_step(st, 1.0, col, true, 0.5);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0].user == 0);
    CHECK(ev[1].user == 1);
    CHECK(ev[0].position == 2);
    CHECK(ev[1].position == 2);
    // Frozen afterwards.
    dynamic_step(st, 1.0, col, false, 0.5);
    CHECK(st.scores[0] == 2.0);
    CHECK(st.scores[2] == -1.0);
    CHECK_THROWS_AS(dynamic_step(st, 1.0, std::vector<std::uint8_t>{1}, true, 0.5), DomainError);
}

TEST_CASE("dynamic engine with infinite threshold reproduces static scores") {
    rng::Stream s(404);
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t n = 2 + s.below(49);
        const std::uint64_t ell = 1 + s.below(2000);
        const std::uint64_t c = 1 + s.below(std::min<std::uint64_t>(n, 6));
        const auto book = CodeBook::streaming(s(), n, ell, 0.001 + 0.05 * s.uniform());
        std::vector<UserId> members;
        for (UserId u = 0; u < c; ++u) members.push_back(u);
        TraceOptions opt;
        opt.score_all_users = true;
        opt.record_positions = true;
        const auto params = manual(ell, inf);
        const auto t = run_dynamic(params, book, CoalitionState(members, StrategyKind::interleaving, s()), opt);
        REQUIRE(t.positions.size() == ell);
        CHECK(t.disconnects.empty());
        std::vector<std::uint8_t> y;
        for (const auto& r : t.positions) y.push_back(r.y);
        const auto st = static_trace(params, book, y);
        for (UserId u = 0; u < n; ++u) CHECK(t.score_of(u) == st.scores[u]);
    }
}

TEST_CASE("extended scores equal static scores") {
    const auto params = desk_params();
    const auto book = CodeBook::streaming(5, 200, params.ell, params.delta);
    TraceOptions opt;
    opt.score_all_users = true;
    opt.extended_scores = true;
    opt.record_positions = true;
    const auto t = run_dynamic(params, book, CoalitionState({0, 1, 2, 3, 4}, StrategyKind::interleaving, 9), opt);
    REQUIRE(!t.disconnects.empty());
    // Replay the recorded forgery against the full length for the static oracle.
    std::vector<std::uint8_t> y;
    for (const auto& r : t.positions) y.push_back(r.y);
    auto cut = params;
    cut.ell = y.size();
    const auto st = static_trace(cut, book, y);
    for (std::size_t k = 0; k < t.tracked.size(); ++k)
        CHECK(t.extended_final_scores[k] == doctest::Approx(st.scores[t.tracked[k]]).epsilon(1e-12));
}

TEST_CASE("dynamic run catches a coalition and freezes scores in band") {
    const auto params = desk_params();
    const auto book = CodeBook::streaming(21, 2000, params.ell, params.delta);
    TraceOptions opt;
    for (UserId u = 5; u < 505; ++u) opt.innocents.push_back(u);
    const auto t = run_dynamic(params, book, CoalitionState({0, 1, 2, 3, 4}, StrategyKind::interleaving, 2), opt);
    CHECK(t.termination == Termination::coalition_caught);
    REQUIRE(t.catch_all_position);
    CHECK(*t.catch_all_position <= params.ell);
    CHECK(t.innocent_accusations == 0);
    const double band = std::sqrt((1 - params.delta) / params.delta);
    std::set<UserId> seen;
    std::uint64_t last = 0;
    for (const auto& e : t.disconnects) {
        CHECK(e.score > params.Z);
        CHECK(e.score <= params.Z + band);
        CHECK(e.position >= last);
        CHECK(seen.insert(e.user).second);
        CHECK(t.score_of(e.user) == e.score);
        last = e.position;
    }
    CHECK(t.pirate_catch_positions().size() == 5);
}

TEST_CASE("single pirate is caught near Z over the arcsine slope") {
    const auto params = desk_params();
    std::vector<double> catches;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto book = CodeBook::streaming(seed, 10, params.ell, params.delta);
        const auto t = run_dynamic(params, book, CoalitionState({3}, StrategyKind::scapegoat, seed));
        REQUIRE(t.catch_all_position);
        catches.push_back(static_cast<double>(*t.catch_all_position));
    }
    std::sort(catches.begin(), catches.end());
    const double median = 0.5 * (catches[29] + catches[30]);
    const double expected = params.Z / (2 / std::numbers::pi);
    CHECK(std::abs(median - expected) <= 0.25 * expected);
}

TEST_CASE("empty coalition terminates immediately") {
    const auto params = desk_params();
    const auto book = CodeBook::streaming(1, 10, params.ell, params.delta);
    const auto t = run_dynamic(params, book, CoalitionState({}, StrategyKind::interleaving, 1));
    CHECK(t.termination == Termination::no_coalition);
    CHECK(t.positions_distributed == 0);
    CHECK(t.disconnects.empty());
}

TEST_CASE("runs are deterministic") {
    const auto params = desk_params();
    const auto book = CodeBook::streaming(8, 100, params.ell, params.delta);
    TraceOptions opt;
    opt.innocents = {50, 60, 70};
    opt.trajectory_stride = 100;
    auto run = [&] {
        return run_dynamic(params, book, CoalitionState({0, 1, 2}, StrategyKind::scapegoat, 4), opt);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.disconnects == b.disconnects);
    CHECK(a.final_scores == b.final_scores);
    CHECK(a.trajectory.size() == b.trajectory.size());
}

TEST_CASE("static engine accuses after the last position only") {
    const auto params = desk_params(SchemeVariant::static_scheme);
    const auto book = CodeBook::streaming(3, 300, params.ell, params.delta);
    TraceOptions opt;
    for (UserId u = 5; u < 300; ++u) opt.innocents.push_back(u);
    opt.record_positions = true;
    const auto t = run_static(params, book, CoalitionState({0, 1, 2, 3, 4}, StrategyKind::interleaving, 6), opt);
    CHECK(t.positions_distributed == params.ell);
    CHECK(t.termination == Termination::length_exhausted);
    for (const auto& e : t.disconnects) CHECK(e.position == params.ell);
    CHECK_FALSE(t.accused.empty());
    CHECK(t.innocent_accusations == 0);

    std::vector<std::uint8_t> y;
    for (const auto& r : t.positions) y.push_back(r.y);
    const auto st = static_trace(params, book, y);
    std::vector<UserId> expected;
    for (UserId u : st.accused)
        if (std::count(t.tracked.begin(), t.tracked.end(), u)) expected.push_back(u);
    CHECK(t.accused == expected);
}

TEST_CASE("weakly dynamic A contaminates B positions per trigger") {
    // Pirates 0 and 1 hold 1 everywhere; innocent 2 holds 0. p = 1/2, so
    // each pirate gains exactly 1 per scored position.
    const std::uint64_t B = 3;
    const std::uint64_t len = 40;
    std::vector<int> ones(len, 1), zeros(len, 0);
    const auto book = half_book(3, len, {ones, ones, zeros});
    TraceOptions opt;
    opt.innocents = {2};
    opt.record_positions = true;
    const auto t = run_weakly_dynamic_A(manual(20, 4.5), book,
                                        CoalitionState({0, 1}, StrategyKind::interleaving, 1), B, opt);
    // Both cross at position 5 together: one merged window 6..8.
    REQUIRE(t.disconnects.size() == 2);
    CHECK(t.disconnects[0].position == 5);
    CHECK(t.disconnects[1].position == 5);
    CHECK(t.positions_contaminated == B);
    std::uint64_t contaminated = 0;
    for (const auto& r : t.positions) {
        if (r.contaminated) {
            ++contaminated;
            CHECK(r.position >= 6);
            CHECK(r.position <= 8);
        }
    }
    CHECK(contaminated == B);
    // Pirates keep forging through the window, then the broadcast stops.
    CHECK(t.positions_distributed == 5 + B);
    CHECK(t.termination == Termination::coalition_caught);
}

TEST_CASE("weakly dynamic A with back-to-back triggers never double counts") {
    const std::uint64_t B = 4;
    const std::uint64_t len = 60;
    // Pirate 1 lags by 4 positions: ones except at positions 1..4.
    std::vector<int> p0(len, 1), p1(len, 1);
    for (int i = 0; i < 4; ++i) p1[i] = 0;
    const auto book = half_book(2, len, {p0, p1});
    TraceOptions opt;
    opt.record_positions = true;
    const auto t = run_weakly_dynamic_A(manual(30, 4.5), book,
                                        CoalitionState({0, 1}, StrategyKind::scapegoat, 0), B, opt);
    std::set<std::uint64_t> windows;
    for (const auto& r : t.positions)
        if (r.contaminated) CHECK(windows.insert(r.position).second);
    CHECK(windows.size() == t.positions_contaminated);
    CHECK(t.positions_scored + t.positions_contaminated == t.positions_distributed);
    CHECK(t.disconnects.size() == 2);
}

TEST_CASE("weakly dynamic A without disconnections matches dynamic") {
    const auto params = manual(500, inf, 0.01);
    const auto book = CodeBook::streaming(44, 20, 600, 0.01);
    const auto a = run_weakly_dynamic_A(params, book, CoalitionState({0, 1}, StrategyKind::interleaving, 3), 5);
    const auto d = run_dynamic(params, book, CoalitionState({0, 1}, StrategyKind::interleaving, 3));
    CHECK(a.positions_contaminated == 0);
    CHECK(a.positions_scored == d.positions_scored);
    CHECK(a.positions_scored == 500);
    CHECK(a.final_scores == d.final_scores);
}

TEST_CASE("weakly dynamic A length bound") {
    const auto params = desk_params(SchemeVariant::dynamic);
    CHECK(weakly_a_length_bound(params, 8) == params.ell + 40);
    const auto book = CodeBook::streaming(12, 100, weakly_a_length_bound(params, 8), params.delta);
    const auto t = run_weakly_dynamic_A(params, book,
                                        CoalitionState({0, 1, 2, 3, 4}, StrategyKind::interleaving, 3), 8);
    CHECK(t.positions_scored <= params.ell);
    CHECK(t.positions_distributed <= params.ell + 8 * 5);
    CHECK(t.positions_contaminated <= 8 * 5);
    CHECK_THROWS_AS(run_weakly_dynamic_A(params, book, CoalitionState({0}, StrategyKind::interleaving, 3), 0),
                    DomainError);
}

TEST_CASE("weakly dynamic B scores every position with delayed removal") {
    const std::uint64_t B = 6;
    const std::uint64_t len = 40;
    std::vector<int> ones(len, 1), zeros(len, 0);
    const auto book = half_book(2, len, {ones, zeros});
    TraceOptions opt;
    opt.record_positions = true;
    // Pirate 1 holds 0 everywhere, so the scapegoat choice decides y.
    const auto t = run_weakly_dynamic_B(manual(30, 2.5), book,
                                        CoalitionState({0, 1}, StrategyKind::scapegoat, 1), B, opt);
    CHECK(t.positions_contaminated == 0);
    CHECK(t.positions_scored == t.positions_distributed);
    REQUIRE(!t.disconnects.empty());
    const auto first = t.disconnects.front();
    CHECK(first.position == 3);
    // The disconnected scapegoat keeps dictating y for B more positions.
    const bool goat_bit = first.user == 0;
    for (std::uint64_t i = first.position + 1; i <= first.position + B && i <= t.positions.size(); ++i)
        CHECK(t.positions[i - 1].y == goat_bit);
    if (t.positions.size() > first.position + B) CHECK(t.positions[first.position + B].y != goat_bit);
}

TEST_CASE("universal simultaneous crossing records the lowest entry") {
    UniversalLadder ladder;
    ladder.n = 2;
    for (std::uint64_t c : {2, 3}) {
        LadderEntry e;
        e.c = c;
        e.delta = 0.01;
        e.ell = 10;
        e.Z = 2.5;
        ladder.entries.push_back(e);
    }
    BitMatrix x(2, 10);
    for (std::uint64_t i = 0; i < 10; ++i) x.set(0, i, true);
    const CodeBook book(0, 0.0, std::vector<double>(10, 0.5), x);
    const auto t = run_universal(ladder, book, CoalitionState({0}, StrategyKind::interleaving, 1));
    REQUIRE(t.disconnects.size() == 1);
    CHECK(t.disconnects[0].position == 3);
    CHECK(t.disconnects[0].entry_c == 2);
}

TEST_CASE("universal counters match a brute-force recount") {
    UniversalLadder ladder;
    ladder.n = 30;
    for (auto [c, delta] : {std::pair{2, 0.05}, std::pair{3, 0.01}, std::pair{5, 0.002}}) {
        LadderEntry e;
        e.c = c;
        e.delta = delta;
        e.ell = 100000;
        e.Z = inf;
        ladder.entries.push_back(e);
    }
    const auto book = CodeBook::streaming(31, 30, 3000, 0.0);
    TraceOptions opt;
    opt.record_positions = true;
    const auto t = run_universal(ladder, book, CoalitionState({0, 1, 2}, StrategyKind::majority, 1), opt);
    CHECK(t.termination == Termination::codebook_exhausted);
    REQUIRE(t.positions.size() == 3000);
    std::vector<std::uint64_t> count(3, 0);
    for (const auto& r : t.positions) {
        bool any = false;
        for (std::size_t e = 0; e < 3; ++e) {
            const double d = ladder.entries[e].delta;
            if (book.bias(r.position) >= d && book.bias(r.position) <= 1 - d) {
                ++count[e];
                any = true;
            }
        }
        CHECK(r.counters == count);
        CHECK(r.disregarded == !any);
    }
    CHECK(t.counters == count);
}

TEST_CASE("universal entry is live up to and including its last position") {
    UniversalLadder ladder;
    LadderEntry e;
    e.c = 2;
    e.delta = 0.01;
    e.ell = 3;
    e.Z = 2.5;
    ladder.entries = {e};
    ladder.n = 2;
    BitMatrix x(2, 8);
    for (std::uint64_t i = 0; i < 8; ++i) x.set(0, i, true);
    const CodeBook book(0, 0.0, std::vector<double>(8, 0.5), x);
    auto t = run_universal(ladder, book, CoalitionState({0}, StrategyKind::interleaving, 1));
    REQUIRE(t.disconnects.size() == 1);
    CHECK(t.disconnects[0].position == 3);
    CHECK(t.exhausted_at[0] == 3);

    ladder.entries[0].ell = 2;
    t = run_universal(ladder, book, CoalitionState({0}, StrategyKind::interleaving, 1));
    CHECK(t.disconnects.empty());
    CHECK(t.termination == Termination::length_exhausted);
    CHECK(t.positions_distributed == 2);
}

TEST_CASE("universal run on an optimized ladder") {
    const auto ladder = build_universal_ladder(10'000, 1e-3, 1e-3, full_grid(6));
    const double top = ladder.entries.back().delta;
    const auto book = CodeBook::streaming(77, 400, universal_codebook_length(ladder, top), top);
    TraceOptions opt;
    opt.record_positions = true;
    for (UserId u = 10; u < 400; ++u) opt.innocents.push_back(u);
    const auto t = run_universal(ladder, book, CoalitionState({0, 1}, StrategyKind::interleaving, 5), opt);
    REQUIRE(t.catch_all_position);
    CHECK(t.innocent_accusations == 0);
    // Biases from the top cutoff: the top counter is the position counter.
    for (const auto& r : t.positions) CHECK(r.counters.back() == r.position);
    // A pair is caught on the scale of the small entries, well before the top length.
    CHECK(*t.catch_all_position < ladder.entries.back().ell / 2);
    CHECK(universal_codebook_length(ladder, 0.0) > ladder.entries.back().ell);
}

TEST_CASE("transcript export") {
    const auto params = desk_params();
    const auto book = CodeBook::streaming(8, 50, params.ell, params.delta);
    TraceOptions opt;
    opt.record_positions = true;
    const auto t = run_dynamic(params, book, CoalitionState({0, 1}, StrategyKind::interleaving, 4), opt);
    const auto path = std::filesystem::temp_directory_path() / "tardos_transcript.csv";
    write_transcript_csv(t, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "position,event,user,entry_c,score,p_i,y_i");
    std::size_t rows = 0, disconnects = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.find(",disconnect,") != std::string::npos) ++disconnects;
    }
    CHECK(rows == t.positions.size() + t.disconnects.size());
    CHECK(disconnects == t.disconnects.size());

    const auto j = transcript_summary(t);
    CHECK(j.at("termination") == "coalition_caught");
    CHECK(j.at("positions_distributed") == t.positions_distributed);
}
