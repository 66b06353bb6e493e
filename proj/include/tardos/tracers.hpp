#ifndef TARDOS_TRACERS_HPP
#define TARDOS_TRACERS_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tardos/codegen.hpp"
#include "tardos/core_model.hpp"
#include "tardos/strategies.hpp"

namespace tardos {

/// The two score magnitudes of a position: sqrt((1-p)/p) and sqrt(p/(1-p)).
struct ScoreWeights {
    double one = 1.0;  // applies when the user holds a 1
    double zero = 1.0; // applies when the user holds a 0

    explicit ScoreWeights(double p) : one(std::sqrt((1.0 - p) / p)), zero(std::sqrt(p / (1.0 - p))) {}

    double score(bool x, bool y) const {
        if (x) return y ? one : -one;
        return y ? -zero : zero;
    }
};

/// Symmetric per-position score; throws DomainError unless 0 < p < 1.
double position_score(bool x, bool y, double p);

struct DisconnectEvent {
    std::uint64_t position = 0;
    UserId user = 0;
    double score = 0;        // score of the triggering entry at disconnection
    std::uint64_t entry_c = 0; // coalition-size entry that fired (c0 for single-threshold engines)
    bool pirate = false;

    friend bool operator==(const DisconnectEvent&, const DisconnectEvent&) = default;
};

/// Scores for a fixed set of users under one threshold.
struct ScoreState {
    explicit ScoreState(std::vector<UserId> users);

    std::vector<UserId> users;
    std::vector<double> scores;
    std::vector<std::uint8_t> active;
    std::vector<DisconnectEvent> disconnected;
    std::uint64_t position = 0;
};

/// Adds one position to every active user's score (column holds one bit per
/// entry of state.users), then disconnects every active user whose score
/// strictly exceeds Z.
std::vector<DisconnectEvent> dynamic_step(ScoreState& state, double Z,
                                          std::span<const std::uint8_t> column, bool y, double p);

struct StaticTraceResult {
    std::vector<UserId> accused;
    std::vector<double> scores; // indexed by user
};

/// Scores all users over y (one symbol per position 1..|y|) and accuses
/// those with total score > Z. Requires |y| == params.ell.
StaticTraceResult static_trace(const SchemeParameters& params, const CodeBook& book,
                               std::span<const std::uint8_t> y);

enum class Termination {
    coalition_caught, // pirates stopped producing output
    length_exhausted, // every threshold ran out of scored positions
    codebook_exhausted,
    no_coalition,
};

std::string_view to_string(Termination t);

enum class TrajectoryEvent { score, innocent_min, innocent_max, disconnect, threshold, codelength };

std::string_view to_string(TrajectoryEvent e);

struct TrajectoryPoint {
    std::uint64_t position = 0;
    std::optional<UserId> user;
    std::uint64_t entry_c = 0;
    double score = 0;
    TrajectoryEvent event = TrajectoryEvent::score;
};

struct PositionRecord {
    std::uint64_t position = 0;
    double bias = 0;
    bool y = false;
    bool contaminated = false;
    bool disregarded = false;             // no threshold counted this position
    std::vector<std::uint64_t> counters;  // t per entry after this position
};

struct TraceOptions {
    std::vector<UserId> innocents;        // scored alongside the coalition
    bool score_all_users = false;         // score every user of the codebook
    bool record_positions = false;
    std::uint64_t trajectory_stride = 0;  // 0 disables trajectory logging
    bool extended_scores = false;         // keep scoring disconnected users (diagnostic only)
    std::uint64_t max_positions = 0;      // 0: engine default
};

struct TraceTranscript {
    SchemeVariant scheme = SchemeVariant::dynamic;
    std::vector<std::uint64_t> entry_c;    // one per threshold
    std::vector<double> thresholds;
    std::vector<std::uint64_t> entry_lengths;

    std::vector<PositionRecord> positions; // when record_positions
    std::vector<DisconnectEvent> disconnects;
    std::vector<TrajectoryPoint> trajectory;

    std::vector<UserId> accused;
    std::vector<UserId> coalition;
    std::optional<std::uint64_t> catch_all_position;
    Termination termination = Termination::length_exhausted;

    std::uint64_t positions_distributed = 0;
    std::uint64_t positions_scored = 0;
    std::uint64_t positions_contaminated = 0;
    std::uint64_t innocent_accusations = 0;
    /// Sum over scored positions of the active pirates' position scores.
    double coalition_increment = 0;

    std::vector<std::uint64_t> counters;     // final t per entry
    std::vector<std::uint64_t> exhausted_at; // position where t reached the entry length, 0 if never

    std::vector<UserId> tracked;
    std::vector<double> final_scores;        // tracked x entries, row-major
    std::vector<double> extended_final_scores; // tracked, single-entry engines only
    double z_tilde = 0;                      // Z + sqrt(d_delta) c0^(2/3), diagnostic

    double score_of(UserId user, std::size_t entry = 0) const;
    double coalition_final_score(std::size_t entry = 0) const;
    std::vector<std::uint64_t> pirate_catch_positions() const;
    double coalition_slope() const {
        return positions_scored == 0 ? 0.0 : coalition_increment / static_cast<double>(positions_scored);
    }
};

/// Static scheme simulation: the coalition forges all ell symbols, then
/// users with S_j(ell) > Z are accused.
TraceTranscript run_static(const SchemeParameters& params, const CodeBook& book,
                           CoalitionState coalition, const TraceOptions& options = {});

TraceTranscript run_dynamic(const SchemeParameters& params, const CodeBook& book,
                            CoalitionState coalition, const TraceOptions& options = {});

/// Delayed feedback; the B positions after each disconnection are not scored.
TraceTranscript run_weakly_dynamic_A(const SchemeParameters& params, const CodeBook& book,
                                     CoalitionState coalition, std::uint64_t B,
                                     const TraceOptions& options = {});

/// Delayed feedback with constants tuned for the delay; every position is scored.
TraceTranscript run_weakly_dynamic_B(const SchemeParameters& params, const CodeBook& book,
                                     CoalitionState coalition, std::uint64_t B,
                                     const TraceOptions& options = {});

TraceTranscript run_universal(const UniversalLadder& ladder, const CodeBook& book,
                              CoalitionState coalition, const TraceOptions& options = {});

/// Largest total length a weakly-dynamic-A run can take: ell + B c0.
std::uint64_t weakly_a_length_bound(const SchemeParameters& params, std::uint64_t B);

/// Codebook length that lets the top ladder entry see its ell^(c) positions
/// with overwhelming probability when biases come from F_delta(book_delta).
std::uint64_t universal_codebook_length(const UniversalLadder& ladder, double book_delta);

// Serialization: one CSV row per event (position,event,user,entry_c,score,p_i,y_i)
// and a compact JSON summary.
void write_transcript_csv(const TraceTranscript& t, const std::filesystem::path& path);
nlohmann::json transcript_summary(const TraceTranscript& t);

} // namespace tardos

#endif // TARDOS_TRACERS_HPP
