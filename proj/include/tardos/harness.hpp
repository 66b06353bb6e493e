#ifndef TARDOS_HARNESS_HPP
#define TARDOS_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tardos/core_model.hpp"
#include "tardos/optimizer.hpp"
#include "tardos/strategies.hpp"
#include "tardos/tracers.hpp"

namespace tardos {

inline constexpr const char* harness_version = "1.0.0";

enum class MemberRule { first, random };

enum class GridKind { automatic, full, geometric };

/// One Monte Carlo experiment. For the universal variant instance.c0 is the
/// largest coalition size in the ladder.
struct ExperimentConfig {
    ProblemInstance instance;
    StrategyKind strategy = StrategyKind::interleaving;
    std::uint64_t coalition_size = 2;
    MemberRule members = MemberRule::first;
    std::uint64_t trials = 1;
    std::optional<std::uint64_t> innocent_sample; // default min(n - c, 10^4)
    std::uint64_t master_seed = 1;

    std::optional<TuningConstants> constants;     // skip optimization when set
    GridKind grid = GridKind::automatic;
    std::uint64_t grid_ratio = 2;
    bool universal_top_cutoff = false;            // draw biases from F_delta(c_max) instead of F
    bool materialize = false;                     // store the code matrix instead of streaming it

    std::uint64_t trajectory_trials = 0;          // first k trials log trajectories
    std::uint64_t trajectory_points = 2000;       // target samples per curve
    std::string trajectories_path;
    std::string summary_path;                     // JSON
    std::string summary_csv_path;
    std::string transcript_dir;                   // per-trial transcript summaries when set
    unsigned threads = 0;                         // 0: hardware concurrency

    std::uint64_t innocents() const;

    /// Every violated constraint, empty when valid.
    std::vector<std::string> problems() const;
    void validate() const; // throws ConfigError
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c); // collects problems into ConfigError

struct TrialOutcome {
    std::uint64_t trial = 0;
    std::optional<std::uint64_t> catch_all; // none: censored (not all caught)
    std::optional<std::uint64_t> first_catch;
    std::vector<std::uint64_t> pirate_catches;
    std::uint64_t innocent_crossings = 0;
    std::uint64_t positions_distributed = 0;
    std::uint64_t positions_scored = 0;
    double coalition_score = 0;
    double coalition_slope = 0;
    std::string termination;

    friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

struct Aggregates {
    std::uint64_t trials = 0;
    std::uint64_t completeness_failures = 0; // censored trials
    std::uint64_t soundness_failures = 0;    // trials with an innocent crossing
    std::uint64_t innocents_per_trial = 0;
    std::uint64_t innocent_crossings = 0;
    double median_catch = 0;   // +inf when more than half are censored
    double mean_catch = 0;     // over uncensored trials
    double p95_catch = 0;
    double fp_rate = 0;        // per sampled innocent and trial
    double fp_rate_lo = 0;
    double fp_rate_hi = 0;
    double completeness_failure_rate = 0;
    double completeness_lo = 0;
    double completeness_hi = 0;
    double mean_coalition_score = 0;
    double mean_slope = 0;

    friend bool operator==(const Aggregates&, const Aggregates&) = default;
};

struct TrialStats {
    std::string scheme;
    std::string strategy;
    std::uint64_t c = 0;
    std::uint64_t c0 = 0;
    std::uint64_t n = 0;
    double eps1 = 0;
    double eps2 = 0;
    std::uint64_t B = 0;
    std::uint64_t ell_theoretical = 0;
    std::optional<SchemeParameters> params;
    std::optional<UniversalLadder> ladder;
    std::vector<TrialOutcome> outcomes;
    std::vector<TrajectoryPoint> trajectories; // from the logged trials, tagged by trial in `trajectory_trial`
    std::vector<std::uint64_t> trajectory_trial;
    Aggregates aggregates;
};

Aggregates aggregate(const std::vector<TrialOutcome>& outcomes, std::uint64_t innocents_per_trial);

/// Runs every trial with an independent stream derived from (master seed,
/// trial index); aggregation is independent of completion order.
TrialStats run_trials(const ExperimentConfig& config);

struct ComparisonRow {
    std::string scheme;
    std::string strategy;
    std::uint64_t c = 0;
    std::uint64_t c0 = 0;
    std::uint64_t n = 0;
    double eps1 = 0;
    double eps2 = 0;
    std::string scores_per_user;
    std::string guilty_caught;
    std::uint64_t ell_theoretical = 0;
    double median_catch = 0;
    double mean_catch = 0;
    double p95_catch = 0;
    double fp_rate = 0;
    std::uint64_t trials = 0;
};

std::vector<ComparisonRow> summarize(const std::vector<TrialStats>& stats);
std::string format_table(const std::vector<ComparisonRow>& rows);

// Export ---------------------------------------------------------------------

/// position,user,entry_c,score,event
void write_trajectories_csv(const std::vector<TrajectoryPoint>& points, const std::filesystem::path& path);
std::uint64_t trajectory_csv_rows(const std::filesystem::path& path);

/// scheme,strategy,c,c0,n,eps1,eps2,ell_theoretical,median_catch,p95_catch,fp_rate,trials
void write_summary_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);

/// JSON mirror of the summary row plus aggregates, per-trial outcomes and
/// provenance (version, effective config, master seed).
nlohmann::json stats_to_json(const TrialStats& stats, const nlohmann::json& provenance = nullptr);
TrialStats stats_from_json(const nlohmann::json& j);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace tardos

#endif // TARDOS_HARNESS_HPP
