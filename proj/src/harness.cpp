#include "tardos/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "tardos/distributions.hpp"
#include "tardos/error.hpp"
#include "tardos/rng.hpp"
#include "tardos/stats.hpp"

namespace tardos {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

nlohmann::json real_or_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

double real_from(const nlohmann::json& j) {
    return j.is_null() ? inf : j.get<double>();
}

std::string_view to_string(MemberRule r) { return r == MemberRule::first ? "first" : "random"; }

std::string_view to_string(GridKind g) {
    switch (g) {
    case GridKind::automatic: return "auto";
    case GridKind::full: return "full";
    case GridKind::geometric: return "geometric";
    }
    return "auto";
}

} // namespace

std::uint64_t ExperimentConfig::innocents() const {
    if (innocent_sample) return *innocent_sample;
    const std::uint64_t pool = instance.n > coalition_size ? instance.n - coalition_size : 0;
    return std::min<std::uint64_t>(pool, 10'000);
}

std::vector<std::string> ExperimentConfig::problems() const {
    std::vector<std::string> out;
    const auto& in = instance;
    if (in.n < 2) out.push_back("n must be at least 2");
    if (!(in.eps1 > 0.0 && in.eps1 < 1.0)) out.push_back("eps1 must lie in (0,1)");
    if (!(in.eps2 > 0.0 && in.eps2 < 1.0)) out.push_back("eps2 must lie in (0,1)");
    if (in.c0 < 2 || in.c0 > in.n) out.push_back("c0 must satisfy 2 <= c0 <= n");
    const bool weakly = in.variant == SchemeVariant::weakly_dynamic_a || in.variant == SchemeVariant::weakly_dynamic_b;
    if (weakly && in.B < 1) out.push_back("weakly dynamic schemes need B >= 1");
    if (!weakly && in.B != 0) out.push_back("B is only used by weakly dynamic schemes");
    if (trials < 1) out.push_back("trials must be at least 1");
    if (coalition_size < 1) out.push_back("coalition size c must be at least 1");
    if (coalition_size > in.n) out.push_back("coalition size c exceeds n");
    if (coalition_size <= in.n && innocents() > in.n - coalition_size)
        out.push_back("innocent sample size m exceeds n - c");
    if (grid_ratio < 2) out.push_back("grid_ratio must be at least 2");
    if (trajectory_points < 1) out.push_back("trajectory_points must be positive");
    if (trajectory_trials > trials) out.push_back("trajectory_trials exceeds trials");
    if (trajectory_trials > 0 && trajectories_path.empty())
        out.push_back("trajectory_trials set without an output.trajectories path");
    return out;
}

void ExperimentConfig::validate() const {
    auto p = problems();
    if (!p.empty()) throw ConfigError(std::move(p));
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"scheme", c.instance.variant},
                       {"n", c.instance.n},
                       {"eps1", c.instance.eps1},
                       {"eps2", c.instance.eps2},
                       {"c0", c.instance.c0},
                       {"B", c.instance.B},
                       {"strategy", std::string(to_string(c.strategy))},
                       {"c", c.coalition_size},
                       {"members", std::string(to_string(c.members))},
                       {"trials", c.trials},
                       {"innocents", c.innocents()},
                       {"seed", c.master_seed},
                       {"grid", std::string(to_string(c.grid))},
                       {"grid_ratio", c.grid_ratio},
                       {"universal_top_cutoff", c.universal_top_cutoff},
                       {"materialize", c.materialize},
                       {"trajectory_trials", c.trajectory_trials},
                       {"trajectory_points", c.trajectory_points},
                       {"threads", c.threads},
                       {"output",
                        {{"trajectories", c.trajectories_path},
                         {"summary", c.summary_path},
                         {"summary_csv", c.summary_csv_path},
                         {"transcripts", c.transcript_dir}}}};
    if (c.constants) j["constants"] = *c.constants;
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    std::vector<std::string> problems;
    if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});

    auto field = [&](const char* name, auto& target, bool required) {
        if (!j.contains(name)) {
            if (required) problems.push_back(std::string("missing field '") + name + "'");
            return;
        }
        try {
            j.at(name).get_to(target);
        } catch (const std::exception& e) {
            problems.push_back(std::string("field '") + name + "': " + e.what());
        }
    };
    auto text = [&](const char* name, auto parse, bool required) {
        std::string s;
        field(name, s, required);
        if (s.empty()) return;
        try {
            parse(s);
        } catch (const std::exception& e) {
            problems.push_back(std::string("field '") + name + "': " + e.what());
        }
    };

    text("scheme", [&](const std::string& s) { c.instance.variant = parse_variant(s); }, true);
    field("n", c.instance.n, true);
    field("eps1", c.instance.eps1, true);
    field("eps2", c.instance.eps2, true);
    field("c0", c.instance.c0, true);
    field("B", c.instance.B, false);
    text("strategy", [&](const std::string& s) { c.strategy = parse_strategy(s); }, true);
    field("c", c.coalition_size, true);
    text("members", [&](const std::string& s) {
        if (s == "first") c.members = MemberRule::first;
        else if (s == "random") c.members = MemberRule::random;
        else throw DomainError("expected 'first' or 'random'");
    }, false);
    field("trials", c.trials, true);
    if (j.contains("innocents")) {
        std::uint64_t m = 0;
        field("innocents", m, false);
        c.innocent_sample = m;
    }
    field("seed", c.master_seed, false);
    if (j.contains("constants")) {
        try {
            c.constants = j.at("constants").get<TuningConstants>();
        } catch (const std::exception& e) {
            problems.push_back(std::string("field 'constants': ") + e.what());
        }
    }
    text("grid", [&](const std::string& s) {
        if (s == "auto") c.grid = GridKind::automatic;
        else if (s == "full") c.grid = GridKind::full;
        else if (s == "geometric") c.grid = GridKind::geometric;
        else throw DomainError("expected 'auto', 'full' or 'geometric'");
    }, false);
    field("grid_ratio", c.grid_ratio, false);
    field("universal_top_cutoff", c.universal_top_cutoff, false);
    field("materialize", c.materialize, false);
    field("trajectory_trials", c.trajectory_trials, false);
    field("trajectory_points", c.trajectory_points, false);
    field("threads", c.threads, false);
    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (!o.is_object()) {
            problems.push_back("field 'output' must be an object");
        } else {
            c.trajectories_path = o.value("trajectories", std::string{});
            c.summary_path = o.value("summary", std::string{});
            c.summary_csv_path = o.value("summary_csv", std::string{});
            c.transcript_dir = o.value("transcripts", std::string{});
        }
    }
    if (problems.empty()) {
        auto more = c.problems();
        problems.insert(problems.end(), more.begin(), more.end());
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

// Trials ---------------------------------------------------------------------

namespace {

struct Prepared {
    std::optional<SchemeParameters> params;
    std::optional<UniversalLadder> ladder;
    std::uint64_t codebook_length = 0;
    double book_delta = 0;
    std::uint64_t ell_theoretical = 0;
    std::size_t reference_entry = 0;
};

Prepared prepare(const ExperimentConfig& cfg) {
    Prepared p;
    const auto& in = cfg.instance;
    if (in.variant == SchemeVariant::universal) {
        std::vector<std::uint64_t> grid;
        switch (cfg.grid) {
        case GridKind::automatic: grid = default_grid(in.c0); break;
        case GridKind::full: grid = full_grid(in.c0); break;
        case GridKind::geometric: grid = geometric_grid(in.c0, cfg.grid_ratio); break;
        }
        p.ladder = build_universal_ladder(in.n, in.eps1, in.eps2, grid);
        p.book_delta = cfg.universal_top_cutoff ? p.ladder->entries.back().delta : 0.0;
        p.codebook_length = universal_codebook_length(*p.ladder, p.book_delta);
        p.reference_entry = p.ladder->entries.size() - 1;
        for (std::size_t e = 0; e < p.ladder->entries.size(); ++e) {
            if (p.ladder->entries[e].c >= cfg.coalition_size) {
                p.reference_entry = e;
                break;
            }
        }
        p.ell_theoretical = p.ladder->entries[p.reference_entry].ell;
        return p;
    }
    const TuningConstants tc = cfg.constants ? *cfg.constants : optimize_constants(in);
    p.params = derive_scheme_params(in, tc);
    p.book_delta = p.params->delta;
    p.codebook_length = p.params->ell;
    p.ell_theoretical = p.params->ell;
    if (in.variant == SchemeVariant::weakly_dynamic_a) {
        p.codebook_length = weakly_a_length_bound(*p.params, in.B);
        p.ell_theoretical = p.codebook_length;
    }
    return p;
}

std::vector<UserId> choose_members(const ExperimentConfig& cfg, rng::Stream& stream) {
    std::vector<UserId> members;
    const std::uint64_t c = cfg.coalition_size;
    if (cfg.members == MemberRule::first) {
        for (UserId u = 0; u < c; ++u) members.push_back(u);
        return members;
    }
    // Floyd's sampling of c distinct users.
    std::unordered_set<UserId> chosen;
    const std::uint64_t n = cfg.instance.n;
    for (std::uint64_t k = n - c; k < n; ++k) {
        const UserId t = stream.below(k + 1);
        const UserId pick = chosen.count(t) ? k : t;
        chosen.insert(pick);
        members.push_back(pick);
    }
    return members;
}

std::vector<UserId> choose_innocents(const ExperimentConfig& cfg, const std::vector<UserId>& members,
                                     rng::Stream& stream) {
    const std::uint64_t m = cfg.innocents();
    const std::uint64_t n = cfg.instance.n;
    std::unordered_set<UserId> excluded(members.begin(), members.end());
    std::vector<UserId> out;
    out.reserve(m);
    if (m == 0) return out;
    const std::uint64_t pool = n - members.size();
    if (2 * m >= pool) {
        std::vector<UserId> all;
        all.reserve(pool);
        for (UserId u = 0; u < n; ++u)
            if (!excluded.count(u)) all.push_back(u);
        for (std::uint64_t k = 0; k < m; ++k) {
            const std::uint64_t r = k + stream.below(all.size() - k);
            std::swap(all[k], all[r]);
        }
        all.resize(m);
        return all;
    }
    while (out.size() < m) {
        const UserId u = stream.below(n);
        if (excluded.insert(u).second) out.push_back(u);
    }
    return out;
}

struct TrialResult {
    TrialOutcome outcome;
    std::vector<TrajectoryPoint> trajectory;
};

TrialResult run_one(const ExperimentConfig& cfg, const Prepared& prep, std::uint64_t trial) {
    const std::uint64_t trial_seed = rng::derive(cfg.master_seed, rng::Purpose::trial, trial);
    rng::Stream selection(rng::derive(trial_seed, rng::Purpose::innocent_sample, 0));
    const auto members = choose_members(cfg, selection);

    TraceOptions opt;
    opt.innocents = choose_innocents(cfg, members, selection);
    if (trial < cfg.trajectory_trials)
        opt.trajectory_stride = std::max<std::uint64_t>(1, prep.codebook_length / cfg.trajectory_points);

    const std::uint64_t book_seed = rng::derive(trial_seed, rng::Purpose::codebook, 0);
    const CodeBook book = cfg.materialize
                              ? CodeBook::materialized(book_seed, cfg.instance.n, prep.codebook_length, prep.book_delta)
                              : CodeBook::streaming(book_seed, cfg.instance.n, prep.codebook_length, prep.book_delta);
    CoalitionState coalition(members, cfg.strategy, rng::derive(trial_seed, rng::Purpose::strategy, 0));

    TraceTranscript t;
    switch (cfg.instance.variant) {
    case SchemeVariant::static_scheme: t = run_static(*prep.params, book, std::move(coalition), opt); break;
    case SchemeVariant::dynamic: t = run_dynamic(*prep.params, book, std::move(coalition), opt); break;
    case SchemeVariant::weakly_dynamic_a:
        t = run_weakly_dynamic_A(*prep.params, book, std::move(coalition), cfg.instance.B, opt);
        break;
    case SchemeVariant::weakly_dynamic_b:
        t = run_weakly_dynamic_B(*prep.params, book, std::move(coalition), cfg.instance.B, opt);
        break;
    case SchemeVariant::universal: t = run_universal(*prep.ladder, book, std::move(coalition), opt); break;
    }

    TrialResult r;
    auto& o = r.outcome;
    o.trial = trial;
    o.pirate_catches = t.pirate_catch_positions();
    if (!o.pirate_catches.empty()) o.first_catch = *std::min_element(o.pirate_catches.begin(), o.pirate_catches.end());
    if (cfg.instance.variant == SchemeVariant::static_scheme) {
        // Static success means at least one pirate accused at the end.
        if (o.first_catch) o.catch_all = t.positions_distributed;
    } else {
        o.catch_all = t.catch_all_position;
    }
    o.innocent_crossings = t.innocent_accusations;
    o.positions_distributed = t.positions_distributed;
    o.positions_scored = t.positions_scored;
    o.coalition_score = t.coalition_final_score(
        cfg.instance.variant == SchemeVariant::universal ? prep.reference_entry : 0);
    o.coalition_slope = t.coalition_slope();
    o.termination = std::string(to_string(t.termination));
    r.trajectory = std::move(t.trajectory);

    if (!cfg.transcript_dir.empty()) {
        std::filesystem::create_directories(cfg.transcript_dir);
        write_json(transcript_summary(t), std::filesystem::path(cfg.transcript_dir) /
                                              ("trial_" + std::to_string(trial) + ".json"));
    }
    return r;
}

} // namespace

Aggregates aggregate(const std::vector<TrialOutcome>& outcomes, std::uint64_t innocents_per_trial) {
    Aggregates a;
    a.trials = outcomes.size();
    a.innocents_per_trial = innocents_per_trial;
    if (outcomes.empty()) return a;
    std::vector<double> catches;
    std::vector<double> uncensored;
    std::vector<double> scores;
    std::vector<double> slopes;
    for (const auto& o : outcomes) {
        if (o.catch_all) {
            catches.push_back(static_cast<double>(*o.catch_all));
            uncensored.push_back(static_cast<double>(*o.catch_all));
        } else {
            catches.push_back(inf);
            ++a.completeness_failures;
        }
        a.innocent_crossings += o.innocent_crossings;
        if (o.innocent_crossings > 0) ++a.soundness_failures;
        scores.push_back(o.coalition_score);
        slopes.push_back(o.coalition_slope);
    }
    a.median_catch = stats::quantile(catches, 0.5);
    a.p95_catch = stats::quantile(catches, 0.95);
    a.mean_catch = uncensored.empty() ? inf : stats::mean(uncensored);
    const std::uint64_t exposures = a.trials * innocents_per_trial;
    a.fp_rate = exposures == 0 ? 0.0 : static_cast<double>(a.innocent_crossings) / static_cast<double>(exposures);
    std::tie(a.fp_rate_lo, a.fp_rate_hi) = stats::clopper_pearson(std::min(a.innocent_crossings, exposures), exposures);
    a.completeness_failure_rate = static_cast<double>(a.completeness_failures) / static_cast<double>(a.trials);
    std::tie(a.completeness_lo, a.completeness_hi) = stats::clopper_pearson(a.completeness_failures, a.trials);
    a.mean_coalition_score = stats::mean(scores);
    a.mean_slope = stats::mean(slopes);
    return a;
}

TrialStats run_trials(const ExperimentConfig& config) {
    config.validate();
    const Prepared prep = prepare(config);

    TrialStats s;
    s.scheme = std::string(to_string(config.instance.variant));
    s.strategy = std::string(to_string(config.strategy));
    s.c = config.coalition_size;
    s.c0 = config.instance.c0;
    s.n = config.instance.n;
    s.eps1 = config.instance.eps1;
    s.eps2 = config.instance.eps2;
    s.B = config.instance.B;
    s.ell_theoretical = prep.ell_theoretical;
    s.params = prep.params;
    s.ladder = prep.ladder;

    std::vector<TrialResult> results(config.trials);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t t = next.fetch_add(1);
            if (t >= config.trials) return;
            try {
                results[t] = run_one(config, prep, t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = config.trials;
                return;
            }
        }
    };
    unsigned threads = config.threads ? config.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, config.trials));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& r : results) {
        s.outcomes.push_back(r.outcome);
        for (auto& pt : r.trajectory) {
            s.trajectories.push_back(pt);
            s.trajectory_trial.push_back(r.outcome.trial);
        }
    }
    s.aggregates = aggregate(s.outcomes, config.innocents());

    if (!config.trajectories_path.empty() && config.trajectory_trials > 0)
        write_trajectories_csv(s.trajectories, config.trajectories_path);
    const nlohmann::json provenance = {{"version", harness_version},
                                       {"master_seed", config.master_seed},
                                       {"config", config}};
    if (!config.summary_path.empty()) write_json(stats_to_json(s, provenance), config.summary_path);
    if (!config.summary_csv_path.empty()) write_summary_csv(summarize({s}), config.summary_csv_path);
    return s;
}

// Summaries ------------------------------------------------------------------

std::vector<ComparisonRow> summarize(const std::vector<TrialStats>& stats) {
    std::vector<ComparisonRow> rows;
    for (const auto& s : stats) {
        ComparisonRow r;
        r.scheme = s.scheme;
        r.strategy = s.strategy;
        r.c = s.c;
        r.c0 = s.c0;
        r.n = s.n;
        r.eps1 = s.eps1;
        r.eps2 = s.eps2;
        r.scores_per_user = s.ladder ? std::to_string(s.ladder->entries.size()) : "1";
        r.guilty_caught = s.scheme == "static" ? "at least 1" : "all c";
        r.ell_theoretical = s.ell_theoretical;
        r.median_catch = s.aggregates.median_catch;
        r.mean_catch = s.aggregates.mean_catch;
        r.p95_catch = s.aggregates.p95_catch;
        r.fp_rate = s.aggregates.fp_rate;
        r.trials = s.aggregates.trials;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string format_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    auto num = [](double v) {
        if (!std::isfinite(v)) return std::string("censored");
        std::ostringstream s;
        s << std::fixed << std::setprecision(0) << v;
        return s.str();
    };
    out << std::left << std::setw(18) << "scheme" << std::setw(14) << "strategy" << std::setw(6) << "c"
        << std::setw(6) << "c0" << std::setw(8) << "scores" << std::setw(12) << "caught" << std::right
        << std::setw(12) << "ell_theory" << std::setw(12) << "median" << std::setw(12) << "mean"
        << std::setw(12) << "p95" << std::setw(12) << "fp_rate" << std::setw(8) << "trials" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(18) << r.scheme << std::setw(14) << r.strategy << std::setw(6) << r.c
            << std::setw(6) << r.c0 << std::setw(8) << r.scores_per_user << std::setw(12) << r.guilty_caught
            << std::right << std::setw(12) << r.ell_theoretical << std::setw(12) << num(r.median_catch)
            << std::setw(12) << num(r.mean_catch) << std::setw(12) << num(r.p95_catch) << std::setw(12)
            << std::setprecision(3) << std::scientific << r.fp_rate << std::defaultfloat << std::setw(8)
            << r.trials << '\n';
    }
    return out.str();
}

// Export ---------------------------------------------------------------------

void write_trajectories_csv(const std::vector<TrajectoryPoint>& points, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(12);
    out << "position,user,entry_c,score,event\n";
    for (const auto& p : points) {
        out << p.position << ',';
        if (p.user) out << *p.user;
        out << ',' << p.entry_c << ',' << p.score << ',' << to_string(p.event) << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

std::uint64_t trajectory_csv_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::uint64_t rows = 0;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (!line.empty()) ++rows;
    }
    return rows;
}

void write_summary_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(12);
    out << "scheme,strategy,c,c0,n,eps1,eps2,ell_theoretical,median_catch,p95_catch,fp_rate,trials\n";
    for (const auto& r : rows) {
        out << r.scheme << ',' << r.strategy << ',' << r.c << ',' << r.c0 << ',' << r.n << ',' << r.eps1 << ','
            << r.eps2 << ',' << r.ell_theoretical << ',' << r.median_catch << ',' << r.p95_catch << ','
            << r.fp_rate << ',' << r.trials << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

nlohmann::json stats_to_json(const TrialStats& s, const nlohmann::json& provenance) {
    const auto& a = s.aggregates;
    nlohmann::json j;
    j["scheme"] = s.scheme;
    j["strategy"] = s.strategy;
    j["c"] = s.c;
    j["c0"] = s.c0;
    j["n"] = s.n;
    j["eps1"] = s.eps1;
    j["eps2"] = s.eps2;
    j["B"] = s.B;
    j["ell_theoretical"] = s.ell_theoretical;
    j["median_catch"] = real_or_null(a.median_catch);
    j["p95_catch"] = real_or_null(a.p95_catch);
    j["fp_rate"] = a.fp_rate;
    j["trials"] = a.trials;
    j["aggregates"] = {{"trials", a.trials},
                       {"completeness_failures", a.completeness_failures},
                       {"soundness_failures", a.soundness_failures},
                       {"innocents_per_trial", a.innocents_per_trial},
                       {"innocent_crossings", a.innocent_crossings},
                       {"median_catch", real_or_null(a.median_catch)},
                       {"mean_catch", real_or_null(a.mean_catch)},
                       {"p95_catch", real_or_null(a.p95_catch)},
                       {"fp_rate", a.fp_rate},
                       {"fp_rate_ci", {a.fp_rate_lo, a.fp_rate_hi}},
                       {"completeness_failure_rate", a.completeness_failure_rate},
                       {"completeness_ci", {a.completeness_lo, a.completeness_hi}},
                       {"mean_coalition_score", a.mean_coalition_score},
                       {"mean_slope", a.mean_slope}};
    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : s.outcomes) {
        outcomes.push_back({{"trial", o.trial},
                            {"catch_all", o.catch_all ? nlohmann::json(*o.catch_all) : nlohmann::json(nullptr)},
                            {"first_catch", o.first_catch ? nlohmann::json(*o.first_catch) : nlohmann::json(nullptr)},
                            {"pirate_catches", o.pirate_catches},
                            {"innocent_crossings", o.innocent_crossings},
                            {"positions_distributed", o.positions_distributed},
                            {"positions_scored", o.positions_scored},
                            {"coalition_score", o.coalition_score},
                            {"coalition_slope", o.coalition_slope},
                            {"termination", o.termination}});
    }
    j["outcomes"] = outcomes;
    if (s.params) j["params"] = *s.params;
    if (s.ladder) j["ladder"] = *s.ladder;
    if (!provenance.is_null()) j["provenance"] = provenance;
    return j;
}

TrialStats stats_from_json(const nlohmann::json& j) {
    TrialStats s;
    s.scheme = j.at("scheme").get<std::string>();
    s.strategy = j.at("strategy").get<std::string>();
    s.c = j.at("c").get<std::uint64_t>();
    s.c0 = j.at("c0").get<std::uint64_t>();
    s.n = j.at("n").get<std::uint64_t>();
    s.eps1 = j.at("eps1").get<double>();
    s.eps2 = j.at("eps2").get<double>();
    s.B = j.value("B", std::uint64_t{0});
    s.ell_theoretical = j.at("ell_theoretical").get<std::uint64_t>();
    if (j.contains("params")) s.params = j.at("params").get<SchemeParameters>();
    if (j.contains("ladder")) s.ladder = j.at("ladder").get<UniversalLadder>();
    for (const auto& o : j.value("outcomes", nlohmann::json::array())) {
        TrialOutcome t;
        t.trial = o.at("trial").get<std::uint64_t>();
        if (!o.at("catch_all").is_null()) t.catch_all = o.at("catch_all").get<std::uint64_t>();
        if (!o.at("first_catch").is_null()) t.first_catch = o.at("first_catch").get<std::uint64_t>();
        t.pirate_catches = o.at("pirate_catches").get<std::vector<std::uint64_t>>();
        t.innocent_crossings = o.at("innocent_crossings").get<std::uint64_t>();
        t.positions_distributed = o.at("positions_distributed").get<std::uint64_t>();
        t.positions_scored = o.at("positions_scored").get<std::uint64_t>();
        t.coalition_score = o.at("coalition_score").get<double>();
        t.coalition_slope = o.at("coalition_slope").get<double>();
        t.termination = o.at("termination").get<std::string>();
        s.outcomes.push_back(std::move(t));
    }
    const auto& a = j.at("aggregates");
    auto& g = s.aggregates;
    g.trials = a.at("trials").get<std::uint64_t>();
    g.completeness_failures = a.at("completeness_failures").get<std::uint64_t>();
    g.soundness_failures = a.at("soundness_failures").get<std::uint64_t>();
    g.innocents_per_trial = a.at("innocents_per_trial").get<std::uint64_t>();
    g.innocent_crossings = a.at("innocent_crossings").get<std::uint64_t>();
    g.median_catch = real_from(a.at("median_catch"));
    g.mean_catch = real_from(a.at("mean_catch"));
    g.p95_catch = real_from(a.at("p95_catch"));
    g.fp_rate = a.at("fp_rate").get<double>();
    g.fp_rate_lo = a.at("fp_rate_ci").at(0).get<double>();
    g.fp_rate_hi = a.at("fp_rate_ci").at(1).get<double>();
    g.completeness_failure_rate = a.at("completeness_failure_rate").get<double>();
    g.completeness_lo = a.at("completeness_ci").at(0).get<double>();
    g.completeness_hi = a.at("completeness_ci").at(1).get<double>();
    g.mean_coalition_score = a.at("mean_coalition_score").get<double>();
    g.mean_slope = a.at("mean_slope").get<double>();
    return s;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

} // namespace tardos
