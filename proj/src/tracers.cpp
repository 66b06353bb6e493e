#include "tardos/tracers.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "tardos/distributions.hpp"
#include "tardos/error.hpp"

namespace tardos {

double position_score(bool x, bool y, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("position_score needs p in (0,1)");
    return ScoreWeights(p).score(x, y);
}

std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::coalition_caught: return "coalition_caught";
    case Termination::length_exhausted: return "length_exhausted";
    case Termination::codebook_exhausted: return "codebook_exhausted";
    case Termination::no_coalition: return "no_coalition";
    }
    return "unknown";
}

std::string_view to_string(TrajectoryEvent e) {
    switch (e) {
    case TrajectoryEvent::score: return "score";
    case TrajectoryEvent::innocent_min: return "innocent_min";
    case TrajectoryEvent::innocent_max: return "innocent_max";
    case TrajectoryEvent::disconnect: return "disconnect";
    case TrajectoryEvent::threshold: return "threshold";
    case TrajectoryEvent::codelength: return "codelength";
    }
    return "unknown";
}

ScoreState::ScoreState(std::vector<UserId> tracked)
    : users(std::move(tracked)), scores(users.size(), 0.0), active(users.size(), 1) {}

std::vector<DisconnectEvent> dynamic_step(ScoreState& state, double Z,
                                          std::span<const std::uint8_t> column, bool y, double p) {
    if (column.size() != state.users.size())
        throw DomainError("dynamic_step needs one bit per tracked user");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("dynamic_step needs p in (0,1)");
    ++state.position;
    const ScoreWeights w(p);
    for (std::size_t k = 0; k < state.users.size(); ++k)
        if (state.active[k]) state.scores[k] += w.score(column[k] != 0, y);

    std::vector<DisconnectEvent> events;
    for (std::size_t k = 0; k < state.users.size(); ++k) {
        if (state.active[k] && state.scores[k] > Z) {
            state.active[k] = 0;
            events.push_back({state.position, state.users[k], state.scores[k], 0, false});
        }
    }
    state.disconnected.insert(state.disconnected.end(), events.begin(), events.end());
    return events;
}

StaticTraceResult static_trace(const SchemeParameters& params, const CodeBook& book,
                               std::span<const std::uint8_t> y) {
    if (y.size() != params.ell)
        throw DomainError("static_trace: forgery has " + std::to_string(y.size()) +
                          " symbols, expected " + std::to_string(params.ell));
    if (book.length() < params.ell) throw DomainError("static_trace: codebook shorter than ell");
    StaticTraceResult out;
    out.scores.assign(book.n(), 0.0);
    for (std::uint64_t i = 1; i <= params.ell; ++i) {
        const auto col = book.column(i);
        const ScoreWeights w(col.bias());
        const bool yi = y[i - 1] != 0;
        for (UserId j = 0; j < book.n(); ++j) out.scores[j] += w.score(col.bit(j), yi);
    }
    for (UserId j = 0; j < book.n(); ++j)
        if (out.scores[j] > params.Z) out.accused.push_back(j);
    return out;
}

double TraceTranscript::score_of(UserId user, std::size_t entry) const {
    const auto it = std::find(tracked.begin(), tracked.end(), user);
    if (it == tracked.end()) throw DomainError("user " + std::to_string(user) + " was not tracked");
    const std::size_t k = static_cast<std::size_t>(it - tracked.begin());
    return final_scores[k * entry_c.size() + entry];
}

double TraceTranscript::coalition_final_score(std::size_t entry) const {
    double total = 0.0;
    for (UserId u : coalition) total += score_of(u, entry);
    return total;
}

std::vector<std::uint64_t> TraceTranscript::pirate_catch_positions() const {
    std::vector<std::uint64_t> out;
    for (const auto& e : disconnects)
        if (e.pirate) out.push_back(e.position);
    return out;
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

struct EngineSpec {
    SchemeVariant scheme = SchemeVariant::dynamic;
    std::vector<std::uint64_t> entry_c;
    std::vector<double> Z;
    std::vector<std::uint64_t> limit;
    std::vector<double> lower; // window per entry; ignored when windowed == false
    std::vector<double> upper;
    bool windowed = false;
    bool disconnect_during_run = true;
    std::uint64_t delay = 0;
    bool contaminate = false;
    std::uint64_t max_positions = 0;
    double z_tilde = 0;
};

class Engine {
public:
    Engine(const EngineSpec& spec, const CodeBook& book, CoalitionState coalition,
           const TraceOptions& opt)
        : spec_(spec), book_(book), opt_(opt), coalition_(std::move(coalition), spec.delay),
          entries_(spec.entry_c.size()) {}

    TraceTranscript run() {
        setup();
        if (coalition_.inner().members().empty()) {
            t_.termination = Termination::no_coalition;
            finish();
            return std::move(t_);
        }
        if (entries_ == 1) {
            loop<true>();
        } else {
            loop<false>();
        }
        finish();
        return std::move(t_);
    }

private:
    void setup() {
        t_.scheme = spec_.scheme;
        t_.entry_c = spec_.entry_c;
        t_.thresholds = spec_.Z;
        t_.entry_lengths = spec_.limit;
        t_.z_tilde = spec_.z_tilde;
        t_.coalition = coalition_.inner().members();

        const std::uint64_t n = book_.n();
        std::unordered_set<UserId> pirates(t_.coalition.begin(), t_.coalition.end());
        for (UserId u : t_.coalition)
            if (u >= n) throw DomainError("coalition member " + std::to_string(u) + " outside the codebook");
        if (opt_.score_all_users) {
            for (UserId u = 0; u < n; ++u) t_.tracked.push_back(u);
        } else {
            t_.tracked = t_.coalition;
            std::unordered_set<UserId> seen(pirates);
            for (UserId u : opt_.innocents) {
                if (u >= n) throw DomainError("innocent " + std::to_string(u) + " outside the codebook");
                if (seen.insert(u).second) t_.tracked.push_back(u);
            }
        }
        const std::size_t T = t_.tracked.size();
        is_pirate_.resize(T);
        for (std::size_t k = 0; k < T; ++k) is_pirate_[k] = pirates.count(t_.tracked[k]) ? 1 : 0;
        scores_.assign(T * entries_, 0.0);
        active_.assign(T, 1);
        active_list_.resize(T);
        for (std::size_t k = 0; k < T; ++k) active_list_[k] = static_cast<std::uint32_t>(k);
        if (opt_.extended_scores) extended_.assign(T, 0.0);
        remaining_pirates_ = t_.coalition.size();

        counters_.assign(entries_, 0);
        exhausted_at_.assign(entries_, 0);
        counted_.assign(entries_, 0);
        env_min_.assign(entries_, inf);
        env_max_.assign(entries_, -inf);

        max_positions_ = book_.length();
        if (spec_.max_positions > 0) max_positions_ = std::min(max_positions_, spec_.max_positions);
        if (opt_.max_positions > 0) max_positions_ = std::min(max_positions_, opt_.max_positions);

        if (opt_.trajectory_stride > 0) {
            for (std::size_t e = 0; e < entries_; ++e) {
                t_.trajectory.push_back({0, std::nullopt, spec_.entry_c[e], spec_.Z[e], TrajectoryEvent::threshold});
                t_.trajectory.push_back(
                    {spec_.limit[e], std::nullopt, spec_.entry_c[e], 0.0, TrajectoryEvent::codelength});
            }
        }
    }

    bool all_exhausted() const {
        for (std::size_t e = 0; e < entries_; ++e)
            if (counters_[e] < spec_.limit[e]) return false;
        return true;
    }

    template <bool Single>
    void loop() {
        std::vector<std::uint8_t> bits;
        std::vector<std::uint32_t> crossed;
        std::vector<std::size_t> crossed_entry;
        const bool logging = opt_.trajectory_stride > 0;

        for (std::uint64_t i = 1;; ++i) {
            coalition_.advance_to(i);
            if (!coalition_.has_output()) {
                t_.termination = Termination::coalition_caught;
                break;
            }
            if (all_exhausted()) {
                t_.termination = Termination::length_exhausted;
                break;
            }
            if (i > max_positions_) {
                t_.termination = Termination::codebook_exhausted;
                break;
            }

            const auto col = book_.column(i);
            const double p = col.bias();
            const auto& members = coalition_.active();
            bits.resize(members.size());
            for (std::size_t k = 0; k < members.size(); ++k) bits[k] = col.bit(members[k]) ? 1 : 0;
            const bool y = coalition_.forge(bits);
            ++t_.positions_distributed;

            PositionRecord rec;
            if (opt_.record_positions) {
                rec.position = i;
                rec.bias = p;
                rec.y = y;
            }

            if (spec_.contaminate && i <= contaminated_until_) {
                ++t_.positions_contaminated;
                if (opt_.record_positions) {
                    rec.contaminated = true;
                    rec.counters = counters_;
                    t_.positions.push_back(std::move(rec));
                }
                continue;
            }

            bool any = false;
            for (std::size_t e = 0; e < entries_; ++e) {
                const bool in = !spec_.windowed || (p >= spec_.lower[e] && p <= spec_.upper[e]);
                counted_[e] = 0;
                if (!in) continue;
                ++counters_[e];
                if (counters_[e] == spec_.limit[e]) exhausted_at_[e] = i;
                // Entries past their length still count positions but no longer score.
                counted_[e] = counters_[e] <= spec_.limit[e] ? 1 : 0;
                any = any || counted_[e];
            }
            if (opt_.record_positions) {
                rec.counters = counters_;
                rec.disregarded = !any;
                t_.positions.push_back(std::move(rec));
            }
            if (!any) continue;
            ++t_.positions_scored;

            const ScoreWeights w(p);
            const double table[2] = {w.score(false, y), w.score(true, y)};
            crossed.clear();
            crossed_entry.clear();
            const bool stored = book_.is_materialized();
            const PositionColumn stream{p, stored ? 0 : symbol_key(book_.seed(), i)};
            for (const std::uint32_t k : active_list_) {
                const UserId u = t_.tracked[k];
                const double s = table[stored ? col.bit(u) : stream.bit(u)];
                if (is_pirate_[k]) t_.coalition_increment += s;
                if (!extended_.empty()) extended_[k] += s;
                double* row = scores_.data() + static_cast<std::size_t>(k) * entries_;
                if constexpr (Single) {
                    row[0] += s;
                    if (logging && !is_pirate_[k]) envelope(0, row[0]);
                    if (spec_.disconnect_during_run && row[0] > spec_.Z[0]) {
                        crossed.push_back(k);
                        crossed_entry.push_back(0);
                    }
                } else {
                    std::size_t fired = entries_;
                    for (std::size_t e = 0; e < entries_; ++e) {
                        if (!counted_[e]) continue;
                        row[e] += s;
                        if (logging && !is_pirate_[k]) envelope(e, row[e]);
                        if (fired == entries_ && spec_.disconnect_during_run && row[e] > spec_.Z[e]) fired = e;
                    }
                    if (fired != entries_) {
                        crossed.push_back(k);
                        crossed_entry.push_back(fired);
                    }
                }
            }
            if (!extended_.empty()) {
                for (std::size_t k = 0; k < active_.size(); ++k)
                    if (!active_[k]) extended_[k] += w.score(col.bit(t_.tracked[k]), y);
            }

            for (std::size_t m = 0; m < crossed.size(); ++m) disconnect(crossed[m], crossed_entry[m], i);
            if (!crossed.empty()) {
                active_list_.erase(std::remove_if(active_list_.begin(), active_list_.end(),
                                                  [&](std::uint32_t k) { return !active_[k]; }),
                                   active_list_.end());
                if (spec_.contaminate) contaminated_until_ = std::max(contaminated_until_, i + spec_.delay);
            }
            if (logging && (i % opt_.trajectory_stride == 0 || !crossed.empty())) log_trajectory(i);
        }
    }

    void envelope(std::size_t e, double v) {
        env_min_[e] = std::min(env_min_[e], v);
        env_max_[e] = std::max(env_max_[e], v);
    }

    void disconnect(std::uint32_t k, std::size_t entry, std::uint64_t position) {
        active_[k] = 0;
        const UserId u = t_.tracked[k];
        const double score = scores_[static_cast<std::size_t>(k) * entries_ + entry];
        t_.disconnects.push_back({position, u, score, spec_.entry_c[entry], is_pirate_[k] != 0});
        if (opt_.trajectory_stride > 0)
            t_.trajectory.push_back({position, u, spec_.entry_c[entry], score, TrajectoryEvent::disconnect});
        if (is_pirate_[k]) {
            coalition_.schedule_disconnect(u, position);
            if (--remaining_pirates_ == 0) t_.catch_all_position = position;
        } else {
            ++t_.innocent_accusations;
        }
    }

    void log_trajectory(std::uint64_t i) {
        for (std::size_t k = 0; k < t_.tracked.size(); ++k) {
            if (!is_pirate_[k] || !active_[k]) continue;
            for (std::size_t e = 0; e < entries_; ++e)
                t_.trajectory.push_back({i, t_.tracked[k], spec_.entry_c[e],
                                         scores_[k * entries_ + e], TrajectoryEvent::score});
        }
        for (std::size_t e = 0; e < entries_; ++e) {
            if (env_min_[e] <= env_max_[e]) {
                t_.trajectory.push_back({i, std::nullopt, spec_.entry_c[e], env_min_[e], TrajectoryEvent::innocent_min});
                t_.trajectory.push_back({i, std::nullopt, spec_.entry_c[e], env_max_[e], TrajectoryEvent::innocent_max});
            }
            env_min_[e] = inf;
            env_max_[e] = -inf;
        }
    }

    void finish() {
        if (!spec_.disconnect_during_run) {
            // Single accusation round after the last position.
            for (std::size_t k = 0; k < t_.tracked.size(); ++k) {
                if (scores_[k * entries_] > spec_.Z[0]) disconnect(static_cast<std::uint32_t>(k), 0, t_.positions_distributed);
            }
            if (remaining_pirates_ != 0) t_.catch_all_position.reset();
        }
        for (const auto& e : t_.disconnects) t_.accused.push_back(e.user);
        std::sort(t_.accused.begin(), t_.accused.end());
        t_.final_scores = scores_;
        t_.extended_final_scores = extended_;
        t_.counters = counters_;
        t_.exhausted_at = exhausted_at_;
    }

    const EngineSpec& spec_;
    const CodeBook& book_;
    const TraceOptions& opt_;
    DelayedCoalition coalition_;
    std::size_t entries_;
    TraceTranscript t_;

    std::vector<std::uint8_t> is_pirate_;
    std::vector<double> scores_;
    std::vector<std::uint8_t> active_;
    std::vector<std::uint32_t> active_list_;
    std::vector<double> extended_;
    std::size_t remaining_pirates_ = 0;
    std::vector<std::uint64_t> counters_;
    std::vector<std::uint64_t> exhausted_at_;
    std::vector<std::uint8_t> counted_;
    std::vector<double> env_min_;
    std::vector<double> env_max_;
    std::uint64_t max_positions_ = 0;
    std::uint64_t contaminated_until_ = 0;
};

double z_tilde_of(const SchemeParameters& params, std::uint64_t B) {
    const double c0 = static_cast<double>(params.instance.c0);
    return params.Z + static_cast<double>(std::max<std::uint64_t>(B, 1)) *
                          std::sqrt(params.constants.d_delta) * std::pow(c0, 2.0 / 3.0);
}

EngineSpec single_threshold(SchemeVariant scheme, const SchemeParameters& params) {
    EngineSpec spec;
    spec.scheme = scheme;
    spec.entry_c = {params.instance.c0};
    spec.Z = {params.Z};
    spec.limit = {params.ell};
    spec.z_tilde = z_tilde_of(params, 1);
    return spec;
}

} // namespace

TraceTranscript run_static(const SchemeParameters& params, const CodeBook& book,
                           CoalitionState coalition, const TraceOptions& options) {
    EngineSpec spec = single_threshold(SchemeVariant::static_scheme, params);
    spec.disconnect_during_run = false;
    spec.z_tilde = params.Z;
    return Engine(spec, book, std::move(coalition), options).run();
}

TraceTranscript run_dynamic(const SchemeParameters& params, const CodeBook& book,
                            CoalitionState coalition, const TraceOptions& options) {
    const EngineSpec spec = single_threshold(SchemeVariant::dynamic, params);
    return Engine(spec, book, std::move(coalition), options).run();
}

TraceTranscript run_weakly_dynamic_A(const SchemeParameters& params, const CodeBook& book,
                                     CoalitionState coalition, std::uint64_t B,
                                     const TraceOptions& options) {
    if (B < 1) throw DomainError("weakly dynamic runs need B >= 1");
    EngineSpec spec = single_threshold(SchemeVariant::weakly_dynamic_a, params);
    spec.delay = B;
    spec.contaminate = true;
    return Engine(spec, book, std::move(coalition), options).run();
}

TraceTranscript run_weakly_dynamic_B(const SchemeParameters& params, const CodeBook& book,
                                     CoalitionState coalition, std::uint64_t B,
                                     const TraceOptions& options) {
    if (B < 1) throw DomainError("weakly dynamic runs need B >= 1");
    EngineSpec spec = single_threshold(SchemeVariant::weakly_dynamic_b, params);
    spec.delay = B;
    spec.z_tilde = z_tilde_of(params, B);
    return Engine(spec, book, std::move(coalition), options).run();
}

TraceTranscript run_universal(const UniversalLadder& ladder, const CodeBook& book,
                              CoalitionState coalition, const TraceOptions& options) {
    if (ladder.entries.empty()) throw DomainError("universal tracing needs a nonempty ladder");
    EngineSpec spec;
    spec.scheme = SchemeVariant::universal;
    spec.windowed = true;
    for (const auto& e : ladder.entries) {
        spec.entry_c.push_back(e.c);
        spec.Z.push_back(e.Z);
        spec.limit.push_back(e.ell);
        spec.lower.push_back(e.delta);
        spec.upper.push_back(1.0 - e.delta);
    }
    if (options.extended_scores)
        throw DomainError("extended scores are only available for single-threshold engines");
    return Engine(spec, book, std::move(coalition), options).run();
}

std::uint64_t weakly_a_length_bound(const SchemeParameters& params, std::uint64_t B) {
    return params.ell + B * params.instance.c0;
}

std::uint64_t universal_codebook_length(const UniversalLadder& ladder, double book_delta) {
    if (ladder.entries.empty()) return 0;
    std::uint64_t longest = 0;
    for (const auto& e : ladder.entries) {
        // Fraction of F_book_delta mass outside [delta_c, 1 - delta_c].
        double q = 0.0;
        if (e.delta > book_delta) {
            q = (disregard_fraction(e.delta) - disregard_fraction(book_delta)) /
                (1.0 - disregard_fraction(book_delta));
        }
        const double ell = static_cast<double>(e.ell);
        const double mean = ell / (1.0 - q);
        const double sd = std::sqrt(ell * q) / (1.0 - q);
        longest = std::max(longest, static_cast<std::uint64_t>(std::ceil(mean + 10.0 * sd + 64.0)));
    }
    return longest;
}

void write_transcript_csv(const TraceTranscript& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "position,event,user,entry_c,score,p_i,y_i\n";
    std::size_t d = 0;
    auto write_disconnects_through = [&](std::uint64_t pos, const PositionRecord* rec) {
        while (d < t.disconnects.size() && t.disconnects[d].position <= pos) {
            const auto& e = t.disconnects[d++];
            out << e.position << ",disconnect," << e.user << ',' << e.entry_c << ',' << e.score << ',';
            if (rec && rec->position == e.position) out << rec->bias << ',' << (rec->y ? 1 : 0);
            else out << ',';
            out << '\n';
        }
    };
    for (const auto& rec : t.positions) {
        const char* kind = rec.contaminated ? "contaminated" : rec.disregarded ? "disregarded" : "symbol";
        out << rec.position << ',' << kind << ",,,," << rec.bias << ',' << (rec.y ? 1 : 0) << '\n';
        write_disconnects_through(rec.position, &rec);
    }
    write_disconnects_through(std::numeric_limits<std::uint64_t>::max(), nullptr);
    if (!out) throw Error("write failed for " + path.string());
}

nlohmann::json transcript_summary(const TraceTranscript& t) {
    nlohmann::json j;
    j["scheme"] = t.scheme;
    j["termination"] = std::string(to_string(t.termination));
    j["catch_all_position"] = t.catch_all_position ? nlohmann::json(*t.catch_all_position) : nlohmann::json(nullptr);
    j["positions_distributed"] = t.positions_distributed;
    j["positions_scored"] = t.positions_scored;
    j["positions_contaminated"] = t.positions_contaminated;
    j["innocent_accusations"] = t.innocent_accusations;
    j["coalition"] = t.coalition;
    j["accused"] = t.accused;
    j["coalition_slope"] = t.coalition_slope();
    if (t.z_tilde > 0) j["z_tilde"] = t.z_tilde;
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t e = 0; e < t.entry_c.size(); ++e) {
        entries.push_back({{"c", t.entry_c[e]},
                           {"Z", std::isfinite(t.thresholds[e]) ? nlohmann::json(t.thresholds[e]) : nlohmann::json(nullptr)},
                           {"ell", t.entry_lengths[e]},
                           {"t_final", e < t.counters.size() ? t.counters[e] : 0},
                           {"exhausted_at", e < t.exhausted_at.size() ? t.exhausted_at[e] : 0}});
    }
    j["entries"] = entries;
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : t.disconnects)
        events.push_back({{"position", e.position},
                          {"user", e.user},
                          {"entry_c", e.entry_c},
                          {"score", e.score},
                          {"pirate", e.pirate}});
    j["disconnects"] = events;
    return j;
}

} // namespace tardos
