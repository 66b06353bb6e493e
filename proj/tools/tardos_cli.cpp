// tardos: optimize, ladder, generate, trace, simulate, report.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
// TARDOS_OUT_DIR sets the directory for relative output paths (overridden by
// --out-dir).

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tardos/codegen.hpp"
#include "tardos/error.hpp"
#include "tardos/harness.hpp"
#include "tardos/optimizer.hpp"
#include "tardos/rng.hpp"
#include "tardos/tracers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tardos;

namespace {

struct UsageError : Error {
    using Error::Error;
};

// Counts are read as doubles so "1e6" works; they must still be integral.
std::uint64_t count_of(double x, const char* name) {
    if (!(x >= 0.0) || std::floor(x) != x || x > 1.8e19)
        throw UsageError(std::string("--") + name + " must be a non-negative integer");
    return static_cast<std::uint64_t>(x);
}

struct InstanceFlags {
    std::string variant = "static";
    double n = 0;
    double eps1 = 0;
    double eps2 = 0;
    double eta = 0;
    double c0 = 0;
    double B = 0;

    void add(CLI::App* app, bool c0_required = true) {
        app->add_option("--variant", variant, "static, dynamic, weakly-a, weakly-b or universal")
            ->capture_default_str();
        app->add_option("--n", n, "number of users")->required();
        app->add_option("--eps1", eps1, "soundness error")->required();
        app->add_option("--eps2", eps2, "completeness error (or give --eta)");
        app->add_option("--eta", eta, "ln(eps2)/ln(eps1/n); sets eps2");
        auto* c = app->add_option("--c0", c0, "collusion bound (largest ladder entry for universal)");
        if (c0_required) c->required();
        app->add_option("--B", B, "feedback delay for the weakly dynamic variants");
    }

    ProblemInstance instance() const {
        ProblemInstance in;
        in.variant = parse_variant(variant);
        in.n = count_of(n, "n");
        in.eps1 = eps1;
        in.eps2 = resolve_eps2(eta);
        in.c0 = count_of(c0, "c0");
        in.B = count_of(B, "B");
        return in;
    }

    double resolve_eps2(double eta_value) const {
        if (eta_value > 0.0) return std::pow(eps1 / n, eta_value);
        if (eps2 <= 0.0) throw UsageError("one of --eps2 or --eta is required");
        return eps2;
    }
};

struct Globals {
    std::string out_dir;
    bool verbose = false;

    fs::path resolve(const std::string& path) const {
        fs::path p(path);
        if (p.is_relative() && !out_dir.empty()) p = fs::path(out_dir) / p;
        return p;
    }
};

json provenance(const json& effective) {
    return {{"version", harness_version}, {"config", effective}};
}

void emit(const std::string& text, const std::string& path, const Globals& g) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const auto p = g.resolve(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw Error("cannot open " + p.string() + " for writing");
    out << text;
    if (!out) throw Error("write failed for " + p.string());
}

std::string constants_table(const SchemeParameters& p) {
    std::ostringstream o;
    const auto& in = p.instance;
    const auto& tc = p.constants;
    o << std::left;
    auto row = [&](const char* k, auto v) { o << std::setw(22) << k << v << '\n'; };
    row("variant", to_string(in.variant));
    row("n", in.n);
    row("eps1", in.eps1);
    row("eps2", in.eps2);
    row("eta", in.eta());
    row("c0", in.c0);
    if (in.B) row("B", in.B);
    o << std::fixed << std::setprecision(6);
    row("d_ell", tc.d_ell);
    row("d_z", tc.d_z);
    row("d_delta", tc.d_delta);
    row("a", tc.a);
    row("b", tc.b);
    row("lambda_a", tc.lambda_a);
    row("lambda_b", tc.lambda_b);
    o << std::scientific << std::setprecision(3);
    row("soundness margin", tc.soundness_margin);
    row("completeness margin", tc.completeness_margin);
    o << std::defaultfloat << std::setprecision(8);
    row("ell", p.ell);
    row("Z", p.Z);
    row("delta", p.delta);
    if (in.variant == SchemeVariant::weakly_dynamic_a) row("max total length", p.ell + in.B * in.c0);
    return o.str();
}

// optimize -------------------------------------------------------------------

struct OptimizeCmd {
    InstanceFlags flags;
    std::vector<double> n_values;
    std::vector<double> eta_values;
    std::vector<double> B_values;
    std::string sweep;
    bool as_json = false;
    std::string out;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("optimize", "optimal tuning constants for one instance or a c0 sweep");
        sub->add_option("--variant", flags.variant, "static, dynamic, weakly-a, weakly-b or universal")
            ->capture_default_str();
        sub->add_option("--n", n_values, "number of users (repeatable with --sweep)")->required();
        sub->add_option("--eps1", flags.eps1, "soundness error")->required();
        sub->add_option("--eps2", flags.eps2, "completeness error (or give --eta)");
        sub->add_option("--eta", eta_values, "ln(eps2)/ln(eps1/n) (repeatable with --sweep)");
        sub->add_option("--c0", flags.c0, "collusion bound");
        sub->add_option("--B", B_values, "feedback delay (repeatable with --sweep)");
        sub->add_option("--sweep", sweep, "c0 range lo:hi[:step]; prints CSV curve data");
        sub->add_flag("--json", as_json, "print a JSON report");
        sub->add_option("-o,--out", out, "write the report here instead of stdout");
        sub->callback([this] { ran = true; });
    }
    bool ran = false;

    int run(const Globals& g) {
        if (n_values.empty()) throw UsageError("--n is required");
        if (B_values.empty()) B_values.push_back(0);
        if (eta_values.empty()) eta_values.push_back(0);
        if (!sweep.empty()) return run_sweep(g);
        if (n_values.size() > 1 || eta_values.size() > 1 || B_values.size() > 1)
            throw UsageError("repeated --n/--eta/--B need --sweep");
        if (flags.c0 <= 0) throw UsageError("--c0 is required without --sweep");
        flags.n = n_values[0];
        flags.B = B_values[0];
        flags.eta = eta_values[0];
        auto in = flags.instance();
        in.validate();
        if (in.variant == SchemeVariant::universal)
            throw UsageError("use the ladder subcommand for the universal scheme");
        const auto params = derive_scheme_params(in, optimize_constants(in));
        if (as_json) {
            json j = params;
            j["provenance"] = provenance({{"command", "optimize"}, {"instance", in}});
            emit(j.dump(2) + "\n", out, g);
        } else {
            emit(constants_table(params), out, g);
        }
        return 0;
    }

    int run_sweep(const Globals& g) {
        std::uint64_t lo = 0, hi = 0, step = 1;
        {
            std::vector<std::string> parts;
            std::stringstream ss(sweep);
            for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
            if (parts.size() < 2 || parts.size() > 3) throw UsageError("--sweep expects lo:hi[:step]");
            try {
                lo = count_of(std::stod(parts[0]), "sweep");
                hi = count_of(std::stod(parts[1]), "sweep");
                if (parts.size() == 3) step = count_of(std::stod(parts[2]), "sweep");
            } catch (const std::invalid_argument&) {
                throw UsageError("--sweep expects numbers lo:hi[:step]");
            }
            if (lo < 2 || hi < lo || step == 0) throw UsageError("--sweep needs 2 <= lo <= hi and step >= 1");
        }
        std::ostringstream csv;
        csv << std::setprecision(10);
        csv << "c0,variant,n,eps1,eps2,eta,B,d_ell,d_z,d_delta,ell\n";
        for (double n : n_values) {
            for (double eta : eta_values) {
                for (double B : B_values) {
                    InstanceFlags f = flags;
                    f.n = n;
                    f.B = B;
                    f.eta = eta;
                    for (std::uint64_t c0 = lo; c0 <= hi; c0 += step) {
                        f.c0 = static_cast<double>(c0);
                        auto in = f.instance();
                        if (in.variant == SchemeVariant::universal) in.variant = SchemeVariant::dynamic;
                        in.validate();
                        try {
                            const auto p = derive_scheme_params(in, optimize_constants(in));
                            csv << c0 << ',' << to_string(in.variant) << ',' << in.n << ',' << in.eps1 << ','
                                << in.eps2 << ',' << in.eta() << ',' << in.B << ',' << p.constants.d_ell << ','
                                << p.constants.d_z << ',' << p.constants.d_delta << ',' << p.ell << '\n';
                        } catch (const InfeasibleError& e) {
                            std::cerr << "skipping c0=" << c0 << ": " << e.what() << '\n';
                        }
                    }
                }
            }
        }
        emit(csv.str(), out, g);
        return 0;
    }
};

// ladder ---------------------------------------------------------------------

struct LadderCmd {
    InstanceFlags flags;
    std::string grid = "auto";
    std::uint64_t ratio = 2;
    bool as_json = false;
    std::string out;
    bool ran = false;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("ladder", "per-coalition-size constants of the universal scheme");
        sub->add_option("--n", flags.n, "number of users")->required();
        sub->add_option("--eps1", flags.eps1, "total soundness error")->required();
        sub->add_option("--eps2", flags.eps2, "completeness error (or give --eta)");
        sub->add_option("--eta", flags.eta, "ln(eps2)/ln(eps1/n); sets eps2");
        sub->add_option("--c-max,--c0", flags.c0, "largest coalition size")->required();
        sub->add_option("--grid", grid, "auto, full or geometric")->capture_default_str();
        sub->add_option("--ratio", ratio, "geometric grid ratio")->capture_default_str();
        sub->add_flag("--json", as_json, "print JSON");
        sub->add_option("-o,--out", out, "write the report here instead of stdout");
        sub->callback([this] { ran = true; });
    }

    int run(const Globals& g) {
        const std::uint64_t n = count_of(flags.n, "n");
        const std::uint64_t c_max = count_of(flags.c0, "c-max");
        const double eps2 = flags.resolve_eps2(flags.eta);
        std::vector<std::uint64_t> cs;
        if (grid == "auto") cs = default_grid(c_max);
        else if (grid == "full") cs = full_grid(c_max);
        else if (grid == "geometric") cs = geometric_grid(c_max, ratio);
        else throw UsageError("--grid must be auto, full or geometric");
        const auto ladder = build_universal_ladder(n, flags.eps1, eps2, cs);
        if (as_json) {
            json j = ladder;
            j["provenance"] = provenance({{"command", "ladder"},
                                          {"n", n},
                                          {"eps1", flags.eps1},
                                          {"eps2", eps2},
                                          {"c_max", c_max},
                                          {"grid", grid},
                                          {"ratio", ratio}});
            emit(j.dump(2) + "\n", out, g);
            return 0;
        }
        std::ostringstream o;
        o << std::setw(6) << "c" << std::setw(14) << "eps1_c" << std::setw(10) << "eta_c" << std::setw(10)
          << "d_ell" << std::setw(10) << "d_z" << std::setw(10) << "d_delta" << std::setw(12) << "ell"
          << std::setw(12) << "Z" << std::setw(14) << "delta" << '\n';
        for (const auto& e : ladder.entries) {
            o << std::setw(6) << e.c << std::setw(14) << std::scientific << std::setprecision(4) << e.eps1
              << std::fixed << std::setw(10) << e.eta << std::setw(10) << std::setprecision(3) << e.constants.d_ell
              << std::setw(10) << e.constants.d_z << std::setw(10) << e.constants.d_delta << std::setw(12)
              << e.ell << std::setw(12) << std::setprecision(1) << e.Z << std::setw(14) << std::scientific
              << std::setprecision(4) << e.delta << std::defaultfloat << '\n';
        }
        o << "sum eps1_c = " << ladder.eps1_total() << " (<= " << flags.eps1 << ")\n";
        emit(o.str(), out, g);
        return 0;
    }
};

// generate -------------------------------------------------------------------

struct GenerateCmd {
    double n = 0;
    double length = 0;
    double delta = -1;
    std::uint64_t seed = 1;
    std::string out;
    bool ran = false;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("generate", "write a materialized codebook file");
        sub->add_option("--n", n, "number of users")->required();
        sub->add_option("--length", length, "number of positions")->required();
        sub->add_option("--delta", delta, "bias cutoff in [0, 1/2)")->required();
        sub->add_option("--seed", seed, "codebook seed")->capture_default_str();
        sub->add_option("-o,--out", out, "output file")->required();
        sub->callback([this] { ran = true; });
    }

    int run(const Globals& g) {
        const auto users = count_of(n, "n");
        const auto len = count_of(length, "length");
        if (users == 0 || len == 0) throw UsageError("--n and --length must be positive");
        if (static_cast<double>(users) * static_cast<double>(len) > 8.0 * 1024 * 1024 * 1024 * 8)
            throw Error("codebook larger than 8 GiB; use the streaming mode of trace/simulate instead");
        const auto path = g.resolve(out);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        const auto book = CodeBook::materialized(seed, users, len, delta);
        write_codebook(book, path);
        std::cout << json{{"path", path.string()},
                          {"n", users},
                          {"length", len},
                          {"delta", delta},
                          {"seed", seed},
                          {"bytes", fs::file_size(path)},
                          {"provenance", provenance({{"command", "generate"}})}}
                         .dump(2)
                  << '\n';
        return 0;
    }
};

// trace ----------------------------------------------------------------------

struct TraceCmd {
    InstanceFlags flags;
    double coalition = 0;
    std::string strategy = "interleaving";
    std::uint64_t seed = 1;
    double innocents = 0;
    std::string codebook;
    std::string transcript;
    std::string summary;
    bool ran = false;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("trace", "run one tracing session and print its summary");
        flags.add(sub);
        sub->add_option("--c", coalition, "coalition size (default c0)");
        sub->add_option("--strategy", strategy, "interleaving, scapegoat, majority, minority, coin-flip")
            ->capture_default_str();
        sub->add_option("--seed", seed, "seed for codebook and strategy")->capture_default_str();
        sub->add_option("--innocents", innocents, "innocent users scored alongside the coalition");
        sub->add_option("--codebook", codebook, "codebook file (default: streamed from --seed)");
        sub->add_option("--transcript", transcript, "write the per-event CSV transcript here");
        sub->add_option("--summary", summary, "write the JSON summary here (default stdout)");
        sub->callback([this] { ran = true; });
    }

    int run(const Globals& g) {
        auto in = flags.instance();
        in.validate();
        const std::uint64_t c = coalition > 0 ? count_of(coalition, "c") : in.c0;
        const std::uint64_t m = count_of(innocents, "innocents");
        if (c > in.n || m > in.n - c) throw UsageError("--c plus --innocents exceeds --n");

        std::optional<SchemeParameters> params;
        std::optional<UniversalLadder> ladder;
        std::uint64_t length = 0;
        double delta = 0;
        if (in.variant == SchemeVariant::universal) {
            ladder = build_universal_ladder(in.n, in.eps1, in.eps2, default_grid(in.c0));
            length = universal_codebook_length(*ladder, 0.0);
        } else {
            params = derive_scheme_params(in, optimize_constants(in));
            length = in.variant == SchemeVariant::weakly_dynamic_a ? weakly_a_length_bound(*params, in.B) : params->ell;
            delta = params->delta;
        }
        const CodeBook book = codebook.empty()
                                  ? CodeBook::streaming(rng::derive(seed, rng::Purpose::codebook, 0), in.n, length, delta)
                                  : read_codebook(codebook);
        if (book.n() != in.n) throw UsageError("codebook has a different number of users than --n");

        std::vector<UserId> members;
        for (UserId u = 0; u < c; ++u) members.push_back(u);
        CoalitionState coalition_state(members, parse_strategy(strategy), rng::derive(seed, rng::Purpose::strategy, 0));
        TraceOptions opt;
        for (UserId u = c; u < c + m; ++u) opt.innocents.push_back(u);
        opt.record_positions = !transcript.empty();

        TraceTranscript t;
        switch (in.variant) {
        case SchemeVariant::static_scheme: t = run_static(*params, book, std::move(coalition_state), opt); break;
        case SchemeVariant::dynamic: t = run_dynamic(*params, book, std::move(coalition_state), opt); break;
        case SchemeVariant::weakly_dynamic_a:
            t = run_weakly_dynamic_A(*params, book, std::move(coalition_state), in.B, opt);
            break;
        case SchemeVariant::weakly_dynamic_b:
            t = run_weakly_dynamic_B(*params, book, std::move(coalition_state), in.B, opt);
            break;
        case SchemeVariant::universal: t = run_universal(*ladder, book, std::move(coalition_state), opt); break;
        }
        if (!transcript.empty()) {
            const auto p = g.resolve(transcript);
            if (p.has_parent_path()) fs::create_directories(p.parent_path());
            write_transcript_csv(t, p);
        }
        json j = transcript_summary(t);
        j["provenance"] = provenance({{"command", "trace"},
                                      {"instance", in},
                                      {"c", c},
                                      {"strategy", strategy},
                                      {"seed", seed},
                                      {"innocents", m},
                                      {"codebook", codebook}});
        emit(j.dump(2) + "\n", summary, g);
        return 0;
    }
};

// simulate -------------------------------------------------------------------

struct SimulateCmd {
    std::string config_path;
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> innocents;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> trajectory_trials;
    bool ran = false;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("simulate", "run a Monte Carlo experiment from a JSON config");
        sub->add_option("config", config_path, "experiment JSON")->required();
        sub->add_option("--trials", trials, "override the number of trials");
        sub->add_option("--seed", seed, "override the master seed");
        sub->add_option("--innocents", innocents, "override the innocent sample size");
        sub->add_option("--threads", threads, "worker threads (0: all cores)");
        sub->add_option("--trajectory-trials", trajectory_trials, "override how many trials log trajectories");
        sub->callback([this] { ran = true; });
    }

    int run(const Globals& g) {
        json j;
        try {
            j = read_json(config_path);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
        // Flags override file values before validation.
        if (trials) j["trials"] = *trials;
        if (seed) j["seed"] = *seed;
        if (innocents) j["innocents"] = *innocents;
        if (threads) j["threads"] = *threads;
        if (trajectory_trials) j["trajectory_trials"] = *trajectory_trials;
        auto cfg = j.get<ExperimentConfig>();

        const std::string stem = fs::path(config_path).stem().string();
        if (cfg.summary_path.empty()) cfg.summary_path = stem + ".summary.json";
        if (cfg.summary_csv_path.empty()) cfg.summary_csv_path = stem + ".summary.csv";
        cfg.summary_path = g.resolve(cfg.summary_path).string();
        cfg.summary_csv_path = g.resolve(cfg.summary_csv_path).string();
        if (!cfg.trajectories_path.empty()) cfg.trajectories_path = g.resolve(cfg.trajectories_path).string();
        if (!cfg.transcript_dir.empty()) cfg.transcript_dir = g.resolve(cfg.transcript_dir).string();
        if (g.verbose) std::cerr << "effective config:\n" << json(cfg).dump(2) << '\n';

        const auto stats = run_trials(cfg);
        std::cout << format_table(summarize({stats}));
        std::cout << "summary: " << cfg.summary_path << '\n';
        if (!cfg.trajectories_path.empty() && cfg.trajectory_trials > 0)
            std::cout << "trajectories: " << cfg.trajectories_path << '\n';
        return 0;
    }
};

// report ---------------------------------------------------------------------

struct ReportCmd {
    std::vector<std::string> inputs;
    std::string csv;
    bool ran = false;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("report", "comparison table from simulate summaries");
        sub->add_option("summaries", inputs, "summary JSON files")->required();
        sub->add_option("--csv", csv, "also write the rows as summary CSV");
        sub->callback([this] { ran = true; });
    }

    int run(const Globals& g) {
        std::vector<TrialStats> all;
        for (const auto& path : inputs) {
            json j;
            try {
                j = read_json(path);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            try {
                all.push_back(stats_from_json(j));
            } catch (const nlohmann::json::exception& e) {
                throw UsageError(path + ": not a summary file (" + e.what() + ")");
            }
        }
        const auto rows = summarize(all);
        std::cout << format_table(rows);
        if (!csv.empty()) write_summary_csv(rows, g.resolve(csv));
        return 0;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tardos traitor tracing: constants, codes, tracing and Monte Carlo experiments"};
    app.set_version_flag("--version", harness_version);
    app.require_subcommand(1);
    Globals g;
    if (const char* env = std::getenv("TARDOS_OUT_DIR")) g.out_dir = env;
    app.add_option("--out-dir", g.out_dir, "directory for relative output paths (env TARDOS_OUT_DIR)");
    app.add_flag("-v,--verbose", g.verbose, "echo the effective configuration to stderr");

    OptimizeCmd optimize;
    LadderCmd ladder;
    GenerateCmd generate;
    TraceCmd trace;
    SimulateCmd simulate;
    ReportCmd report;
    optimize.add(app);
    ladder.add(app);
    generate.add(app);
    trace.add(app);
    simulate.add(app);
    report.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (optimize.ran) return optimize.run(g);
        if (ladder.ran) return ladder.run(g);
        if (generate.ran) return generate.run(g);
        if (trace.ran) return trace.run(g);
        if (simulate.ran) return simulate.run(g);
        if (report.ran) return report.run(g);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
