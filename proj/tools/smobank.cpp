// smobank: observer-bank design and simulation driver.
//
//   smobank check|design|simulate|compare <scenario.json>
//           [--out DIR] [--dt X] [--mu X,Y] [--seed N] [--json]
//
// Exit codes: 0 success, 1 domain failure (infeasible design, numerical
// blowup), 2 usage or scenario-file errors.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smobank/report.hpp"
#include "smobank/scenario_file.hpp"
#include "smobank/svg_plot.hpp"
#include "smobank/trace_io.hpp"

namespace fs = std::filesystem;
using namespace smobank;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

struct Options {
    std::string scenario;
    std::string out;
    std::optional<double> dt;
    std::vector<double> mu;
    std::optional<std::uint64_t> seed;
    bool json = false;
};

// Thrown for problems the user must fix in the invocation or the file.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ScenarioFile load(const Options& o) {
    ScenarioFile f = [&] {
        try {
            return load_scenario_file(o.scenario);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }();
    if (o.dt) {
        if (!(*o.dt > 0.0) || !(f.t_end > *o.dt)) {
            throw UsageError("--dt must be positive and below t_end");
        }
        f.dt = *o.dt;
        f.log_interval = std::max(f.log_interval, *o.dt);
    }
    if (o.seed) {
        f.design.seed = *o.seed;
    }
    for (double m : o.mu) {
        if (!(m > 0.0)) {
            throw UsageError("--mu values must be positive");
        }
    }
    return f;
}

fs::path prepare_out_dir(const std::string& out) {
    const fs::path dir = out.empty() ? fs::path("smobank_out") : fs::path(out);
    const fs::path parent = fs::absolute(dir).parent_path();
    if (!fs::is_directory(parent)) {
        throw UsageError("output parent directory does not exist: " + parent.string());
    }
    std::error_code ec;
    fs::create_directory(dir, ec);
    if (!fs::is_directory(dir)) {
        throw UsageError("cannot create output directory " + dir.string());
    }
    return dir;
}

void print_json(const nlohmann::json& j) {
    std::cout << j.dump(2) << '\n';
}

Design design_or_fail(const ScenarioFile& f) {
    const FeasibilityReport rep = check_existence(f.system);
    if (!rep.pass) {
        print_json(to_json(rep));
        throw Error(ErrorCode::InvalidArgument, "observer existence conditions fail");
    }
    return run_design(f);
}

int cmd_check(const Options& o) {
    const ScenarioFile f = load(o);
    const FeasibilityReport rep = check_existence(f.system);
    print_json(to_json(rep));
    return rep.pass ? kOk : kDomain;
}

int cmd_design(const Options& o) {
    const ScenarioFile f = load(o);
    const Design d = design_or_fail(f);
    print_json(design_report(d.canonical, d.gains));
    return kOk;
}

void write_outputs(const fs::path& dir, const SimTrace& tr) {
    write_trace_csv(dir / "trace.csv", tr);
    write_text_file(dir / "states.svg", states_svg(tr));
    write_text_file(dir / "fault.svg", fault_svg(tr));
    write_text_file(dir / "weights.svg", weights_svg(tr));
}

int cmd_simulate(const Options& o) {
    ScenarioFile f = load(o);
    if (o.mu.size() > 1) {
        throw UsageError("simulate takes a single --mu value; use compare for sweeps");
    }
    if (!o.mu.empty()) {
        f.bank.mu = o.mu.front();
    }
    const fs::path dir = prepare_out_dir(o.out);
    const Design d = design_or_fail(f);
    const Scenario sc = build_scenario(f, d);
    try {
        const SimTrace tr = integrate(sc);
        write_outputs(dir, tr);
        const RunReport rep = summarize(sc, tr);
        const nlohmann::json j = to_json(rep);
        write_text_file(dir / "metrics.json", j.dump(2) + "\n");
        if (o.json) {
            print_json(j);
        } else {
            std::printf("wrote %s (%zu samples)\n", (dir / "trace.csv").string().c_str(), tr.size());
            std::printf("final ||x_tilde_o|| = %.6g, transient RMS = %.6g\n", rep.bank.final_error,
                        rep.bank.transient_rms);
        }
    } catch (const NumericalBlowup& e) {
        write_trace_csv(dir / "trace.csv", e.partial());
        std::fprintf(stderr, "smobank: %s (partial trace written)\n", e.what());
        return kDomain;
    }
    return kOk;
}

int cmd_compare(const Options& o) {
    ScenarioFile f = load(o);
    if (!f.compare_single) {
        throw UsageError("compare needs \"compare_single\": true in the scenario file "
                         "(the single SMO starts at sum alpha_i(0) xhat_i(0) unless \"single_x0\" is given)");
    }
    std::vector<double> mus = o.mu.empty() ? f.mu_list : o.mu;
    std::optional<fs::path> dir;
    if (!o.out.empty()) {
        dir = prepare_out_dir(o.out);
    }
    const Design d = design_or_fail(f);

    if (mus.size() <= 1) {
        if (!mus.empty()) {
            f.bank.mu = mus.front();
        }
        const Scenario sc = build_scenario(f, d);
        const ComparisonReport rep = run_comparison(sc);
        const nlohmann::json j = comparison_json(rep);
        if (dir) {
            write_outputs(*dir, rep.trace);
            write_text_file(*dir / "comparison.json", j.dump(2) + "\n");
        }
        if (o.json) {
            print_json(j);
        } else {
            std::fputs(comparison_table(rep.run).c_str(), stdout);
        }
        return kOk;
    }

    const Scenario sc = build_scenario(f, d);
    const auto sweep = sweep_mu(sc, mus, sweep_threads());
    const nlohmann::json j = sweep_json(sweep);
    if (dir) {
        write_text_file(*dir / "sweep.json", j.dump(2) + "\n");
    }
    if (o.json) {
        print_json(j);
    } else {
        for (const auto& r : sweep) {
            std::fputs(comparison_table(r).c_str(), stdout);
            std::fputs("\n", stdout);
        }
        std::fputs(sweep_table(sweep).c_str(), stdout);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-mode observer bank: design, simulation and comparison"};
    app.require_subcommand(1);
    Options o;

    struct Cmd {
        const char* name;
        const char* help;
        int (*fn)(const Options&);
    };
    const Cmd cmds[] = {
        {"check", "check observer existence conditions", cmd_check},
        {"design", "design the observer gains and print them", cmd_design},
        {"simulate", "run the bank and write trace.csv, plots and metrics.json", cmd_simulate},
        {"compare", "bank vs single SMO (or a mu sweep)", cmd_compare},
    };
    std::vector<std::pair<CLI::App*, const Cmd*>> subs;
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("scenario", o.scenario, "scenario JSON file")->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--dt", o.dt, "integration step override");
        sub->add_option("--mu", o.mu, "RLS initial covariance scale(s), comma separated")->delimiter(',');
        sub->add_option("--seed", o.seed, "seed for the canonical-form construction");
        sub->add_flag("--json", o.json, "print JSON instead of text");
        subs.emplace_back(sub, &c);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        for (const auto& [sub, cmd] : subs) {
            if (sub->parsed()) {
                return cmd->fn(o);
            }
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "smobank: %s\n", e.what());
        return kUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "smobank: %s\n", e.what());
        return kDomain;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "smobank: %s\n", e.what());
        return kDomain;
    }
    return kUsage;
}
