// ltear: load sweeps, breaking points and self-validation for the LTE
// access reservation model and simulator.
//
//   ltear sweep --engines model,sim --lambda-min 500 --lambda-max 3000 --lambda-steps 26 --out sweep.csv
//   ltear breaking-point --delta-rao 1 --engines model,sim
//   ltear validate
//
// Rates on the command line are attempts per second.
// Exit codes: 0 ok, 1 usage or invalid configuration, 2 validation failure, 3 I/O error.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltear/harness.hpp"
#include "ltear/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<int> rao_period;
    std::optional<int> max_retransmissions;
    std::optional<int> rar_window;
    double lambda_min = 500.0;
    double lambda_max = 3500.0;
    int lambda_steps = 31;
    std::string engines = "model";
    std::size_t reps = 5;
    std::uint64_t seed = 1;
    double duration_s = 60.0;
    std::string out;
    std::string format = "csv";
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "Key-value file with SystemConfig fields");
    cmd->add_option("--set", o.overrides, "Override one config field, key=value (repeatable)");
    cmd->add_option("--delta-rao", o.rao_period, "Subframes between access opportunities");
    cmd->add_option("--m", o.max_retransmissions, "Maximum retransmissions");
    cmd->add_option("--t-rar", o.rar_window, "RAR window in subframes");
    cmd->add_option("--lambda-min", o.lambda_min, "First offered load, attempts/s")->capture_default_str();
    cmd->add_option("--lambda-max", o.lambda_max, "Last offered load, attempts/s")->capture_default_str();
    cmd->add_option("--lambda-steps", o.lambda_steps, "Number of grid points")->capture_default_str();
    cmd->add_option("--engines", o.engines, "Comma separated subset of model,sim,baseline")->capture_default_str();
    cmd->add_option("--reps", o.reps, "Simulation replications per point")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Base RNG seed")->capture_default_str();
    cmd->add_option("--duration-s", o.duration_s, "Simulated seconds per replication")->capture_default_str();
    cmd->add_option("--out", o.out, "Output path (default: standard output)");
    cmd->add_flag("--quiet", o.quiet, "No progress on standard error");
}

ltear::harness::SweepSpec build_spec(const CommonOptions& o) {
    ltear::SystemConfig cfg;
    if (!o.config_path.empty()) {
        try {
            cfg = ltear::harness::load_config_file(o.config_path);
        } catch (const std::runtime_error& e) {
            // parse errors are std::invalid_argument and propagate as usage errors
            throw IoError(e.what());
        }
    }
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        ltear::harness::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.rao_period) cfg.rao_period = *o.rao_period;
    if (o.max_retransmissions) cfg.max_retransmissions = *o.max_retransmissions;
    if (o.rar_window) cfg.rar_window = *o.rar_window;

    ltear::harness::SweepSpec spec;
    spec.system = cfg;
    spec.grid_per_s = ltear::harness::linear_grid(o.lambda_min, o.lambda_max, o.lambda_steps);
    spec.engines = ltear::harness::parse_engines(o.engines);
    spec.reps = o.reps;
    spec.seed = o.seed;
    spec.duration_s = o.duration_s;
    spec.validate();
    return spec;
}

ltear::harness::ProgressFn progress_printer(bool quiet, const char* label) {
    if (quiet) return {};
    return [label](std::size_t done, std::size_t total) {
        std::cerr << '[' << label << "] " << done << '/' << total << '\n';
    };
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        if (!std::cout) throw IoError("failed writing to standard output");
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    write(file);
    file.flush();
    if (!file) throw IoError("failed writing '" + path + "'");
}

int cmd_sweep(const CommonOptions& o) {
    const auto spec = build_spec(o);
    if (o.format != "csv" && o.format != "plot") throw std::invalid_argument("--format must be csv or plot");
    const auto rows = ltear::harness::run_sweep(spec, progress_printer(o.quiet, "sweep"));
    emit(o.out, [&](std::ostream& os) {
        if (o.format == "plot") {
            ltear::harness::write_plot_data(os, rows);
        } else {
            ltear::harness::write_csv(os, rows);
        }
    });
    return kExitOk;
}

int cmd_breaking_point(const CommonOptions& o, double threshold) {
    const auto spec = build_spec(o);
    const auto rows = ltear::harness::run_sweep(spec, progress_printer(o.quiet, "breaking-point"));
    const auto report = ltear::harness::breaking_points(spec, rows, threshold);
    emit(o.out, [&](std::ostream& os) { ltear::harness::write_breaking_points(os, report); });
    return kExitOk;
}

int cmd_validate() {
    const auto results = ltear::validation::run_all();
    ltear::validation::print_report(std::cout, results);
    return ltear::validation::all_passed(results) ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LTE access reservation capacity: analytical model, simulator and sweeps"};
    app.require_subcommand(1);

    CommonOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Evaluate engines over a grid of offered loads");
    add_common(sweep, sweep_opts);
    sweep->add_option("--format", sweep_opts.format, "csv or plot (whitespace columns)")->capture_default_str();

    CommonOptions bp_opts;
    double threshold = 0.1;
    auto* bp = app.add_subcommand("breaking-point", "Offered load where outage first reaches a threshold");
    add_common(bp, bp_opts);
    bp->add_option("--threshold", threshold, "Outage probability threshold")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Check closed forms against brute-force oracles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sweep) return cmd_sweep(sweep_opts);
        if (*bp) return cmd_breaking_point(bp_opts, threshold);
        if (*validate) return cmd_validate();
    } catch (const IoError& e) {
        std::cerr << "ltear: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "ltear: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "ltear: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
