#include "ltear/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ltear/parallel.hpp"
#include "ltear/sim.hpp"

namespace ltear::harness {

std::string_view engine_name(Engine engine) {
    switch (engine) {
        case Engine::model: return "model";
        case Engine::sim: return "sim";
        case Engine::baseline: return "baseline";
    }
    return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

int parse_int(std::string_view key, std::string_view text) {
    int value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument("config key '" + std::string(key) + "' expects an integer, got '" +
                                    std::string(text) + "'");
    }
    return value;
}

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

}  // namespace

std::vector<Engine> parse_engines(std::string_view list) {
    std::vector<Engine> engines;
    while (!list.empty()) {
        const auto comma = list.find(',');
        const std::string_view name = trim(list.substr(0, comma));
        list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
        if (name.empty()) continue;

        Engine e;
        if (name == "model") {
            e = Engine::model;
        } else if (name == "sim") {
            e = Engine::sim;
        } else if (name == "baseline") {
            e = Engine::baseline;
        } else {
            throw std::invalid_argument("unknown engine '" + std::string(name) + "' (expected model, sim, baseline)");
        }
        if (std::find(engines.begin(), engines.end(), e) != engines.end()) {
            throw std::invalid_argument("engine '" + std::string(name) + "' listed twice");
        }
        engines.push_back(e);
    }
    if (engines.empty()) throw std::invalid_argument("engine list is empty");
    return engines;
}

void apply_config_entry(SystemConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    struct Field {
        std::string_view name;
        std::string_view alias;
        int SystemConfig::*member;
    };
    static constexpr Field fields[] = {
        {"preambles", "d", &SystemConfig::preambles},
        {"rao_period", "delta_rao", &SystemConfig::rao_period},
        {"max_retransmissions", "m", &SystemConfig::max_retransmissions},
        {"grants_per_subframe", "mu", &SystemConfig::grants_per_subframe},
        {"backoff_window", "w_c", &SystemConfig::backoff_window},
        {"rar_window", "t_rar", &SystemConfig::rar_window},
        {"contention_timeout", "t_crt", &SystemConfig::contention_timeout},
        {"enb_processing", "t_enb_proc", &SystemConfig::enb_processing},
        {"ue_processing", "t_ue_proc", &SystemConfig::ue_processing},
    };
    for (const Field& f : fields) {
        if (key == f.name || key == f.alias) {
            cfg.*f.member = parse_int(key, value);
            return;
        }
    }
    throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

SystemConfig parse_config(std::istream& in, SystemConfig base) {
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
        }
        apply_config_entry(base, text.substr(0, eq), text.substr(eq + 1));
    }
    return base;
}

SystemConfig load_config_file(const std::string& path, SystemConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    return parse_config(in, base);
}

std::string format_config(const SystemConfig& cfg) {
    std::ostringstream os;
    os << "d = " << cfg.preambles << '\n'
       << "delta_rao = " << cfg.rao_period << '\n'
       << "m = " << cfg.max_retransmissions << '\n'
       << "mu = " << cfg.grants_per_subframe << '\n'
       << "w_c = " << cfg.backoff_window << '\n'
       << "t_rar = " << cfg.rar_window << '\n'
       << "t_crt = " << cfg.contention_timeout << '\n'
       << "t_enb_proc = " << cfg.enb_processing << '\n'
       << "t_ue_proc = " << cfg.ue_processing << '\n';
    return os.str();
}

std::vector<double> linear_grid(double min_per_s, double max_per_s, int steps) {
    if (steps < 1) throw std::invalid_argument("grid needs at least one step");
    if (steps == 1) return {min_per_s};
    if (!(max_per_s > min_per_s)) throw std::invalid_argument("grid needs lambda-max > lambda-min");
    std::vector<double> grid(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        grid[static_cast<std::size_t>(i)] = min_per_s + (max_per_s - min_per_s) * i / (steps - 1);
    }
    return grid;
}

void SweepSpec::validate() const {
    system.validate();
    if (grid_per_s.empty()) throw std::invalid_argument("sweep grid is empty");
    for (std::size_t i = 0; i < grid_per_s.size(); ++i) {
        if (!(grid_per_s[i] >= 0.0) || !std::isfinite(grid_per_s[i])) {
            throw std::invalid_argument("sweep grid values must be finite and >= 0");
        }
        if (i > 0 && !(grid_per_s[i] > grid_per_s[i - 1])) {
            throw std::invalid_argument("sweep grid must be strictly increasing");
        }
    }
    if (engines.empty()) throw std::invalid_argument("no engine selected");
    const bool simulated = std::find(engines.begin(), engines.end(), Engine::sim) != engines.end();
    if (simulated) {
        if (reps < 2) throw std::invalid_argument("simulation needs --reps >= 2");
        if (!(duration_s > 0.0)) throw std::invalid_argument("simulation needs --duration-s > 0");
    }
}

const EngineMetrics* SweepRow::find(Engine engine) const {
    for (const auto& e : engines) {
        if (e.engine == engine) return &e;
    }
    return nullptr;
}

EngineMetrics evaluate(Engine engine, double lambda_i_per_s, const SweepSpec& spec) {
    const double rate = per_second_to_per_subframe(lambda_i_per_s);
    EngineMetrics out;
    out.engine = engine;

    if (engine == Engine::sim) {
        sim::SimConfig cfg;
        cfg.system = spec.system;
        cfg.duration = std::llround(spec.duration_s * kSubframesPerSecond);
        cfg.seed = spec.seed;
        const sim::Replications reps = sim::run_replications(cfg, rate, spec.reps, 1);
        out.p_outage = reps.outage.mean;
        out.ci_low = reps.outage.ci_low;
        out.ci_high = reps.outage.ci_high;
        out.n_tx = reps.mean_tx.mean;
        out.p_c = reps.p_collision.mean;
        out.p_e = reps.p_grant_drop.mean;
        out.lambda_t_per_s = per_subframe_to_per_second(reps.lambda_t.mean);
        out.rho = reps.lambda_a.mean / spec.system.grants_per_subframe;
        return out;
    }

    const analytic::ModelResult r = engine == Engine::model
                                        ? analytic::solve_total_rate(rate, spec.system, spec.solver)
                                        : analytic::baseline_collision_only(rate, spec.system, spec.solver);
    out.p_outage = r.p_outage;
    out.n_tx = r.n_tx;
    out.p_c = r.p_collision;
    out.p_e = r.p_grant_drop;
    out.lambda_t_per_s = per_subframe_to_per_second(r.load.total);
    out.rho = r.queue_load;
    out.converged = r.converged;
    return out;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const ProgressFn& progress) {
    spec.validate();
    const std::size_t points = spec.grid_per_s.size();
    const std::size_t engines = spec.engines.size();

    std::vector<SweepRow> rows(points);
    for (std::size_t i = 0; i < points; ++i) {
        rows[i].lambda_i_per_s = spec.grid_per_s[i];
        rows[i].engines.resize(engines);
    }

    std::mutex progress_mutex;
    std::size_t done = 0;
    const std::size_t total = points * engines;
    parallel_for(total, spec.threads, [&](std::size_t task) {
        const std::size_t point = task / engines;
        const std::size_t e = task % engines;
        rows[point].engines[e] = evaluate(spec.engines[e], spec.grid_per_s[point], spec);
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(++done, total);
        }
    });
    return rows;
}

namespace {

constexpr const char* kColumns[] = {"lambda_i_per_s", "engine", "p_outage", "n_tx",    "p_c",        "p_e",
                                    "lambda_t",       "rho",    "ci_low",   "ci_high", "converged"};

std::vector<std::string> fields_of(double lambda, const EngineMetrics& e, const std::string& null) {
    auto opt = [&](const std::optional<double>& v) { return v ? format_number(*v) : null; };
    return {format_number(lambda),
            std::string(engine_name(e.engine)),
            format_number(e.p_outage),
            format_number(e.n_tx),
            format_number(e.p_c),
            format_number(e.p_e),
            format_number(e.lambda_t_per_s),
            format_number(e.rho),
            opt(e.ci_low),
            opt(e.ci_high),
            e.converged ? (*e.converged ? "true" : "false") : null};
}

void write_table(std::ostream& out, const std::vector<SweepRow>& rows, const char* separator, const char* header_prefix,
                 const std::string& null) {
    out << header_prefix;
    for (std::size_t c = 0; c < std::size(kColumns); ++c) out << (c ? separator : "") << kColumns[c];
    out << '\n';
    for (const auto& row : rows) {
        for (const auto& e : row.engines) {
            const auto fields = fields_of(row.lambda_i_per_s, e, null);
            for (std::size_t c = 0; c < fields.size(); ++c) out << (c ? separator : "") << fields[c];
            out << '\n';
        }
    }
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) { write_table(out, rows, ",", "", "null"); }

void write_plot_data(std::ostream& out, const std::vector<SweepRow>& rows) {
    write_table(out, rows, " ", "# ", "nan");
}

std::optional<double> first_crossing(const std::vector<double>& grid, const std::vector<double>& values,
                                     double threshold) {
    if (grid.size() != values.size()) throw std::invalid_argument("grid and values differ in length");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (values[i] >= threshold) return grid[i];
    }
    return std::nullopt;
}

double refined_model_outage(double lambda_i_per_s, const SystemConfig& cfg) {
    analytic::SolverOptions tight;
    tight.tolerance = 1e-9;
    tight.max_iterations = 100'000;
    return analytic::solve_total_rate(per_second_to_per_subframe(lambda_i_per_s), cfg, tight).p_outage;
}

double refine_model_crossing(double below_per_s, double above_per_s, const SystemConfig& cfg, double threshold,
                             double resolution_per_s) {
    if (!(above_per_s > below_per_s)) throw std::invalid_argument("refinement bracket is empty");
    double lo = below_per_s;
    double hi = above_per_s;
    while (hi - lo > resolution_per_s) {
        const double mid = 0.5 * (lo + hi);
        (refined_model_outage(mid, cfg) >= threshold ? hi : lo) = mid;
    }
    return hi;
}

const Crossing* BreakingPointReport::find(Engine engine) const {
    for (const auto& c : crossings) {
        if (c.engine == engine) return &c;
    }
    return nullptr;
}

namespace {

std::optional<double> refine_from_grid(const std::vector<double>& grid, const SystemConfig& cfg, double threshold) {
    // Locate the bracket with the tight solver so the result does not depend
    // on the sweep's solver tolerance.
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (refined_model_outage(grid[i], cfg) >= threshold) {
            if (i == 0) return grid[0];
            return refine_model_crossing(grid[i - 1], grid[i], cfg, threshold);
        }
    }
    return std::nullopt;
}

}  // namespace

BreakingPointReport breaking_points(const SweepSpec& spec, const std::vector<SweepRow>& rows, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in (0, 1]");
    BreakingPointReport report;
    report.threshold = threshold;

    std::vector<double> grid;
    grid.reserve(rows.size());
    for (const auto& row : rows) grid.push_back(row.lambda_i_per_s);

    for (Engine engine : spec.engines) {
        Crossing c;
        c.engine = engine;
        if (engine == Engine::model) {
            c.lambda_star_per_s = refine_from_grid(grid, spec.system, threshold);
            c.refined = c.lambda_star_per_s.has_value();
        } else {
            std::vector<double> values;
            values.reserve(rows.size());
            for (const auto& row : rows) {
                const EngineMetrics* m = row.find(engine);
                values.push_back(m ? m->p_outage : 0.0);
            }
            c.lambda_star_per_s = first_crossing(grid, values, threshold);
        }
        report.crossings.push_back(c);
    }

    const Crossing* model = report.find(Engine::model);
    const Crossing* simulated = report.find(Engine::sim);
    if (model && simulated && model->lambda_star_per_s && simulated->lambda_star_per_s) {
        report.model_to_sim_ratio = *model->lambda_star_per_s / *simulated->lambda_star_per_s;
    }
    if (model) {
        for (double t : {0.05, 0.1, 0.3}) report.sensitivity.emplace_back(t, refine_from_grid(grid, spec.system, t));
    }
    return report;
}

void write_breaking_points(std::ostream& out, const BreakingPointReport& report) {
    out << "threshold," << format_number(report.threshold) << '\n';
    out << "engine,lambda_star_per_s,refined\n";
    for (const auto& c : report.crossings) {
        out << engine_name(c.engine) << ','
            << (c.lambda_star_per_s ? format_number(*c.lambda_star_per_s) : std::string("no crossing in grid"))
            << ',' << (c.refined ? "true" : "false") << '\n';
    }
    out << "model_to_sim_ratio,"
        << (report.model_to_sim_ratio ? format_number(*report.model_to_sim_ratio) : std::string("null")) << '\n';
    for (const auto& [t, v] : report.sensitivity) {
        out << "model_sensitivity_threshold_" << format_number(t) << ','
            << (v ? format_number(*v) : std::string("no crossing in grid")) << '\n';
    }
}

}  // namespace ltear::harness
