#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltear/analytic.hpp"
#include "ltear/config.hpp"

/// Load sweeps, breaking-point detection and file formats.
///
/// Rates at this boundary are attempts per second; they are converted to
/// per-subframe rates once, when a sweep point is evaluated.
namespace ltear::harness {

enum class Engine { model, sim, baseline };

std::string_view engine_name(Engine engine);

/// Parses a comma separated list such as "model,sim". Throws
/// std::invalid_argument on unknown names, duplicates or an empty list.
std::vector<Engine> parse_engines(std::string_view list);

// --- configuration files -------------------------------------------------

/// Applies one `key = value` entry. Keys are the SystemConfig field names or
/// their short forms (d, delta_rao, m, mu, w_c, t_rar, t_crt, t_enb_proc,
/// t_ue_proc). Throws std::invalid_argument on unknown keys or bad values.
void apply_config_entry(SystemConfig& cfg, std::string_view key, std::string_view value);

/// Flat key-value text: one `key = value` per line, `#` starts a comment.
SystemConfig parse_config(std::istream& in, SystemConfig base = {});

/// Throws std::runtime_error if the file cannot be opened.
SystemConfig load_config_file(const std::string& path, SystemConfig base = {});

std::string format_config(const SystemConfig& cfg);

// --- sweeps ----------------------------------------------------------------

/// `steps` evenly spaced points from min to max inclusive (steps == 1 gives {min}).
std::vector<double> linear_grid(double min_per_s, double max_per_s, int steps);

struct SweepSpec {
    std::vector<double> grid_per_s;
    SystemConfig system;
    std::vector<Engine> engines{Engine::model};
    std::size_t reps = 5;
    std::uint64_t seed = 1;
    double duration_s = 60.0;
    std::size_t threads = 0;  ///< 0 = ltear::default_parallelism()
    analytic::SolverOptions solver;

    /// Throws std::invalid_argument.
    void validate() const;
};

struct EngineMetrics {
    Engine engine = Engine::model;
    double p_outage = 0.0;
    double n_tx = 1.0;
    double p_c = 0.0;
    double p_e = 0.0;
    double lambda_t_per_s = 0.0;
    double rho = 0.0;
    std::optional<double> ci_low;   ///< simulator only
    std::optional<double> ci_high;  ///< simulator only
    std::optional<bool> converged;  ///< analytical engines only
};

struct SweepRow {
    double lambda_i_per_s = 0.0;
    std::vector<EngineMetrics> engines;  ///< in SweepSpec::engines order

    const EngineMetrics* find(Engine engine) const;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

EngineMetrics evaluate(Engine engine, double lambda_i_per_s, const SweepSpec& spec);

/// One row per grid point, ordered by grid index regardless of completion order.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const ProgressFn& progress = {});

/// Header plus one line per (grid point, engine); absent fields are `null`.
void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Whitespace separated columns with a `#` header; absent fields are `nan`.
void write_plot_data(std::ostream& out, const std::vector<SweepRow>& rows);

// --- breaking points ----------------------------------------------------

/// Smallest grid value whose metric reaches the threshold.
std::optional<double> first_crossing(const std::vector<double>& grid, const std::vector<double>& values,
                                     double threshold);

/// Model outage at lambda_i with a tight solver, used for refinement.
double refined_model_outage(double lambda_i_per_s, const SystemConfig& cfg);

/// Bisection on the model between a point below and a point at/above the
/// threshold, to within `resolution_per_s`.
double refine_model_crossing(double below_per_s, double above_per_s, const SystemConfig& cfg, double threshold,
                             double resolution_per_s = 0.25);

struct Crossing {
    Engine engine = Engine::model;
    std::optional<double> lambda_star_per_s;
    bool refined = false;
};

struct BreakingPointReport {
    double threshold = 0.1;
    std::vector<Crossing> crossings;
    std::optional<double> model_to_sim_ratio;
    /// Refined model breaking point at alternative thresholds.
    std::vector<std::pair<double, std::optional<double>>> sensitivity;

    const Crossing* find(Engine engine) const;
};

BreakingPointReport breaking_points(const SweepSpec& spec, const std::vector<SweepRow>& rows, double threshold);

void write_breaking_points(std::ostream& out, const BreakingPointReport& report);

}  // namespace ltear::harness
