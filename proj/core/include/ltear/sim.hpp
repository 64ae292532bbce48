#pragma once

#include <cstdint>
#include <vector>

#include "ltear/config.hpp"

/// Subframe-resolution simulator of the four-message LTE random access
/// procedure (preamble, RAR, connection request, contention resolution).
namespace ltear::sim {

struct SimConfig {
    SystemConfig system;
    std::int64_t duration = 60'000;  ///< subframes
    std::uint64_t seed = 1;
    std::int64_t warmup = -1;        ///< subframes excluded from statistics; < 0 selects 10% of duration

    std::int64_t effective_warmup() const { return warmup < 0 ? duration / 10 : warmup; }
    void validate() const;
};

/// Why an individual preamble transmission failed.
struct FailureCounts {
    std::uint64_t msg3_collisions = 0;  ///< attempts whose MSG3 collided (detected by the eNodeB)
    std::uint64_t rar_expired = 0;      ///< attempts that saw no MSG2 within the RAR window
    std::uint64_t crt_expired = 0;      ///< attempts that saw no MSG4 before the contention timer ran out

    friend bool operator==(const FailureCounts&, const FailureCounts&) = default;
};

/// Statistics of one run over the post-warmup window.
///
/// Packet counts cover packets that arrived after warmup. Rates and per-attempt
/// counts cover events (MSG1s, activations, grants) that happened after warmup.
struct SimStats {
    std::uint64_t arrivals = 0;
    std::uint64_t connects = 0;
    std::uint64_t drops = 0;
    std::uint64_t in_flight = 0;  ///< arrived but unresolved when the run ended

    bool outage_defined = false;  ///< false when no packet completed
    double outage_fraction = 0.0; ///< drops / (connects + drops)
    double mean_tx = 0.0;         ///< preamble transmissions per completed packet

    FailureCounts failures;
    std::uint64_t msg1_sent = 0;
    std::uint64_t preambles_activated = 0;
    std::uint64_t grants_served = 0;
    std::uint64_t grants_expired = 0;

    double lambda_t = 0.0;        ///< observed MSG1 rate, per subframe
    double lambda_a = 0.0;        ///< observed activated-preamble rate, per subframe
    double p_collision = 0.0;     ///< fraction of MSG1s that ended in a MSG3 collision
    double p_grant_drop = 0.0;    ///< fraction of MSG1s whose grant expired
    double grant_loss_fraction = 0.0;  ///< expired / (served + expired) grants

    int max_grants_in_subframe = 0;
    int max_activations_in_rao = 0;
    std::int64_t window = 0;      ///< subframes in the statistics window

    friend bool operator==(const SimStats&, const SimStats&) = default;
};

/// Runs the simulator for cfg.duration subframes at new-arrival rate
/// new_arrival_rate (per subframe). Deterministic for a fixed cfg.seed.
SimStats run(const SimConfig& cfg, double new_arrival_rate);

/// Mean and two-sided normal-approximation 95% interval of one metric.
struct Estimate {
    double mean = 0.0;
    double stddev = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t samples = 0;

    double half_width() const { return 0.5 * (ci_high - ci_low); }
};

Estimate summarize(const std::vector<double>& samples);

struct Replications {
    std::vector<SimStats> runs;
    std::vector<std::uint64_t> seeds;
    Estimate outage;
    Estimate mean_tx;
    Estimate p_collision;
    Estimate p_grant_drop;
    Estimate lambda_t;
    Estimate lambda_a;
};

/// Seed of replication `index` derived from a base seed; distinct per index.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t index);

/// n_reps independent runs with seeds replication_seed(cfg.seed, r), executed
/// on up to `threads` workers (0 = ltear::default_parallelism()).
Replications run_replications(const SimConfig& cfg, double new_arrival_rate, std::size_t n_reps,
                              std::size_t threads = 0);

}  // namespace ltear::sim
