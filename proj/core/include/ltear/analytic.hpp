#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ltear/config.hpp"

/// Closed-form model of the LTE access reservation procedure.
///
/// A single preamble transmission fails either by a preamble collision in the
/// contention phase or by its uplink grant going stale in the access-granting
/// queue. Retransmissions feed back into the offered load, which is resolved
/// as a fixed point of lambda_T = lambda_I * N_TX(lambda_T).
///
/// All rates are per subframe. All functions are pure.
namespace ltear::analytic {

/// Upper (Jensen) estimate of the probability that a tagged preamble is also
/// picked by another device: 1 - (1 - 1/d)^(lambda_t * rao_period - 1),
/// clamped to [0, 1].
double collision_probability(double total_rate, const SystemConfig& cfg);

/// Per-subframe rate of distinct activated preambles. Per access
/// opportunity d * (1 - exp(-lambda_t * rao_period / d)) preambles are active;
/// the result divides that count by rao_period.
double activated_preamble_rate(double total_rate, const SystemConfig& cfg);

/// Long-run fraction of uplink grants lost in an M/M/1 queue with impatient
/// customers, served at grants_per_subframe with patience
/// cfg.grant_queue_patience(). The removable singularity at rho = 1 is
/// replaced by its limit 1 / (2 + mu * tau_q) for |rho - 1| < kRhoLimitBand.
double grant_drop_probability(double activation_rate, const SystemConfig& cfg);

inline constexpr double kRhoLimitBand = 1e-6;

/// p_f from independent collision and grant-drop failures.
double combine_failures(double p_collision, double p_grant_drop);

struct OneShotFailure {
    double p_collision = 0.0;
    double p_grant_drop = 0.0;
    double p_failure = 0.0;
    double activation_rate = 0.0;  ///< lambda_A, per subframe
    double queue_load = 0.0;       ///< rho = lambda_A / mu
};

/// Failure breakdown of a single transmission at total rate lambda_t.
OneShotFailure one_shot(double total_rate, const SystemConfig& cfg);

double one_shot_failure(double total_rate, const SystemConfig& cfg);

/// Mean preamble transmissions per packet, (1 - p^(m+1)) / (1 - p).
/// Returns m+1 at p = 1.
double expected_transmissions(double p_failure, int max_retransmissions);

/// p^(m+1).
double outage_probability(double p_failure, int max_retransmissions);

/// Steady state of the retransmission/backoff Markov chain.
///
/// Stage 0 has the single state (0,0); stages 1..m hold backoff counters
/// k = 0..W_c-1. Entries (0, k > 0) do not exist in the chain and are zero.
struct ChainSolution {
    double b_off = 0.0;
    double b_connect = 0.0;
    double b_drop = 0.0;
    double p_on = 0.0;
    int max_retransmissions = 0;
    int backoff_window = 1;
    std::vector<double> backoff;  ///< row-major (m+1) x W_c

    double at(int stage, int counter) const {
        return backoff[static_cast<std::size_t>(stage) * static_cast<std::size_t>(backoff_window) +
                       static_cast<std::size_t>(counter)];
    }
    double& at(int stage, int counter) {
        return backoff[static_cast<std::size_t>(stage) * static_cast<std::size_t>(backoff_window) +
                       static_cast<std::size_t>(counter)];
    }

    double total() const;
    /// b_drop / (b_drop + b_connect)
    double outage() const;
    /// sum_i b(i,0) / b(0,0)
    double transmissions() const;
};

/// Closed-form stationary vector. Requires p_failure in [0,1), p_on in (0,1].
ChainSolution chain_steady_state(double p_failure, double p_on, int max_retransmissions,
                                 int backoff_window);

inline ChainSolution chain_steady_state(double p_failure, double p_on, const SystemConfig& cfg) {
    return chain_steady_state(p_failure, p_on, cfg.max_retransmissions, cfg.backoff_window);
}

/// Activation probability of an idle device, 1 - exp(-lambda_I).
double activation_probability(double new_arrival_rate);

struct Load {
    double new_arrivals = 0.0;     ///< lambda_I
    double total = 0.0;            ///< lambda_T
    double activated = 0.0;        ///< lambda_A
    double retransmissions = 0.0;  ///< lambda_R = lambda_T - lambda_I
};

struct ModelResult {
    Load load;
    double p_collision = 0.0;
    double p_grant_drop = 0.0;
    double p_failure = 0.0;
    double p_outage = 0.0;
    double n_tx = 1.0;
    double queue_load = 0.0;
    double residual = 0.0;  ///< |lambda_T - N_TX * lambda_I| / lambda_T
    int iterations = 0;
    bool converged = false;
};

struct SolverOptions {
    double tolerance = 0.01;  ///< relative change between consecutive iterates
    int max_iterations = 100;
    double damping = 0.5;     ///< applied once consecutive steps change sign
    /// Overrides 1 - exp(-lambda_I) in the chain used for the reported metrics.
    std::optional<double> p_on;
};

/// Fixed-point total load for new-arrival rate lambda_i, starting from
/// lambda_T = lambda_I. On iteration cap the last iterate is returned with
/// converged = false.
ModelResult solve_total_rate(double new_arrival_rate, const SystemConfig& cfg,
                             const SolverOptions& options = {});

/// Same pipeline with the grant queue removed: p_f = p_c.
ModelResult baseline_collision_only(double new_arrival_rate, const SystemConfig& cfg,
                                    const SolverOptions& options = {});

}  // namespace ltear::analytic
