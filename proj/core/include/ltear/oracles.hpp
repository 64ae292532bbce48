#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "ltear/analytic.hpp"
#include "ltear/config.hpp"

/// Brute-force reference implementations used to check the closed forms.
/// Nothing here reuses formula code from ltear::analytic; only the
/// ChainSolution container is shared.
namespace ltear::oracles {

/// Stationary distribution of the retransmission chain obtained by building
/// the explicit transition matrix and solving pi P = pi, sum(pi) = 1.
/// Throws std::runtime_error if the system is singular.
analytic::ChainSolution chain_linear_solve(double p_failure, double p_on, int max_retransmissions,
                                           int backoff_window);

enum class ServiceKind { exponential, deterministic };

enum class LossEstimator {
    crude,                ///< count lost customers directly
    importance_sampling,  ///< regenerative cycles, exponentially tilted until the first loss
};

struct QueueOracleOptions {
    ServiceKind service = ServiceKind::exponential;
    LossEstimator estimator = LossEstimator::crude;
    std::uint64_t customers = 1'000'000;  ///< customers simulated (per estimator pass)
    std::uint64_t seed = 1;
    /// When > 0, rerun with more customers until std_error <= target * loss
    /// or max_customers is reached.
    double target_relative_error = 0.0;
    std::uint64_t max_customers = 200'000'000;
};

struct QueueLoss {
    double loss = 0.0;
    double std_error = 0.0;
    std::uint64_t customers = 0;  ///< customers simulated in total
    std::uint64_t lost = 0;       ///< raw lost count (crude estimator only)
};

/// Single-server FIFO queue with Poisson(arrival_rate) arrivals, service at
/// rate service_rate and customers that abandon when their wait would exceed
/// `patience`. Returns the long-run fraction of lost customers.
QueueLoss impatient_queue(double arrival_rate, double service_rate, double patience,
                          const QueueOracleOptions& options = {});

/// Grant-queue form: patience is mu * t_rar - 1/mu, service rate mu.
QueueLoss impatient_queue_sim(double activation_rate, int grants_per_subframe, int rar_window,
                              const QueueOracleOptions& options = {});

struct PreambleEstimate {
    /// P(tagged device collides | at least one contender), one tagged device per non-empty trial.
    double collision = 0.0;
    double collision_se = 0.0;
    /// Fraction of all contenders that collided (size-biased view).
    double collision_per_device = 0.0;
    double mean_activations = 0.0;
    double activations_se = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t nonempty_trials = 0;
};

/// Draws N ~ Poisson(contenders_per_rao), assigns uniform preambles among d
/// and tallies collisions and distinct activated preambles.
PreambleEstimate preamble_monte_carlo(double contenders_per_rao, int preambles, std::uint64_t trials,
                                      std::uint64_t seed);

using FailureFunction = std::function<double(double total_rate, const SystemConfig&)>;

struct BisectionResult {
    double total_rate = 0.0;
    int iterations = 0;
};

/// Least root of g(x) = x - lambda_i * sum_{k=0..m} p_f(x)^k on
/// [lambda_i, (m+1) lambda_i], located by a uniform scan and refined by
/// bisection to `tolerance`. Throws std::runtime_error when g has no sign
/// change on the bracket.
BisectionResult fixed_point_bisection(double new_arrival_rate, const SystemConfig& cfg,
                                      const FailureFunction& failure, double tolerance = 1e-9,
                                      int scan_points = 2000);

/// Same search with p_f taken from analytic::one_shot_failure; only the
/// transmission count and the root finding are independent here.
BisectionResult fixed_point_bisection(double new_arrival_rate, const SystemConfig& cfg);

}  // namespace ltear::oracles
