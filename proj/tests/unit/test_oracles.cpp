#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ltear/analytic.hpp"
#include "ltear/oracles.hpp"

using namespace ltear;
using namespace ltear::oracles;
using doctest::Approx;

TEST_SUITE("chain_linear_solve") {
    TEST_CASE("exact reference point") {
        const auto s = chain_linear_solve(0.4, 0.1, 2, 3);
        CHECK(s.b_off == Approx(125.0 / 164).epsilon(1e-12));
        CHECK(s.b_connect == Approx(117.0 / 1640).epsilon(1e-12));
        CHECK(s.b_drop == Approx(1.0 / 205).epsilon(1e-12));
        CHECK(s.at(0, 0) == Approx(25.0 / 328).epsilon(1e-12));
        CHECK(s.at(2, 2) == Approx(1.0 / 246).epsilon(1e-12));
        CHECK(s.total() == Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("trivial chain") {
        const auto s = chain_linear_solve(0.0, 1.0, 0, 1);
        CHECK(s.b_drop == Approx(0.0));
        CHECK(s.total() == Approx(1.0));
    }

    TEST_CASE("rejects invalid inputs") {
        CHECK_THROWS_AS(chain_linear_solve(1.0, 0.5, 2, 3), std::invalid_argument);
        CHECK_THROWS_AS(chain_linear_solve(0.5, 0.0, 2, 3), std::invalid_argument);
        CHECK_THROWS_AS(chain_linear_solve(0.5, 0.5, -1, 3), std::invalid_argument);
        CHECK_THROWS_AS(chain_linear_solve(0.5, 0.5, 2, 0), std::invalid_argument);
    }
}

TEST_SUITE("impatient_queue") {
    TEST_CASE("no arrivals, no loss") {
        CHECK(impatient_queue_sim(0.0, 3, 5).loss == 0.0);
        CHECK(impatient_queue(0.0, 1.0, 2.0).loss == 0.0);
    }

    TEST_CASE("zero patience loses everyone who would wait") {
        // M/M/1/1: loss = rho / (1 + rho)
        QueueOracleOptions q;
        q.customers = 400'000;
        q.seed = 11;
        const auto r = impatient_queue(0.5, 1.0, 0.0, q);
        CHECK(std::abs(r.loss - 1.0 / 3.0) < 4 * r.std_error + 1e-3);
    }

    TEST_CASE("crude estimator matches the closed form at rho = 0.9") {
        QueueOracleOptions q;
        q.customers = 2'000'000;
        q.seed = 3;
        const auto r = impatient_queue(0.9, 1.0, 5.0, q);
        const double a = 0.1 * 5.0;
        const double closed = 0.1 * 0.9 * std::exp(-a) / (1 - 0.81 * std::exp(-a));
        CHECK(std::abs(r.loss - closed) < 4 * r.std_error);
    }

    TEST_CASE("importance sampling resolves tiny losses") {
        SystemConfig cfg;
        QueueOracleOptions q;
        q.estimator = LossEstimator::importance_sampling;
        q.customers = 200'000;
        q.seed = 5;
        const auto r = impatient_queue_sim(0.5 * 3, 3, 5, q);
        const double closed = analytic::grant_drop_probability(1.5, cfg);
        CHECK(closed < 1e-9);
        CHECK(r.loss > 0.0);
        CHECK(std::abs(r.loss - closed) / closed < 0.05);
    }

    TEST_CASE("precision target enlarges the sample") {
        QueueOracleOptions q;
        q.estimator = LossEstimator::importance_sampling;
        q.customers = 10'000;
        q.seed = 9;
        q.target_relative_error = 0.02;
        const auto r = impatient_queue_sim(0.9 * 3, 3, 5, q);
        CHECK(r.customers > 10'000);
        CHECK(r.std_error <= 0.02 * r.loss);
    }

    TEST_CASE("deterministic service loses less than exponential") {
        QueueOracleOptions q;
        q.customers = 500'000;
        q.seed = 2;
        const auto expo = impatient_queue_sim(0.95 * 3, 3, 5, q);
        q.service = ServiceKind::deterministic;
        const auto det = impatient_queue_sim(0.95 * 3, 3, 5, q);
        CHECK(det.loss < expo.loss);
    }

    TEST_CASE("overload uses the crude estimator even when tilting is requested") {
        QueueOracleOptions q;
        q.estimator = LossEstimator::importance_sampling;
        q.customers = 300'000;
        const auto r = impatient_queue(2.0, 1.0, 1.0, q);
        CHECK(r.lost > 0);
        CHECK(r.loss > 0.45);
    }

    TEST_CASE("seeded runs repeat exactly") {
        QueueOracleOptions q;
        q.customers = 50'000;
        q.seed = 77;
        CHECK(impatient_queue(0.8, 1.0, 2.0, q).loss == impatient_queue(0.8, 1.0, 2.0, q).loss);
    }

    TEST_CASE("invalid arguments") {
        CHECK_THROWS_AS(impatient_queue(-1.0, 1.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(impatient_queue(1.0, 0.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(impatient_queue(1.0, 1.0, -1.0), std::invalid_argument);
        CHECK_THROWS_AS(impatient_queue_sim(1.0, 0, 5), std::invalid_argument);
    }
}

TEST_SUITE("preamble_monte_carlo") {
    TEST_CASE("no contenders") {
        const auto r = preamble_monte_carlo(0.0, 54, 10'000, 1);
        CHECK(r.collision == 0.0);
        CHECK(r.mean_activations == 0.0);
    }

    TEST_CASE("single preamble") {
        // the tagged device collides iff it is not alone: P(N >= 2 | N >= 1)
        const auto r = preamble_monte_carlo(5.0, 1, 100'000, 2);
        const double expected = (1 - std::exp(-5.0) - 5 * std::exp(-5.0)) / (1 - std::exp(-5.0));
        CHECK(std::abs(r.collision - expected) < 4 * r.collision_se);
        CHECK(r.mean_activations <= 1.0);
    }

    TEST_CASE("ten contenders on 54 preambles") {
        SystemConfig cfg;
        cfg.rao_period = 1;
        const auto r = preamble_monte_carlo(10.0, 54, 100'000, 3);
        CHECK(r.collision <= analytic::collision_probability(10.0, cfg) + 3 * r.collision_se);
        CHECK(std::abs(r.mean_activations - analytic::activated_preamble_rate(10.0, cfg)) <= 3 * r.activations_se);
        // size-biased per-device view: 1 - e^{-lambda/d}
        CHECK(r.collision_per_device == Approx(1 - std::exp(-10.0 / 54)).epsilon(0.02));
    }

    TEST_CASE("errors") {
        CHECK_THROWS_AS(preamble_monte_carlo(-1.0, 54, 10'000, 1), std::invalid_argument);
        CHECK_THROWS_AS(preamble_monte_carlo(1.0, 0, 10'000, 1), std::invalid_argument);
        CHECK_THROWS_AS(preamble_monte_carlo(1.0, 54, 0, 1), std::invalid_argument);
    }
}

TEST_SUITE("fixed_point_bisection") {
    TEST_CASE("trivial cases") {
        CHECK(fixed_point_bisection(0.0, SystemConfig{}).total_rate == 0.0);
        SystemConfig cfg;
        cfg.max_retransmissions = 0;
        CHECK(fixed_point_bisection(2.3, cfg).total_rate == 2.3);
    }

    TEST_CASE("frozen roots") {
        SystemConfig cfg;
        CHECK(fixed_point_bisection(2.0, cfg).total_rate == Approx(2.4734922914181125).epsilon(1e-8));
        cfg.rao_period = 1;
        CHECK(fixed_point_bisection(2.0, cfg).total_rate == Approx(2.0392308837054685).epsilon(1e-8));
    }

    TEST_CASE("constant failure probability") {
        // lambda_t = lambda_i * (1 - p^10) / (1 - p)
        const auto r = fixed_point_bisection(1.0, SystemConfig{}, [](double, const SystemConfig&) { return 0.5; });
        CHECK(r.total_rate == Approx(1.998046875).epsilon(1e-8));
    }

    TEST_CASE("no sign change is reported") {
        // certain failure puts the root exactly on the upper bracket edge
        const FailureFunction certain = [](double, const SystemConfig&) { return 1.0; };
        CHECK(fixed_point_bisection(1.0, SystemConfig{}, certain).total_rate == Approx(10.0).epsilon(1e-8));
        const FailureFunction never = [](double, const SystemConfig&) { return std::nan(""); };
        CHECK_THROWS_AS(fixed_point_bisection(1.0, SystemConfig{}, never), std::runtime_error);
    }

    TEST_CASE("agrees with Picard at 2000/s") {
        const auto root = fixed_point_bisection(2.0, SystemConfig{});
        const auto picard = analytic::solve_total_rate(2.0, SystemConfig{});
        CHECK(std::abs(picard.load.total - root.total_rate) / root.total_rate < 0.005);
    }
}
