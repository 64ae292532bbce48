#include "ltear/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "ltear/harness.hpp"
#include "ltear/oracles.hpp"

namespace ltear::validation {

namespace {

CheckResult finish(std::string name, double observed, double tolerance, std::string detail) {
    CheckResult r;
    r.name = std::move(name);
    r.observed = observed;
    r.tolerance = tolerance;
    r.passed = observed <= tolerance;
    r.detail = std::move(detail);
    return r;
}

double max_component_gap(const analytic::ChainSolution& a, const analytic::ChainSolution& b) {
    double gap = std::max({std::abs(a.b_off - b.b_off), std::abs(a.b_connect - b.b_connect),
                           std::abs(a.b_drop - b.b_drop)});
    for (std::size_t i = 0; i < a.backoff.size(); ++i) gap = std::max(gap, std::abs(a.backoff[i] - b.backoff[i]));
    return gap;
}

template <class F>
void for_each_chain_point(F&& f) {
    for (int pf_tenths = 0; pf_tenths <= 9; ++pf_tenths) {
        for (double p_on : {0.01, 0.5}) {
            for (int m : {0, 1, 9}) {
                for (int w : {1, 5, 20}) f(pf_tenths / 10.0, p_on, m, w);
            }
        }
    }
}

}  // namespace

CheckResult check_chain(const Subjects& subjects) {
    double worst = 0.0;
    int points = 0;
    for_each_chain_point([&](double pf, double p_on, int m, int w) {
        const auto closed = subjects.chain(pf, p_on, m, w);
        const auto solved = oracles::chain_linear_solve(pf, p_on, m, w);
        worst = std::max(worst, max_component_gap(closed, solved));
        ++points;
    });
    return finish("chain closed form vs linear solve", worst, 1e-9,
                  std::to_string(points) + " (p_f, p_on, m, W_c) points, max |component gap|");
}

CheckResult check_chain_outage_ratio(const Subjects& subjects) {
    double worst = 0.0;
    for_each_chain_point([&](double pf, double p_on, int m, int w) {
        const auto closed = subjects.chain(pf, p_on, m, w);
        worst = std::max(worst, std::abs(closed.outage() - std::pow(pf, m + 1)));
    });
    return finish("b_drop/(b_drop+b_connect) vs p_f^(m+1)", worst, 1e-12, "max absolute gap");
}

CheckResult check_transmissions(const Subjects& subjects) {
    double worst = 0.0;
    for_each_chain_point([&](double pf, double p_on, int m, int w) {
        const double closed = analytic::expected_transmissions(pf, m);
        // (1 - p) sum_{i<m} (i+1) p^i + (m+1) p^m
        double explicit_sum = 0.0;
        for (int i = 0; i < m; ++i) explicit_sum += (1.0 - pf) * (i + 1) * std::pow(pf, i);
        explicit_sum += (m + 1) * std::pow(pf, m);
        const double chain = subjects.chain(pf, p_on, m, w).transmissions();
        worst = std::max({worst, std::abs(closed - explicit_sum), std::abs(closed - chain)});
    });
    return finish("N_TX closed form vs explicit sum vs chain", worst, 1e-12, "max absolute gap");
}

CheckResult check_grant_queue(const Subjects& subjects, const ValidationOptions& options) {
    double worst = 0.0;
    std::ostringstream detail;
    detail << "max relative error; rho:";
    std::uint64_t seed = options.seed;
    for (int rar_window : {5, 10}) {
        for (double rho : {0.3, 0.5, 0.8, 0.9, 0.95, 1.2}) {
            SystemConfig cfg;
            cfg.grants_per_subframe = 3;
            cfg.rar_window = rar_window;
            const double lambda_a = rho * cfg.grants_per_subframe;

            oracles::QueueOracleOptions q;
            q.service = oracles::ServiceKind::exponential;
            q.estimator = oracles::LossEstimator::importance_sampling;
            q.customers = options.queue_customers;
            q.seed = ++seed;
            q.target_relative_error = options.queue_relative_error;
            const auto sim = oracles::impatient_queue_sim(lambda_a, cfg.grants_per_subframe, rar_window, q);
            const double closed = subjects.grant_drop(lambda_a, cfg);
            const double rel = std::abs(closed - sim.loss) / sim.loss;
            worst = std::max(worst, rel);
            char buf[96];
            std::snprintf(buf, sizeof buf, " %.2g/t_rar=%d:%.3g", rho, rar_window, rel);
            detail << buf;
        }
    }
    return finish("grant drop closed form vs impatient queue", worst, 0.05, detail.str());
}

CheckResult check_collision_bound(const ValidationOptions& options) {
    double worst = -1e300;
    std::ostringstream detail;
    detail << "max (estimate - bound) / se over contenders per RAO {5,10,20,40}";
    std::uint64_t seed = options.seed + 1000;
    for (double contenders : {5.0, 10.0, 20.0, 40.0}) {
        SystemConfig cfg;
        cfg.rao_period = 1;
        const double bound = analytic::collision_probability(contenders, cfg);
        const auto mc = oracles::preamble_monte_carlo(contenders, cfg.preambles, options.preamble_trials, ++seed);
        worst = std::max(worst, (mc.collision - bound) / mc.collision_se);
    }
    return finish("collision bound direction (sigmas above bound)", worst, 3.0, detail.str());
}

CheckResult check_activations(const ValidationOptions& options) {
    double worst = 0.0;
    std::uint64_t seed = options.seed + 2000;
    for (double contenders : {1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
        SystemConfig cfg;
        cfg.rao_period = 1;
        const double expected = analytic::activated_preamble_rate(contenders, cfg);
        const auto mc = oracles::preamble_monte_carlo(contenders, cfg.preambles, options.preamble_trials, ++seed);
        worst = std::max(worst, std::abs(mc.mean_activations - expected) / mc.activations_se);
    }
    return finish("activated preambles vs Monte Carlo (sigmas)", worst, 3.0, "contenders per RAO {1,2,5,10,20,40}");
}

CheckResult check_fixed_point() {
    double worst = 0.0;
    int slowest = 0;
    int points = 0;
    for (int rao_period : {1, 5}) {
        SystemConfig cfg;
        cfg.rao_period = rao_period;
        cfg.max_retransmissions = 9;
        for (double per_s = 100.0; per_s <= 4000.0; per_s += 100.0) {
            if (harness::refined_model_outage(per_s, cfg) >= 0.1) break;
            const double rate = per_second_to_per_subframe(per_s);
            const auto picard = analytic::solve_total_rate(rate, cfg);
            const auto root = oracles::fixed_point_bisection(rate, cfg);
            worst = std::max(worst, std::abs(picard.load.total - root.total_rate) / root.total_rate);
            slowest = std::max(slowest, picard.iterations);
            ++points;
        }
    }
    return finish("fixed point Picard vs bisection", worst, 0.005,
                  std::to_string(points) + " points below the breaking point, max iterations " +
                      std::to_string(slowest));
}

std::vector<CheckResult> run_all(const Subjects& subjects, const ValidationOptions& options) {
    return {
        check_chain(subjects),
        check_chain_outage_ratio(subjects),
        check_transmissions(subjects),
        check_grant_queue(subjects, options),
        check_collision_bound(options),
        check_activations(options),
        check_fixed_point(),
    };
}

void print_report(std::ostream& out, const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-4s %-48s observed=%-12.4g tolerance=%-10.3g", r.passed ? "PASS" : "FAIL",
                      r.name.c_str(), r.observed, r.tolerance);
        out << buf << r.detail << '\n';
    }
}

bool all_passed(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace ltear::validation
