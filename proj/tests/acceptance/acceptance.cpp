// Acceptance suite: one PASS/FAIL line per criterion, followed by the
// measurements behind it. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "ltear/analytic.hpp"
#include "ltear/harness.hpp"
#include "ltear/oracles.hpp"
#include "ltear/sim.hpp"
#include "ltear/validate.hpp"

using namespace ltear;

namespace {

constexpr std::uint64_t kSeed = 20150601;

struct Outcome {
    bool passed = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& note) {
        passed = passed && ok;
        notes.push_back(std::string(ok ? "ok   " : "MISS ") + note);
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SystemConfig table_config(int rao_period, int max_retransmissions) {
    SystemConfig cfg;
    cfg.rao_period = rao_period;
    cfg.max_retransmissions = max_retransmissions;
    return cfg;
}

Outcome chain_equivalence() {
    Outcome o;
    const auto chain = validation::check_chain();
    const auto ratio = validation::check_chain_outage_ratio();
    o.require(chain.passed, fmt("max componentwise gap %.3g (<= 1e-9)", chain.observed));
    o.require(ratio.passed, fmt("max |b_drop/(b_drop+b_connect) - p_f^(m+1)| %.3g (<= 1e-12)", ratio.observed));
    return o;
}

Outcome queue_formula() {
    Outcome o;
    std::uint64_t seed = kSeed;
    for (int rar_window : {5, 10}) {
        SystemConfig cfg;
        cfg.rar_window = rar_window;
        const double mu = cfg.grants_per_subframe;
        for (double rho : {0.3, 0.5, 0.8, 0.9, 0.95}) {
            oracles::QueueOracleOptions q;
            q.estimator = oracles::LossEstimator::importance_sampling;
            q.customers = 1'000'000;
            q.seed = ++seed;
            q.target_relative_error = 0.01;
            q.service = oracles::ServiceKind::exponential;
            const auto expo = oracles::impatient_queue_sim(rho * mu, cfg.grants_per_subframe, rar_window, q);
            q.service = oracles::ServiceKind::deterministic;
            const auto det = oracles::impatient_queue_sim(rho * mu, cfg.grants_per_subframe, rar_window, q);
            const double closed = analytic::grant_drop_probability(rho * mu, cfg);
            const double rel = std::abs(closed - expo.loss) / expo.loss;
            const double det_rel = std::abs(det.loss - expo.loss) / expo.loss;
            o.require(rel <= 0.05, fmt("t_rar=%d rho=%.2f closed %.4g vs exponential %.4g (se %.2g): rel %.3f",
                                       rar_window, rho, closed, expo.loss, expo.std_error, rel));
            o.require(det_rel <= 0.05, fmt("t_rar=%d rho=%.2f deterministic %.4g vs exponential %.4g: rel %.3f",
                                           rar_window, rho, det.loss, expo.loss, det_rel));
        }
    }
    return o;
}

Outcome collision_bound() {
    Outcome o;
    std::uint64_t seed = kSeed + 100;
    for (double contenders : {1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
        const SystemConfig cfg = table_config(1, 9);
        const double bound = analytic::collision_probability(contenders, cfg);
        const double activations = analytic::activated_preamble_rate(contenders, cfg);
        const auto mc = oracles::preamble_monte_carlo(contenders, cfg.preambles, 100'000, ++seed);
        o.require(mc.collision <= bound + 3 * mc.collision_se,
                  fmt("lambda*delta=%g collision %.4g (se %.2g) vs bound %.4g", contenders, mc.collision,
                      mc.collision_se, bound));
        const double z = std::abs(mc.mean_activations - activations) / mc.activations_se;
        o.require(z <= 3.0, fmt("lambda*delta=%g activations %.4f vs %.4f (%.2f sigma)", contenders,
                                mc.mean_activations, activations, z));
    }
    return o;
}

Outcome fixed_point() {
    Outcome o;
    for (int rao_period : {1, 5}) {
        const SystemConfig cfg = table_config(rao_period, 9);
        int points = 0;
        int slowest = 0;
        double worst = 0.0;
        bool all_converged = true;
        for (double per_s = 100.0; per_s <= 4000.0; per_s += 100.0) {
            if (harness::refined_model_outage(per_s, cfg) >= 0.1) break;
            const double rate = per_second_to_per_subframe(per_s);
            const auto picard = analytic::solve_total_rate(rate, cfg);
            const auto root = oracles::fixed_point_bisection(rate, cfg);
            all_converged = all_converged && picard.converged;
            slowest = std::max(slowest, picard.iterations);
            worst = std::max(worst, std::abs(picard.load.total - root.total_rate) / root.total_rate);
            ++points;
        }
        o.require(all_converged && slowest < 20,
                  fmt("delta=%d: %d points, all converged=%s, max iterations %d", rao_period, points,
                      all_converged ? "yes" : "no", slowest));
        o.require(worst <= 0.005, fmt("delta=%d: max relative gap to bisection %.3g", rao_period, worst));
    }
    return o;
}

// Sim crossing from a coarse sweep, then a 10/s grid inside the bracket.
std::optional<double> sim_crossing(harness::SweepSpec spec, double lo, double hi) {
    spec.engines = {harness::Engine::sim};
    auto crossing_on = [&](std::vector<double> grid) -> std::pair<std::optional<double>, double> {
        spec.grid_per_s = grid;
        const auto rows = harness::run_sweep(spec);
        std::vector<double> outage;
        for (const auto& r : rows) outage.push_back(r.find(harness::Engine::sim)->p_outage);
        const auto hit = harness::first_crossing(grid, outage, 0.1);
        double before = grid.front();
        if (hit) {
            for (double g : grid) {
                if (g < *hit) before = g;
            }
        }
        return {hit, before};
    };
    const auto [coarse, before] = crossing_on(harness::linear_grid(lo, hi, static_cast<int>((hi - lo) / 100) + 1));
    if (!coarse || *coarse == lo) return coarse;
    return crossing_on(harness::linear_grid(before, *coarse, static_cast<int>((*coarse - before) / 10) + 1)).first;
}

Outcome breaking_points() {
    Outcome o;
    std::optional<double> model_star[2];
    std::optional<double> sim_star[2];
    const int periods[2] = {5, 1};
    const double targets[2] = {2250.0, 2800.0};
    for (int c = 0; c < 2; ++c) {
        harness::SweepSpec spec;
        spec.system = table_config(periods[c], 9);
        spec.engines = {harness::Engine::model};
        spec.reps = 5;
        spec.duration_s = 60.0;
        spec.seed = kSeed;
        spec.grid_per_s = harness::linear_grid(1000.0, 4000.0, 31);
        const auto report = harness::breaking_points(spec, harness::run_sweep(spec), 0.1);
        model_star[c] = report.find(harness::Engine::model)->lambda_star_per_s;
        sim_star[c] = sim_crossing(spec, 1000.0, 4000.0);

        for (auto [name, star] : {std::pair{"model", model_star[c]}, std::pair{"sim", sim_star[c]}}) {
            const bool ok = star && std::abs(*star - targets[c]) <= 0.1 * targets[c];
            o.require(ok, star ? fmt("delta=%d %s breaking point %.1f/s (target %.0f +/- 10%%)", periods[c], name,
                                     *star, targets[c])
                               : fmt("delta=%d %s: no crossing in grid", periods[c], name));
        }
    }
    for (auto [name, a, b] : {std::tuple{"model", model_star[1], model_star[0]},
                              std::tuple{"sim", sim_star[1], sim_star[0]}}) {
        if (a && b) {
            const double ratio = *a / *b;
            o.require(std::abs(ratio - 1.25) <= 0.10, fmt("%s capacity ratio delta=1 : delta=5 = %.3f", name, ratio));
        } else {
            o.require(false, fmt("%s capacity ratio undefined", name));
        }
    }
    return o;
}

Outcome grant_queue_bend() {
    Outcome o;
    const SystemConfig cfg = table_config(1, 0);
    auto rho_at = [&](double per_s) { return analytic::solve_total_rate(per_second_to_per_subframe(per_s), cfg).queue_load; };
    double lo = 0.0;
    double hi = 10000.0;
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        (rho_at(mid) >= 0.9 ? hi : lo) = mid;
    }
    o.require(hi >= 2600.0 && hi <= 2900.0, fmt("rho reaches 0.9 at %.1f/s (want [2600, 2900])", hi));

    const double rate = per_second_to_per_subframe(3000.0);
    const auto full = analytic::solve_total_rate(rate, cfg);
    const auto base = analytic::baseline_collision_only(rate, cfg);
    o.require(base.p_outage * 2.0 <= full.p_outage,
              fmt("at 3000/s baseline outage %.4g vs full %.4g (ratio %.3f, want >= 2)", base.p_outage, full.p_outage,
                  full.p_outage / base.p_outage));
    return o;
}

Outcome low_load_agreement() {
    Outcome o;
    for (int rao_period : {1, 5}) {
        sim::SimConfig sc;
        sc.system = table_config(rao_period, 0);
        sc.duration = 60'000;
        sc.seed = kSeed + static_cast<std::uint64_t>(rao_period);
        for (double per_s : {100.0, 200.0, 300.0, 400.0, 500.0}) {
            const double rate = per_second_to_per_subframe(per_s);
            const auto model = analytic::solve_total_rate(rate, sc.system);
            const auto reps = sim::run_replications(sc, rate, 5);
            o.require(reps.outage.ci_low <= model.p_failure,
                      fmt("delta=%d %g/s: sim outage %.4g [%.4g, %.4g] vs model p_f %.4g", rao_period, per_s,
                          reps.outage.mean, reps.outage.ci_low, reps.outage.ci_high, model.p_failure));
        }
    }
    return o;
}

Outcome simulator_invariants() {
    Outcome o;
    bool cap_ok = true;
    bool conservation_ok = true;
    int runs = 0;
    for (int rao_period : {1, 5}) {
        for (double per_s : {500.0, 2000.0, 2500.0, 3500.0}) {
            sim::SimConfig sc;
            sc.system = table_config(rao_period, 9);
            sc.duration = 20'000;
            sc.seed = kSeed + runs;
            const auto s = sim::run(sc, per_second_to_per_subframe(per_s));
            cap_ok = cap_ok && s.max_grants_in_subframe <= sc.system.grants_per_subframe;
            conservation_ok = conservation_ok && s.arrivals == s.connects + s.drops + s.in_flight;
            ++runs;
        }
    }
    o.require(cap_ok, fmt("grant cap respected in %d runs", runs));
    o.require(conservation_ok, fmt("arrivals = connects + drops + in flight in %d runs", runs));

    {
        // no collisions and no grant contention: nothing can fail
        sim::SimConfig sc;
        sc.system = table_config(5, 9);
        sc.system.preambles = 1'000'000;
        sc.system.grants_per_subframe = 1000;
        sc.seed = kSeed;
        const auto s = sim::run(sc, per_second_to_per_subframe(3000.0));
        o.require(s.drops == 0 && s.failures.msg3_collisions == 0,
                  fmt("huge d, huge mu: drops %llu, MSG3 collisions %llu", static_cast<unsigned long long>(s.drops),
                      static_cast<unsigned long long>(s.failures.msg3_collisions)));
    }

    for (double rho : {0.9, 0.95}) {
        sim::SimConfig sc;
        sc.system = table_config(1, 0);
        sc.system.preambles = 1'000'000;
        sc.seed = kSeed;
        const double rate = rho * sc.system.grants_per_subframe;
        const auto reps = sim::run_replications(sc, rate, 5);
        const double closed = analytic::grant_drop_probability(reps.lambda_a.mean, sc.system);
        const double rel = std::abs(reps.p_grant_drop.mean - closed) / closed;
        o.require(rel <= 0.05, fmt("huge d, rho=%.2f: sim grant loss %.4g vs closed form %.4g at observed load (rel %.3f)",
                                   rho, reps.p_grant_drop.mean, closed, rel));
    }
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {1, "chain closed form matches linear solve", chain_equivalence},
        {2, "grant drop formula vs impatient queue", queue_formula},
        {3, "collision bound direction and activations", collision_bound},
        {4, "fixed point convergence and agreement", fixed_point},
        {5, "breaking points and capacity ratio", breaking_points},
        {6, "grant queue bend without retransmissions", grant_queue_bend},
        {7, "low-load model vs simulation", low_load_agreement},
        {8, "simulator structural invariants", simulator_invariants},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const Outcome o = c.run();
        std::printf("[%s] criterion %d: %s\n", o.passed ? "PASS" : "FAIL", c.id, c.title);
        for (const auto& note : o.notes) std::printf("       %s\n", note.c_str());
        std::fflush(stdout);
        if (!o.passed) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
