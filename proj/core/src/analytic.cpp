#include "ltear/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ltear::analytic {

namespace {

void require_rate(double rate, const char* name) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument(std::string(name) + " must be a finite non-negative rate");
    }
}

void require_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    }
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

double collision_probability(double total_rate, const SystemConfig& cfg) {
    require_rate(total_rate, "total_rate");
    if (cfg.preambles < 1) throw std::invalid_argument("preambles must be >= 1");

    const double exponent = total_rate * cfg.rao_period - 1.0;
    if (cfg.preambles == 1) {
        // (1 - 1/d) is exactly zero: any second contender collides.
        return exponent > 0.0 ? 1.0 : 0.0;
    }
    const double log_miss = std::log1p(-1.0 / cfg.preambles);
    return clamp01(-std::expm1(exponent * log_miss));
}

double activated_preamble_rate(double total_rate, const SystemConfig& cfg) {
    require_rate(total_rate, "total_rate");
    if (cfg.preambles < 1 || cfg.rao_period < 1) {
        throw std::invalid_argument("preambles and rao_period must be >= 1");
    }
    const double d = cfg.preambles;
    const double per_rao = d * -std::expm1(-total_rate * cfg.rao_period / d);
    return per_rao / cfg.rao_period;
}

double grant_drop_probability(double activation_rate, const SystemConfig& cfg) {
    require_rate(activation_rate, "activation_rate");
    if (cfg.grants_per_subframe < 1) throw std::invalid_argument("grants_per_subframe must be >= 1");
    const double tau = cfg.grant_queue_patience();
    if (!(tau > 0.0)) {
        throw std::invalid_argument("grant queue needs mu * t_rar > 1/mu");
    }
    if (activation_rate == 0.0) return 0.0;

    const double mu = cfg.grants_per_subframe;
    const double rho = activation_rate / mu;
    const double slack = 1.0 - rho;
    const double a = mu * tau;

    if (std::abs(slack) < kRhoLimitBand) return 1.0 / (2.0 + a);

    if (rho < 1.0) {
        // Omega <= 1 here; 1 - rho^2 Omega = -expm1(2 ln rho - a (1 - rho)).
        const double omega = std::exp(-a * slack);
        const double denom = -std::expm1(2.0 * std::log(rho) - a * slack);
        return clamp01(slack * rho * omega / denom);
    }
    // Overloaded: divide through by Omega, which would overflow.
    // 1/Omega - rho^2 = expm1(a (1 - rho)) + (1 - rho)(1 + rho).
    const double denom = std::expm1(a * slack) + slack * (1.0 + rho);
    return clamp01(slack * rho / denom);
}

double combine_failures(double p_collision, double p_grant_drop) {
    require_probability(p_collision, "p_collision");
    require_probability(p_grant_drop, "p_grant_drop");
    return clamp01(1.0 - (1.0 - p_collision) * (1.0 - p_grant_drop));
}

OneShotFailure one_shot(double total_rate, const SystemConfig& cfg) {
    OneShotFailure out;
    out.p_collision = collision_probability(total_rate, cfg);
    out.activation_rate = activated_preamble_rate(total_rate, cfg);
    out.queue_load = out.activation_rate / cfg.grants_per_subframe;
    out.p_grant_drop = grant_drop_probability(out.activation_rate, cfg);
    out.p_failure = combine_failures(out.p_collision, out.p_grant_drop);
    return out;
}

double one_shot_failure(double total_rate, const SystemConfig& cfg) {
    return one_shot(total_rate, cfg).p_failure;
}

double expected_transmissions(double p_failure, int max_retransmissions) {
    require_probability(p_failure, "p_failure");
    if (max_retransmissions < 0) throw std::invalid_argument("max_retransmissions must be >= 0");
    const double attempts = max_retransmissions + 1.0;
    if (p_failure == 0.0) return 1.0;
    if (p_failure == 1.0) return attempts;
    const double n = -std::expm1(attempts * std::log(p_failure)) / (1.0 - p_failure);
    return std::clamp(n, 1.0, attempts);
}

double outage_probability(double p_failure, int max_retransmissions) {
    require_probability(p_failure, "p_failure");
    if (max_retransmissions < 0) throw std::invalid_argument("max_retransmissions must be >= 0");
    return std::pow(p_failure, max_retransmissions + 1);
}

double ChainSolution::total() const {
    double sum = b_off + b_connect + b_drop;
    for (double b : backoff) sum += b;
    return sum;
}

double ChainSolution::outage() const {
    const double ended = b_drop + b_connect;
    return ended > 0.0 ? b_drop / ended : 0.0;
}

double ChainSolution::transmissions() const {
    const double first = at(0, 0);
    if (first <= 0.0) return 1.0;
    double sum = 0.0;
    for (int i = 0; i <= max_retransmissions; ++i) sum += at(i, 0);
    return sum / first;
}

ChainSolution chain_steady_state(double p_failure, double p_on, int max_retransmissions,
                                 int backoff_window) {
    if (!(p_failure >= 0.0 && p_failure < 1.0)) {
        throw std::invalid_argument("chain_steady_state requires p_failure in [0, 1)");
    }
    if (!(p_on > 0.0 && p_on <= 1.0)) {
        throw std::invalid_argument("chain_steady_state requires p_on in (0, 1]");
    }
    if (max_retransmissions < 0 || backoff_window < 1) {
        throw std::invalid_argument("chain_steady_state requires m >= 0 and W_c >= 1");
    }

    const double pf = p_failure;
    const int m = max_retransmissions;
    const double w = backoff_window;
    const double pf_m = std::pow(pf, m);
    const double pf_m1 = pf_m * pf;

    const double denom = 2.0 * (1.0 - pf) * (1.0 + 2.0 * p_on) + p_on * (w + 1.0) * pf * (1.0 - pf_m);

    ChainSolution s;
    s.p_on = p_on;
    s.max_retransmissions = m;
    s.backoff_window = backoff_window;
    s.b_off = 2.0 * (1.0 - pf) / denom;
    s.b_connect = 2.0 * (1.0 - pf) * (1.0 - pf_m1) * p_on / denom;
    s.b_drop = 2.0 * (1.0 - pf) * pf_m1 * p_on / denom;
    s.backoff.assign(static_cast<std::size_t>(m + 1) * static_cast<std::size_t>(backoff_window), 0.0);

    const double first = p_on * s.b_off;
    s.at(0, 0) = first;
    double stage = first;
    for (int i = 1; i <= m; ++i) {
        stage *= pf;
        for (int k = 0; k < backoff_window; ++k) {
            s.at(i, k) = (w - k) / w * stage;
        }
    }
    return s;
}

double activation_probability(double new_arrival_rate) {
    require_rate(new_arrival_rate, "new_arrival_rate");
    return -std::expm1(-new_arrival_rate);
}

namespace {

enum class Failures { collisions_and_grant_drops, collisions_only };

OneShotFailure failure_at(double total_rate, const SystemConfig& cfg, Failures mode) {
    OneShotFailure f = one_shot(total_rate, cfg);
    if (mode == Failures::collisions_only) {
        f.p_grant_drop = 0.0;
        f.p_failure = f.p_collision;
    }
    return f;
}

ModelResult solve(double new_rate, const SystemConfig& cfg, const SolverOptions& opt, Failures mode) {
    require_rate(new_rate, "new_arrival_rate");
    cfg.validate();
    if (!(opt.tolerance > 0.0) || opt.max_iterations < 1) {
        throw std::invalid_argument("solver needs tolerance > 0 and max_iterations >= 1");
    }
    const int m = cfg.max_retransmissions;

    ModelResult r;
    r.load.new_arrivals = new_rate;
    if (new_rate == 0.0) {
        r.iterations = 1;
        r.converged = true;
        return r;
    }

    double total = new_rate;
    double previous_step = 0.0;
    bool damped = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double pf = failure_at(total, cfg, mode).p_failure;
        double next = new_rate * expected_transmissions(pf, m);
        if (damped) next = opt.damping * next + (1.0 - opt.damping) * total;
        const double step = next - total;
        if (previous_step * step < 0.0) damped = true;
        previous_step = step;
        const double change = std::abs(step) / total;
        total = next;
        r.iterations = it;
        if (change < opt.tolerance) {
            r.converged = true;
            break;
        }
    }

    const OneShotFailure f = failure_at(total, cfg, mode);
    r.load.total = total;
    r.load.activated = f.activation_rate;
    r.load.retransmissions = total - new_rate;
    r.p_collision = f.p_collision;
    r.p_grant_drop = f.p_grant_drop;
    r.p_failure = f.p_failure;
    r.queue_load = f.queue_load;

    const double p_on = opt.p_on.value_or(activation_probability(new_rate));
    if (f.p_failure < 1.0 && p_on > 0.0 && p_on <= 1.0) {
        const ChainSolution chain = chain_steady_state(f.p_failure, p_on, cfg);
        r.p_outage = chain.outage();
        r.n_tx = chain.transmissions();
    } else {
        r.p_outage = outage_probability(f.p_failure, m);
        r.n_tx = expected_transmissions(f.p_failure, m);
    }
    r.residual = std::abs(total - r.n_tx * new_rate) / total;
    return r;
}

}  // namespace

ModelResult solve_total_rate(double new_arrival_rate, const SystemConfig& cfg, const SolverOptions& options) {
    return solve(new_arrival_rate, cfg, options, Failures::collisions_and_grant_drops);
}

ModelResult baseline_collision_only(double new_arrival_rate, const SystemConfig& cfg,
                                    const SolverOptions& options) {
    return solve(new_arrival_rate, cfg, options, Failures::collisions_only);
}

}  // namespace ltear::analytic
