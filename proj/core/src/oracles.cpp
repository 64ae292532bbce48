#include "ltear/oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace ltear::oracles {

analytic::ChainSolution chain_linear_solve(double p_failure, double p_on, int max_retransmissions,
                                           int backoff_window) {
    if (!(p_failure >= 0.0 && p_failure < 1.0)) throw std::invalid_argument("p_failure must be in [0, 1)");
    if (!(p_on > 0.0 && p_on <= 1.0)) throw std::invalid_argument("p_on must be in (0, 1]");
    if (max_retransmissions < 0 || backoff_window < 1) throw std::invalid_argument("need m >= 0, W_c >= 1");

    const int m = max_retransmissions;
    const int w = backoff_window;
    constexpr int off = 0;
    constexpr int connect = 1;
    constexpr int drop = 2;
    constexpr int first_attempt = 3;
    auto stage_state = [&](int i, int k) { return i == 0 ? first_attempt : 4 + (i - 1) * w + k; };
    const int n = 4 + m * w;

    // P(from, to)
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    p(off, first_attempt) = p_on;
    p(off, off) = 1.0 - p_on;
    p(connect, off) = 1.0;
    p(drop, off) = 1.0;
    for (int i = 0; i <= m; ++i) {
        const int head = stage_state(i, 0);
        p(head, connect) += 1.0 - p_failure;
        if (i < m) {
            for (int k = 0; k < w; ++k) p(head, stage_state(i + 1, k)) += p_failure / w;
        } else {
            p(head, drop) += p_failure;
        }
        if (i > 0) {
            for (int k = 1; k < w; ++k) p(stage_state(i, k), stage_state(i, k - 1)) = 1.0;
        }
    }

    // pi (P - I) = 0 with one balance equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw std::runtime_error("chain_linear_solve: singular stationary system");
    const Eigen::VectorXd pi = lu.solve(rhs);

    analytic::ChainSolution s;
    s.p_on = p_on;
    s.max_retransmissions = m;
    s.backoff_window = w;
    s.b_off = pi(off);
    s.b_connect = pi(connect);
    s.b_drop = pi(drop);
    s.backoff.assign(static_cast<std::size_t>(m + 1) * static_cast<std::size_t>(w), 0.0);
    s.at(0, 0) = pi(first_attempt);
    for (int i = 1; i <= m; ++i) {
        for (int k = 0; k < w; ++k) s.at(i, k) = pi(stage_state(i, k));
    }
    return s;
}

namespace {

struct RunningMoments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
};

class ServiceSampler {
public:
    ServiceSampler(ServiceKind kind, double rate) : kind_(kind), rate_(rate), exp_(rate) {}

    template <class Rng>
    double operator()(Rng& rng) {
        return kind_ == ServiceKind::deterministic ? 1.0 / rate_ : exp_(rng);
    }

private:
    ServiceKind kind_;
    double rate_;
    std::exponential_distribution<double> exp_;
};

QueueLoss crude_loss(double lambda, double mu, double patience, const QueueOracleOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    std::exponential_distribution<double> gap(lambda);
    ServiceSampler service(opt.service, mu);

    const std::uint64_t warmup = opt.customers / 10;
    const std::uint64_t total = opt.customers + warmup;
    constexpr std::uint64_t kBatches = 50;
    const std::uint64_t batch_size = std::max<std::uint64_t>(1, opt.customers / kBatches);

    // V is the work in system just before the next arrival, i.e. its wait.
    double work = 0.0;
    std::uint64_t lost = 0;
    std::uint64_t batch_lost = 0;
    std::uint64_t batch_seen = 0;
    RunningMoments batches;
    for (std::uint64_t c = 0; c < total; ++c) {
        work = std::max(0.0, work - gap(rng));
        const bool abandon = work > patience;
        if (!abandon) work += service(rng);
        if (c < warmup) continue;
        if (abandon) {
            ++lost;
            ++batch_lost;
        }
        if (++batch_seen == batch_size) {
            batches.add(static_cast<double>(batch_lost) / static_cast<double>(batch_size));
            batch_lost = 0;
            batch_seen = 0;
        }
    }

    QueueLoss out;
    out.customers = total;
    out.lost = lost;
    out.loss = static_cast<double>(lost) / static_cast<double>(opt.customers);
    out.std_error = batches.n > 1.0 ? std::sqrt(batches.variance() / batches.n) : 0.0;
    return out;
}

// Positive root of lambda * (M(theta) - 1) = theta, M the service MGF.
double tilt_parameter(double lambda, double mu, ServiceKind kind) {
    if (kind == ServiceKind::exponential) return mu - lambda;
    const double d = 1.0 / mu;
    auto h = [&](double t) { return lambda * std::expm1(t * d) - t; };
    double lo = 0.0;
    double hi = mu;
    while (h(hi) <= 0.0) hi *= 2.0;
    lo = hi / 2.0;
    while (h(lo) > 0.0 && lo > 1e-300) lo /= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

QueueLoss importance_sampled_loss(double lambda, double mu, double patience, const QueueOracleOptions& opt) {
    const double theta = tilt_parameter(lambda, mu, opt.service);
    const double d = 1.0 / mu;
    const double log_mgf =
        opt.service == ServiceKind::exponential ? std::log(mu / (mu - theta)) : theta * d;
    const double tilted_lambda = lambda * std::exp(log_mgf);
    const double tilted_mu = mu - theta;  // exponential service only

    std::mt19937_64 rng(opt.seed);
    std::exponential_distribution<double> gap(lambda);
    std::exponential_distribution<double> tilted_gap(tilted_lambda);
    ServiceSampler service(opt.service, mu);
    ServiceSampler tilted_service(opt.service, opt.service == ServiceKind::exponential ? tilted_mu : mu);

    QueueLoss out;

    // Numerator: expected losses per regeneration cycle, tilted until the first loss.
    RunningMoments losses;
    std::uint64_t simulated = 0;
    while (simulated < opt.customers) {
        double log_lr = 0.0;
        bool tilted = true;
        std::uint64_t lost = 0;

        auto draw_service = [&] {
            if (!tilted) return service(rng);
            const double x = tilted_service(rng);
            log_lr += log_mgf - theta * x;
            return x;
        };

        double work = draw_service();
        ++simulated;
        for (;;) {
            double a;
            if (tilted) {
                a = tilted_gap(rng);
                log_lr += std::log(lambda / tilted_lambda) - (lambda - tilted_lambda) * a;
            } else {
                a = gap(rng);
            }
            work -= a;
            if (work <= 0.0) break;  // the next arrival opens a new cycle
            ++simulated;
            if (work > patience) {
                ++lost;
                tilted = false;
            } else {
                work += draw_service();
            }
        }
        losses.add(lost > 0 ? std::exp(log_lr) * static_cast<double>(lost) : 0.0);
    }

    // Denominator: expected arrivals per cycle under the original measure.
    RunningMoments arrivals;
    std::uint64_t plain = 0;
    while (plain < opt.customers) {
        double work = service(rng);
        std::uint64_t count = 1;
        for (;;) {
            work -= gap(rng);
            if (work <= 0.0) break;
            ++count;
            if (work <= patience) work += service(rng);
        }
        plain += count;
        arrivals.add(static_cast<double>(count));
    }

    out.customers = simulated + plain;
    out.loss = losses.mean / arrivals.mean;
    const double rel_num = losses.mean > 0.0 ? losses.variance() / (losses.n * losses.mean * losses.mean) : 0.0;
    const double rel_den = arrivals.variance() / (arrivals.n * arrivals.mean * arrivals.mean);
    out.std_error = out.loss * std::sqrt(rel_num + rel_den);
    return out;
}

}  // namespace

QueueLoss impatient_queue(double arrival_rate, double service_rate, double patience,
                          const QueueOracleOptions& options) {
    if (!(arrival_rate >= 0.0) || !(service_rate > 0.0) || !(patience >= 0.0)) {
        throw std::invalid_argument("impatient_queue needs arrival_rate >= 0, service_rate > 0, patience >= 0");
    }
    if (options.customers == 0) throw std::invalid_argument("impatient_queue needs customers > 0");
    if (arrival_rate == 0.0) return QueueLoss{};

    const bool tiltable = arrival_rate < service_rate;
    auto once = [&](const QueueOracleOptions& o) {
        if (o.estimator == LossEstimator::importance_sampling && tiltable) {
            return importance_sampled_loss(arrival_rate, service_rate, patience, o);
        }
        return crude_loss(arrival_rate, service_rate, patience, o);
    };
    QueueLoss r = once(options);
    if (options.target_relative_error <= 0.0) return r;

    // grow the sample in one step from the pilot's variance, then keep the larger run
    QueueOracleOptions more = options;
    std::uint64_t spent = r.customers;
    while (more.customers < options.max_customers &&
           !(r.loss > 0.0 && r.std_error <= options.target_relative_error * r.loss)) {
        double scale = 4.0;
        if (r.loss > 0.0 && r.std_error > 0.0) {
            const double ratio = r.std_error / (options.target_relative_error * r.loss);
            scale = std::max(2.0, 1.1 * ratio * ratio);
        }
        more.customers = static_cast<std::uint64_t>(
            std::min(static_cast<double>(options.max_customers), scale * static_cast<double>(more.customers)));
        more.seed += 0x9E3779B97F4A7C15ULL;
        r = once(more);
        spent += r.customers;
    }
    r.customers = spent;
    return r;
}

QueueLoss impatient_queue_sim(double activation_rate, int grants_per_subframe, int rar_window,
                              const QueueOracleOptions& options) {
    if (grants_per_subframe < 1 || rar_window < 1) {
        throw std::invalid_argument("impatient_queue_sim needs grants_per_subframe >= 1 and rar_window >= 1");
    }
    const double mu = grants_per_subframe;
    const double patience = mu * rar_window - 1.0 / mu;
    return impatient_queue(activation_rate, mu, patience, options);
}

PreambleEstimate preamble_monte_carlo(double contenders_per_rao, int preambles, std::uint64_t trials,
                                      std::uint64_t seed) {
    if (!(contenders_per_rao >= 0.0) || preambles < 1 || trials == 0) {
        throw std::invalid_argument("preamble_monte_carlo needs rate >= 0, preambles >= 1, trials > 0");
    }
    PreambleEstimate est;
    est.trials = trials;
    if (contenders_per_rao == 0.0) return est;

    std::mt19937_64 rng(seed);
    std::poisson_distribution<int> contenders(contenders_per_rao);
    std::uniform_int_distribution<int> pick(0, preambles - 1);

    std::vector<int> chosen;
    std::vector<int> sorted;
    std::uint64_t tagged_collisions = 0;
    std::uint64_t devices = 0;
    std::uint64_t collided_devices = 0;
    RunningMoments activations;

    for (std::uint64_t t = 0; t < trials; ++t) {
        const int n = contenders(rng);
        chosen.resize(static_cast<std::size_t>(n));
        for (int& c : chosen) c = pick(rng);

        sorted = chosen;
        std::sort(sorted.begin(), sorted.end());
        int distinct = 0;
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i + 1;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            ++distinct;
            if (j - i > 1) collided_devices += j - i;
            i = j;
        }
        activations.add(distinct);
        devices += static_cast<std::uint64_t>(n);

        if (n > 0) {
            ++est.nonempty_trials;
            const int tagged = chosen.front();
            if (std::count(chosen.begin(), chosen.end(), tagged) > 1) ++tagged_collisions;
        }
    }

    if (est.nonempty_trials > 0) {
        const double k = static_cast<double>(est.nonempty_trials);
        est.collision = static_cast<double>(tagged_collisions) / k;
        est.collision_se = std::sqrt(est.collision * (1.0 - est.collision) / k);
    }
    if (devices > 0) est.collision_per_device = static_cast<double>(collided_devices) / static_cast<double>(devices);
    est.mean_activations = activations.mean;
    est.activations_se = std::sqrt(activations.variance() / activations.n);
    return est;
}

BisectionResult fixed_point_bisection(double new_arrival_rate, const SystemConfig& cfg,
                                      const FailureFunction& failure, double tolerance, int scan_points) {
    if (!(new_arrival_rate >= 0.0)) throw std::invalid_argument("new_arrival_rate must be >= 0");
    if (!(tolerance > 0.0) || scan_points < 1) throw std::invalid_argument("bad bisection settings");
    cfg.validate();
    if (new_arrival_rate == 0.0) return {};

    const int m = cfg.max_retransmissions;
    // Explicit transmission count: sum over attempts reached.
    auto g = [&](double x) {
        const double p = failure(x, cfg);
        double reach = 1.0;
        double attempts = 0.0;
        for (int k = 0; k <= m; ++k) {
            attempts += reach;
            reach *= p;
        }
        return x - new_arrival_rate * attempts;
    };

    double lo = new_arrival_rate;
    const double top = (m + 1) * new_arrival_rate;
    if (g(lo) >= 0.0) return {lo, 0};

    double hi = lo;
    bool bracketed = false;
    for (int j = 1; j <= scan_points; ++j) {
        const double x = new_arrival_rate + (top - new_arrival_rate) * j / scan_points;
        if (g(x) >= 0.0) {
            hi = x;
            bracketed = true;
            break;
        }
        lo = x;
    }
    if (!bracketed) throw std::runtime_error("fixed_point_bisection: no sign change on [lambda_i, (m+1) lambda_i]");

    BisectionResult r;
    while (hi - lo > tolerance && r.iterations < 400) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) >= 0.0 ? hi : lo) = mid;
        ++r.iterations;
    }
    r.total_rate = 0.5 * (lo + hi);
    return r;
}

BisectionResult fixed_point_bisection(double new_arrival_rate, const SystemConfig& cfg) {
    return fixed_point_bisection(new_arrival_rate, cfg, analytic::one_shot_failure);
}

}  // namespace ltear::oracles
