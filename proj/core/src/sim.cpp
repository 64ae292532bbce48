#include "ltear/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <utility>

#include "ltear/parallel.hpp"

namespace ltear::sim {

void SimConfig::validate() const {
    system.validate();
    if (duration <= 0) throw std::invalid_argument("invalid SimConfig: duration must be > 0");
    const std::int64_t w = effective_warmup();
    if (w < 0 || w >= duration) {
        throw std::invalid_argument("invalid SimConfig: need duration > warmup >= 0");
    }
}

namespace {

// Message order of one attempt:
// awaiting_rao -> msg1_sent -> awaiting_rar -> msg3_sent -> awaiting_msg4 -> connected,
// with awaiting_rar / awaiting_msg4 falling back to backoff (or dropped on the last attempt).
enum class UeState : std::uint8_t {
    backoff,
    awaiting_rao,
    msg1_sent,
    awaiting_rar,
    msg3_sent,
    awaiting_msg4,
    connected,
    dropped,
};

bool legal_transition(UeState from, UeState to) {
    switch (from) {
        case UeState::backoff: return to == UeState::awaiting_rao;
        case UeState::awaiting_rao: return to == UeState::msg1_sent;
        case UeState::msg1_sent: return to == UeState::awaiting_rar;
        case UeState::awaiting_rar:
            return to == UeState::msg3_sent || to == UeState::backoff || to == UeState::dropped;
        case UeState::msg3_sent: return to == UeState::awaiting_msg4;
        case UeState::awaiting_msg4:
            return to == UeState::connected || to == UeState::backoff || to == UeState::dropped;
        case UeState::connected:
        case UeState::dropped: return false;
    }
    return false;
}

struct Ue {
    std::int64_t arrival = 0;
    std::int64_t msg1_time = 0;
    std::int64_t crt_deadline = 0;
    int transmissions = 0;  // MSG1s sent so far; attempt index i = transmissions - 1
    int group = 0;          // devices that picked the same preamble in the same RAO
    UeState state = UeState::awaiting_rao;
    bool counted = false;   // arrived after warmup
    bool alive = false;
};

enum class EventKind : std::uint8_t { backoff_done, msg3_tx, msg4_rx, crt_expiry };

struct Event {
    std::uint32_t ue;
    EventKind kind;
};

struct Grant {
    std::int64_t ready;   // first subframe it can be served
    std::int64_t expire;  // last subframe it can be served
    std::vector<std::uint32_t> ues;
};

class Simulator {
public:
    Simulator(const SimConfig& cfg, double rate)
        : cfg_(cfg.system),
          duration_(cfg.duration),
          warmup_(cfg.effective_warmup()),
          rng_(cfg.seed),
          arrivals_(rate > 0.0 ? rate : 1.0),
          rate_(rate),
          preamble_(0, cfg.system.preambles - 1),
          backoff_(0, cfg.system.backoff_window) {
        const int horizon = std::max({cfg_.contention_timeout, cfg_.backoff_window,
                                      cfg_.ue_processing + cfg_.enb_processing, cfg_.rar_window}) + 2;
        calendar_.resize(static_cast<std::size_t>(horizon));
    }

    SimStats run() {
        for (now_ = 0; now_ < duration_; ++now_) {
            expire_grants();
            drain_events();
            new_arrivals();
            if (now_ % cfg_.rao_period == 0) access_opportunity();
            serve_grants();
            drain_events();
        }
        return finish();
    }

private:
    bool in_window() const { return now_ >= warmup_; }

    std::vector<Event>& bucket(std::int64_t t) {
        return calendar_[static_cast<std::size_t>(t % static_cast<std::int64_t>(calendar_.size()))];
    }

    void schedule(std::int64_t t, std::uint32_t ue, EventKind kind) {
        bucket(std::max(t, now_)).push_back(Event{ue, kind});
    }

    void move(Ue& ue, UeState to) {
        if (!legal_transition(ue.state, to)) throw std::logic_error("illegal UE state transition");
        ue.state = to;
    }

    std::uint32_t allocate() {
        if (!free_.empty()) {
            const std::uint32_t id = free_.back();
            free_.pop_back();
            return id;
        }
        ues_.emplace_back();
        return static_cast<std::uint32_t>(ues_.size() - 1);
    }

    void release(std::uint32_t id) {
        ues_[id].alive = false;
        free_.push_back(id);
    }

    void new_arrivals() {
        if (rate_ <= 0.0) return;
        const int n = arrivals_(rng_);
        for (int j = 0; j < n; ++j) {
            const std::uint32_t id = allocate();
            Ue& ue = ues_[id];
            ue = Ue{};
            ue.arrival = now_;
            ue.counted = in_window();
            ue.alive = true;
            ue.state = UeState::awaiting_rao;
            if (ue.counted) ++stats_.arrivals;
            waiting_.push_back(id);
        }
    }

    void access_opportunity() {
        if (waiting_.empty()) return;
        picks_.clear();
        for (std::uint32_t id : waiting_) picks_.emplace_back(preamble_(rng_), id);
        waiting_.clear();
        std::sort(picks_.begin(), picks_.end());

        int activated = 0;
        for (std::size_t begin = 0; begin < picks_.size();) {
            std::size_t end = begin + 1;
            while (end < picks_.size() && picks_[end].first == picks_[begin].first) ++end;
            const int group = static_cast<int>(end - begin);

            Grant grant{now_ + cfg_.enb_processing, now_ + cfg_.enb_processing + cfg_.rar_window - 1, {}};
            grant.ues.reserve(static_cast<std::size_t>(group));
            for (std::size_t j = begin; j < end; ++j) {
                const std::uint32_t id = picks_[j].second;
                Ue& ue = ues_[id];
                move(ue, UeState::msg1_sent);
                ++ue.transmissions;
                ue.group = group;
                ue.msg1_time = now_;
                ue.crt_deadline = now_ + cfg_.contention_timeout;
                move(ue, UeState::awaiting_rar);
                grant.ues.push_back(id);
            }
            if (in_window()) {
                stats_.msg1_sent += static_cast<std::uint64_t>(group);
                if (group > 1) preamble_collisions_ += static_cast<std::uint64_t>(group);
            }
            grants_.push_back(std::move(grant));
            ++activated;
            begin = end;
        }
        stats_.max_activations_in_rao = std::max(stats_.max_activations_in_rao, activated);
        if (in_window()) stats_.preambles_activated += static_cast<std::uint64_t>(activated);
    }

    void expire_grants() {
        while (!grants_.empty() && grants_.front().expire < now_) {
            Grant grant = std::move(grants_.front());
            grants_.pop_front();
            if (in_window()) {
                ++stats_.grants_expired;
                stats_.failures.rar_expired += grant.ues.size();
            }
            for (std::uint32_t id : grant.ues) fail(id);
        }
    }

    void serve_grants() {
        int served = 0;
        while (served < cfg_.grants_per_subframe && !grants_.empty() && grants_.front().ready <= now_) {
            Grant grant = std::move(grants_.front());
            grants_.pop_front();
            ++served;
            if (in_window()) ++stats_.grants_served;
            for (std::uint32_t id : grant.ues) {
                move(ues_[id], UeState::msg3_sent);
                schedule(now_ + cfg_.ue_processing, id, EventKind::msg3_tx);
            }
        }
        stats_.max_grants_in_subframe = std::max(stats_.max_grants_in_subframe, served);
    }

    void drain_events() {
        std::vector<Event>& events = bucket(now_);
        for (std::size_t i = 0; i < events.size(); ++i) {
            const Event ev = events[i];
            handle(ev);
        }
        events.clear();
    }

    void handle(const Event& ev) {
        Ue& ue = ues_[ev.ue];
        switch (ev.kind) {
            case EventKind::backoff_done:
                move(ue, UeState::awaiting_rao);
                waiting_.push_back(ev.ue);
                break;
            case EventKind::msg3_tx:
                move(ue, UeState::awaiting_msg4);
                if (ue.group == 1) {
                    const std::int64_t msg4 = now_ + cfg_.enb_processing;
                    if (msg4 <= ue.crt_deadline) {
                        schedule(msg4, ev.ue, EventKind::msg4_rx);
                    } else {
                        schedule(ue.crt_deadline, ev.ue, EventKind::crt_expiry);
                    }
                } else {
                    if (in_window()) ++stats_.failures.msg3_collisions;
                    schedule(ue.crt_deadline, ev.ue, EventKind::crt_expiry);
                }
                break;
            case EventKind::msg4_rx:
                move(ue, UeState::connected);
                complete(ev.ue, true);
                break;
            case EventKind::crt_expiry:
                if (in_window()) ++stats_.failures.crt_expired;
                fail(ev.ue);
                break;
        }
    }

    void fail(std::uint32_t id) {
        Ue& ue = ues_[id];
        if (ue.transmissions < cfg_.max_transmissions()) {
            move(ue, UeState::backoff);
            const int wait = backoff_(rng_);
            if (wait == 0) {
                move(ue, UeState::awaiting_rao);
                waiting_.push_back(id);
            } else {
                schedule(now_ + wait, id, EventKind::backoff_done);
            }
        } else {
            move(ue, UeState::dropped);
            complete(id, false);
        }
    }

    void complete(std::uint32_t id, bool connected) {
        const Ue& ue = ues_[id];
        if (ue.counted) {
            if (connected) {
                ++stats_.connects;
            } else {
                ++stats_.drops;
            }
            tx_total_ += static_cast<std::uint64_t>(ue.transmissions);
        }
        release(id);
    }

    SimStats finish() {
        for (const Ue& ue : ues_) {
            if (ue.alive && ue.counted) ++stats_.in_flight;
        }
        const std::uint64_t done = stats_.connects + stats_.drops;
        stats_.outage_defined = done > 0;
        stats_.outage_fraction = done > 0 ? static_cast<double>(stats_.drops) / static_cast<double>(done) : 0.0;
        stats_.mean_tx = done > 0 ? static_cast<double>(tx_total_) / static_cast<double>(done) : 0.0;

        stats_.window = duration_ - warmup_;
        const double window = static_cast<double>(stats_.window);
        stats_.lambda_t = static_cast<double>(stats_.msg1_sent) / window;
        stats_.lambda_a = static_cast<double>(stats_.preambles_activated) / window;
        if (stats_.msg1_sent > 0) {
            const double sent = static_cast<double>(stats_.msg1_sent);
            stats_.p_collision = static_cast<double>(preamble_collisions_) / sent;
            stats_.p_grant_drop = static_cast<double>(stats_.failures.rar_expired) / sent;
        }
        const std::uint64_t grants = stats_.grants_served + stats_.grants_expired;
        if (grants > 0) {
            stats_.grant_loss_fraction = static_cast<double>(stats_.grants_expired) / static_cast<double>(grants);
        }
        return stats_;
    }

    SystemConfig cfg_;
    std::int64_t duration_;
    std::int64_t warmup_;
    std::int64_t now_ = 0;

    std::mt19937_64 rng_;
    std::poisson_distribution<int> arrivals_;
    double rate_;
    std::uniform_int_distribution<int> preamble_;
    std::uniform_int_distribution<int> backoff_;

    std::vector<Ue> ues_;
    std::vector<std::uint32_t> free_;
    std::vector<std::uint32_t> waiting_;
    std::vector<std::pair<int, std::uint32_t>> picks_;
    std::deque<Grant> grants_;
    std::vector<std::vector<Event>> calendar_;

    SimStats stats_;
    std::uint64_t tx_total_ = 0;
    std::uint64_t preamble_collisions_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

SimStats run(const SimConfig& cfg, double new_arrival_rate) {
    cfg.validate();
    if (!(new_arrival_rate >= 0.0) || !std::isfinite(new_arrival_rate)) {
        throw std::invalid_argument("new_arrival_rate must be a finite non-negative rate");
    }
    Simulator sim(cfg, new_arrival_rate);
    return sim.run();
}

Estimate summarize(const std::vector<double>& samples) {
    Estimate e;
    e.samples = samples.size();
    if (samples.empty()) return e;
    double sum = 0.0;
    for (double x : samples) sum += x;
    e.mean = sum / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double x : samples) ss += (x - e.mean) * (x - e.mean);
        e.stddev = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    }
    const double half = 1.959963984540054 * e.stddev / std::sqrt(static_cast<double>(samples.size()));
    e.ci_low = e.mean - half;
    e.ci_high = e.mean + half;
    return e;
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t index) {
    return splitmix64(base_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1));
}

Replications run_replications(const SimConfig& cfg, double new_arrival_rate, std::size_t n_reps,
                              std::size_t threads) {
    if (n_reps < 2) throw std::invalid_argument("run_replications needs n_reps >= 2");
    cfg.validate();

    Replications out;
    out.runs.resize(n_reps);
    out.seeds.resize(n_reps);
    for (std::size_t r = 0; r < n_reps; ++r) out.seeds[r] = replication_seed(cfg.seed, r);

    parallel_for(n_reps, threads, [&](std::size_t r) {
        SimConfig rep = cfg;
        rep.seed = out.seeds[r];
        out.runs[r] = run(rep, new_arrival_rate);
    });

    auto collect = [&](auto metric) {
        std::vector<double> xs;
        xs.reserve(n_reps);
        for (const SimStats& s : out.runs) xs.push_back(metric(s));
        return summarize(xs);
    };
    out.outage = collect([](const SimStats& s) { return s.outage_fraction; });
    out.mean_tx = collect([](const SimStats& s) { return s.mean_tx; });
    out.p_collision = collect([](const SimStats& s) { return s.p_collision; });
    out.p_grant_drop = collect([](const SimStats& s) { return s.grant_loss_fraction; });
    out.lambda_t = collect([](const SimStats& s) { return s.lambda_t; });
    out.lambda_a = collect([](const SimStats& s) { return s.lambda_a; });
    return out;
}

}  // namespace ltear::sim
