#pragma once

#include <cstdint>

namespace ltear {

/// Subframe length. Every rate inside the library is expressed per subframe.
inline constexpr double kSubframesPerSecond = 1000.0;

inline constexpr double per_second_to_per_subframe(double rate_per_s) {
    return rate_per_s / kSubframesPerSecond;
}

inline constexpr double per_subframe_to_per_second(double rate_per_subframe) {
    return rate_per_subframe * kSubframesPerSecond;
}

/// Protocol and model parameters of one LTE cell's random access channel.
///
/// Durations are integer subframes (1 subframe = 1 ms). The defaults are the
/// typical LTE configuration: 54 contention preambles, an access opportunity
/// every 5 subframes, up to 9 retransmissions and 3 uplink grants per subframe.
struct SystemConfig {
    int preambles = 54;             ///< contention preambles per access opportunity
    int rao_period = 5;             ///< subframes between access opportunities, 1..20
    int max_retransmissions = 9;    ///< m; a packet gets at most m+1 preamble transmissions
    int grants_per_subframe = 3;    ///< uplink grants (RAR messages) served per subframe
    int backoff_window = 20;        ///< upper limit of the uniform integer backoff, ms
    int rar_window = 5;             ///< RAR window, subframes
    int contention_timeout = 48;    ///< contention resolution timer started at MSG1, ms
    int enb_processing = 3;         ///< eNodeB processing delay, ms
    int ue_processing = 3;          ///< UE processing delay, ms

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;

    int max_transmissions() const { return max_retransmissions + 1; }

    /// Maximum wait in the grant queue expressed in requests: mu * t_rar.
    double grant_queue_deadline() const {
        return static_cast<double>(grants_per_subframe) * rar_window;
    }

    /// Effective impatience used by the grant-drop formula: deadline - 1/mu.
    double grant_queue_patience() const {
        return grant_queue_deadline() - 1.0 / grants_per_subframe;
    }

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

}  // namespace ltear
