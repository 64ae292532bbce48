#include "ltear/config.hpp"

#include <stdexcept>
#include <string>

namespace ltear {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("invalid SystemConfig: " + what);
}

}  // namespace

void SystemConfig::validate() const {
    require(preambles >= 1, "preambles must be >= 1");
    require(rao_period >= 1 && rao_period <= 20, "rao_period must be in [1, 20]");
    require(max_retransmissions >= 0, "max_retransmissions must be >= 0");
    require(grants_per_subframe >= 1, "grants_per_subframe must be >= 1");
    require(backoff_window >= 1, "backoff_window must be >= 1");
    require(rar_window >= 1, "rar_window must be >= 1");
    require(contention_timeout > rar_window, "contention_timeout must exceed rar_window");
    require(enb_processing >= 0, "enb_processing must be >= 0");
    require(ue_processing >= 0, "ue_processing must be >= 0");
    require(grant_queue_patience() > 0.0, "grants_per_subframe * rar_window must exceed 1/grants_per_subframe");
}

}  // namespace ltear
