#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ltear/analytic.hpp"
#include "ltear/config.hpp"

/// Oracle-versus-closed-form self check behind `ltear validate`.
namespace ltear::validation {

struct CheckResult {
    std::string name;
    double observed = 0.0;   ///< worst deviation seen
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

/// Closed forms under test. Tests substitute deliberately broken versions to
/// confirm each check only trips on its own formula.
struct Subjects {
    std::function<double(double, const SystemConfig&)> grant_drop = analytic::grant_drop_probability;
    std::function<analytic::ChainSolution(double, double, int, int)> chain =
        [](double pf, double pon, int m, int w) { return analytic::chain_steady_state(pf, pon, m, w); };
};

struct ValidationOptions {
    std::uint64_t seed = 20150601;
    std::uint64_t queue_customers = 1'000'000;  ///< pilot sample, grown until the target below is met
    double queue_relative_error = 0.01;
    std::uint64_t preamble_trials = 100'000;
};

CheckResult check_chain(const Subjects& subjects = {});
CheckResult check_chain_outage_ratio(const Subjects& subjects = {});
CheckResult check_transmissions(const Subjects& subjects = {});
CheckResult check_grant_queue(const Subjects& subjects = {}, const ValidationOptions& options = {});
CheckResult check_collision_bound(const ValidationOptions& options = {});
CheckResult check_activations(const ValidationOptions& options = {});
CheckResult check_fixed_point();

std::vector<CheckResult> run_all(const Subjects& subjects = {}, const ValidationOptions& options = {});

void print_report(std::ostream& out, const std::vector<CheckResult>& results);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace ltear::validation
