#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adrsched/whittle.hpp"

// Multi-ADR repair scheduling: exact reference values for the fully and
// slowly informed fleet problems, the periodic-review baseline, and a
// common-random-number simulator that measures index policies against those
// references over a finite horizon.
namespace adr {

// Value of repairing on a fixed cycle of q events (repair at the first
// event of each cycle, do nothing in between).  Closed form.
double periodic_value(const AdrModel& model, int q);

struct PeriodicReview {
    int q_star = 1;
    double value = 0.0;
};

// Best fixed review period over q = 1..q_max (ties -> smaller q).
PeriodicReview best_periodic_review(const AdrModel& model, int q_max);

// Fully informed fleet with identical devices: the joint problem collapses
// to a one-dimensional chain over the working count w observed before
// repairs.  Actions repair a <= min(M, D - w) broken devices; the event
// pays lambda*w + (lambda - c)*a - theta*D and every device running after
// repairs fails independently with probability p.
struct CountPolicy {
    std::vector<int> repairs;   // optimal repair count at w = 0..D
    std::vector<double> value;  // V(w)
    int crews = 0;
    // All devices working, nothing revealed yet: exactly state w = D.
    double value_fresh() const { return value.back(); }
};
CountPolicy full_info_optimal_policy(const AdrModel& model, int D, int M);

// Slowly informed fleet: a device's state during an event is revealed only
// after the event, so un-repaired beliefs live on {0, 1-p} and the
// identical-device problem collapses to a chain over n1, the count at
// belief 1-p (the other D - n1 sit at belief 0).  Repairing any device
// makes it work through the event and puts it at belief 1-p.
struct SlowCountPolicy {
    std::vector<int> repairs_low;   // belief-0 repairs at n1 = 0..D
    std::vector<int> repairs_high;  // belief-(1-p) repairs at n1 = 0..D
    std::vector<double> value;      // V(n1)
    int crews = 0;
    // Fresh fleet: every device is known working, repairs buy nothing the
    // first event, and afterwards all D devices sit at belief 1-p.
    double value_fresh = 0.0;
};
SlowCountPolicy slow_info_policy(const AdrModel& model, int D, int M);

// Scheduling policies the simulator can run.  The two *Optimal entries are
// the count policies above (identical costs only); the Whittle entries pick
// at most M devices with the largest strictly positive index, ties broken
// by ascending device id.
enum class PolicyId { FullOptimal, SlowOptimal, FullWhittle, SlowWhittle, PartialWhittle };

const char* policy_name(PolicyId id);
std::optional<PolicyId> parse_policy(std::string_view name);

enum class CostMode { Identical, UniformRandom };  // uniform over (0, 6.5*lambda]
enum class SnrMode { Fixed, UniformRandom };       // uniform over [-5, 5] dB

struct FleetAdr {
    AdrModel model;   // carries this device's repair cost
    ObsScenario obs;  // carries this device's noise level
    // Partial-information index per grid belief; required by PartialWhittle.
    std::shared_ptr<const WhittleTable> index_table;
};

struct FleetScenario {
    std::vector<FleetAdr> adrs;
    int crews = 5;
    int horizon = 44;
    int runs = 100;
    std::uint64_t seed = 0;
    int grid_n = 100;
    CostMode cost_mode = CostMode::Identical;
    SnrMode snr_mode = SnrMode::Fixed;
    double snr_db = 0.0;

    void validate() const;
};

struct FleetBuildOptions {
    int grid_n = 100;
    int samples = 5000;        // continuation-table sample count
    double epsilon = 0.0;      // index accuracy; 0 -> kWhittleEpsilonFactor * lambda
    int threads = 1;
    std::optional<std::string> cache_dir;  // reuse continuation tables on disk
};

// Draw per-device costs and noise levels from the scenario seed, then build
// the partial-information Whittle table for every device.  Tables for a
// given noise level are derived from one zero-cost index curve per level
// (cost only shifts the index), so identical-noise fleets price a single
// continuation table.
FleetScenario build_fleet_scenario(const AdrModel& base, const ObsScenario& base_obs, int D,
                                   int M, CostMode cost_mode, SnrMode snr_mode, double snr_db,
                                   int horizon, int runs, std::uint64_t seed,
                                   const FleetBuildOptions& opt = {});

struct SimReport {
    PolicyId policy = PolicyId::PartialWhittle;
    PolicyId reference = PolicyId::FullOptimal;
    double snr_db = 0.0;
    double policy_mean = 0.0;
    double policy_se = 0.0;
    double reference_mean = 0.0;
    double reference_se = 0.0;      // zero when the reference is exact
    bool reference_exact = false;
    double err_percent = 0.0;       // 100 * (ref - policy) / ref
    int runs = 0;
};

// Run `policy` for fs.runs independent runs of fs.horizon events and report
// its mean discounted reward against the reference.  FullOptimal and
// SlowOptimal references are evaluated exactly at infinite horizon; index
// references are simulated on the same random streams (counter-based, keyed
// by seed/run/event/device, so draws never depend on the policy).
SimReport simulate(const FleetScenario& fs, PolicyId policy, PolicyId reference);

// Per-decision trace for diagnostics: repairs[(run*T + t)*D + i] is 1 when
// device i was repaired at event t of the given run.
struct SimTrace {
    std::vector<std::uint8_t> repairs;
    double mean = 0.0;
    double se = 0.0;
};
SimTrace simulate_trace(const FleetScenario& fs, PolicyId policy);

}  // namespace adr
