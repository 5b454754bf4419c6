#pragma once

#include <utility>
#include <vector>

#include "adrsched/solver.hpp"

// Whittle indices for the repair-scheduling bandit: the minimum do-nothing
// subsidy that makes leaving the device alone optimal at a given belief.
// Computed by bisection over subsidy-mu threshold solves on one shared
// continuation table (the subsidy moves rewards only, never observations).
namespace adr {

inline constexpr double kWhittleEpsilonFactor = 1e-3;  // default accuracy: 1e-3 * lambda
inline constexpr int kMuBarDoublingCap = 40;           // search stops at mu0 * 2^40

// Index per grid belief, non-negative and non-increasing in k.
struct WhittleTable {
    std::vector<double> index_values;  // k = 0..n
    double mu_bar = 0.0;
    double epsilon = 0.0;
};

// Subsidy sweep of the threshold, for indexability checks.  Sampling noise
// can produce one-cell jitter against monotonicity; such points are
// isotonically clipped and counted.  Larger violations throw.
struct ThresholdCurve {
    std::vector<double> mu;
    std::vector<int> threshold_index;  // after clipping; non-increasing
    int clipped = 0;                   // probes adjusted by exactly one cell
};

struct WhittleError : std::runtime_error {
    double mu_low, mu_high;
    int threshold_low, threshold_high;
    WhittleError(const std::string& what, double ml, int tl, double mh, int th)
        : std::runtime_error(what), mu_low(ml), mu_high(mh), threshold_low(tl),
          threshold_high(th) {}
};

// Smallest mu of the form mu0 * 2^i (i >= 0, mu0 = lambda) at which doing
// nothing is optimal at every grid belief.  Throws if the doubling cap is
// exceeded.
double find_mu_bar(const AdrModel& model, const ContinuationTable& cont);

// Whittle index of grid belief k: within epsilon of
// inf{ mu >= 0 : k/n > b*(mu) }, and exactly 0 when doing nothing is
// already optimal at mu = 0.
double whittle_index(const AdrModel& model, const ContinuationTable& cont, int k, double mu_bar,
                     double epsilon);

// Index for every grid belief.
WhittleTable compute_whittle_table(const AdrModel& model, const ContinuationTable& cont,
                                   double epsilon);

// Index table at repair cost `cost` from the zero-cost table of the same
// continuation: cost and subsidy enter the comparison only through their
// difference, so pricing in a cost just lowers every index by it (floored
// at zero).  Lets one zero-cost curve serve a whole heterogeneous fleet.
WhittleTable apply_repair_cost(const WhittleTable& zero_cost, double cost);

// Threshold index at `probes` equally spaced subsidies in [0, mu_max].
ThresholdCurve threshold_curve(const AdrModel& model, const ContinuationTable& cont, int probes,
                               double mu_max);

// Whittle indices of the fully observed two-state chain, (broken, working).
// The working state has index 0: both actions leave the same transition
// row and repairing costs c more.  The broken-state index comes from
// bisection over exact two-state subsidy solves.
std::pair<double, double> full_info_index(const AdrModel& model, double epsilon);

// Whittle indices of the slow-information chain, whose beliefs live on
// {0, 1-p}: the device's state during the previous event is revealed after
// the event.  Returns (index at belief 0, index at belief 1-p).
std::pair<double, double> slow_info_index(const AdrModel& model, double epsilon);

}  // namespace adr
