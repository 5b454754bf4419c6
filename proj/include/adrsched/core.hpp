#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

// Core domain model for a single automated demand-response (ADR) device:
// economic parameters, the two-state failure chain, per-event rewards, and
// the Bayes map that advances the belief "the device is working" after one
// DR event's worth of meter readings.
namespace adr {

// Crew dispatch decision taken just before a DR event.
enum class Action { DoNothing, SendCrew };

// True (hidden) device state during a DR event.
enum class AdrState { Broken, Working };

// Belief that the device is working, in [0,1].
using Belief = double;

// Economic and reliability parameters of one ADR.
//   lambda : expected DR savings per event while the device works
//   c      : cost of dispatching a repair crew
//   theta  : customer compensation, subtracted uniformly from every reward
//            entry (defaults to 0 and has no effect on policies)
//   p      : probability the device fails between consecutive DR events
//   beta   : per-event discount factor
struct AdrModel {
    double lambda = 1.0;
    double c = 3.0;
    double theta = 0.0;
    double p = 0.05;
    double beta = 0.9;

    void validate() const {
        if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("AdrModel: p must be in (0,1)");
        if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("AdrModel: beta must be in (0,1)");
        if (!(c >= 0.0)) throw std::invalid_argument("AdrModel: c must be >= 0");
        if (!(lambda >= 0.0)) throw std::invalid_argument("AdrModel: lambda must be >= 0");
        if (!(theta >= 0.0)) throw std::invalid_argument("AdrModel: theta must be >= 0");
    }
};

// Log-densities of one reading vector under the broken / working hypotheses.
// Carried in log space throughout: products of 10-16 Gaussian densities
// underflow in raw form.
struct LikelihoodPair {
    double log_q0 = 0.0;  // log density given the device is broken
    double log_q1 = 0.0;  // log density given the device is working
};

// Probability row (P(Broken), P(Working)) of the state transition matrix.
struct StateDist {
    double broken = 0.0;
    double working = 0.0;
};

// Expected profit of taking action `a` at belief `b`:
//   do nothing : lambda*b - theta
//   send crew  : lambda - c - theta   (repair guarantees operation, any b)
inline double reward(const AdrModel& m, Action a, Belief b) {
    if (a == Action::SendCrew) return m.lambda - m.c - m.theta;
    return m.lambda * b - m.theta;
}

// Row of the transition matrix for (action, current state).  Repair resets
// the device to working just before the event, after which it may fail
// again with probability p; an untouched broken device stays broken.
inline StateDist transition_row(const AdrModel& m, Action a, AdrState s) {
    if (a == Action::SendCrew || s == AdrState::Working) return {m.p, 1.0 - m.p};
    return {1.0, 0.0};
}

// Numerically stable logistic function.
inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// One-step belief update after observing a reading vector with likelihoods
// `lik` under action `a`.  The posterior that the device worked during the
// event is a sigmoid of the log-likelihood ratio plus the prior log-odds;
// the failure transition then scales it by (1-p).  Under SendCrew the
// device worked for sure, so the update is the constant 1-p.
inline Belief belief_update(const AdrModel& m, Action a, Belief b, const LikelihoodPair& lik) {
    if (!(b >= 0.0 && b <= 1.0)) throw std::domain_error("belief_update: belief outside [0,1]");
    if (a == Action::SendCrew) return 1.0 - m.p;
    const double inf = std::numeric_limits<double>::infinity();
    if ((lik.log_q0 == -inf && lik.log_q1 == -inf) || std::isnan(lik.log_q0) ||
        std::isnan(lik.log_q1)) {
        throw std::domain_error("belief_update: impossible observation (both likelihoods zero)");
    }
    if (b == 0.0) return 0.0;  // broken is absorbing under DoNothing
    if (b == 1.0) return 1.0 - m.p;
    // Only the likelihood ratio matters; common factors in log_q0/log_q1 cancel.
    const double log_odds = std::log(b) - std::log1p(-b);
    const double post = sigmoid((lik.log_q1 - lik.log_q0) + log_odds);
    return (1.0 - m.p) * post;
}

}  // namespace adr
