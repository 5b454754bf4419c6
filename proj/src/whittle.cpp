#include "adrsched/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace adr {

namespace {

int threshold_at(const AdrModel& m, const ContinuationTable& ct, double mu) {
    return solve_value(m, ct, mu).threshold_index;
}

double doubling_seed(const AdrModel& m) { return m.lambda > 0.0 ? m.lambda : 1.0; }

}  // namespace

double find_mu_bar(const AdrModel& model, const ContinuationTable& cont) {
    const double mu0 = doubling_seed(model);
    double mu = mu0;
    for (int i = 0; i <= kMuBarDoublingCap; ++i, mu *= 2.0) {
        if (threshold_at(model, cont, mu) < 0) return mu;
    }
    throw WhittleError("find_mu_bar: no finite subsidy empties the repair region", mu0, 0,
                       mu / 2.0, 0);
}

double whittle_index(const AdrModel& model, const ContinuationTable& cont, int k, double mu_bar,
                     double epsilon) {
    if (k < 0 || k > cont.n) throw std::invalid_argument("whittle_index: k outside grid");
    if (!(epsilon > 0.0)) throw std::invalid_argument("whittle_index: epsilon must be > 0");

    const int thr0 = threshold_at(model, cont, 0.0);
    if (k > thr0) return 0.0;  // doing nothing already optimal without subsidy

    // Invariant during bisection: repairing is optimal at k under mu_low
    // (threshold >= k) and not under mu_high.  Track probes to detect a
    // non-monotone threshold; one grid cell of jitter is sampling noise,
    // anything larger is a real indexability violation.
    double mu_low = 0.0, mu_high = mu_bar;
    int thr_low = thr0;
    int thr_high = threshold_at(model, cont, mu_high);
    if (thr_high >= k) {
        throw WhittleError("whittle_index: threshold not cleared at mu_bar", mu_low, thr_low,
                           mu_high, thr_high);
    }
    while (mu_high - mu_low > epsilon) {
        const double mid = 0.5 * (mu_low + mu_high);
        const int thr_mid = threshold_at(model, cont, mid);
        if (thr_mid > thr_low + 1 || thr_mid < thr_high - 1) {
            // More than one cell against monotonicity relative to the
            // bracketing probes.
            if (thr_mid > thr_low + 1) {
                throw WhittleError("whittle_index: threshold increased with subsidy", mu_low,
                                   thr_low, mid, thr_mid);
            }
            throw WhittleError("whittle_index: threshold increased with subsidy", mid, thr_mid,
                               mu_high, thr_high);
        }
        if (thr_mid >= k) {
            mu_low = mid;
            thr_low = thr_mid;
        } else {
            mu_high = mid;
            thr_high = thr_mid;
        }
    }
    return 0.5 * (mu_low + mu_high);
}

WhittleTable compute_whittle_table(const AdrModel& model, const ContinuationTable& cont,
                                   double epsilon) {
    WhittleTable wt;
    wt.epsilon = epsilon;
    wt.mu_bar = find_mu_bar(model, cont);
    wt.index_values.resize(cont.n + 1, 0.0);
    for (int k = 0; k <= cont.n; ++k) {
        wt.index_values[k] = whittle_index(model, cont, k, wt.mu_bar, epsilon);
    }
    return wt;
}

WhittleTable apply_repair_cost(const WhittleTable& zero_cost, double cost) {
    if (!(cost >= 0.0)) throw std::invalid_argument("apply_repair_cost: cost must be >= 0");
    WhittleTable wt = zero_cost;
    wt.mu_bar = std::max(0.0, wt.mu_bar - cost);
    for (double& v : wt.index_values) v = std::max(0.0, v - cost);
    return wt;
}

ThresholdCurve threshold_curve(const AdrModel& model, const ContinuationTable& cont, int probes,
                               double mu_max) {
    if (probes < 2) throw std::invalid_argument("threshold_curve: need at least 2 probes");
    ThresholdCurve tc;
    tc.mu.resize(probes);
    tc.threshold_index.resize(probes);
    for (int i = 0; i < probes; ++i) {
        tc.mu[i] = mu_max * i / (probes - 1);
        tc.threshold_index[i] = threshold_at(model, cont, tc.mu[i]);
    }
    for (int i = 1; i < probes; ++i) {
        if (tc.threshold_index[i] > tc.threshold_index[i - 1]) {
            const int excess = tc.threshold_index[i] - tc.threshold_index[i - 1];
            if (excess > 1) {
                throw WhittleError("threshold_curve: threshold rose with subsidy", tc.mu[i - 1],
                                   tc.threshold_index[i - 1], tc.mu[i], tc.threshold_index[i]);
            }
            tc.threshold_index[i] = tc.threshold_index[i - 1];
            ++tc.clipped;
        }
    }
    if (tc.clipped > 0) {
        std::cerr << "threshold_curve: clipped " << tc.clipped
                  << " one-cell monotonicity violation(s)\n";
    }
    return tc;
}

namespace {

// Exact solve of a two-state chain where the passive action earns
// reward_passive[s] + mu and moves by rows_passive[s], while repairing
// earns lambda - c - theta and moves by the repaired row.  Returns values
// and whether the passive action is optimal in each state.
struct TwoState {
    double v[2];
    bool passive_optimal[2];
};

template <typename PassiveRow>
TwoState solve_two_state(const AdrModel& m, double mu, const double reward_passive[2],
                         PassiveRow passive_row, std::pair<double, double> repair_row) {
    double v[2] = {0.0, 0.0};
    const double repair_reward = m.lambda - m.c - m.theta;
    auto act_of = [&](const double vv[2]) {
        return repair_reward + m.beta * (repair_row.first * vv[0] + repair_row.second * vv[1]);
    };
    for (int it = 0; it < 200000; ++it) {
        double nv[2];
        const double act = act_of(v);
        for (int s = 0; s < 2; ++s) {
            auto row = passive_row(s);
            const double pass =
                reward_passive[s] - m.theta + mu + m.beta * (row.first * v[0] + row.second * v[1]);
            nv[s] = std::max(pass, act);
        }
        const double diff = std::max(std::abs(nv[0] - v[0]), std::abs(nv[1] - v[1]));
        v[0] = nv[0];
        v[1] = nv[1];
        const double scale = 1.0 + std::max(std::abs(v[0]), std::abs(v[1]));
        if (m.beta * diff <= 1e-13 * scale) break;
    }
    TwoState out;
    out.v[0] = v[0];
    out.v[1] = v[1];
    const double act = act_of(v);
    const double scale = 1.0 + std::max(std::abs(v[0]), std::abs(v[1]));
    for (int s = 0; s < 2; ++s) {
        auto row = passive_row(s);
        const double pass =
            reward_passive[s] - m.theta + mu + m.beta * (row.first * v[0] + row.second * v[1]);
        out.passive_optimal[s] = pass >= act - 1e-10 * scale;
    }
    return out;
}

// Bisection for the smallest subsidy making the passive action optimal in
// state `s`.
template <typename Solve>
double index_by_bisection(const AdrModel& m, int s, double epsilon, Solve solve) {
    if (solve(0.0).passive_optimal[s]) return 0.0;
    double lo = 0.0, hi = doubling_seed(m);
    int guard = 0;
    while (!solve(hi).passive_optimal[s]) {
        hi *= 2.0;
        if (++guard > kMuBarDoublingCap) {
            throw WhittleError("two-state index: doubling cap exceeded", lo, 0, hi, 0);
        }
    }
    while (hi - lo > epsilon) {
        const double mid = 0.5 * (lo + hi);
        if (solve(mid).passive_optimal[s]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> full_info_index(const AdrModel& model, double epsilon) {
    model.validate();
    // Fully observed chain: passive rewards (0, lambda), passive rows
    // (stay broken) and (p, 1-p); a repaired device faces the same failure
    // draw from either state.
    const double rp[2] = {0.0, model.lambda};
    auto row = [&](int s) {
        return s == 0 ? std::pair<double, double>{1.0, 0.0}
                      : std::pair<double, double>{model.p, 1.0 - model.p};
    };
    auto solve = [&](double mu) {
        return solve_two_state(model, mu, rp, row, {model.p, 1.0 - model.p});
    };
    const double idx_broken = index_by_bisection(model, 0, epsilon, solve);
    return {idx_broken, 0.0};
}

std::pair<double, double> slow_info_index(const AdrModel& model, double epsilon) {
    model.validate();
    // Slow-information chain on beliefs {0, 1-p}: a belief-(1-p) device
    // earns lambda(1-p) in expectation and is revealed working with
    // probability 1-p (returning to belief 1-p) or broken (dropping to
    // belief 0, absorbing under do-nothing).  A repaired device worked
    // during the event for sure, so it is revealed working and lands on
    // belief 1-p with certainty.
    const double q = 1.0 - model.p;
    const double rp[2] = {0.0, model.lambda * q};
    auto row = [&](int s) {
        return s == 0 ? std::pair<double, double>{1.0, 0.0}
                      : std::pair<double, double>{1.0 - q, q};
    };
    auto solve = [&](double mu) { return solve_two_state(model, mu, rp, row, {0.0, 1.0}); };
    const double idx0 = index_by_bisection(model, 0, epsilon, solve);
    const double idx1 = index_by_bisection(model, 1, epsilon, solve);
    return {idx0, idx1};
}

}  // namespace adr
