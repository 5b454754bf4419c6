#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adrsched/core.hpp"
#include "adrsched/obsmodel.hpp"
#include "adrsched/qmc.hpp"

// Discretized belief-state MDP: sampled continuation expectations over a
// regular belief grid, Bellman fixed-point solves, and threshold
// extraction.
namespace adr {

// Regular grid {k/n : k = 0..n} with the round-up rule: a belief in
// ((k-1)/n, k/n] maps to index k.
struct BeliefGrid {
    int n = 100;

    explicit BeliefGrid(int n_) : n(n_) {
        if (n < 2) throw std::invalid_argument("BeliefGrid: n must be >= 2");
    }
    double belief(int k) const { return static_cast<double>(k) / n; }
    int round_up(double b) const {
        // The epsilon guards exact grid points against ceil() noise from
        // the multiplication; beliefs are in [0,1] by construction.
        int k = static_cast<int>(std::ceil(n * b - 1e-12));
        if (k < 0) k = 0;
        if (k > n) k = n;
        return k;
    }
};

// One grid row outcome: next grid index with its probability weight.
struct Outcome {
    std::int32_t index;
    double weight;
};

// Per-grid-row continuation data for the do-nothing action: where the
// belief lands after one event, over N sampled readings (or over exact
// outcome distributions for analytically known observation channels).
// `next_index` keeps the raw sample-by-sample indices when the table was
// built by sampling; `rows` is the weight-compressed form the solvers use.
struct ContinuationTable {
    int n = 0;          // grid size
    int N = 0;          // samples per row (0 for exact tables)
    int reset_index = 0;  // ceil((1-p) n): belief right after a repair
    std::vector<std::int32_t> next_index;     // (n+1) x N row-major; may be empty
    std::vector<std::vector<Outcome>> rows;   // n+1 rows, weights sum to 1

    std::int32_t next_at(int k, int j) const { return next_index[static_cast<std::size_t>(k) * N + j]; }

    // Build the compressed rows from the raw sample matrix.
    void compress();

    // Exact table from explicit per-row outcome distributions (used by
    // discrete-observation oracles and tests).
    static ContinuationTable from_rows(int n, int reset_index,
                                       std::vector<std::vector<Outcome>> rows);
};

// How to solve the Bellman fixed point.
enum class SolveMethod {
    FixedPoint,     // value iteration (the operator is a beta-contraction)
    LinearProgram,  // exact optimum of the LP formulation, reached by policy
                    // iteration with direct linear solves of the active rows
};

// Solved value vector over the grid.
//   threshold_index: largest k where sending the crew attains the Bellman
//                    max (-1 when do-nothing is strictly better everywhere)
//   subsidy:         extra reward paid to the do-nothing action (0 for the
//                    plain maintenance problem)
struct ValueTable {
    std::vector<double> v;
    int threshold_index = -1;
    double subsidy = 0.0;
    double residual = 0.0;  // final sup-norm Bellman residual bound
    int iterations = 0;
};

struct SolverError : std::runtime_error {
    double residual;
    explicit SolverError(const std::string& what, double res)
        : std::runtime_error(what), residual(res) {}
};

// Sample N reading outcomes per grid row under the do-nothing action and
// record where the updated belief lands.  One common point set is reused
// across all rows (common random numbers), so only 2N readings are ever
// scored: each hypercube point yields one broken-branch and one
// working-branch reading; row k mixes them by thresholding the selector
// coordinate at k/n.  `threads` splits the per-sample likelihood work.
ContinuationTable build_continuation(const AdrModel& model, const ObsScenario& scn,
                                     const BeliefGrid& grid, int N, QmcStream& qmc,
                                     int threads = 1);

// Solve V(k) = max{ lambda*k/n - theta + subsidy + beta * E V(next),
//                   lambda - c - theta + beta * V(reset_index) }.
// FixedPoint iterates until the residual bound drops below
// tol*(1 + ||v||_inf) (cap 100000 sweeps, SolverError carries the residual
// on failure); LinearProgram finishes with an exact policy-evaluation
// solve, so its residual is at machine precision.
ValueTable solve_value(const AdrModel& model, const ContinuationTable& cont, double subsidy,
                       SolveMethod method = SolveMethod::FixedPoint, double tol = 1e-9);

// Threshold belief b* = threshold_index / n, or nothing when repairing is
// never optimal.
std::optional<double> extract_threshold(const ValueTable& vt, const BeliefGrid& grid);

// --- continuation-table cache ---------------------------------------------

// Content key for a sampled table: every parameter that can change the
// table feeds a 64-bit FNV-1a hash.
std::uint64_t continuation_cache_key(const AdrModel& model, const ObsScenario& scn,
                                     const BeliefGrid& grid, int N, std::uint64_t seed);

// Flat binary serialization (raw matrix + metadata; compressed rows are
// rebuilt on load).  load returns nothing on missing/corrupt/mismatched
// files.
void save_continuation(const std::string& path, const ContinuationTable& cont);
std::optional<ContinuationTable> load_continuation(const std::string& path);

}  // namespace adr
