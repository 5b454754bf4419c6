#pragma once

#include <vector>

#include "adrsched/obsmodel.hpp"

// Mean-field variational posterior over the load-shed magnitude r and the
// clock-mismatch offset delta for one reading vector, plus the quadrature
// that turns the posterior into the working-state observation density.
namespace adr {

inline constexpr int kDefaultQuadraturePoints = 3;   // L: nodes per side of the mean
inline constexpr double kVbTolerance = 1e-8;         // relative nu / TV delta stop rule
inline constexpr int kVbMaxIterations = 500;

// Product posterior Delta(delta) * g(r), with g Gaussian N(nu, 1/eta).
// For deterministic-shed scenarios (case B) the shed is known exactly:
// eta is +infinity and nu stays at the prior mean.
struct VbPosterior {
    std::vector<double> delta_probs;  // index i corresponds to delta = i - d
    double nu = 0.0;                  // posterior mean of r
    double eta = 0.0;                 // posterior precision of r
    int iterations = 0;
    bool converged = false;
};

// Coordinate-ascent fit of the posterior for cases B, C, D:
//   Delta(delta) ∝ exp{ (nu/sigma^2) * S(delta) - (nu^2 + 1/eta) m / (2 sigma^2) }
//   eta          = eta0 + m / sigma^2          (constant: every window has m cells)
//   nu           = (nu0*eta0 + sigma^-2 * sum_delta Delta(delta) S(delta)) / eta
// where S(delta) is the window sum of (y - x).  Iterates until the relative
// change in nu and the total-variation change in Delta both fall below tol;
// the returned Delta is refreshed from the final nu so the object is
// self-consistent.  Deterministic for fixed inputs.
VbPosterior fit_posterior(const ObsScenario& scn, const ReadingVector& x,
                          double tol = kVbTolerance, int max_iter = kVbMaxIterations);

// log of the posterior-averaged working-state density:
//   log sum_{l=-L..L} sum_delta Q1(x | r_l, delta) * Delta(delta) * w_l
// with nodes r_l = nu + l/sqrt(eta) and rectangle-rule weights
// w_l ∝ g(r_l)/sqrt(eta), i.e. w_l ∝ exp(-l^2/2), renormalized to sum to 1.
// Computed entirely via log-sum-exp.  With eta = +infinity (case B) the
// quadrature collapses to the single node r = nu.
double q1_quadrature(const ObsScenario& scn, const ReadingVector& x, const VbPosterior& post,
                     int L = kDefaultQuadraturePoints);

}  // namespace adr
