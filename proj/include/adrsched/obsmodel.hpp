#pragma once

#include <span>
#include <vector>

#include "adrsched/core.hpp"

// Gaussian meter-reading model: how a DR event's consumption vector is
// distributed under a working / broken device, sample generation driven by
// unit-hypercube points, and the two log-likelihoods needed for the belief
// update.
namespace adr {

struct VbPosterior;  // defined in vbayes.hpp

// The four observation regimes:
//   A: meter clock synchronized, deterministic load-shed r = nu0
//   B: clock mismatch up to d steps, deterministic load-shed
//   C: synchronized, random load-shed r ~ N(nu0, 1/eta0)
//   D: mismatch and random load-shed
enum class ObsCase { A, B, C, D };

inline bool case_has_mismatch(ObsCase c) { return c == ObsCase::B || c == ObsCase::D; }
inline bool case_has_random_shed(ObsCase c) { return c == ObsCase::C || c == ObsCase::D; }

// Observation model of one ADR.  With clock mismatch the meter reports
// m + 2d readings and the true m-long shed window starts at an unknown
// offset delta in {-d..d}: a working device subtracts r from readings
// d+delta .. d+delta+m-1 (0-based).  Readings carry iid N(0, sigma^2) noise.
struct ObsScenario {
    std::vector<double> y;  // baseline consumption, length m + 2d
    double sigma = 1.0;     // meter noise standard deviation
    double nu0 = 1.0;       // prior mean load-shed
    double eta0 = 100.0;    // prior precision of the shed (ignored for cases A/B,
                            // where the shed is exactly nu0)
    int d = 0;              // max clock mismatch in readings (0 when synchronized)
    int m = 10;             // readings inside one DR event window
    ObsCase obs_case = ObsCase::A;

    int reading_length() const { return m + 2 * d; }
    // Hypercube coordinates consumed per sample: one per reading, one
    // mixture selector, plus one for the shed draw (cases C/D) and one for
    // the window offset (cases B/D).
    int point_dimension() const {
        return reading_length() + 1 + (case_has_random_shed(obs_case) ? 1 : 0) +
               (case_has_mismatch(obs_case) ? 1 : 0);
    }

    void validate() const;
};

using ReadingVector = std::vector<double>;

// Inverse standard normal CDF.  Rational approximation (Acklam) polished
// with one Halley step against erfc; absolute error below 1e-9 across
// (1e-12, 1-1e-12).  Throws std::domain_error outside (0,1).
double inv_norm_cdf(double u);

// Turn one unit-hypercube point into a reading vector at belief b.  The
// mixture branch (working vs broken) is chosen by thresholding the selector
// coordinate at b, so a fixed point set stays reusable across beliefs as
// common random numbers.
ReadingVector sample_reading(const ObsScenario& scn, Belief b, std::span<const double> point);

// Log-densities of a reading vector under both device states.  Cases B-D
// average the working-state density over the (r, delta) posterior, so a
// fitted posterior must be supplied; case A ignores it.
LikelihoodPair likelihood(const ObsScenario& scn, const ReadingVector& x,
                          const VbPosterior* posterior = nullptr);

// log of the standard normal pdf at t.
inline double log_norm_pdf(double t) { return -0.5 * t * t - 0.9189385332046727417803297; }

// Sum over the shed window at offset delta of (y_i - x_i); the sufficient
// statistic for both the variational fit and the quadrature.
double window_shed_sum(const ObsScenario& scn, const ReadingVector& x, int delta);

}  // namespace adr
