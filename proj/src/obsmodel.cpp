#include "adrsched/obsmodel.hpp"

#include <cmath>
#include <stdexcept>

#include "adrsched/vbayes.hpp"

namespace adr {

void ObsScenario::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("ObsScenario: sigma must be > 0");
    if (!(nu0 > 0.0)) throw std::invalid_argument("ObsScenario: nu0 must be > 0");
    if (case_has_random_shed(obs_case) && !(eta0 > 0.0)) {
        throw std::invalid_argument("ObsScenario: eta0 must be > 0");
    }
    if (m < 1) throw std::invalid_argument("ObsScenario: m must be >= 1");
    if (d < 0) throw std::invalid_argument("ObsScenario: d must be >= 0");
    if (!case_has_mismatch(obs_case) && d != 0) {
        throw std::invalid_argument("ObsScenario: synchronized cases require d = 0");
    }
    if (case_has_mismatch(obs_case) && d == 0) {
        throw std::invalid_argument("ObsScenario: mismatch cases require d >= 1");
    }
    if (static_cast<int>(y.size()) != reading_length()) {
        throw std::invalid_argument("ObsScenario: baseline length must equal m + 2d");
    }
}

double inv_norm_cdf(double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("inv_norm_cdf: argument outside (0,1)");
    // Work on the left half only: 1-u is exact for u in [0.5, 1], and the
    // erfc residual below keeps full relative precision in the left tail,
    // whereas evaluating the CDF near 1 would quantize the tail at the
    // spacing of doubles around 2.
    if (u > 0.5) return -inv_norm_cdf(1.0 - u);

    // Acklam's rational approximation, three branches.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    // One Halley refinement against the exact CDF via erfc.
    const double e = 0.5 * std::erfc(-x / 1.4142135623730950488) - u;
    const double t = e * 2.5066282746310002 * std::exp(0.5 * x * x);  // e / pdf(x)
    x -= t / (1.0 + 0.5 * x * t);
    return x;
}

ReadingVector sample_reading(const ObsScenario& scn, Belief b, std::span<const double> point) {
    if (static_cast<int>(point.size()) != scn.point_dimension()) {
        throw std::invalid_argument("sample_reading: point dimension mismatch");
    }
    if (!(b >= 0.0 && b <= 1.0)) throw std::domain_error("sample_reading: belief outside [0,1]");

    const int len = scn.reading_length();
    ReadingVector x(len);
    for (int i = 0; i < len; ++i) x[i] = scn.y[i] + scn.sigma * inv_norm_cdf(point[i]);

    // Coordinates after the noise block: selector, then shed, then offset.
    int pos = len;
    const bool working = point[pos++] < b;
    double r = scn.nu0;
    if (case_has_random_shed(scn.obs_case)) {
        const double u_r = point[pos++];
        r = scn.nu0 + inv_norm_cdf(u_r) / std::sqrt(scn.eta0);
    }
    int delta = 0;
    if (case_has_mismatch(scn.obs_case)) {
        const double u_d = point[pos++];
        delta = -scn.d + static_cast<int>(u_d * (2 * scn.d + 1));
        if (delta > scn.d) delta = scn.d;  // u_d == 1 cannot occur, but stay safe
    }

    if (working) {
        const int start = scn.d + delta;
        for (int i = start; i < start + scn.m; ++i) x[i] -= r;
    }
    return x;
}

double window_shed_sum(const ObsScenario& scn, const ReadingVector& x, int delta) {
    const int start = scn.d + delta;
    double s = 0.0;
    for (int i = start; i < start + scn.m; ++i) s += scn.y[i] - x[i];
    return s;
}

LikelihoodPair likelihood(const ObsScenario& scn, const ReadingVector& x,
                          const VbPosterior* posterior) {
    const int len = scn.reading_length();
    if (static_cast<int>(x.size()) != len) {
        throw std::invalid_argument("likelihood: reading length mismatch");
    }

    const double log_sigma = std::log(scn.sigma);
    double log_q0 = 0.0;
    for (int i = 0; i < len; ++i) log_q0 += log_norm_pdf((x[i] - scn.y[i]) / scn.sigma);
    log_q0 -= len * log_sigma;

    double log_q1;
    if (scn.obs_case == ObsCase::A) {
        // Known shed, known window: plain product of shifted densities.
        log_q1 = 0.0;
        for (int i = 0; i < len; ++i) {
            log_q1 += log_norm_pdf((x[i] - scn.y[i] + scn.nu0) / scn.sigma);
        }
        log_q1 -= len * log_sigma;
    } else {
        if (posterior == nullptr) {
            throw std::invalid_argument("likelihood: cases B-D require a fitted posterior");
        }
        log_q1 = q1_quadrature(scn, x, *posterior, kDefaultQuadraturePoints);
    }
    return {log_q0, log_q1};
}

}  // namespace adr
