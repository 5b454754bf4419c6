#include "adrsched/vbayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adr {

namespace {

// log(sum(exp(v))) without overflow.
double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : v) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : v) s += std::exp(t - mx);
    return mx + std::log(s);
}

// Normalized window-offset distribution for a given shed mean nu.  The
// m-dependent exponent term is identical across offsets and cancels in the
// normalization, leaving a softmax of (nu/sigma^2) * S(delta).
void update_delta(const ObsScenario& scn, const std::vector<double>& wsum, double nu,
                  double inv_var_term, std::vector<double>& delta) {
    const int n_delta = static_cast<int>(delta.size());
    std::vector<double> logits(n_delta);
    for (int i = 0; i < n_delta; ++i) {
        logits[i] = (nu / (scn.sigma * scn.sigma)) * wsum[i] - inv_var_term;
        if (!std::isfinite(logits[i])) {
            throw std::runtime_error("fit_posterior: non-finite offset logit");
        }
    }
    const double lse = log_sum_exp(logits);
    for (int i = 0; i < n_delta; ++i) delta[i] = std::exp(logits[i] - lse);
}

}  // namespace

VbPosterior fit_posterior(const ObsScenario& scn, const ReadingVector& x, double tol,
                          int max_iter) {
    if (scn.obs_case == ObsCase::A) {
        throw std::invalid_argument("fit_posterior: case A has no latent parameters");
    }
    if (static_cast<int>(x.size()) != scn.reading_length()) {
        throw std::invalid_argument("fit_posterior: reading length mismatch");
    }
    if (max_iter < 1) throw std::invalid_argument("fit_posterior: max_iter must be >= 1");

    const int n_delta = 2 * scn.d + 1;
    const double sig2 = scn.sigma * scn.sigma;
    const bool shed_known = !case_has_random_shed(scn.obs_case);  // case B

    // Sufficient statistics: window sums S(delta) for every offset.
    std::vector<double> wsum(n_delta);
    for (int i = 0; i < n_delta; ++i) wsum[i] = window_shed_sum(scn, x, i - scn.d);

    VbPosterior post;
    post.delta_probs.assign(n_delta, 1.0 / n_delta);
    post.nu = scn.nu0;
    post.eta = shed_known ? std::numeric_limits<double>::infinity()
                          : scn.eta0 + scn.m / sig2;  // constant across iterations
    const double eta_inv = shed_known ? 0.0 : 1.0 / post.eta;

    for (post.iterations = 1; post.iterations <= max_iter; ++post.iterations) {
        const double nu_prev = post.nu;
        std::vector<double> delta_prev = post.delta_probs;

        const double const_term = (post.nu * post.nu + eta_inv) * scn.m / (2.0 * sig2);
        update_delta(scn, wsum, post.nu, const_term, post.delta_probs);

        if (!shed_known) {
            double mean_wsum = 0.0;
            for (int i = 0; i < n_delta; ++i) mean_wsum += post.delta_probs[i] * wsum[i];
            post.nu = (scn.nu0 * scn.eta0 + mean_wsum / sig2) / post.eta;
            if (!std::isfinite(post.nu)) throw std::runtime_error("fit_posterior: non-finite nu");
        }

        double tv = 0.0;
        for (int i = 0; i < n_delta; ++i) tv += std::abs(post.delta_probs[i] - delta_prev[i]);
        tv *= 0.5;
        const double rel_nu = std::abs(post.nu - nu_prev) / (std::abs(nu_prev) + 1e-300);
        if (rel_nu < tol && tv < tol) {
            post.converged = true;
            break;
        }
    }
    if (post.iterations > max_iter) post.iterations = max_iter;

    // Refresh Delta from the final nu so the returned pair is mutually
    // consistent (one extra half-step of the same ascent).
    const double const_term = (post.nu * post.nu + eta_inv) * scn.m / (2.0 * sig2);
    update_delta(scn, wsum, post.nu, const_term, post.delta_probs);
    return post;
}

double q1_quadrature(const ObsScenario& scn, const ReadingVector& x, const VbPosterior& post,
                     int L) {
    if (L < 1) throw std::invalid_argument("q1_quadrature: L must be >= 1");
    if (static_cast<int>(x.size()) != scn.reading_length()) {
        throw std::invalid_argument("q1_quadrature: reading length mismatch");
    }
    const int n_delta = static_cast<int>(post.delta_probs.size());
    if (n_delta != 2 * scn.d + 1) {
        throw std::invalid_argument("q1_quadrature: posterior offset support mismatch");
    }

    const double sig2 = scn.sigma * scn.sigma;
    const int len = scn.reading_length();

    double log_q0 = 0.0;
    for (int i = 0; i < len; ++i) log_q0 += log_norm_pdf((x[i] - scn.y[i]) / scn.sigma);
    log_q0 -= len * std::log(scn.sigma);

    std::vector<double> wsum(n_delta);
    for (int i = 0; i < n_delta; ++i) wsum[i] = window_shed_sum(scn, x, i - scn.d);

    // Quadrature nodes and log-weights.  An infinite-precision posterior
    // (deterministic shed) collapses to the single node r = nu.
    std::vector<double> nodes, logw;
    if (std::isinf(post.eta)) {
        nodes = {post.nu};
        logw = {0.0};
    } else {
        const double step = 1.0 / std::sqrt(post.eta);
        double norm = 0.0;
        for (int l = -L; l <= L; ++l) norm += std::exp(-0.5 * l * l);
        for (int l = -L; l <= L; ++l) {
            nodes.push_back(post.nu + l * step);
            logw.push_back(-0.5 * l * l - std::log(norm));
        }
    }

    // Shifting the shed window by r changes the log-density by
    // (r/sigma^2) S(delta) - m r^2 / (2 sigma^2) relative to the broken fit.
    std::vector<double> terms;
    terms.reserve(nodes.size() * n_delta);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double r = nodes[q];
        const double node_pen = -scn.m * r * r / (2.0 * sig2);
        for (int i = 0; i < n_delta; ++i) {
            if (post.delta_probs[i] <= 0.0) continue;
            terms.push_back(logw[q] + std::log(post.delta_probs[i]) + (r / sig2) * wsum[i] +
                            node_pen);
        }
    }
    return log_q0 + log_sum_exp(terms);
}

}  // namespace adr
