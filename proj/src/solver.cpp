#include "adrsched/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <thread>

#include "adrsched/vbayes.hpp"

namespace adr {

void ContinuationTable::compress() {
    rows.assign(n + 1, {});
    if (next_index.empty() || N == 0) return;
    const double w = 1.0 / N;
    std::map<std::int32_t, int> hist;
    for (int k = 0; k <= n; ++k) {
        hist.clear();
        for (int j = 0; j < N; ++j) ++hist[next_at(k, j)];
        rows[k].reserve(hist.size());
        for (const auto& [idx, count] : hist) rows[k].push_back({idx, count * w});
    }
}

ContinuationTable ContinuationTable::from_rows(int n, int reset_index,
                                               std::vector<std::vector<Outcome>> rows) {
    if (static_cast<int>(rows.size()) != n + 1) {
        throw std::invalid_argument("ContinuationTable: need exactly n+1 rows");
    }
    for (const auto& row : rows) {
        double total = 0.0;
        for (const auto& o : row) {
            if (o.index < 0 || o.index > n) {
                throw std::invalid_argument("ContinuationTable: outcome index out of range");
            }
            total += o.weight;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("ContinuationTable: row weights must sum to 1");
        }
    }
    ContinuationTable ct;
    ct.n = n;
    ct.N = 0;
    ct.reset_index = reset_index;
    ct.rows = std::move(rows);
    return ct;
}

ContinuationTable build_continuation(const AdrModel& model, const ObsScenario& scn,
                                     const BeliefGrid& grid, int N, QmcStream& qmc,
                                     int threads) {
    model.validate();
    scn.validate();
    if (N < 1) throw std::invalid_argument("build_continuation: N must be >= 1");
    if (qmc.dimension() != scn.point_dimension()) {
        throw std::invalid_argument("build_continuation: QMC stream dimension mismatch");
    }
    if (threads < 1) threads = 1;

    const int n = grid.n;
    const int len = scn.reading_length();

    // Draw the common point set once.  Each point defines the same noise,
    // shed, and offset draws for both mixture branches; only the selector
    // decides which branch row k uses, so 2N likelihood evaluations cover
    // every row.
    std::vector<std::vector<double>> points(N);
    for (int j = 0; j < N; ++j) points[j] = qmc.next();

    std::vector<double> llr_broken(N), llr_working(N), selector(N);
    auto score_range = [&](int lo, int hi) {
        for (int j = lo; j < hi; ++j) {
            const auto& pt = points[j];
            selector[j] = pt[len];
            const ReadingVector xb = sample_reading(scn, 0.0, pt);
            const ReadingVector xw = sample_reading(scn, 1.0, pt);
            if (scn.obs_case == ObsCase::A) {
                const LikelihoodPair lb = likelihood(scn, xb);
                const LikelihoodPair lw = likelihood(scn, xw);
                llr_broken[j] = lb.log_q1 - lb.log_q0;
                llr_working[j] = lw.log_q1 - lw.log_q0;
            } else {
                const VbPosterior pb = fit_posterior(scn, xb);
                const VbPosterior pw = fit_posterior(scn, xw);
                const LikelihoodPair lb = likelihood(scn, xb, &pb);
                const LikelihoodPair lw = likelihood(scn, xw, &pw);
                llr_broken[j] = lb.log_q1 - lb.log_q0;
                llr_working[j] = lw.log_q1 - lw.log_q0;
            }
        }
    };
    if (threads == 1) {
        score_range(0, N);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (N + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(N, lo + chunk);
            if (lo < hi) pool.emplace_back(score_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    ContinuationTable ct;
    ct.n = n;
    ct.N = N;
    ct.reset_index = grid.round_up(1.0 - model.p);
    ct.next_index.resize(static_cast<std::size_t>(n + 1) * N);

    for (int k = 0; k <= n; ++k) {
        std::int32_t* row = &ct.next_index[static_cast<std::size_t>(k) * N];
        if (k == 0) {
            // Broken is absorbing under do-nothing: Gamma(0) = 0.
            std::fill(row, row + N, 0);
            continue;
        }
        if (k == n) {
            // Gamma(1) = 1-p for every observation.
            std::fill(row, row + N, ct.reset_index);
            continue;
        }
        const double b = grid.belief(k);
        const double log_odds = std::log(b) - std::log1p(-b);
        for (int j = 0; j < N; ++j) {
            const double llr = (selector[j] < b) ? llr_working[j] : llr_broken[j];
            const double g = (1.0 - model.p) * sigmoid(llr + log_odds);
            row[j] = grid.round_up(g);
        }
    }
    ct.compress();
    return ct;
}

namespace {

// Expected continuation value of the do-nothing action for every row.
void passive_continuations(const ContinuationTable& ct, const std::vector<double>& v,
                           std::vector<double>& out) {
    for (int k = 0; k <= ct.n; ++k) {
        double s = 0.0;
        for (const auto& o : ct.rows[k]) s += o.weight * v[o.index];
        out[k] = s;
    }
}

int threshold_from_values(const std::vector<double>& q_pass, double q_act, int n,
                          double tie_tol) {
    int thr = -1;
    for (int k = 0; k <= n; ++k) {
        if (q_act >= q_pass[k] - tie_tol) thr = k;
    }
    return thr;
}

ValueTable solve_fixed_point(const AdrModel& m, const ContinuationTable& ct, double subsidy,
                             double tol) {
    const int n = ct.n;
    std::vector<double> v(n + 1, 0.0), cont(n + 1), vnew(n + 1);
    constexpr int kMaxSweeps = 100000;
    double residual = 0.0;
    int it = 0;
    for (it = 1; it <= kMaxSweeps; ++it) {
        passive_continuations(ct, v, cont);
        const double act = m.lambda - m.c - m.theta + m.beta * v[ct.reset_index];
        double diff = 0.0, vmax = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double pass = m.lambda * k / n - m.theta + subsidy + m.beta * cont[k];
            vnew[k] = std::max(pass, act);
            diff = std::max(diff, std::abs(vnew[k] - v[k]));
            vmax = std::max(vmax, std::abs(vnew[k]));
        }
        v.swap(vnew);
        // One more application of the operator can move the value by at
        // most beta * diff, which bounds the Bellman residual of v.
        residual = m.beta * diff;
        if (residual <= tol * (1.0 + vmax)) break;
    }
    if (it > kMaxSweeps) {
        throw SolverError("solve_value: value iteration did not converge", residual);
    }

    ValueTable vt;
    vt.v = std::move(v);
    vt.subsidy = subsidy;
    vt.residual = residual;
    vt.iterations = it;

    passive_continuations(ct, vt.v, cont);
    const double act = m.lambda - m.c - m.theta + m.beta * vt.v[ct.reset_index];
    double vmax = 0.0;
    for (double t : vt.v) vmax = std::max(vmax, std::abs(t));
    std::vector<double> q_pass(n + 1);
    for (int k = 0; k <= n; ++k) {
        q_pass[k] = m.lambda * k / n - m.theta + subsidy + m.beta * cont[k];
    }
    vt.threshold_index = threshold_from_values(q_pass, act, n, 1e-9 * (1.0 + vmax));
    return vt;
}

// Exact optimum of the LP formulation.  Each policy-evaluation step solves
// the linear system formed by the constraints the policy makes active,
// and greedy improvement is the LP pivot; termination at an unimprovable
// policy is exactly LP optimality for discounted MDPs.
ValueTable solve_linear_program(const AdrModel& m, const ContinuationTable& ct, double subsidy) {
    const int n = ct.n;
    const int dim = n + 1;
    std::vector<char> repair(dim, 0);
    std::vector<double> v(dim, 0.0), cont(dim);

    // Greedy initialization from the myopic values.
    for (int k = 0; k <= n; ++k) {
        repair[k] = (m.lambda - m.c > m.lambda * static_cast<double>(k) / n + subsidy) ? 1 : 0;
    }

    Eigen::MatrixXd A(dim, dim);
    Eigen::VectorXd rhs(dim);
    constexpr int kMaxPolicyIters = 500;
    for (int round = 0; round < kMaxPolicyIters; ++round) {
        A.setZero();
        for (int k = 0; k <= n; ++k) {
            A(k, k) += 1.0;
            if (repair[k]) {
                A(k, ct.reset_index) -= m.beta;
                rhs(k) = m.lambda - m.c - m.theta;
            } else {
                for (const auto& o : ct.rows[k]) A(k, o.index) -= m.beta * o.weight;
                rhs(k) = m.lambda * static_cast<double>(k) / n - m.theta + subsidy;
            }
        }
        Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
        for (int k = 0; k <= n; ++k) v[k] = sol(k);

        passive_continuations(ct, v, cont);
        const double act = m.lambda - m.c - m.theta + m.beta * v[ct.reset_index];
        bool changed = false;
        for (int k = 0; k <= n; ++k) {
            const double pass = m.lambda * static_cast<double>(k) / n - m.theta + subsidy +
                                m.beta * cont[k];
            // Switch only on strict improvement to rule out cycling.
            const char want = (repair[k] && act >= pass) || (!repair[k] && act > pass) ? 1 : 0;
            if (want != repair[k]) {
                repair[k] = want;
                changed = true;
            }
        }
        if (!changed) {
            ValueTable vt;
            vt.v = std::move(v);
            vt.subsidy = subsidy;
            vt.residual = 0.0;  // exact solve of the optimal policy's rows
            vt.iterations = round + 1;
            double vmax = 0.0;
            for (double t : vt.v) vmax = std::max(vmax, std::abs(t));
            std::vector<double> q_pass(dim);
            for (int k = 0; k <= n; ++k) {
                q_pass[k] = m.lambda * static_cast<double>(k) / n - m.theta + subsidy +
                            m.beta * cont[k];
            }
            vt.threshold_index = threshold_from_values(q_pass, act, n, 1e-9 * (1.0 + vmax));
            return vt;
        }
    }
    throw SolverError("solve_value: policy iteration did not settle", -1.0);
}

}  // namespace

ValueTable solve_value(const AdrModel& model, const ContinuationTable& cont, double subsidy,
                       SolveMethod method, double tol) {
    model.validate();
    if (cont.rows.size() != static_cast<std::size_t>(cont.n) + 1) {
        throw std::invalid_argument("solve_value: continuation table missing compressed rows");
    }
    if (subsidy < 0.0) throw std::invalid_argument("solve_value: subsidy must be >= 0");
    if (method == SolveMethod::FixedPoint) return solve_fixed_point(model, cont, subsidy, tol);
    return solve_linear_program(model, cont, subsidy);
}

std::optional<double> extract_threshold(const ValueTable& vt, const BeliefGrid& grid) {
    if (vt.threshold_index < 0) return std::nullopt;
    return grid.belief(vt.threshold_index);
}

// --- cache -----------------------------------------------------------------

namespace {
std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

const char kCacheMagic[8] = {'A', 'D', 'R', 'C', 'O', 'N', 'T', '1'};
}  // namespace

std::uint64_t continuation_cache_key(const AdrModel& model, const ObsScenario& scn,
                                     const BeliefGrid& grid, int N, std::uint64_t seed) {
    char buf[64];
    std::string s = "cont-v1";
    auto add = [&](double x) {
        std::snprintf(buf, sizeof buf, ";%.17g", x);
        s += buf;
    };
    add(model.p);  // the only model parameter that shapes the table
    add(scn.sigma);
    add(scn.nu0);
    add(scn.eta0);
    s += ";case=" + std::to_string(static_cast<int>(scn.obs_case));
    s += ";d=" + std::to_string(scn.d);
    s += ";m=" + std::to_string(scn.m);
    for (double yi : scn.y) add(yi);
    s += ";n=" + std::to_string(grid.n);
    s += ";N=" + std::to_string(N);
    s += ";seed=" + std::to_string(seed);
    return fnv1a64(s);
}

void save_continuation(const std::string& path, const ContinuationTable& cont) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_continuation: cannot open " + path);
    f.write(kCacheMagic, sizeof kCacheMagic);
    const std::int32_t header[3] = {cont.n, cont.N, cont.reset_index};
    f.write(reinterpret_cast<const char*>(header), sizeof header);
    f.write(reinterpret_cast<const char*>(cont.next_index.data()),
            static_cast<std::streamsize>(cont.next_index.size() * sizeof(std::int32_t)));
    if (!f) throw std::runtime_error("save_continuation: write failed on " + path);
}

std::optional<ContinuationTable> load_continuation(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    char magic[8];
    if (!f.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
        return std::nullopt;
    }
    std::int32_t header[3];
    if (!f.read(reinterpret_cast<char*>(header), sizeof header)) return std::nullopt;
    ContinuationTable ct;
    ct.n = header[0];
    ct.N = header[1];
    ct.reset_index = header[2];
    if (ct.n < 2 || ct.N < 1 || ct.reset_index < 0 || ct.reset_index > ct.n) return std::nullopt;
    const std::size_t count = static_cast<std::size_t>(ct.n + 1) * ct.N;
    ct.next_index.resize(count);
    if (!f.read(reinterpret_cast<char*>(ct.next_index.data()),
                static_cast<std::streamsize>(count * sizeof(std::int32_t)))) {
        return std::nullopt;
    }
    for (std::int32_t idx : ct.next_index) {
        if (idx < 0 || idx > ct.n) return std::nullopt;
    }
    ct.compress();
    return ct;
}

}  // namespace adr
