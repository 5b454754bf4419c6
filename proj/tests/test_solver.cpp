#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "adrsched/solver.hpp"

using namespace adr;

namespace {

AdrModel base_model() { return AdrModel{}; }  // lambda=1, c=3, theta=0, p=0.05, beta=0.9

ObsScenario near_noiseless_a(int m = 6) {
    ObsScenario s;
    s.m = m;
    s.d = 0;
    s.sigma = 0.01;
    s.nu0 = 1.0;
    s.obs_case = ObsCase::A;
    s.y.assign(m, 0.0);
    s.validate();
    return s;
}

ContinuationTable build_small(const AdrModel& m, const ObsScenario& scn, int n, int N,
                              int threads = 1) {
    const BeliefGrid grid(n);
    QmcStream qmc(scn.point_dimension());
    return build_continuation(m, scn, grid, N, qmc, threads);
}

double sup_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::fabs(x));
    return s;
}

// Exact continuation rows for a two-outcome observation channel:
// P(good | working) = pg1, P(good | broken) = pg0.
ContinuationTable two_outcome_rows(const AdrModel& m, const BeliefGrid& grid, double pg1,
                                   double pg0) {
    std::vector<std::vector<Outcome>> rows(grid.n + 1);
    for (int k = 0; k <= grid.n; ++k) {
        const double b = grid.belief(k);
        const double p_good = b * pg1 + (1.0 - b) * pg0;
        const double p_bad = 1.0 - p_good;
        const double post_good = p_good > 0.0 ? (1.0 - m.p) * b * pg1 / p_good : 0.0;
        const double post_bad = p_bad > 0.0 ? (1.0 - m.p) * b * (1.0 - pg1) / p_bad : 0.0;
        rows[k] = {{grid.round_up(post_good), p_good}, {grid.round_up(post_bad), p_bad}};
    }
    const int reset = grid.round_up(1.0 - m.p);
    return ContinuationTable::from_rows(grid.n, reset, std::move(rows));
}

// Finite-horizon backward induction on the same discretized chain.
int induction_threshold(const AdrModel& m, const ContinuationTable& cont, int horizon) {
    const int n = cont.n;
    std::vector<double> v(n + 1, 0.0), nv(n + 1);
    int threshold = -1;
    for (int t = 0; t < horizon; ++t) {
        threshold = -1;
        for (int k = 0; k <= n; ++k) {
            double cont_val = 0.0;
            for (const Outcome& o : cont.rows[k]) cont_val += o.weight * v[o.index];
            const double passive = m.lambda * k / n - m.theta + m.beta * cont_val;
            const double active = m.lambda - m.c - m.theta + m.beta * v[cont.reset_index];
            nv[k] = std::max(passive, active);
            if (active >= passive - 1e-9 * (1.0 + sup_norm(v))) threshold = k;
        }
        v.swap(nv);
    }
    return threshold;
}

}  // namespace

TEST_CASE("BeliefGrid: ceiling rule with exact-point protection") {
    const BeliefGrid g(100);
    CHECK(g.round_up(0.0) == 0);
    CHECK(g.round_up(1.0) == 100);
    CHECK(g.round_up(0.151) == 16);
    CHECK(g.round_up(0.15) == 15);
    CHECK(g.round_up(0.0049999) == 1);
    CHECK(g.round_up(1e-15) == 0);  // guarded against ceil noise
    for (int k = 0; k <= 100; ++k) CHECK(g.round_up(g.belief(k)) == k);
    CHECK(g.belief(16) == doctest::Approx(0.16));
    CHECK_THROWS_AS(BeliefGrid(1), std::invalid_argument);
}

TEST_CASE("from_rows: validates shape, indices, and weights") {
    const BeliefGrid g(4);
    std::vector<std::vector<Outcome>> rows(5, {{0, 1.0}});
    CHECK_NOTHROW(ContinuationTable::from_rows(4, 4, rows));

    std::vector<std::vector<Outcome>> short_rows(4, {{0, 1.0}});
    CHECK_THROWS_AS(ContinuationTable::from_rows(4, 4, short_rows), std::invalid_argument);

    std::vector<std::vector<Outcome>> bad_index(5, {{0, 1.0}});
    bad_index[2] = {{7, 1.0}};
    CHECK_THROWS_AS(ContinuationTable::from_rows(4, 4, bad_index), std::invalid_argument);

    std::vector<std::vector<Outcome>> bad_weight(5, {{0, 1.0}});
    bad_weight[1] = {{0, 0.3}, {1, 0.3}};
    CHECK_THROWS_AS(ContinuationTable::from_rows(4, 4, bad_weight), std::invalid_argument);
}

TEST_CASE("build_continuation: absorbing bottom row, reset top row") {
    const AdrModel m = base_model();
    const ContinuationTable cont = build_small(m, near_noiseless_a(), 40, 400);
    CHECK(cont.n == 40);
    CHECK(cont.N == 400);
    CHECK(cont.reset_index == 38);  // ceil(0.95 * 40)

    for (int j = 0; j < cont.N; ++j) CHECK(cont.next_at(0, j) == 0);

    // Near-noiseless readings at full belief confirm the device works.
    int at_reset = 0;
    for (int j = 0; j < cont.N; ++j) {
        CHECK(cont.next_at(40, j) >= 0);
        CHECK(cont.next_at(40, j) <= 40);
        if (cont.next_at(40, j) == cont.reset_index) ++at_reset;
    }
    CHECK(at_reset >= (95 * cont.N) / 100);

    for (auto& row : cont.rows) {
        double total = 0.0;
        for (const Outcome& o : row) total += o.weight;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("build_continuation: deterministic and thread-count invariant") {
    const AdrModel m = base_model();
    const ContinuationTable a = build_small(m, near_noiseless_a(), 20, 200, 1);
    const ContinuationTable b = build_small(m, near_noiseless_a(), 20, 200, 1);
    const ContinuationTable c = build_small(m, near_noiseless_a(), 20, 200, 3);
    CHECK(a.next_index == b.next_index);
    CHECK(a.next_index == c.next_index);

    ObsScenario scn = near_noiseless_a();
    QmcStream wrong(scn.point_dimension() + 2);
    const BeliefGrid grid(20);
    CHECK_THROWS_AS(build_continuation(m, scn, grid, 10, wrong), std::invalid_argument);
    QmcStream ok(scn.point_dimension());
    CHECK_THROWS_AS(build_continuation(m, scn, grid, 0, ok), std::invalid_argument);
}

TEST_CASE("solve_value: free repair dominates everywhere, dear repair nowhere") {
    AdrModel m = base_model();
    const ContinuationTable cont = build_small(m, near_noiseless_a(), 40, 400);

    m.c = 0.0;
    const ValueTable free_repair = solve_value(m, cont, 0.0);
    CHECK(free_repair.threshold_index == 40);

    m.c = 100.0;
    const ValueTable dear_repair = solve_value(m, cont, 0.0);
    CHECK(dear_repair.threshold_index == -1);
    CHECK_FALSE(extract_threshold(dear_repair, BeliefGrid(40)).has_value());
}

TEST_CASE("solve_value: value iteration and policy iteration agree") {
    const AdrModel m = base_model();
    const ContinuationTable cont = build_small(m, near_noiseless_a(), 40, 400);
    const ValueTable vi = solve_value(m, cont, 0.0, SolveMethod::FixedPoint);
    const ValueTable lp = solve_value(m, cont, 0.0, SolveMethod::LinearProgram);

    CHECK(vi.threshold_index == lp.threshold_index);
    const double scale = 1.0 + sup_norm(lp.v);
    for (int k = 0; k <= 40; ++k) {
        CHECK(std::fabs(vi.v[k] - lp.v[k]) <= 1e-6 * scale);
    }
    CHECK(vi.residual <= 1e-9 * scale);

    // Also under a positive subsidy.
    const ValueTable vi_mu = solve_value(m, cont, 0.8, SolveMethod::FixedPoint);
    const ValueTable lp_mu = solve_value(m, cont, 0.8, SolveMethod::LinearProgram);
    CHECK(vi_mu.threshold_index == lp_mu.threshold_index);
    for (int k = 0; k <= 40; ++k) {
        CHECK(std::fabs(vi_mu.v[k] - lp_mu.v[k]) <= 1e-6 * (1.0 + sup_norm(lp_mu.v)));
    }
}

TEST_CASE("solve_value: solution satisfies the Bellman equation") {
    const AdrModel m = base_model();
    const ContinuationTable cont = build_small(m, near_noiseless_a(), 40, 400);
    const ValueTable vt = solve_value(m, cont, 0.0, SolveMethod::LinearProgram);
    const double tol = 1e-7 * (1.0 + sup_norm(vt.v));

    std::vector<int> active_set;
    for (int k = 0; k <= 40; ++k) {
        double cont_val = 0.0;
        for (const Outcome& o : cont.rows[k]) cont_val += o.weight * vt.v[o.index];
        const double passive = m.lambda * k / 40.0 + m.beta * cont_val;
        const double active = m.lambda - m.c + m.beta * vt.v[cont.reset_index];
        CHECK(vt.v[k] == doctest::Approx(std::max(passive, active)).epsilon(1e-9));
        if (active >= passive - tol) active_set.push_back(k);
    }

    // Repair-optimal set is a prefix ending at the reported threshold.
    REQUIRE(!active_set.empty());
    CHECK(active_set.back() == vt.threshold_index);
    for (std::size_t i = 0; i < active_set.size(); ++i) {
        CHECK(active_set[i] == static_cast<int>(i));
    }

    // Value is non-decreasing in belief.
    for (int k = 1; k <= 40; ++k) CHECK(vt.v[k] >= vt.v[k - 1] - 1e-9);
}

TEST_CASE("solve_value: value is convex in belief on an exact channel") {
    // Perfectly informative readings: the belief jumps to reset (working)
    // or 0 (broken) with weights linear in the current belief, so the value
    // is a max of affine functions of k and must be exactly convex.  Coarse
    // exact channels with belief-dependent outcomes are not a fair convexity
    // check: rounding next-beliefs to the grid staircases second
    // differences by O(beta * dV/db / n).
    const AdrModel m = base_model();
    const int n = 200;
    const BeliefGrid grid(n);
    const int reset = grid.round_up(1.0 - m.p);
    std::vector<std::vector<Outcome>> rows(n + 1);
    for (int k = 0; k <= n; ++k) {
        const double b = grid.belief(k);
        rows[k] = {{reset, b}, {0, 1.0 - b}};
    }
    const ContinuationTable cont = ContinuationTable::from_rows(n, reset, std::move(rows));
    const ValueTable vt = solve_value(m, cont, 0.0, SolveMethod::LinearProgram);
    const double conv_tol = 1e-9 * (1.0 + sup_norm(vt.v));
    for (int k = 1; k < n; ++k) {
        CHECK(vt.v[k + 1] - 2.0 * vt.v[k] + vt.v[k - 1] >= -conv_tol);
    }
}

TEST_CASE("solve_value: threshold is non-increasing in the subsidy") {
    const AdrModel m = base_model();
    const ContinuationTable cont = build_small(m, near_noiseless_a(), 40, 400);
    int prev = 41;
    for (double mu : {0.0, 0.3, 1.0, 2.0, 4.0, 8.0}) {
        const ValueTable vt = solve_value(m, cont, mu);
        CHECK(vt.threshold_index <= prev);
        prev = vt.threshold_index;
    }
    CHECK_THROWS_AS(solve_value(m, cont, -0.5), std::invalid_argument);
}

TEST_CASE("solve_value: rejects a table without compressed rows") {
    ContinuationTable empty;
    empty.n = 4;
    empty.N = 2;
    empty.reset_index = 4;
    CHECK_THROWS_AS(solve_value(base_model(), empty, 0.0), std::invalid_argument);
}

TEST_CASE("extract_threshold: index to belief") {
    ValueTable vt;
    vt.threshold_index = 16;
    CHECK(extract_threshold(vt, BeliefGrid(100)).value() == doctest::Approx(0.16));
    vt.threshold_index = 15;
    CHECK(extract_threshold(vt, BeliefGrid(100)).value() == doctest::Approx(0.15));
    vt.threshold_index = -1;
    CHECK_FALSE(extract_threshold(vt, BeliefGrid(100)).has_value());
}

TEST_CASE("discrete-channel oracle: infinite-horizon threshold matches induction") {
    const AdrModel m = base_model();
    const BeliefGrid grid(200);
    const ContinuationTable cont = two_outcome_rows(m, grid, 0.8, 0.3);

    const ValueTable vt = solve_value(m, cont, 0.0, SolveMethod::FixedPoint);
    const int oracle = induction_threshold(m, cont, 60);
    CHECK(std::abs(vt.threshold_index - oracle) <= 1);

    const ValueTable lp = solve_value(m, cont, 0.0, SolveMethod::LinearProgram);
    CHECK(lp.threshold_index == vt.threshold_index);
}

TEST_CASE("serialization: round trip, corrupt file, missing file") {
    const AdrModel m = base_model();
    const ContinuationTable cont = build_small(m, near_noiseless_a(), 12, 64);
    const std::string path =
        (std::filesystem::temp_directory_path() / "adrsched_test_cont.bin").string();

    save_continuation(path, cont);
    const auto loaded = load_continuation(path);
    REQUIRE(loaded.has_value());
    CHECK(loaded->n == cont.n);
    CHECK(loaded->N == cont.N);
    CHECK(loaded->reset_index == cont.reset_index);
    CHECK(loaded->next_index == cont.next_index);
    REQUIRE(loaded->rows.size() == cont.rows.size());
    for (std::size_t k = 0; k < cont.rows.size(); ++k) {
        REQUIRE(loaded->rows[k].size() == cont.rows[k].size());
        for (std::size_t i = 0; i < cont.rows[k].size(); ++i) {
            CHECK(loaded->rows[k][i].index == cont.rows[k][i].index);
            CHECK(loaded->rows[k][i].weight == cont.rows[k][i].weight);
        }
    }

    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << "not a continuation table";
    }
    CHECK_FALSE(load_continuation(path).has_value());
    std::remove(path.c_str());
    CHECK_FALSE(load_continuation(path).has_value());
}

TEST_CASE("cache key: sensitive to every input") {
    const AdrModel m = base_model();
    const ObsScenario scn = near_noiseless_a();
    const BeliefGrid grid(40);
    const std::uint64_t base = continuation_cache_key(m, scn, grid, 400, 0);
    CHECK(continuation_cache_key(m, scn, grid, 400, 0) == base);

    AdrModel m2 = m;
    m2.p = 0.06;
    CHECK(continuation_cache_key(m2, scn, grid, 400, 0) != base);

    ObsScenario scn2 = scn;
    scn2.sigma = 0.02;
    CHECK(continuation_cache_key(m, scn2, grid, 400, 0) != base);

    ObsScenario scn3 = scn;
    scn3.obs_case = ObsCase::C;
    scn3.eta0 = 100.0;
    CHECK(continuation_cache_key(m, scn3, grid, 400, 0) != base);

    CHECK(continuation_cache_key(m, scn, BeliefGrid(41), 400, 0) != base);
    CHECK(continuation_cache_key(m, scn, grid, 401, 0) != base);
    CHECK(continuation_cache_key(m, scn, grid, 400, 1) != base);
}
