#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "adrsched/core.hpp"

using namespace adr;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

AdrModel base_model() {
    AdrModel m;  // lambda=1, c=3, theta=0, p=0.05, beta=0.9
    return m;
}

// Independent Bayes-rule oracle in raw probability space; only valid for
// moderate log-likelihoods where exp() neither under- nor overflows.
double belief_oracle(const AdrModel& m, double b, double log_q0, double log_q1) {
    const double q0 = std::exp(log_q0);
    const double q1 = std::exp(log_q1);
    return (1.0 - m.p) * b * q1 / (b * q1 + (1.0 - b) * q0);
}

}  // namespace

TEST_CASE("reward: repair pays lambda - c regardless of belief") {
    const AdrModel m = base_model();
    CHECK(reward(m, Action::SendCrew, 0.7) == doctest::Approx(-2.0));
    CHECK(reward(m, Action::SendCrew, 0.0) == doctest::Approx(-2.0));
    CHECK(reward(m, Action::SendCrew, 1.0) == doctest::Approx(-2.0));
}

TEST_CASE("reward: do-nothing is linear in belief") {
    const AdrModel m = base_model();
    CHECK(reward(m, Action::DoNothing, 0.0) == doctest::Approx(0.0));
    CHECK(reward(m, Action::DoNothing, 0.4) == doctest::Approx(0.4));
    // Affine with slope lambda: finite differences are constant.
    AdrModel m2 = m;
    m2.lambda = 2.5;
    for (double b = 0.0; b <= 0.9; b += 0.1) {
        const double slope = (reward(m2, Action::DoNothing, b + 0.1) -
                              reward(m2, Action::DoNothing, b)) / 0.1;
        CHECK(slope == doctest::Approx(2.5).epsilon(1e-12));
    }
}

TEST_CASE("reward: theta shifts both actions uniformly") {
    AdrModel m = base_model();
    m.theta = 0.7;
    CHECK(reward(m, Action::DoNothing, 0.4) == doctest::Approx(0.4 - 0.7));
    CHECK(reward(m, Action::SendCrew, 0.4) == doctest::Approx(-2.0 - 0.7));
}

TEST_CASE("transition_row: broken is absorbing unless repaired") {
    const AdrModel m = base_model();
    const StateDist r1 = transition_row(m, Action::DoNothing, AdrState::Broken);
    CHECK(r1.broken == doctest::Approx(1.0));
    CHECK(r1.working == doctest::Approx(0.0));

    const StateDist r2 = transition_row(m, Action::SendCrew, AdrState::Broken);
    CHECK(r2.broken == doctest::Approx(0.05));
    CHECK(r2.working == doctest::Approx(0.95));

    const StateDist r3 = transition_row(m, Action::DoNothing, AdrState::Working);
    CHECK(r3.broken == doctest::Approx(0.05));
    CHECK(r3.working == doctest::Approx(0.95));

    const StateDist r4 = transition_row(m, Action::SendCrew, AdrState::Working);
    CHECK(r4.broken == doctest::Approx(0.05));
    CHECK(r4.working == doctest::Approx(0.95));
}

TEST_CASE("belief_update: repair forces belief to 1 - p") {
    const AdrModel m = base_model();
    for (double b : {0.0, 0.3, 0.5, 1.0}) {
        CHECK(belief_update(m, Action::SendCrew, b, {-5.0, -1.0}) == doctest::Approx(0.95));
        CHECK(belief_update(m, Action::SendCrew, b, {12.0, -40.0}) == doctest::Approx(0.95));
    }
}

TEST_CASE("belief_update: zero belief is absorbing, full belief resets") {
    const AdrModel m = base_model();
    CHECK(belief_update(m, Action::DoNothing, 0.0, {3.0, -3.0}) == doctest::Approx(0.0));
    CHECK(belief_update(m, Action::DoNothing, 1.0, {3.0, -3.0}) == doctest::Approx(0.95));
}

TEST_CASE("belief_update: uninformative observation shrinks belief by 1 - p") {
    const AdrModel m = base_model();
    CHECK(belief_update(m, Action::DoNothing, 0.5, {-2.0, -2.0}) == doctest::Approx(0.475));
    CHECK(belief_update(m, Action::DoNothing, 0.2, {0.0, 0.0}) ==
          doctest::Approx(0.95 * 0.2).epsilon(1e-12));
}

TEST_CASE("belief_update: agrees with raw-space Bayes rule") {
    const AdrModel m = base_model();
    for (double b : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        for (double lq0 : {-3.0, -1.0, 0.5}) {
            for (double lq1 : {-2.5, 0.0, 1.25}) {
                const double got = belief_update(m, Action::DoNothing, b, {lq0, lq1});
                const double want = belief_oracle(m, b, lq0, lq1);
                CHECK(got == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("belief_update: stays in [0, 1-p] and is monotone in the ratio") {
    const AdrModel m = base_model();
    for (double b : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        double prev = -1.0;
        for (double llr : {-700.0, -40.0, -2.0, 0.0, 2.0, 40.0, 700.0}) {
            const double nb = belief_update(m, Action::DoNothing, b, {0.0, llr});
            CHECK(nb >= 0.0);
            CHECK(nb <= 1.0 - m.p + 1e-15);
            CHECK(nb >= prev - 1e-15);  // non-decreasing in logQ1 - logQ0
            prev = nb;
        }
    }
}

TEST_CASE("belief_update: invariant to a common likelihood shift") {
    const AdrModel m = base_model();
    for (double shift : {-300.0, -7.0, 0.0, 13.0, 250.0}) {
        const double a = belief_update(m, Action::DoNothing, 0.37, {-4.0, -2.5});
        const double b = belief_update(m, Action::DoNothing, 0.37, {-4.0 + shift, -2.5 + shift});
        CHECK(a == doctest::Approx(b).epsilon(1e-14));
    }
}

TEST_CASE("belief_update: impossible observation and bad belief are errors") {
    const AdrModel m = base_model();
    CHECK_THROWS_AS(belief_update(m, Action::DoNothing, 0.5, {-kInf, -kInf}), std::domain_error);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(belief_update(m, Action::DoNothing, 0.5, {nan, 0.0}), std::domain_error);
    CHECK_THROWS_AS(belief_update(m, Action::DoNothing, 0.5, {0.0, nan}), std::domain_error);
    CHECK_THROWS_AS(belief_update(m, Action::DoNothing, -0.1, {0.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(belief_update(m, Action::DoNothing, 1.1, {0.0, 0.0}), std::domain_error);
}

TEST_CASE("AdrModel::validate rejects out-of-range parameters") {
    AdrModel m = base_model();
    CHECK_NOTHROW(m.validate());
    m.p = 0.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m.p = 1.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = base_model();
    m.beta = 1.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = base_model();
    m.c = -0.5;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = base_model();
    m.lambda = -1.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = base_model();
    m.theta = -0.1;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("sigmoid: stable at extreme arguments") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(800.0) == doctest::Approx(1.0));
    CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
    CHECK(std::isfinite(sigmoid(-5000.0)));
    CHECK(std::isfinite(sigmoid(5000.0)));
    for (double t : {-30.0, -3.0, -0.5, 0.4, 2.0, 25.0}) {
        CHECK(sigmoid(t) + sigmoid(-t) == doctest::Approx(1.0).epsilon(1e-14));
    }
}
