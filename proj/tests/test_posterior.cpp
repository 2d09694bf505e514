#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "chad/engine.hpp"
#include "chad/posterior.hpp"
#include "chad/rng.hpp"

using namespace chad;
using Catch::Approx;

namespace {

Model bench_model() {
    return Model(ResponseModel({BernoulliResponse(0.45), BernoulliResponse(0.35),
                                BernoulliResponse(0.25)}),
                 ChangePointModel::markovian(0.0, {0.1, 0.05, 0.0}));
}

Model mixed_history_model() {
    return Model(
        ResponseModel({BernoulliResponse(0.4), GaussianResponse(0.0, 0.8)}),
        ChangePointModel::history_dependent(
            0.15,
            [](std::span<const int> h) {
                // path-dependent: decays with time, bumps on treatment 0
                const double base = h.back() == 0 ? 0.2 : 0.05;
                return base / (1.0 + 0.1 * static_cast<double>(h.size()));
            },
            {0.0, 0.0}, {0.2, 0.05}));
}

} // namespace

TEST_CASE("posterior state from the prior", "[posterior]") {
    CHECK(PosteriorState::from_prior(0.2).odds() == Approx(0.25).epsilon(1e-15));
    CHECK(PosteriorState::from_prior(0.0).log_odds == kNegInf);
    CHECK(PosteriorState::from_prior(0.5).log_odds == 0.0);
    CHECK(PosteriorState::from_prior(0.2).probability() == Approx(0.2).epsilon(1e-14));
}

TEST_CASE("one update matches the hand-worked recursion", "[posterior]") {
    // Gamma' = (Gamma + pi) * Lambda / (1 - pi)
    PosteriorState s = PosteriorState::from_prior(0.2);
    s = update_odds(s, 0.1, std::log(2.0));
    CHECK(s.odds() == Approx(0.7 / 0.9).epsilon(1e-14));

    PosteriorState z = PosteriorState::from_prior(0.0);
    z = update_odds(z, 0.1, 0.0);
    CHECK(z.odds() == Approx(1.0 / 9.0).epsilon(1e-14));

    // no hazard and flat likelihood: odds unchanged
    PosteriorState f{std::log(0.3)};
    f = update_odds(f, 0.0, 0.0);
    CHECK(f.odds() == Approx(0.3).epsilon(1e-14));

    CHECK_THROWS_AS(update_odds(s, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(update_odds(s, -0.1, 0.0), ConfigError);
    CHECK_THROWS_AS(update_odds(s, 1.5, 0.0), ConfigError);
}

TEST_CASE("recursion agrees with the direct sum on random histories", "[posterior]") {
    const Model markov = bench_model();
    const Model history = mixed_history_model();

    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Model& model = trial % 2 ? history : markov;
        const std::uint64_t rep = static_cast<std::uint64_t>(trial);
        StepRng pick(777, rep, kStreamAux, 0);
        const int len = 1 + static_cast<int>(pick.next() * 12.0);

        TrialEngine engine(model, 777, rep);
        PosteriorState post =
            PosteriorState::from_prior(model.change_point.prior());
        std::vector<int> treatments;
        std::vector<double> responses;
        for (int t = 0; t < len; ++t) {
            const int x = static_cast<int>(pick.next() * model.num_treatments());
            const StepResult r = engine.step(x);
            post = update_odds(post, r.pi,
                               model.response.log_density_ratio(x, r.response));
            treatments.push_back(x);
            responses.push_back(r.response);
        }

        const double direct = brute_force_posterior(model, treatments, responses);
        if (direct == 0.0) {
            // zero prior and an all-zero-rate path: both sides must agree on it
            REQUIRE(post.log_odds == kNegInf);
        } else {
            REQUIRE(post.log_odds == Approx(std::log(direct)).margin(1e-10));
        }
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("odds stay at zero when nothing can move them", "[posterior]") {
    // zero prior, zero hazard: both evaluations agree the odds are zero
    const Model model = bench_model();
    TrialEngine engine(model, 31, 0);
    PosteriorState post = PosteriorState::from_prior(0.0);
    std::vector<int> treatments;
    std::vector<double> responses;
    for (int t = 0; t < 6; ++t) {
        const StepResult r = engine.step(2);
        post = update_odds(post, r.pi, model.response.log_density_ratio(2, r.response));
        treatments.push_back(2);
        responses.push_back(r.response);
    }
    CHECK(post.log_odds == kNegInf);
    CHECK(brute_force_posterior(model, treatments, responses) == 0.0);
}

TEST_CASE("direct sum validates its inputs", "[posterior]") {
    const Model model = bench_model();
    const std::vector<int> xs = {0, 1};
    const std::vector<double> ys = {1.0};
    CHECK_THROWS_AS(brute_force_posterior(model, xs, ys), ConfigError);
}

TEST_CASE("first crossing stops at the threshold", "[posterior]") {
    const Model model = bench_model();
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        TrialEngine engine(model, 13, rep);
        const TrialOutcome out = shiryaev_first_crossing(engine, 0, 19.0);
        REQUIRE(out.stop_time >= 1);
        REQUIRE(out.log_odds >= std::log(19.0));
        REQUIRE(out.change_time >= 0);
        REQUIRE(out.false_alarm == (out.stop_time < out.change_time));
    }
}

TEST_CASE("a prior above threshold stops before observing", "[posterior]") {
    const Model model(ResponseModel({BernoulliResponse(0.45)}),
                      ChangePointModel::markovian(0.5, {0.1}));
    TrialEngine engine(model, 17, 3);
    const TrialOutcome out = shiryaev_first_crossing(engine, 0, 0.9);
    CHECK(out.stop_time == 0);
    CHECK(out.log_odds == 0.0);  // odds exactly 1

    TrialEngine other(model, 17, 4);
    CHECK_THROWS_AS(shiryaev_first_crossing(other, 0, 0.0), ConfigError);
}

TEST_CASE("false alarm estimate averages 1/(1+odds)", "[posterior]") {
    const std::vector<double> odds = {0.0, 1.0, 3.0};
    const MeanSE m = false_alarm_estimate(odds);
    CHECK(m.mean == Approx(7.0 / 12.0).epsilon(1e-15));
    CHECK(m.se > 0.0);

    const std::vector<double> bad = {-0.5};
    CHECK_THROWS_AS(false_alarm_estimate(bad), ConfigError);
}
