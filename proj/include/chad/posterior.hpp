#pragma once

// Posterior odds of the change having happened, Gamma_t = P(change by t | data)
// over P(not yet).  Given the period-t transition probability pi_t and the
// likelihood ratio Lambda_t = g_{x_t}(y_t)/f_{x_t}(y_t),
//
//   Gamma_t = (Gamma_{t-1} + pi_t) * Lambda_t / (1 - pi_t),
//
// started from the prior odds Gamma_0 = pi_0/(1-pi_0).  The recursion runs in
// log space (log-sum-exp) so thresholds like 1e7 and prior zero both behave:
// Gamma = 0 is the log-odds -inf, and one update with pi_t > 0 lifts it.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chad/engine.hpp"
#include "chad/errors.hpp"
#include "chad/model.hpp"
#include "chad/outcome.hpp"
#include "chad/stats.hpp"

namespace chad {

struct PosteriorState {
    double log_odds = kNegInf;

    static PosteriorState from_prior(double pi0) {
        return {logit(pi0)};
    }

    double odds() const { return std::exp(log_odds); }
    // P(change by now | data) = Gamma/(1+Gamma)
    double probability() const { return 1.0 - inv_one_plus_exp(log_odds); }
};

inline PosteriorState update_odds(PosteriorState s, double pi, double log_ratio) {
    if (!(pi >= 0.0 && pi < 1.0)) {
        if (pi == 1.0)
            throw ConfigError("transition probability 1 puts infinite mass on the "
                              "change; the odds update divides by 1 - pi");
        throw ConfigError("transition probability outside [0,1): " + std::to_string(pi));
    }
    return {log_add(s.log_odds, std::log(pi)) + log_ratio - std::log1p(-pi)};
}

// Direct evaluation of the posterior odds from a full observation record,
// without the recursion: sum over every possible change period s of
//
//   R_s = pi_s * prod_{j=s..t} Lambda_j / (1 - pi_j),   Lambda_0 := 1,
//
// where pi_0 is the prior.  Quadratic in t and linear-space, so only suited
// to short histories; it exists as an independent cross-check of update_odds.
inline double brute_force_posterior(const Model& model,
                                    std::span<const int> treatments,
                                    std::span<const double> responses) {
    if (treatments.size() != responses.size())
        throw ConfigError("treatment and response histories differ in length");
    const std::size_t t = treatments.size();

    std::vector<double> pi(t + 1), lambda(t + 1);
    pi[0] = model.change_point.prior();
    lambda[0] = 1.0;
    for (std::size_t j = 1; j <= t; ++j) {
        pi[j] = model.change_point.transition_prob(treatments.first(j));
        lambda[j] = std::exp(
            model.response.log_density_ratio(treatments[j - 1], responses[j - 1]));
    }

    double total = 0.0;
    for (std::size_t s = 0; s <= t; ++s) {
        double term = pi[s];
        for (std::size_t j = s; j <= t; ++j)
            term *= lambda[j] / (1.0 - pi[j]);
        total += term;
    }
    return total;
}

// Single-treatment stopping rule: keep assigning `treatment` and stop the
// first time the posterior odds reach b.  The t = 0 check comes first: a
// prior already at or above threshold stops before any observation.
inline TrialOutcome shiryaev_first_crossing(TrialEngine& engine, int treatment,
                                            double b) {
    if (!(b > 0.0))
        throw ConfigError("odds threshold must be positive, got " + std::to_string(b));
    const double log_b = std::log(b);

    PosteriorState post =
        PosteriorState::from_prior(engine.model().change_point.prior());
    while (post.log_odds < log_b) {
        const StepResult step = engine.step(treatment);
        post = update_odds(
            post, step.pi,
            engine.model().response.log_density_ratio(treatment, step.response));
    }

    TrialOutcome out;
    out.stop_time = engine.time();
    out.log_odds = post.log_odds;
    out.false_alarm = !engine.changed();
    out.change_time = engine.ensure_change_time();
    return out;
}

// P(no change by T | data at T) = 1/(1 + Gamma_T); averaging it over
// replications estimates the false-alarm probability with much less variance
// than the raw indicator.  Every term is <= 1/(1+b) when the rule stops at
// odds b, so the estimate inherits the design guarantee.
inline MeanSE false_alarm_estimate(std::span<const double> terminal_odds) {
    std::vector<double> contrib;
    contrib.reserve(terminal_odds.size());
    for (double g : terminal_odds) {
        if (!(g >= 0.0))
            throw ConfigError("terminal odds must be nonnegative");
        contrib.push_back(1.0 / (1.0 + g));
    }
    return mean_se(contrib);
}

} // namespace chad
