#pragma once

// Stopping rules.
//
// The two-treatment alternating rule splits a trial into cycles: a training
// stage pushes with an accelerating treatment i until the posterior odds
// reach b1, then an assessment stage switches to the detecting treatment j
// and races two events -- the odds reaching the final threshold bK against a
// one-sided likelihood-ratio test of "still pre-change", which rejects when
// the running sum of log(f_j/g_j) reaches log d.  Detection ends the trial;
// a rejection recycles into the next training stage.  The race is resolved
// detection-first, so a step where both fire terminates.
//
// Static designs assign one treatment throughout and stop at odds b.  Solved
// dynamic-programming policies run via run_dp (dp.hpp).

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>

#include "chad/csv.hpp"
#include "chad/dp.hpp"
#include "chad/engine.hpp"
#include "chad/errors.hpp"
#include "chad/outcome.hpp"
#include "chad/posterior.hpp"
#include "chad/quality.hpp"

namespace chad {

struct ProposedSpec {
    int train;   // 0-based treatment assigned in training stages
    int assess;  // 0-based treatment assigned in assessment stages
    double b1;
    double bK;
    double d;

    ProposedSpec(int train, int assess, double b1, double bK, double d)
        : train(train), assess(assess), b1(b1), bK(bK), d(d) {
        if (train < 0 || assess < 0)
            throw ConfigError("treatment indices must be nonnegative");
        if (!(b1 > 1.0))
            throw ConfigError("training threshold b1 must exceed 1");
        if (!(bK > b1))
            throw ConfigError("detection threshold bK must exceed b1");
        if (!(d > 1.0))
            throw ConfigError("assessment test bound d must exceed 1");
    }

    static ProposedSpec calibrated(const TreatmentQuality& q, int train,
                                   int assess, double alpha) {
        const ProposedThresholds th = calibrate_thresholds(q, train, assess, alpha);
        return ProposedSpec(train, assess, th.b1, th.bK, th.d);
    }
};

struct StaticSpec {
    int treatment;  // 0-based
    double b;

    StaticSpec(int treatment, double b) : treatment(treatment), b(b) {
        if (treatment < 0)
            throw ConfigError("treatment index must be nonnegative");
        if (!(b > 0.0))
            throw ConfigError("odds threshold must be positive");
    }

    static StaticSpec calibrated(int treatment, double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ConfigError("alpha must lie in (0,1)");
        return StaticSpec(treatment, (1.0 - alpha) / alpha);
    }
};

struct DpRunSpec {
    std::shared_ptr<const DpPolicy> policy;
};

using ProcedureSpec = std::variant<ProposedSpec, StaticSpec, DpRunSpec>;

inline TrialOutcome run_static(TrialEngine& engine, const StaticSpec& spec) {
    return shiryaev_first_crossing(engine, spec.treatment, spec.b);
}

inline TrialOutcome run_proposed(TrialEngine& engine, const ProposedSpec& spec) {
    const Model& model = engine.model();
    const double log_b1 = std::log(spec.b1);
    const double log_bK = std::log(spec.bK);
    const double log_d = std::log(spec.d);

    PosteriorState post = PosteriorState::from_prior(model.change_point.prior());
    TrialOutcome out;

    while (true) {
        // Training stage: push with `train` until the odds reach b1.  Takes
        // at least one observation even if the odds already sit above it.
        do {
            const StepResult step = engine.step(spec.train);
            post = update_odds(post, step.pi,
                               model.response.log_density_ratio(spec.train,
                                                                step.response));
        } while (post.log_odds < log_b1);
        out.stage_ends.push_back(engine.time());
        out.stage_triggers.push_back(StageTrigger::detection);

        // Assessment stage: switch to `assess`; detection races the
        // likelihood-ratio test, whose statistic starts fresh each stage.
        double lr_sum = 0.0;
        bool detected;
        while (true) {
            const StepResult step = engine.step(spec.assess);
            const double log_ratio =
                model.response.log_density_ratio(spec.assess, step.response);
            post = update_odds(post, step.pi, log_ratio);
            lr_sum -= log_ratio;  // log f_j/g_j accumulates as -log g_j/f_j
            if (post.log_odds >= log_bK) {
                detected = true;  // resolves a simultaneous rejection too
                break;
            }
            if (lr_sum >= log_d) {
                detected = false;
                break;
            }
        }
        ++out.cycles;
        out.stage_ends.push_back(engine.time());
        out.stage_triggers.push_back(detected ? StageTrigger::detection
                                              : StageTrigger::test);
        if (detected) break;
    }

    out.stop_time = engine.time();
    out.log_odds = post.log_odds;
    out.false_alarm = !engine.changed();
    out.change_time = engine.ensure_change_time();
    return out;
}

inline TrialOutcome run_procedure(TrialEngine& engine, const ProcedureSpec& spec) {
    return std::visit(
        [&](const auto& s) -> TrialOutcome {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ProposedSpec>) return run_proposed(engine, s);
            else if constexpr (std::is_same_v<T, StaticSpec>) return run_static(engine, s);
            else return run_dp(engine, *s.policy);
        },
        spec);
}

// "(1,3)" for the alternating rule, "(2)" for a static design, "optimal" for
// a solved policy; indices are 1-based to match the reports.
inline std::string procedure_label(const ProcedureSpec& spec) {
    if (const auto* p = std::get_if<ProposedSpec>(&spec))
        return "(" + std::to_string(p->train + 1) + "," +
               std::to_string(p->assess + 1) + ")";
    if (const auto* s = std::get_if<StaticSpec>(&spec))
        return "(" + std::to_string(s->treatment + 1) + ")";
    return "optimal";
}

inline std::string threshold_params(const ProcedureSpec& spec) {
    if (const auto* p = std::get_if<ProposedSpec>(&spec))
        return "b1=" + csv_num(p->b1) + ";bK=" + csv_num(p->bK) +
               ";d=" + csv_num(p->d);
    if (const auto* s = std::get_if<StaticSpec>(&spec))
        return "b=" + csv_num(s->b);
    const auto& dp = *std::get<DpRunSpec>(spec).policy;
    return "c=" + csv_num(dp.cost) + ";b_c=" + csv_num(dp.b_c);
}

} // namespace chad
