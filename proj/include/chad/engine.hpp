#pragma once

// Simulates one replication of a trial.  Per period t = 1, 2, ...:
//
//   1. the caller picks a treatment x_t (appended to the path),
//   2. if the change has not happened yet it occurs with probability
//      pi_t(x_1..x_t), driven by the latent uniform stream,
//   3. a response Y_t is drawn from f_{x_t} or g_{x_t} according to the
//      (possibly just-updated) latent state, on the response stream.
//
// At t = 0 only the prior fires: L_0 = 1 with probability pi_0.  The change
// is irreversible.  All draws are counter-based, so a replication is a pure
// function of (model, seed, rep).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chad/errors.hpp"
#include "chad/model.hpp"
#include "chad/rng.hpp"

namespace chad {

inline constexpr std::int64_t kDefaultMaxHorizon = 10'000'000;

struct StepResult {
    double response;
    double pi;        // transition probability applied this period
    bool post_change; // latent state after the period
};

class TrialEngine {
public:
    // Holds a pointer to `model`; the caller keeps it alive for the engine's
    // lifetime (engines are per-replication, models span a whole run).
    TrialEngine(const Model& model, std::uint64_t seed, std::uint64_t rep,
                std::int64_t max_horizon = kDefaultMaxHorizon)
        : model_(&model), seed_(seed), rep_(rep), max_horizon_(max_horizon) {
        if (max_horizon_ < 1) throw ConfigError("max horizon must be positive");
        const double pi0 = model.change_point.prior();
        if (pi0 > 0.0 && uniform(seed_, rep_, kStreamLatent, 0) < pi0) {
            changed_ = true;
            change_time_ = 0;
        }
    }

    StepResult step(int treatment) {
        if (t_ >= max_horizon_)
            throw HorizonExceeded(max_horizon_, "trial replication");
        ++t_;
        history_.push_back(treatment);
        const double pi = model_->change_point.transition_prob(history_);
        if (!changed_) {
            if (uniform(seed_, rep_, kStreamLatent, static_cast<std::uint64_t>(t_)) < pi) {
                changed_ = true;
                change_time_ = t_;
            }
        }
        StepRng rng(seed_, rep_, kStreamResponse, static_cast<std::uint64_t>(t_));
        const double y = model_->response.sample(treatment, changed_, rng);
        return {y, pi, changed_};
    }

    std::int64_t time() const { return t_; }
    bool changed() const { return changed_; }
    std::optional<std::int64_t> change_time() const { return change_time_; }
    std::span<const int> history() const { return history_; }
    const Model& model() const { return *model_; }

    // Resolves the change time after a procedure already stopped.  Responses
    // are no longer drawn; the latent chain keeps running under the treatment
    // with the largest next-period transition probability (lowest index on
    // ties) until the change lands.  Uses the same latent stream positions a
    // continued trial would have used.
    std::int64_t ensure_change_time() {
        while (!changed_) {
            if (t_ >= max_horizon_)
                throw HorizonExceeded(max_horizon_, "change-time continuation");
            ++t_;
            history_.push_back(best_next_treatment());
            // A markovian model whose best rate is zero can never change;
            // fail now instead of spinning to the horizon.
            if (model_->change_point.is_markovian() &&
                model_->change_point.rate(history_.back()) == 0.0)
                throw RuntimeFailure("change time is infinite: no treatment has a "
                                     "positive transition rate");
            const double pi = model_->change_point.transition_prob(history_);
            if (uniform(seed_, rep_, kStreamLatent, static_cast<std::uint64_t>(t_)) < pi) {
                changed_ = true;
                change_time_ = t_;
            }
        }
        return *change_time_;
    }

private:
    int best_next_treatment() {
        const auto& cp = model_->change_point;
        int best = 0;
        double best_pi = -1.0;
        history_.push_back(0);  // scratch slot for candidate evaluation
        for (int x = 0; x < model_->num_treatments(); ++x) {
            history_.back() = x;
            const double pi = cp.transition_prob(history_);
            if (pi > best_pi) {
                best_pi = pi;
                best = x;
            }
        }
        history_.pop_back();
        return best;
    }

    const Model* model_;
    std::uint64_t seed_, rep_;
    std::int64_t max_horizon_;
    std::int64_t t_ = 0;
    bool changed_ = false;
    std::optional<std::int64_t> change_time_;
    std::vector<int> history_;
};

} // namespace chad
