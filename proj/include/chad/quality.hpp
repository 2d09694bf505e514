#pragma once

// What makes a treatment useful here is two different things at once:
//
//   acceleration: how fast it provokes the change -- summarized by the mean
//     change time lambda_x under constant assignment of x, and by the
//     per-period floor zeta_x;
//   detectability: how fast evidence accumulates once assigned -- the KL
//     rates I_x, J_x and the combined post-change drift
//     D_x = I_x + |log(1 - p_x)| of the log posterior odds.
//
// The threshold calibration and the delay bounds below are all written in
// terms of these quantities.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "chad/errors.hpp"
#include "chad/model.hpp"
#include "chad/stats.hpp"

namespace chad {

struct TreatmentQuality {
    struct Entry {
        double i_nats;   // KL(g || f)
        double j_nats;   // KL(f || g)
        double d_rate;   // I + |log(1 - p_limit)|
        double lambda;   // mean change time under constant assignment
        double zeta;     // per-period transition floor
    };
    std::vector<Entry> per_treatment;
    double lambda_star;    // mean change time along the max-hazard path
    int best_accelerator;  // argmin lambda, lowest index on ties
    int best_detector;     // argmax d_rate, lowest index on ties
};

namespace detail {

// E[Theta] = sum_{t>=0} P(Theta > t) with P(Theta > t) = prod_{s<=t}(1-pi_s).
// `hazard(t)` must return pi_t for t >= 1.  Truncates once the survival
// product drops below 1e-12; if it will not drop (hazards vanishing), the
// mean is effectively infinite.
template <typename HazardAt>
double mean_change_time_series(double pi0, HazardAt hazard) {
    constexpr double kSurvivalCut = 1e-12;
    constexpr std::int64_t kStepCap = 10'000'000;
    double survival = 1.0 - pi0;
    KahanSum total;
    total.add(survival);
    for (std::int64_t t = 1; survival >= kSurvivalCut; ++t) {
        if (t > kStepCap) return kInf;
        survival *= 1.0 - hazard(t);
        total.add(survival);
    }
    return total.value();
}

} // namespace detail

inline TreatmentQuality quality_metrics(const Model& model) {
    const auto& cp = model.change_point;
    const int k = model.num_treatments();
    TreatmentQuality q;
    q.per_treatment.reserve(static_cast<std::size_t>(k));

    std::vector<int> path;  // scratch for history-dependent hazards
    for (int x = 0; x < k; ++x) {
        TreatmentQuality::Entry e{};
        const KlPair kl = model.response.kl(x);
        e.i_nats = kl.i_nats;
        e.j_nats = kl.j_nats;
        e.zeta = cp.zeta(x);
        const double p_lim = cp.limit_rate(x);
        e.d_rate = e.i_nats + std::abs(std::log1p(-p_lim));

        if (cp.is_markovian()) {
            const double p = cp.rate(x);
            e.lambda = p > 0.0 ? (1.0 - cp.prior()) / p : kInf;
        } else {
            path.assign(1, x);
            e.lambda = detail::mean_change_time_series(cp.prior(), [&](std::int64_t t) {
                path.resize(static_cast<std::size_t>(t), x);
                return cp.transition_prob(path);
            });
        }
        q.per_treatment.push_back(e);
    }

    if (cp.is_markovian()) {
        double pmax = 0.0;
        for (int x = 0; x < k; ++x) pmax = std::max(pmax, cp.rate(x));
        q.lambda_star = pmax > 0.0 ? (1.0 - cp.prior()) / pmax : kInf;
    } else {
        // Greedy max-hazard path: at each period extend with the treatment
        // maximizing the next hazard.  Exact when the hazard reads only the
        // last treatment (and t); an approximation for deeper rules.
        std::vector<int> greedy;
        q.lambda_star = detail::mean_change_time_series(cp.prior(), [&](std::int64_t) {
            greedy.push_back(0);
            double best = -1.0;
            int best_x = 0;
            for (int x = 0; x < k; ++x) {
                greedy.back() = x;
                const double h = cp.transition_prob(greedy);
                if (h > best) {
                    best = h;
                    best_x = x;
                }
            }
            greedy.back() = best_x;
            return best;
        });
    }

    q.best_accelerator = 0;
    q.best_detector = 0;
    for (int x = 1; x < k; ++x) {
        if (q.per_treatment[x].lambda < q.per_treatment[q.best_accelerator].lambda)
            q.best_accelerator = x;
        if (q.per_treatment[x].d_rate > q.per_treatment[q.best_detector].d_rate)
            q.best_detector = x;
    }
    return q;
}

struct ProposedThresholds {
    double b1;    // training-stage odds threshold
    double bK;    // detection threshold (1-alpha)/alpha
    double d;     // assessment-stage likelihood-ratio bound
    bool clamped; // b1 formula fell at or below e and was lifted
};

// Threshold choices that meet the false-alarm budget alpha by construction
// (bK) and balance training against assessment cost (b1, d).  `train` and
// `assess` are 0-based treatment indices.
inline ProposedThresholds calibrate_thresholds(const TreatmentQuality& q,
                                               int train, int assess,
                                               double alpha) {
    const int k = static_cast<int>(q.per_treatment.size());
    if (train < 0 || train >= k || assess < 0 || assess >= k)
        throw ConfigError("calibration treatment index out of range");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("alpha must lie in (0,1), got " + std::to_string(alpha));

    const auto& ti = q.per_treatment[static_cast<std::size_t>(train)];
    const auto& tj = q.per_treatment[static_cast<std::size_t>(assess)];
    if (!(tj.d_rate > ti.d_rate))
        throw ConfigError("invalid pairing: assessment treatment must out-detect "
                          "the training treatment (D_assess > D_train)" +
                          std::string(train == assess ? "; the two are identical" : ""));
    if (!(ti.zeta > 0.0))
        throw ConfigError("invalid training treatment: its transition floor is zero, "
                          "so training stages cannot be paced");

    ProposedThresholds th{};
    th.bK = (1.0 - alpha) / alpha;
    const double numer = 1.0 / ti.zeta + std::log(th.bK) / tj.d_rate;
    th.b1 = numer / (1.0 / ti.d_rate - 1.0 / tj.d_rate);
    th.clamped = !(th.b1 > std::numbers::e);
    if (th.clamped) th.b1 = std::numbers::e;
    th.d = th.b1 * numer / (1.0 / tj.i_nats + 1.0 / tj.j_nats);
    return th;
}

// Floor on the mean sample size of any rule whose false-alarm probability is
// at most err: reach the change as fast as possible, then pay the detection
// delay at the best rate.
inline double lower_bound_value(double err, const TreatmentQuality& q) {
    if (!(err > 0.0 && err < 1.0))
        throw ConfigError("error probability must lie in (0,1)");
    double d_max = 0.0;
    for (const auto& e : q.per_treatment) d_max = std::max(d_max, e.d_rate);
    return q.lambda_star + std::abs(std::log(err)) / d_max;
}

// Ceiling on the mean sample size of the proposed rule at thresholds
// (b1, bK, d): change time plus detection delay, plus what the off-chance
// extra cycles, the training overshoot, and the assessment test cost add.
inline double upper_bound_value(const TreatmentQuality& q, int train, int assess,
                                double b1, double bK, double d) {
    const int k = static_cast<int>(q.per_treatment.size());
    if (train < 0 || train >= k || assess < 0 || assess >= k)
        throw ConfigError("bound treatment index out of range");
    if (!(b1 > 1.0 && bK > 1.0 && d > 1.0))
        throw ConfigError("bounds need thresholds b1, bK, d all above 1");
    const auto& ti = q.per_treatment[static_cast<std::size_t>(train)];
    const auto& tj = q.per_treatment[static_cast<std::size_t>(assess)];
    if (!(ti.zeta > 0.0))
        throw ConfigError("invalid training treatment: zero transition floor");

    const double log_bK = std::log(bK);
    return (ti.lambda + log_bK / tj.d_rate) +
           (1.0 / ti.zeta + log_bK / tj.d_rate) * (1.0 / b1 + 1.0 / d) +
           std::abs(std::log(ti.zeta)) / ti.d_rate +
           std::log(b1) * (1.0 / ti.d_rate - 1.0 / tj.d_rate) +
           std::log(d / b1) * (1.0 / tj.i_nats + 1.0 / tj.j_nats);
}

} // namespace chad
