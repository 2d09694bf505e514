#pragma once

// Controlled change-point laws.  The latent state L_t is 0 before the change
// and absorbs at 1; one period ahead,
//
//   P(L_t = 1 | L_{t-1} = 0, treatments x_1..x_t) = pi_t(x_1..x_t),
//
// a deterministic function of the treatment path.  The Markovian case reads
// only the current treatment: pi_t(...) = p_{x_t}.  History-dependent rules
// get the full path plus declared per-treatment floors (zeta_x) and limits
// (p_x at large t), which the quality metrics and threshold calibration need.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "chad/errors.hpp"

namespace chad {

namespace detail {

inline void check_prior(double pi0) {
    if (!(pi0 >= 0.0 && pi0 < 1.0))
        throw ConfigError("prior change probability must lie in [0,1); got " +
                          std::to_string(pi0) +
                          (pi0 == 1.0 ? " (a change certain at t=0 leaves nothing to detect)"
                                      : ""));
}

inline void check_delta(std::optional<double> delta) {
    if (delta && !(*delta > 0.0 && *delta < 1.0))
        throw ConfigError("transition margin delta must lie in (0,1)");
}

} // namespace detail

class ChangePointModel {
public:
    using HazardFn = std::function<double(std::span<const int>)>;

    // p[x] = per-period transition probability under treatment x.  p = 1 is
    // legal (it forces the change on the first step; handy in tests) but
    // incompatible with a declared margin delta.
    static ChangePointModel markovian(double pi0, std::vector<double> p,
                                      std::optional<double> delta = std::nullopt) {
        detail::check_prior(pi0);
        detail::check_delta(delta);
        if (p.empty()) throw ConfigError("markovian change point needs at least one rate");
        const double cap = delta ? 1.0 - *delta : 1.0;
        for (std::size_t x = 0; x < p.size(); ++x) {
            if (!(p[x] >= 0.0 && p[x] <= cap))
                throw ConfigError("transition rate for treatment " + std::to_string(x + 1) +
                                  " must lie in [0," + std::to_string(cap) + "]; got " +
                                  std::to_string(p[x]));
        }
        ChangePointModel m;
        m.pi0_ = pi0;
        m.delta_ = delta;
        m.body_ = Markovian{std::move(p)};
        return m;
    }

    // General rule.  zeta[x] = inf_{t>=1} pi_t(..., x) over paths ending in x,
    // p_limit[x] = the limiting transition rate; both are declared by the
    // caller because they are not computable from a black-box hazard.
    static ChangePointModel history_dependent(double pi0, HazardFn hazard,
                                              std::vector<double> zeta,
                                              std::vector<double> p_limit,
                                              std::optional<double> delta = std::nullopt) {
        detail::check_prior(pi0);
        detail::check_delta(delta);
        if (!hazard) throw ConfigError("history-dependent change point needs a hazard");
        if (zeta.empty() || zeta.size() != p_limit.size())
            throw ConfigError("zeta and p_limit must both cover every treatment");
        for (std::size_t x = 0; x < zeta.size(); ++x) {
            if (!(zeta[x] >= 0.0 && zeta[x] <= 1.0) ||
                !(p_limit[x] >= 0.0 && p_limit[x] <= 1.0))
                throw ConfigError("zeta and p_limit entries must lie in [0,1]");
        }
        ChangePointModel m;
        m.pi0_ = pi0;
        m.delta_ = delta;
        m.body_ = HistoryDependent{std::move(hazard), std::move(zeta), std::move(p_limit)};
        return m;
    }

    double prior() const { return pi0_; }
    bool is_markovian() const { return std::holds_alternative<Markovian>(body_); }

    int num_treatments() const {
        if (auto* mk = std::get_if<Markovian>(&body_))
            return static_cast<int>(mk->p.size());
        return static_cast<int>(std::get<HistoryDependent>(body_).zeta.size());
    }

    // pi_t for the path x_1..x_t (0-based treatment ids, t = history.size()).
    double transition_prob(std::span<const int> history) const {
        if (history.empty())
            throw ConfigError("transition probability is defined from t = 1 on; "
                              "the prior covers t = 0");
        if (auto* mk = std::get_if<Markovian>(&body_))
            return mk->p[check_index(history.back())];
        const auto& hd = std::get<HistoryDependent>(body_);
        check_index(history.back());
        const double v = hd.hazard(history);
        const double cap = delta_ ? 1.0 - *delta_ : 1.0;
        if (!(v >= 0.0 && v <= cap))
            throw RuntimeFailure("hazard returned " + std::to_string(v) +
                                 " outside [0," + std::to_string(cap) + "]");
        return v;
    }

    // Markovian per-treatment rate (the common fast path).
    double rate(int x) const {
        if (auto* mk = std::get_if<Markovian>(&body_))
            return mk->p[check_index(x)];
        throw ConfigError("per-treatment rates exist only for markovian change points");
    }

    double zeta(int x) const {
        if (auto* mk = std::get_if<Markovian>(&body_))
            return mk->p[check_index(x)];
        return std::get<HistoryDependent>(body_).zeta[check_index(x)];
    }

    double limit_rate(int x) const {
        if (auto* mk = std::get_if<Markovian>(&body_))
            return mk->p[check_index(x)];
        return std::get<HistoryDependent>(body_).p_limit[check_index(x)];
    }

    std::optional<double> delta() const { return delta_; }

private:
    struct Markovian {
        std::vector<double> p;
    };
    struct HistoryDependent {
        HazardFn hazard;
        std::vector<double> zeta;
        std::vector<double> p_limit;
    };

    std::size_t check_index(int x) const {
        if (x < 0 || x >= num_treatments())
            throw ConfigError("treatment index " + std::to_string(x + 1) +
                              " out of range (change point covers " +
                              std::to_string(num_treatments()) + ")");
        return static_cast<std::size_t>(x);
    }

    double pi0_ = 0.0;
    std::optional<double> delta_;
    std::variant<Markovian, HistoryDependent> body_;

    ChangePointModel() = default;
};

} // namespace chad
