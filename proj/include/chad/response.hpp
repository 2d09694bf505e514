#pragma once

// Response distributions.  Each treatment x has a pre-change density f_x and
// a post-change density g_x over the same support; the procedures only ever
// need three things from the pair: a sample, the log likelihood ratio
// log(g_x(y)/f_x(y)), and the KL divergences
//
//   I_x = KL(g_x || f_x)   (post-change information per observation)
//   J_x = KL(f_x || g_x)   (pre-change information per observation)

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "chad/errors.hpp"
#include "chad/rng.hpp"
#include "chad/stats.hpp"

namespace chad {

struct KlPair {
    double i_nats = 0.0;  // KL(g || f)
    double j_nats = 0.0;  // KL(f || g)
    // Standard errors are zero for closed-form families and nonzero when the
    // divergences had to be estimated by Monte Carlo.
    double i_se = 0.0;
    double j_se = 0.0;
};

// Bernoulli pair: f = Bern(q), g = Bern(1-q).  The q = 1/2 case carries no
// information (f == g) and is rejected.
struct BernoulliResponse {
    double q;

    explicit BernoulliResponse(double q) : q(q) {
        if (!(q > 0.0 && q < 1.0))
            throw ConfigError("bernoulli response rate must lie in (0,1), got " +
                              std::to_string(q));
        if (q == 0.5)
            throw ConfigError("bernoulli response rate 0.5 makes pre- and "
                              "post-change laws identical");
    }

    double sample(bool post, StepRng& rng) const {
        const double success = post ? 1.0 - q : q;
        return rng.next() < success ? 1.0 : 0.0;
    }

    double log_density_ratio(double y) const {
        // log(g(y)/f(y)) = +-log((1-q)/q)
        const double l = std::log((1.0 - q) / q);
        return y != 0.0 ? l : -l;
    }

    KlPair kl() const {
        // KL(Bern(1-q) || Bern(q)) = (1-2q) log((1-q)/q), symmetric here.
        const double v = (1.0 - 2.0 * q) * std::log((1.0 - q) / q);
        return {v, v, 0.0, 0.0};
    }
};

// Gaussian mean shift with unit variance: f = N(mu0, 1), g = N(mu1, 1).
struct GaussianResponse {
    double mu0;
    double mu1;

    GaussianResponse(double mu0, double mu1) : mu0(mu0), mu1(mu1) {
        if (mu0 == mu1)
            throw ConfigError("gaussian response means must differ");
    }

    double sample(bool post, StepRng& rng) const {
        // Box-Muller; both uniforms are strictly inside (0,1) by construction.
        const double u1 = rng.next();
        const double u2 = rng.next();
        const double z = std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * std::numbers::pi * u2);
        return (post ? mu1 : mu0) + z;
    }

    double log_density_ratio(double y) const {
        return (mu1 - mu0) * (y - 0.5 * (mu0 + mu1));
    }

    KlPair kl() const {
        const double v = 0.5 * (mu1 - mu0) * (mu1 - mu0);
        return {v, v, 0.0, 0.0};
    }
};

// Escape hatch for response laws without closed forms.  The callable draws a
// sample given (post, rng); log_ratio evaluates log(g(y)/f(y)).  KL comes
// from Monte Carlo under a fixed internal seed, so it is deterministic.
struct CustomResponse {
    std::function<double(bool, StepRng&)> sampler;
    std::function<double(double)> log_ratio;
    std::uint64_t kl_reps = 200000;

    double sample(bool post, StepRng& rng) const { return sampler(post, rng); }
    double log_density_ratio(double y) const { return log_ratio(y); }

    KlPair kl() const {
        // I = E_g[log(g/f)], J = -E_f[log(g/f)].
        std::vector<double> li, lj;
        li.reserve(kl_reps);
        lj.reserve(kl_reps);
        constexpr std::uint64_t kl_seed = 0x6b6c2d657374ull;  // arbitrary, fixed
        for (std::uint64_t r = 0; r < kl_reps; ++r) {
            StepRng rng_g(kl_seed, r, kStreamAux, 0);
            StepRng rng_f(kl_seed, r, kStreamAux, 1);
            li.push_back(log_ratio(sampler(true, rng_g)));
            lj.push_back(-log_ratio(sampler(false, rng_f)));
        }
        const MeanSE i = mean_se(li);
        const MeanSE j = mean_se(lj);
        return {i.mean, j.mean, i.se, j.se};
    }
};

using TreatmentResponse =
    std::variant<BernoulliResponse, GaussianResponse, CustomResponse>;

// The response side of a model: one (f_x, g_x) pair per treatment.
class ResponseModel {
public:
    explicit ResponseModel(std::vector<TreatmentResponse> treatments)
        : treatments_(std::move(treatments)) {
        if (treatments_.empty())
            throw ConfigError("a model needs at least one treatment");
    }

    int num_treatments() const { return static_cast<int>(treatments_.size()); }

    double sample(int x, bool post, StepRng& rng) const {
        return std::visit([&](const auto& r) { return r.sample(post, rng); },
                          at(x));
    }

    double log_density_ratio(int x, double y) const {
        return std::visit([&](const auto& r) { return r.log_density_ratio(y); },
                          at(x));
    }

    KlPair kl(int x) const {
        return std::visit([](const auto& r) { return r.kl(); }, at(x));
    }

    const TreatmentResponse& at(int x) const {
        if (x < 0 || x >= num_treatments())
            throw ConfigError("treatment index " + std::to_string(x + 1) +
                              " out of range (model has " +
                              std::to_string(num_treatments()) + ")");
        return treatments_[static_cast<std::size_t>(x)];
    }

private:
    std::vector<TreatmentResponse> treatments_;
};

} // namespace chad
