#pragma once

// Dynamic programming for the Bayes-optimal trade-off between sampling cost
// and false-alarm probability.  State is the posterior probability
// z_t = P(change by t | data); one period under treatment x maps it to
//
//   psi(z, x, y) = (z + p_x(1-z)) g_x(y) / phi(y; z, x),
//   phi(y; z, x) = (z + p_x(1-z)) g_x(y) + (1-p_x)(1-z) f_x(y),
//
// and the optimal cost solves the fixed point of
//
//   (T_c J)(z) = min{ 1 - z,  c + min_x sum_y J(psi(z,x,y)) phi(y; z,x) }.
//
// Value iteration from J = 0 climbs monotonically to J*; the stop region is
// the interval [b_c, 1].  Everything here assumes the Markovian change point
// and Bernoulli responses (a finite response alphabet); other configurations
// are rejected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chad/engine.hpp"
#include "chad/errors.hpp"
#include "chad/model.hpp"
#include "chad/outcome.hpp"
#include "chad/parallel.hpp"
#include "chad/posterior.hpp"
#include "chad/stats.hpp"

namespace chad {

inline constexpr int kDefaultDpGrid = 1000;
inline constexpr double kDefaultDpTol = 1e-9;
inline constexpr std::int64_t kDefaultDpMaxIter = 100'000;

struct ValueFunction {
    int grid_size = 0;           // values[k] lives at z_k = k/grid_size
    std::vector<double> values;  // grid_size + 1 entries

    double grid_point(int k) const {
        return static_cast<double>(k) / static_cast<double>(grid_size);
    }

    // Piecewise-linear evaluation; z outside [0,1] is clamped.
    double at(double z) const {
        if (z <= 0.0) return values.front();
        if (z >= 1.0) return values.back();
        const double pos = z * static_cast<double>(grid_size);
        const int lo = static_cast<int>(pos);
        const double w = pos - static_cast<double>(lo);
        if (lo + 1 > grid_size) return values.back();
        return (1.0 - w) * values[static_cast<std::size_t>(lo)] +
               w * values[static_cast<std::size_t>(lo) + 1];
    }
};

struct DpPolicy {
    double cost = 0.0;  // per-observation cost c
    int grid_size = 0;
    double tol = 0.0;
    std::int64_t iterations = 0;
    double residual = 0.0;
    double b_c = 1.0;            // stop as soon as the posterior reaches this
    std::vector<double> values;  // J* on the grid
    std::vector<int> actions;    // per grid point; -1 inside the stop region

    // Echo of the model the policy was solved for; run_dp refuses to apply a
    // policy to anything else.
    double pi0 = 0.0;
    std::vector<double> rates;   // markovian p_x
    std::vector<double> bern_q;  // bernoulli response rate q_x
};

namespace detail {

// The reduced model the dynamic program works on.
struct DpModelView {
    double pi0;
    std::vector<double> p;  // transition rate per treatment
    std::vector<double> q;  // bernoulli response rate per treatment

    static DpModelView from(const Model& model) {
        if (!model.change_point.is_markovian())
            throw ConfigError("the dynamic program needs the markovian change-point "
                              "variant; history-dependent rules have no finite state");
        DpModelView v;
        v.pi0 = model.change_point.prior();
        const int k = model.num_treatments();
        v.p.reserve(static_cast<std::size_t>(k));
        v.q.reserve(static_cast<std::size_t>(k));
        for (int x = 0; x < k; ++x) {
            v.p.push_back(model.change_point.rate(x));
            const auto* bern = std::get_if<BernoulliResponse>(&model.response.at(x));
            if (!bern)
                throw ConfigError("the dynamic program needs bernoulli responses "
                                  "(finite alphabet); treatment " + std::to_string(x + 1) +
                                  " is not");
            v.q.push_back(bern->q);
        }
        return v;
    }
};

// Transition data cached per (treatment, response, grid point): the landing
// state psi as an interpolation index/weight pair and the probability phi.
struct DpTransitions {
    int grid_size;
    int num_treatments;
    // layout: [(x * 2 + y) * (G+1) + k]
    std::vector<int> lo;
    std::vector<double> w;
    std::vector<double> phi;

    DpTransitions(const DpModelView& m, int grid_size) : grid_size(grid_size) {
        num_treatments = static_cast<int>(m.p.size());
        const std::size_t cells =
            static_cast<std::size_t>(num_treatments) * 2 * (grid_size + 1);
        lo.resize(cells);
        w.resize(cells);
        phi.resize(cells);
        const double g = static_cast<double>(grid_size);
        for (int x = 0; x < num_treatments; ++x) {
            for (int y = 0; y < 2; ++y) {
                const double gq = y ? 1.0 - m.q[x] : m.q[x];   // g_x(y)
                const double fq = y ? m.q[x] : 1.0 - m.q[x];   // f_x(y)
                for (int k = 0; k <= grid_size; ++k) {
                    const double z = static_cast<double>(k) / g;
                    const double zpost = z + m.p[x] * (1.0 - z);
                    const double ph = zpost * gq + (1.0 - m.p[x]) * (1.0 - z) * fq;
                    const double psi = zpost * gq / ph;  // ph >= min(gq,fq) > 0
                    const double pos = std::min(psi, 1.0) * g;
                    int lo_k = static_cast<int>(pos);
                    if (lo_k >= grid_size) lo_k = grid_size - 1;
                    const std::size_t idx = cell(x, y, k);
                    lo[idx] = lo_k;
                    w[idx] = pos - static_cast<double>(lo_k);
                    phi[idx] = ph;
                }
            }
        }
    }

    std::size_t cell(int x, int y, int k) const {
        return (static_cast<std::size_t>(x) * 2 + static_cast<std::size_t>(y)) *
                   (static_cast<std::size_t>(grid_size) + 1) +
               static_cast<std::size_t>(k);
    }
};

// One value-iteration sweep using the cached transitions.  Returns the sup
// residual; writes the continuation minimum per point into cont if asked.
inline double dp_sweep(const DpTransitions& tr, double c,
                       const std::vector<double>& j_in,
                       std::vector<double>& j_out,
                       std::vector<int>* argmin = nullptr) {
    const int g = tr.grid_size;
    double residual = 0.0;
    for (int k = 0; k <= g; ++k) {
        double best = kInf;
        int best_x = 0;
        for (int x = 0; x < tr.num_treatments; ++x) {
            double expect = 0.0;
            for (int y = 0; y < 2; ++y) {
                const std::size_t i = tr.cell(x, y, k);
                const int lo = tr.lo[i];
                const double interp =
                    (1.0 - tr.w[i]) * j_in[static_cast<std::size_t>(lo)] +
                    tr.w[i] * j_in[static_cast<std::size_t>(lo) + 1];
                expect += interp * tr.phi[i];
            }
            if (expect < best) {
                best = expect;
                best_x = x;
            }
        }
        const double stop = 1.0 - static_cast<double>(k) / static_cast<double>(g);
        const double cont = c + best;
        const double v = stop < cont ? stop : cont;
        const double diff = std::abs(v - j_in[static_cast<std::size_t>(k)]);
        if (diff > residual) residual = diff;
        j_out[static_cast<std::size_t>(k)] = v;
        if (argmin) (*argmin)[static_cast<std::size_t>(k)] = best_x;
    }
    return residual;
}

// Stop-versus-continue margin at an exact (off-grid) posterior z under the
// interpolated fixed point: (1-z) - (c + min_x sum_y Jhat(psi) phi).
// Positive means continuing is strictly cheaper.
inline double stop_margin(const DpModelView& m, const std::vector<double>& j,
                          int grid_size, double c, double z) {
    const double g = static_cast<double>(grid_size);
    double best = kInf;
    for (std::size_t x = 0; x < m.p.size(); ++x) {
        double expect = 0.0;
        for (int y = 0; y < 2; ++y) {
            const double gq = y ? 1.0 - m.q[x] : m.q[x];
            const double fq = y ? m.q[x] : 1.0 - m.q[x];
            const double zpost = z + m.p[x] * (1.0 - z);
            const double ph = zpost * gq + (1.0 - m.p[x]) * (1.0 - z) * fq;
            const double psi = zpost * gq / ph;
            const double pos = std::min(psi, 1.0) * g;
            int lo = static_cast<int>(pos);
            if (lo >= grid_size) lo = grid_size - 1;
            const double w = pos - static_cast<double>(lo);
            expect += ((1.0 - w) * j[static_cast<std::size_t>(lo)] +
                       w * j[static_cast<std::size_t>(lo) + 1]) *
                      ph;
        }
        if (expect < best) best = expect;
    }
    return (1.0 - z) - (c + best);
}

} // namespace detail

// One application of the Bellman operator (mainly a test surface; the solver
// below caches transitions across sweeps).
inline ValueFunction bellman_apply(const Model& model, double c,
                                   const ValueFunction& j) {
    if (!(c >= 0.0)) throw ConfigError("per-observation cost must be nonnegative");
    const auto view = detail::DpModelView::from(model);
    if (static_cast<int>(j.values.size()) != j.grid_size + 1)
        throw ConfigError("value function size disagrees with its grid");
    detail::DpTransitions tr(view, j.grid_size);
    ValueFunction out{j.grid_size, std::vector<double>(j.values.size())};
    detail::dp_sweep(tr, c, j.values, out.values);
    return out;
}

// Value iteration from J = 0 until the sup-norm residual drops below tol.
// The optional observer sees every iterate (tests use it to check that the
// sequence climbs).
inline DpPolicy value_iterate(
    const Model& model, double c, int grid_size = kDefaultDpGrid,
    double tol = kDefaultDpTol, std::int64_t max_iter = kDefaultDpMaxIter,
    const std::function<void(std::int64_t, std::span<const double>)>& observer = {}) {
    if (!(c >= 0.0)) throw ConfigError("per-observation cost must be nonnegative");
    if (grid_size < 2) throw ConfigError("dp grid needs at least two intervals");
    if (!(tol > 0.0)) throw ConfigError("dp tolerance must be positive");

    const auto view = detail::DpModelView::from(model);
    detail::DpTransitions tr(view, grid_size);

    std::vector<double> j(static_cast<std::size_t>(grid_size) + 1, 0.0);
    std::vector<double> j_next(j.size());
    double residual = kInf;
    std::int64_t iter = 0;
    while (true) {
        if (iter >= max_iter) throw ConvergenceFailure(residual, iter);
        residual = detail::dp_sweep(tr, c, j, j_next);
        j.swap(j_next);
        ++iter;
        if (observer) observer(iter, j);
        if (residual < tol) break;
    }

    DpPolicy policy;
    policy.cost = c;
    policy.grid_size = grid_size;
    policy.tol = tol;
    policy.iterations = iter;
    policy.residual = residual;
    policy.values = j;
    policy.pi0 = view.pi0;
    policy.rates = view.p;
    policy.bern_q = view.q;

    // Extract the policy at the fixed point: continuation treatments where
    // continuing beats stopping, and the stop boundary b_c above which
    // 1 - z <= J*(z) + tol.
    std::vector<int> argmin(j.size());
    detail::dp_sweep(tr, c, j, j_next, &argmin);
    policy.actions.assign(j.size(), -1);
    int last_continue = -1;
    for (int k = 0; k <= grid_size; ++k) {
        const double stop = 1.0 - static_cast<double>(k) / static_cast<double>(grid_size);
        if (stop > j[static_cast<std::size_t>(k)] + tol) {
            policy.actions[static_cast<std::size_t>(k)] = argmin[static_cast<std::size_t>(k)];
            last_continue = k;
        }
    }
    const int first_stop = last_continue + 1;  // k = G always stops: 0 <= J*+tol
    // The grid only brackets the boundary to one cell; the executed threshold
    // is the zero of the continuous stop-versus-continue margin inside that
    // bracket.  This matters for tiny costs, where the crossing sits between
    // the last grid point and 1 and the error budget lives below grid width.
    if (first_stop == 0) {
        policy.b_c = 0.0;
    } else {
        double lo = static_cast<double>(first_stop - 1) / static_cast<double>(grid_size);
        double hi = 1.0;
        if (detail::stop_margin(view, j, grid_size, c, lo) <= 0.0) {
            policy.b_c = lo;
        } else {
            while (hi - lo > 1e-15) {
                const double mid = 0.5 * (lo + hi);
                if (detail::stop_margin(view, j, grid_size, c, mid) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            policy.b_c = hi;
        }
    }
    for (int k = 0; k < first_stop; ++k) {
        // Patch any interior grid point the tolerance marked "stop" before the
        // boundary: the executed rule is the interval rule [b_c, 1], so every
        // point to the left needs a continuation action.
        auto& a = policy.actions[static_cast<std::size_t>(k)];
        if (a < 0) a = argmin[static_cast<std::size_t>(k)];
    }
    return policy;
}

// Runs one replication under a solved policy: track the posterior, stop once
// it reaches b_c, otherwise assign the gridded treatment choice.
inline TrialOutcome run_dp(TrialEngine& engine, const DpPolicy& policy) {
    const auto view = detail::DpModelView::from(engine.model());
    if (view.pi0 != policy.pi0 || view.p != policy.rates || view.q != policy.bern_q)
        throw ConfigError("policy was solved for a different model "
                          "(transition rates, response rates, or prior differ)");
    if (policy.b_c >= 1.0)
        throw ConfigError("policy never stops (boundary at 1); solve with a "
                          "larger per-observation cost");

    const double stop_log_odds = logit(policy.b_c);
    const double g = static_cast<double>(policy.grid_size);
    PosteriorState post = PosteriorState::from_prior(view.pi0);

    while (post.log_odds < stop_log_odds) {
        // Nearest grid point; cells at or past the boundary fall back to the
        // nearest continuation action below it.
        int k = static_cast<int>(std::lround(post.probability() * g));
        while (k > 0 && policy.actions[static_cast<std::size_t>(k)] < 0) --k;
        const int x = policy.actions[static_cast<std::size_t>(k)];
        const StepResult step = engine.step(x);
        post = update_odds(
            post, step.pi,
            engine.model().response.log_density_ratio(x, step.response));
    }

    TrialOutcome out;
    out.stop_time = engine.time();
    out.log_odds = post.log_odds;
    out.false_alarm = !engine.changed();
    out.change_time = engine.ensure_change_time();
    return out;
}

// ---------- cost calibration ----------

struct CalibrationRow {
    double c = 0.0;
    double b_c = 0.0;
    MeanSE err;
    MeanSE ess;
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;
};

struct CalibrationResult {
    std::vector<CalibrationRow> rows;  // descending in c
    int selected = -1;                 // index into rows
    DpPolicy policy;                   // re-solved at the selected c
};

// c candidates a * 10^-b for a in 1..9, b in 2..9, descending.
inline std::vector<double> default_cost_grid() {
    std::vector<double> grid;
    for (int b = 2; b <= 9; ++b)
        for (int a = 9; a >= 1; --a)
            grid.push_back(static_cast<double>(a) * std::pow(10.0, -b));
    return grid;
}

namespace detail {

struct DpSimSlot {
    double log_odds;
    std::int64_t stop_time;
};

inline std::pair<MeanSE, MeanSE> simulate_policy(const Model& model,
                                                 const DpPolicy& policy,
                                                 std::uint64_t reps,
                                                 std::uint64_t seed, int threads,
                                                 std::int64_t max_horizon) {
    std::vector<DpSimSlot> slots(reps);
    parallel_for(reps, threads, [&](std::uint64_t r) {
        TrialEngine engine(model, seed, r, max_horizon);
        const TrialOutcome out = run_dp(engine, policy);
        slots[r] = {out.log_odds, out.stop_time};
    });
    std::vector<double> err(reps), ess(reps);
    for (std::uint64_t r = 0; r < reps; ++r) {
        err[r] = inv_one_plus_exp(slots[r].log_odds);
        ess[r] = static_cast<double>(slots[r].stop_time);
    }
    return {mean_se(err), mean_se(ess)};
}

} // namespace detail

// Screens the cost grid: solve the policy per c, estimate its false-alarm
// probability by simulation, keep the c whose Err is largest while still
// within alpha (the cheapest policy that honors the budget).  All candidates
// share the seed, so the comparison rides on common random numbers.
inline CalibrationResult calibrate_c(const Model& model, double alpha,
                                     std::uint64_t reps, std::uint64_t seed,
                                     int threads = 0,
                                     std::span<const double> cost_grid = {},
                                     int grid_size = kDefaultDpGrid,
                                     double tol = kDefaultDpTol,
                                     std::int64_t max_horizon = kDefaultMaxHorizon) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("alpha must lie in (0,1)");
    if (reps == 0) throw ConfigError("calibration needs at least one replication");

    std::vector<double> default_grid;
    if (cost_grid.empty()) {
        default_grid = default_cost_grid();
        cost_grid = default_grid;
    }

    CalibrationResult result;
    result.rows.reserve(cost_grid.size());
    double smallest_err = kInf;
    for (double c : cost_grid) {
        const DpPolicy policy = value_iterate(model, c, grid_size, tol);
        std::pair<MeanSE, MeanSE> sim;
        try {
            sim = detail::simulate_policy(model, policy, reps, seed, threads,
                                          max_horizon);
        } catch (const HorizonExceeded& e) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", c);
            throw RuntimeFailure(std::string("cost ") + buf + ": " + e.what());
        }
        const auto& [err, ess] = sim;
        CalibrationRow row;
        row.c = c;
        row.b_c = policy.b_c;
        row.err = err;
        row.ess = ess;
        row.reps = reps;
        row.seed = seed;
        result.rows.push_back(row);
        smallest_err = std::min(smallest_err, err.mean);
        if (err.mean <= alpha) {
            const int i = static_cast<int>(result.rows.size()) - 1;
            if (result.selected < 0 ||
                err.mean > result.rows[static_cast<std::size_t>(result.selected)].err.mean)
                result.selected = i;
        }
    }
    if (result.selected < 0)
        throw CalibrationFailure(
            "no cost in the grid kept the false-alarm estimate within alpha=" +
            std::to_string(alpha) + "; smallest achieved was " +
            std::to_string(smallest_err));
    result.policy = value_iterate(
        model, result.rows[static_cast<std::size_t>(result.selected)].c, grid_size, tol);
    return result;
}

} // namespace chad
