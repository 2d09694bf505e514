// Acceptance gate: reproduces the published benchmark numbers and the
// qualitative claims end to end, printing one PASS/FAIL line per criterion.
//
//   1  closed-form detection rates of the benchmark model
//   2  benchmark grid: threshold rules match the published Err/ESS cells
//   3  calibrated optimal policies match the published optimal row
//   4  the optimal policy's realized cost dominates the alternating rule's
//   5  every threshold rule keeps Err <= alpha across the grid
//   6  property suite (posterior oracle, cycle/test bounds, DP structure)
//   7  frontier shape: curve ordering, the ~10-observation gap, static drift
//   8  simulated ESS never beats the asymptotic floor
//
// Runtime knobs (environment):
//   CHAD_ACCEPT_REPS          replications per evaluated cell (default 100000)
//   CHAD_ACCEPT_SCREEN_REPS   replications per cost-grid screen (default: REPS)
//   CHAD_ACCEPT_PROP_REPS     replications for the property suite (default 20000)
//   CHAD_ACCEPT_THREADS       worker threads (default 0 = all cores)

#include <algorithm>
#include <cinttypes>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chad/chad.hpp"

using namespace chad;

namespace {

// ---------- harness ----------

struct Criterion {
    int id;
    bool pass = true;
    std::string summary;
};

std::vector<Criterion> g_results;

void record(int id, bool pass, const std::string& summary) {
    g_results.push_back({id, pass, summary});
}

void note(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    std::fprintf(stderr, "    ");
    std::vfprintf(stderr, fmt, args);
    std::fprintf(stderr, "\n");
    va_end(args);
}

std::uint64_t env_u64(const char* name, std::uint64_t fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    return std::strtoull(v, nullptr, 10);
}

struct Settings {
    std::uint64_t reps;
    std::uint64_t screen_reps;
    std::uint64_t prop_reps;
    int threads;
};

Model bench_model() {
    return Model(ResponseModel({BernoulliResponse(0.45), BernoulliResponse(0.35),
                                BernoulliResponse(0.25)}),
                 ChangePointModel::markovian(0.0, {0.1, 0.05, 0.0}));
}

constexpr std::uint64_t kSeedTable = 1001;
constexpr std::uint64_t kSeedDp = 2002;
constexpr std::uint64_t kSeedFrontier = 3003;
constexpr std::uint64_t kSeedProps = 4004;

// ---------- criterion 1: closed-form detection rates ----------

void criterion1() {
    const TreatmentQuality q = quality_metrics(bench_model());
    const double expect[3] = {0.125, 0.237, 0.549};
    bool pass = true;
    for (int x = 0; x < 3; ++x) {
        const double got = q.per_treatment[static_cast<std::size_t>(x)].d_rate;
        const bool ok = std::abs(got - expect[x]) <= 1e-3;
        pass = pass && ok;
        note("D_%d = %.6f (published %.3f) %s", x + 1, got, expect[x],
               ok ? "ok" : "MISMATCH");
    }
    record(1, pass, "detection rates D_x match the published table within 1e-3");
}

// ---------- criteria 2 and 5: the benchmark grid ----------

struct PublishedCell {
    double err;
    double ess;
};

// published Err/ESS per procedure and budget
const std::map<std::string, std::map<double, PublishedCell>> kPublished = {
    {"(1,3)", {{0.05, {0.037, 22.1}}, {1e-2, {5.6e-3, 26.9}},
               {1e-3, {6.9e-4, 31.1}}, {1e-5, {8.5e-6, 39.9}}}},
    {"(2,3)", {{0.05, {0.027, 32.8}}, {1e-2, {7.0e-3, 36.3}},
               {1e-3, {6.8e-4, 41.1}}, {1e-5, {6.7e-6, 49.9}}}},
    {"(1)",   {{0.05, {0.044, 27.0}}, {1e-2, {8.8e-3, 39.9}},
               {1e-3, {8.8e-4, 58.3}}, {1e-5, {8.8e-6, 95.0}}}},
    {"(2)",   {{0.05, {0.038, 32.4}}, {1e-2, {7.5e-3, 40.1}},
               {1e-3, {7.5e-4, 49.9}}, {1e-5, {7.4e-6, 69.4}}}},
};

void criteria_2_and_5(const Settings& s) {
    const Model model = bench_model();
    Table2Request req;
    req.alphas = {0.05, 1e-2, 1e-3, 1e-5};
    req.eval.reps = s.reps;
    req.eval.seed = kSeedTable;
    req.eval.threads = s.threads;

    std::vector<std::string> warnings;
    const std::vector<Table2Row> rows = reproduce_table2(model, req, &warnings);

    int cells = 0, cell_fails = 0, err_violations = 0;
    for (const auto& row : rows) {
        const auto proc = kPublished.find(row.procedure);
        if (proc == kPublished.end()) continue;
        const PublishedCell& pub = proc->second.at(row.alpha);
        const EvalReport& e = row.report;
        ++cells;

        const bool ess_ok = std::abs(e.ess.mean - pub.ess) <= 0.05 * pub.ess;
        const double err_band = std::max(3.0 * e.err.se, 0.30 * pub.err);
        const bool err_ok = std::abs(e.err.mean - pub.err) <= err_band;
        if (!(ess_ok && err_ok)) ++cell_fails;
        if (!(e.err.mean <= row.alpha)) ++err_violations;

        note("%-6s alpha=%-5g err=%.3g (published %.3g, band %.2g) %s | "
               "ess=%.4g (published %.4g +-5%%) %s",
               row.procedure.c_str(), row.alpha, e.err.mean, pub.err, err_band,
               err_ok ? "ok" : "MISS", e.ess.mean, pub.ess,
               ess_ok ? "ok" : "MISS");
    }

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "benchmark grid: %d/%d cells match the published Err/ESS",
                  cells - cell_fails, cells);
    record(2, cells == 16 && cell_fails == 0, buf);

    std::snprintf(buf, sizeof buf,
                  "error control: %d/%d threshold cells keep Err <= alpha",
                  cells - err_violations, cells);
    record(5, cells == 16 && err_violations == 0, buf);
}

// ---------- criteria 3 and 4: the optimal row ----------

struct ScreenRow {
    double c;
    std::shared_ptr<const DpPolicy> policy;
    MeanSE err;
    MeanSE ess;
};

void criteria_3_and_4(const Settings& s) {
    const Model model = bench_model();
    const TreatmentQuality quality = quality_metrics(model);
    const std::vector<double> alphas = {0.05, 1e-2, 1e-3, 1e-5};
    const double published_ess[4] = {21.5, 23.8, 28.3, 36.9};

    // Screen the shared cost grid once: each alpha then selects the cost whose
    // screened error sits highest while within its budget (the same selection
    // calibrate_c makes, with the repeated solves hoisted out of the loop).
    const std::vector<double> costs = default_cost_grid();
    std::vector<ScreenRow> screen;
    screen.reserve(costs.size());
    std::fprintf(stderr, "  screening %zu cost candidates at %" PRIu64
                         " reps each...\n", costs.size(), s.screen_reps);
    for (double c : costs) {
        ScreenRow row;
        row.c = c;
        row.policy = std::make_shared<const DpPolicy>(value_iterate(model, c));
        EvalConfig cfg;
        cfg.reps = s.screen_reps;
        cfg.seed = kSeedDp;
        cfg.threads = s.threads;
        const EvalReport rep = evaluate(model, DpRunSpec{row.policy}, cfg);
        row.err = rep.err;
        row.ess = rep.ess;
        screen.push_back(std::move(row));
    }

    bool pass3 = true, pass4 = true;
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        const double alpha = alphas[ai];
        const ScreenRow* pick = nullptr;
        for (const auto& row : screen)
            if (row.err.mean <= alpha && (!pick || row.err.mean > pick->err.mean))
                pick = &row;
        if (!pick) {
            note("alpha=%g: no cost in the grid met the budget", alpha);
            pass3 = false;
            pass4 = false;
            continue;
        }

        EvalConfig cfg;
        cfg.reps = s.reps;
        cfg.seed = kSeedDp;
        cfg.threads = s.threads;
        cfg.objective_cost = pick->c;
        const EvalReport dp = evaluate(model, DpRunSpec{pick->policy}, cfg);
        const EvalReport alt = evaluate(
            model, ProposedSpec::calibrated(quality, 0, 2, alpha), cfg);

        const bool ess_ok =
            std::abs(dp.ess.mean - published_ess[ai]) <= 0.05 * published_ess[ai];
        const bool err_ok = dp.err.mean <= alpha;
        pass3 = pass3 && ess_ok && err_ok;
        note("alpha=%-5g c=%-6g b_c=%.6f err=%.3g %s | ess=%.4g "
               "(published %.3g +-5%%) %s",
               alpha, pick->c, pick->policy->b_c, dp.err.mean,
               err_ok ? "ok" : "OVER BUDGET", dp.ess.mean, published_ess[ai],
               ess_ok ? "ok" : "MISS");

        const double gap = dp.objective.mean - alt.objective.mean;
        const double band = 3.0 * std::sqrt(dp.objective.se * dp.objective.se +
                                            alt.objective.se * alt.objective.se);
        const bool dominated = gap <= band;
        pass4 = pass4 && dominated;
        note("alpha=%-5g objective: optimal %.5f vs (1,3) %.5f "
               "(gap %+.5f, 3se band %.5f) %s",
               alpha, dp.objective.mean, alt.objective.mean, gap, band,
               dominated ? "ok" : "NOT DOMINANT");
    }

    record(3, pass3,
           "calibrated optimal policies match the published optimal row");
    record(4, pass4,
           "optimal policy's realized cost dominates the alternating rule's");
}

// ---------- criterion 6: property suite ----------

bool prop_posterior_oracle() {
    const Model markov = bench_model();
    const Model history(
        ResponseModel({BernoulliResponse(0.4), GaussianResponse(0.0, 0.8)}),
        ChangePointModel::history_dependent(
            0.15,
            [](std::span<const int> h) {
                const double base = h.back() == 0 ? 0.2 : 0.05;
                return base / (1.0 + 0.1 * static_cast<double>(h.size()));
            },
            {0.0, 0.0}, {0.2, 0.05}));

    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Model& model = trial % 2 ? history : markov;
        const std::uint64_t rep = static_cast<std::uint64_t>(trial);
        StepRng pick(kSeedProps, rep, kStreamAux, 0);
        const int len = 1 + static_cast<int>(pick.next() * 12.0);

        TrialEngine engine(model, kSeedProps, rep);
        PosteriorState post = PosteriorState::from_prior(model.change_point.prior());
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
            if (post.log_odds != kNegInf) return false;
        } else {
            worst = std::max(worst, std::abs(post.log_odds - std::log(direct)));
        }
    }
    note("posterior recursion vs direct sum: worst log-odds gap %.2e", worst);
    return worst <= 1e-10;
}

bool prop_cycle_and_test_bounds(const Settings& s) {
    const Model model = bench_model();
    const ProposedSpec spec =
        ProposedSpec::calibrated(quality_metrics(model), 0, 2, 1e-3);
    const double eta = 1.0 / spec.b1 + 1.0 / spec.d;
    const std::uint64_t reps = s.prop_reps;

    std::vector<std::uint32_t> cycles(reps);
    std::int64_t post_change_stages = 0, test_endings = 0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        TrialEngine engine(model, kSeedProps + 1, r);
        const TrialOutcome out = run_proposed(engine, spec);
        cycles[r] = out.cycles;
        for (std::size_t k = 1; k < out.stage_ends.size(); k += 2) {
            if (out.change_time <= out.stage_ends[k - 1]) {
                ++post_change_stages;
                test_endings += out.stage_triggers[k] == StageTrigger::test;
            }
        }
    }

    bool ok = true;
    for (int n = 1; n <= 3; ++n) {
        std::int64_t exceed = 0;
        for (auto c : cycles) exceed += c > static_cast<std::uint32_t>(n);
        const double freq = static_cast<double>(exceed) / static_cast<double>(reps);
        const double bound = std::pow(eta, n);
        const double se =
            std::sqrt(bound * (1.0 - bound) / static_cast<double>(reps));
        note("P(N>%d) = %.4f, geometric bound %.4f + 3se", n, freq, bound);
        ok = ok && freq <= bound + 3.0 * se;
    }

    const double freq = static_cast<double>(test_endings) /
                        static_cast<double>(post_change_stages);
    const double bound = 1.0 / spec.d;
    const double se = std::sqrt(bound * (1.0 - bound) /
                                static_cast<double>(post_change_stages));
    note("post-change test rejections: %.4f of %" PRId64
           " stages, bound 1/d = %.4f + 3se", freq, post_change_stages, bound);
    return ok && post_change_stages > 500 && freq <= bound + 3.0 * se;
}

bool prop_dp_structure() {
    bool monotone = true;
    std::vector<double> prev;
    const DpPolicy policy = value_iterate(
        bench_model(), 0.01, kDefaultDpGrid, kDefaultDpTol, kDefaultDpMaxIter,
        [&](std::int64_t, std::span<const double> j) {
            if (!prev.empty())
                for (std::size_t k = 0; k < j.size(); ++k)
                    if (j[k] < prev[k] - 1e-12) monotone = false;
            prev.assign(j.begin(), j.end());
        });
    note("value iteration: %" PRId64 " sweeps, pointwise nondecreasing: %s",
           policy.iterations, monotone ? "yes" : "NO");

    bool concave = true;
    for (int k = 1; k < policy.grid_size; ++k) {
        const double mid = policy.values[static_cast<std::size_t>(k)];
        const double chord = 0.5 * (policy.values[static_cast<std::size_t>(k) - 1] +
                                    policy.values[static_cast<std::size_t>(k) + 1]);
        if (mid < chord - 1e-9) concave = false;
    }

    bool contiguous = true, stopped = false;
    for (int k = 0; k <= policy.grid_size; ++k) {
        const bool stop_here = policy.actions[static_cast<std::size_t>(k)] < 0;
        if (stopped && !stop_here) contiguous = false;
        stopped = stopped || stop_here;
    }
    note("J* midpoint concavity: %s; stop region contiguous at the right: %s",
           concave ? "yes" : "NO", (contiguous && stopped) ? "yes" : "NO");
    return monotone && concave && contiguous && stopped;
}

bool prop_ess_identity(const Settings& s) {
    const Model model = bench_model();
    EvalConfig cfg;
    cfg.reps = s.prop_reps;
    cfg.seed = kSeedProps + 2;
    cfg.threads = s.threads;
    const EvalReport rep = evaluate(
        model, ProposedSpec::calibrated(quality_metrics(model), 0, 2, 1e-2), cfg);
    const double rebuilt = rep.mean_change_time + rep.mean_delay - rep.mean_overshoot;
    note("ESS %.6f vs Theta + delay - overshoot %.6f (gap %.2e)", rep.ess.mean,
           rebuilt, std::abs(rep.ess.mean - rebuilt));
    return std::abs(rep.ess.mean - rebuilt) <= 1e-9;
}

void criterion6(const Settings& s) {
    const bool oracle = prop_posterior_oracle();
    const bool bounds = prop_cycle_and_test_bounds(s);
    const bool dp = prop_dp_structure();
    const bool ess = prop_ess_identity(s);
    std::string bad;
    if (!oracle) bad += " posterior-oracle";
    if (!bounds) bad += " cycle/test-bounds";
    if (!dp) bad += " dp-structure";
    if (!ess) bad += " ess-identity";
    record(6, oracle && bounds && dp && ess,
           bad.empty() ? "property suite: oracle, bounds, DP structure, identities"
                       : "property suite failed:" + bad);
}

// ---------- criteria 7 and 8: the frontier ----------

void criteria_7_and_8(const Settings& s) {
    const Model model = bench_model();
    const std::vector<ProcedureTemplate> families = {
        {ProcedureTemplate::Kind::proposed, 0, 2, 0},       // (1,3)
        {ProcedureTemplate::Kind::proposed, 1, 2, 0},       // (2,3)
        {ProcedureTemplate::Kind::static_design, 0, 0, 0},  // (1)
        {ProcedureTemplate::Kind::static_design, 0, 0, 1},  // (2)
    };
    const std::vector<double> alphas = {1e-1, 1e-2, 1e-3, 1e-4,
                                        1e-5, 1e-6, 1e-7};

    EvalConfig cfg;
    cfg.reps = s.reps;
    cfg.seed = kSeedFrontier;
    cfg.threads = s.threads;
    std::vector<std::string> warnings;
    const std::vector<FrontierPoint> points =
        frontier(model, families, alphas, cfg, &warnings);
    for (const auto& w : warnings) note("%s", w.c_str());

    // index the curves: procedure label -> alpha -> point
    std::map<std::string, std::map<double, const FrontierPoint*>> curve;
    for (const auto& p : points) curve[p.procedure][p.alpha] = &p;

    bool ordering = true, gap_ok = true, statics_apart = true, floor_ok = true;
    for (const auto& p : points)
        if (p.ess < p.lower_bound) floor_ok = false;

    for (double a : alphas) {
        const auto* p13 = curve["(1,3)"].count(a) ? curve["(1,3)"][a] : nullptr;
        const auto* p23 = curve["(2,3)"].count(a) ? curve["(2,3)"][a] : nullptr;
        const auto* s1 = curve["(1)"].count(a) ? curve["(1)"][a] : nullptr;
        const auto* s2 = curve["(2)"].count(a) ? curve["(2)"][a] : nullptr;

        if (p13 && p23) {
            const double gap = p23->ess - p13->ess;
            if (gap < 9.0 || gap > 11.0) gap_ok = false;
            note("alpha=%-5g ESS gap (2,3)-(1,3) = %.2f %s", a, gap,
                   (gap >= 9.0 && gap <= 11.0) ? "ok" : "OUT OF 10+-1");
        }
        if (p13 && s1 && s2 && p13->err.mean <= 1e-3) {
            const double n13 = p13->ess / p13->lower_bound;
            const double n1 = s1->ess / s1->lower_bound;
            const double n2 = s2->ess / s2->lower_bound;
            if (!(n13 < n1 && n13 < n2)) ordering = false;
            note("alpha=%-5g normalized ESS: (1,3) %.3f vs (1) %.3f, (2) %.3f %s",
                   a, n13, n1, n2, (n13 < n1 && n13 < n2) ? "ok" : "NOT BELOW");
        }
    }

    // non-convergence: at the tightest budget the statics' normalized ESS is
    // still far above the alternating rule's, and the distance has not shrunk
    const auto* last13 = curve["(1,3)"][1e-7];
    const auto* mid13 = curve["(1,3)"][1e-3];
    for (const std::string name : {"(1)", "(2)"}) {
        const auto* last = curve[name][1e-7];
        const auto* mid = curve[name][1e-3];
        if (!last || !mid || !last13 || !mid13) {
            statics_apart = false;
            continue;
        }
        const double d_last = last->ess / last->lower_bound -
                              last13->ess / last13->lower_bound;
        const double d_mid =
            mid->ess / mid->lower_bound - mid13->ess / mid13->lower_bound;
        note("%s normalized distance from (1,3): %.3f at 1e-3 -> %.3f at 1e-7",
               name.c_str(), d_mid, d_last);
        if (!(d_last >= 0.5 && d_last >= d_mid - 0.15)) statics_apart = false;
    }

    record(7, ordering && gap_ok && statics_apart,
           "frontier shape: curve ordering, ~10-observation gap, static drift");
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "asymptotic floor: ESS >= lower bound at all %zu frontier points",
                  points.size());
    record(8, floor_ok, buf);
}

} // namespace

int main() {
    Settings s{};
    s.reps = env_u64("CHAD_ACCEPT_REPS", 100000);
    s.screen_reps = env_u64("CHAD_ACCEPT_SCREEN_REPS", s.reps);
    s.prop_reps = env_u64("CHAD_ACCEPT_PROP_REPS", 20000);
    s.threads = static_cast<int>(env_u64("CHAD_ACCEPT_THREADS", 0));

    std::fprintf(stderr,
                 "acceptance run: reps=%" PRIu64 " screen_reps=%" PRIu64
                 " prop_reps=%" PRIu64 " threads=%d\n",
                 s.reps, s.screen_reps, s.prop_reps, s.threads);

    try {
        std::fprintf(stderr, "criterion 1: closed-form detection rates\n");
        criterion1();
        std::fprintf(stderr, "criteria 2/5: benchmark grid\n");
        criteria_2_and_5(s);
        std::fprintf(stderr, "criteria 3/4: optimal row\n");
        criteria_3_and_4(s);
        std::fprintf(stderr, "criterion 6: property suite\n");
        criterion6(s);
        std::fprintf(stderr, "criteria 7/8: frontier\n");
        criteria_7_and_8(s);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "aborted: %s\n", e.what());
        std::printf("[FAIL] acceptance run aborted: %s\n", e.what());
        return 1;
    }

    std::sort(g_results.begin(), g_results.end(),
              [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
    int failures = 0;
    for (const auto& r : g_results) {
        std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.summary.c_str());
        failures += !r.pass;
    }
    return failures == 0 ? 0 : 1;
}
