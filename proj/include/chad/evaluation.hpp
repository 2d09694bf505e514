#pragma once

// Monte Carlo evaluation of stopping rules.  Replications are independent
// (counter-based draws keyed by replication index), run on any number of
// threads into preallocated slots, and are reduced in index order -- so a
// report depends on (model, procedure, reps, seed) and nothing else.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chad/csv.hpp"
#include "chad/engine.hpp"
#include "chad/errors.hpp"
#include "chad/model.hpp"
#include "chad/parallel.hpp"
#include "chad/procedures.hpp"
#include "chad/quality.hpp"
#include "chad/stats.hpp"

namespace chad {

struct EvalConfig {
    std::uint64_t reps = 100'000;
    std::uint64_t seed = 0;
    int threads = 0;  // <= 0: hardware concurrency
    std::int64_t max_horizon = kDefaultMaxHorizon;
    // When set, the report also carries E[c T + P(no change at stop)], the
    // objective the dynamic program minimizes at cost c.
    std::optional<double> objective_cost;
};

struct EvalReport {
    std::string procedure;
    std::string params;
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;

    MeanSE err;            // mean of 1/(1+Gamma_T)
    double err_indicator = 0.0;
    MeanSE ess;            // mean stop time
    double mean_change_time = 0.0;
    double mean_delay = 0.0;      // E[(T - Theta)^+]
    double mean_overshoot = 0.0;  // E[(T - Theta)^-] (stopped early by this much)
    MeanSE cycles;                // E[N]; zero for single-stage rules
    double p_cycles_gt[3] = {0.0, 0.0, 0.0};  // P(N > n), n = 1..3
    MeanSE objective;             // filled when EvalConfig::objective_cost is set
    double wall_seconds = 0.0;
};

inline EvalReport evaluate(const Model& model, const ProcedureSpec& spec,
                           const EvalConfig& cfg) {
    if (cfg.reps == 0) throw ConfigError("evaluation needs at least one replication");
    const auto t0 = std::chrono::steady_clock::now();

    struct Slot {
        std::int64_t stop_time;
        std::int64_t change_time;
        double log_odds;
        std::uint32_t cycles;
    };
    std::vector<Slot> slots(cfg.reps);
    const std::string label = procedure_label(spec);

    parallel_for(cfg.reps, cfg.threads, [&](std::uint64_t r) {
        try {
            TrialEngine engine(model, cfg.seed, r, cfg.max_horizon);
            const TrialOutcome out = run_procedure(engine, spec);
            slots[r] = {out.stop_time, out.change_time, out.log_odds, out.cycles};
        } catch (const HorizonExceeded& e) {
            throw RuntimeFailure("procedure " + label + ", replication " +
                                 std::to_string(r) + ": " + e.what());
        }
    });

    const std::uint64_t n = cfg.reps;
    std::vector<double> err(n), ess(n), theta(n), delay(n), overshoot(n), cycles(n);
    std::vector<double> objective(cfg.objective_cost ? n : 0);
    std::uint64_t false_alarms = 0;
    std::uint64_t cycles_gt[3] = {0, 0, 0};
    for (std::uint64_t r = 0; r < n; ++r) {
        const Slot& s = slots[r];
        err[r] = inv_one_plus_exp(s.log_odds);
        ess[r] = static_cast<double>(s.stop_time);
        theta[r] = static_cast<double>(s.change_time);
        const std::int64_t lag = s.stop_time - s.change_time;
        delay[r] = lag > 0 ? static_cast<double>(lag) : 0.0;
        overshoot[r] = lag < 0 ? static_cast<double>(-lag) : 0.0;
        cycles[r] = static_cast<double>(s.cycles);
        if (s.stop_time < s.change_time) ++false_alarms;
        for (int g = 0; g < 3; ++g)
            if (s.cycles > static_cast<std::uint32_t>(g + 1)) ++cycles_gt[g];
        if (cfg.objective_cost)
            objective[r] = *cfg.objective_cost * ess[r] + err[r];
    }

    EvalReport rep;
    rep.procedure = label;
    rep.params = threshold_params(spec);
    rep.reps = n;
    rep.seed = cfg.seed;
    rep.err = mean_se(err);
    rep.err_indicator = static_cast<double>(false_alarms) / static_cast<double>(n);
    rep.ess = mean_se(ess);
    rep.mean_change_time = mean_se(theta).mean;
    rep.mean_delay = mean_se(delay).mean;
    rep.mean_overshoot = mean_se(overshoot).mean;
    rep.cycles = mean_se(cycles);
    for (int g = 0; g < 3; ++g)
        rep.p_cycles_gt[g] = static_cast<double>(cycles_gt[g]) / static_cast<double>(n);
    if (cfg.objective_cost) rep.objective = mean_se(objective);
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------- benchmark table ----------

// One evaluated cell per procedure and alpha: the alternating rule for every
// viable (accelerator, best-detector) pair, the matching static designs, and
// a solved policy per alpha when one is supplied.
struct Table2Row {
    std::string procedure;
    double alpha;
    EvalReport report;
};

struct Table2Request {
    std::vector<double> alphas = {0.05, 1e-2, 1e-3, 1e-5};
    // Policies per alpha (same order); entries may be null -> row skipped
    // with a warning on `warnings`.
    std::vector<std::shared_ptr<const DpPolicy>> policies;
    EvalConfig eval;
};

inline std::vector<Table2Row> reproduce_table2(const Model& model,
                                               const Table2Request& req,
                                               std::vector<std::string>* warnings = nullptr) {
    const TreatmentQuality quality = quality_metrics(model);
    const int detector = quality.best_detector;

    std::vector<int> accelerators;
    for (int x = 0; x < model.num_treatments(); ++x)
        if (x != detector && quality.per_treatment[static_cast<std::size_t>(x)].zeta > 0.0 &&
            quality.per_treatment[static_cast<std::size_t>(detector)].d_rate >
                quality.per_treatment[static_cast<std::size_t>(x)].d_rate)
            accelerators.push_back(x);
    if (accelerators.empty())
        throw ConfigError("benchmark table needs at least one treatment that can "
                          "pace the change (zeta > 0) besides the best detector");

    std::vector<Table2Row> rows;
    for (std::size_t ai = 0; ai < req.alphas.size(); ++ai) {
        const double alpha = req.alphas[ai];
        EvalConfig cfg = req.eval;

        if (ai < req.policies.size() && req.policies[ai]) {
            // Every row in this alpha block reports the c-weighted objective
            // of the solved policy, so rules can be compared on the cost the
            // policy optimizes.
            cfg.objective_cost = req.policies[ai]->cost;
            ProcedureSpec spec = DpRunSpec{req.policies[ai]};
            rows.push_back({"optimal", alpha, evaluate(model, spec, cfg)});
        } else if (warnings) {
            warnings->push_back("no solved policy for alpha=" + csv_num(alpha) +
                                "; skipping the optimal row");
        }
        for (int x : accelerators) {
            ProcedureSpec spec = ProposedSpec::calibrated(quality, x, detector, alpha);
            rows.push_back({procedure_label(spec), alpha, evaluate(model, spec, cfg)});
        }
        for (int x : accelerators) {
            ProcedureSpec spec = StaticSpec::calibrated(x, alpha);
            rows.push_back({procedure_label(spec), alpha, evaluate(model, spec, cfg)});
        }
    }
    return rows;
}

inline void write_table2_csv(std::ostream& os, const std::vector<Table2Row>& rows,
                             const std::string& provenance) {
    CsvWriter w(os);
    w.comment(provenance);
    w.row({"procedure", "alpha", "err", "err_se", "err_indicator", "ess", "ess_se",
           "mean_theta", "mean_delay", "e_n", "reps", "seed"});
    for (const auto& r : rows) {
        const EvalReport& e = r.report;
        w.row({r.procedure, csv_num(r.alpha), csv_num(e.err.mean), csv_num(e.err.se),
               csv_num(e.err_indicator), csv_num(e.ess.mean), csv_num(e.ess.se),
               csv_num(e.mean_change_time), csv_num(e.mean_delay),
               csv_num(e.cycles.mean), csv_num(e.reps), csv_num(e.seed)});
    }
}

// ---------- error/speed frontier ----------

// A frontier sweeps one procedure family across a grid of false-alarm
// budgets.  Thresholds are recalibrated at each alpha.
struct ProcedureTemplate {
    enum class Kind { proposed, static_design };
    Kind kind;
    int train = 0;   // proposed
    int assess = 0;  // proposed
    int treatment = 0;  // static
};

inline ProcedureSpec instantiate(const ProcedureTemplate& tmpl,
                                 const TreatmentQuality& quality, double alpha) {
    if (tmpl.kind == ProcedureTemplate::Kind::proposed)
        return ProposedSpec::calibrated(quality, tmpl.train, tmpl.assess, alpha);
    return StaticSpec::calibrated(tmpl.treatment, alpha);
}

struct FrontierPoint {
    std::string procedure;
    std::string params;
    double alpha;
    MeanSE err;
    double ess;
    double ess_se;
    double lower_bound;     // floor on ESS at the measured err
    std::uint64_t reps;
    std::uint64_t seed;
};

inline std::vector<FrontierPoint> frontier(const Model& model,
                                           std::span<const ProcedureTemplate> families,
                                           std::span<const double> alphas,
                                           const EvalConfig& cfg,
                                           std::vector<std::string>* warnings = nullptr) {
    const TreatmentQuality quality = quality_metrics(model);
    std::vector<FrontierPoint> points;
    points.reserve(families.size() * alphas.size());
    for (const auto& family : families) {
        for (double alpha : alphas) {
            // A sweep point where calibration is infeasible (thresholds would
            // invert) is not on the family's curve; skip it rather than abort
            // the rest of the sweep.
            std::optional<ProcedureSpec> spec;
            try {
                spec = instantiate(family, quality, alpha);
            } catch (const ConfigError& e) {
                if (warnings)
                    warnings->push_back("sweep point alpha=" + csv_num(alpha) +
                                        " skipped: " + e.what());
                continue;
            }
            const EvalReport rep = evaluate(model, *spec, cfg);
            FrontierPoint pt;
            pt.procedure = rep.procedure;
            pt.params = rep.params;
            pt.alpha = alpha;
            pt.err = rep.err;
            pt.ess = rep.ess.mean;
            pt.ess_se = rep.ess.se;
            pt.lower_bound = lower_bound_value(rep.err.mean, quality);
            pt.reps = rep.reps;
            pt.seed = rep.seed;
            points.push_back(pt);
        }
    }
    return points;
}

inline void write_frontier_csv(std::ostream& os,
                               const std::vector<FrontierPoint>& points,
                               const std::string& provenance) {
    CsvWriter w(os);
    w.comment(provenance);
    w.row({"procedure", "threshold_params", "err", "neg_log10_err", "ess",
           "ess_normalized", "reps", "seed"});
    for (const auto& p : points) {
        w.row({p.procedure, p.params, csv_num(p.err.mean),
               csv_num(-std::log10(p.err.mean)), csv_num(p.ess),
               csv_num(p.ess / p.lower_bound), csv_num(p.reps), csv_num(p.seed)});
    }
}

inline void write_calibration_csv(std::ostream& os,
                                  const std::vector<CalibrationRow>& rows,
                                  const std::string& provenance) {
    CsvWriter w(os);
    w.comment(provenance);
    w.row({"c", "b_c", "err_estimate", "err_se", "ess", "ess_se", "reps", "seed"});
    for (const auto& r : rows) {
        w.row({csv_num(r.c), csv_num(r.b_c), csv_num(r.err.mean), csv_num(r.err.se),
               csv_num(r.ess.mean), csv_num(r.ess.se), csv_num(r.reps),
               csv_num(r.seed)});
    }
}

} // namespace chad
