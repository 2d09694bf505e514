// Command-line front end.  Subcommands:
//
//   metrics       per-treatment quality table for a model file
//   eval          Monte Carlo evaluation of one stopping rule
//   dp-calibrate  cost-grid calibration of the optimal policy at a budget
//   table2        the benchmark grid: every rule x every budget
//   frontier      error/speed curves across a budget sweep
//
// Exit codes: 0 success, 2 bad configuration or arguments, 3 runtime failure
// (non-terminating replication, solver stall, infeasible calibration).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chad/chad.hpp"

namespace {

using namespace chad;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::ofstream must_open(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

std::string provenance(const std::string& model_path, std::uint64_t seed,
                       std::uint64_t reps) {
    return std::string("chad ") + CHAD_BUILD_ID + " model=" + model_path +
           " seed=" + std::to_string(seed) + " reps=" + std::to_string(reps);
}

std::string describe_family(const TreatmentResponse& r) {
    if (const auto* b = std::get_if<BernoulliResponse>(&r))
        return "bernoulli(f=" + fmt(b->q) + ")";
    if (const auto* g = std::get_if<GaussianResponse>(&r))
        return "gaussian(mu0=" + fmt(g->mu0) + ",mu1=" + fmt(g->mu1) + ")";
    return "custom";
}

// Tokens: "proposed:1,3" / "static:2" (calibrated at --alpha),
// "dp:policy.json", or "@name" referring to the config's procedures block.
ProcedureSpec parse_procedure_token(const std::string& token,
                                    const LoadedConfig& config,
                                    const TreatmentQuality& quality,
                                    std::optional<double> alpha) {
    auto need_alpha = [&]() -> double {
        if (!alpha)
            throw ConfigError("procedure \"" + token + "\" needs --alpha to calibrate");
        return *alpha;
    };
    if (!token.empty() && token[0] == '@') {
        const std::string name = token.substr(1);
        for (const auto& pc : config.procedures)
            if (pc.name == name) return make_procedure(pc, quality);
        throw ConfigError("no procedure named \"" + name + "\" in the config");
    }
    const auto colon = token.find(':');
    const std::string head = token.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : token.substr(colon + 1);
    const int k = static_cast<int>(quality.per_treatment.size());
    auto parse_index = [&](const std::string& s) {
        int v = 0;
        try {
            v = std::stoi(s);
        } catch (...) {
            throw ConfigError("bad treatment index \"" + s + "\" in \"" + token + "\"");
        }
        if (v < 1 || v > k)
            throw ConfigError("treatment index " + std::to_string(v) +
                              " out of range 1.." + std::to_string(k));
        return v - 1;
    };
    if (head == "proposed") {
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw ConfigError("expected proposed:<train>,<assess> in \"" + token + "\"");
        return ProposedSpec::calibrated(quality, parse_index(rest.substr(0, comma)),
                                        parse_index(rest.substr(comma + 1)),
                                        need_alpha());
    }
    if (head == "static")
        return StaticSpec::calibrated(parse_index(rest), need_alpha());
    if (head == "dp") {
        if (rest.empty()) throw ConfigError("expected dp:<policy file>");
        return DpRunSpec{std::make_shared<DpPolicy>(read_policy_file(rest))};
    }
    throw ConfigError("unknown procedure \"" + token +
                      "\" (expected proposed:i,j, static:x, dp:file, or @name)");
}

void print_report(const EvalReport& rep) {
    std::cout << "procedure    " << rep.procedure << "  [" << rep.params << "]\n"
              << "reps         " << rep.reps << "  (seed " << rep.seed << ")\n"
              << "err          " << fmt(rep.err.mean) << "  (se " << fmt(rep.err.se)
              << ", indicator " << fmt(rep.err_indicator) << ")\n"
              << "ess          " << fmt(rep.ess.mean) << "  (se " << fmt(rep.ess.se) << ")\n"
              << "mean theta   " << fmt(rep.mean_change_time) << "\n"
              << "mean delay   " << fmt(rep.mean_delay) << "  (overshoot "
              << fmt(rep.mean_overshoot) << ")\n";
    if (rep.cycles.mean > 0.0)
        std::cout << "cycles E[N]  " << fmt(rep.cycles.mean) << "  P(N>1..3) "
                  << fmt(rep.p_cycles_gt[0]) << " " << fmt(rep.p_cycles_gt[1]) << " "
                  << fmt(rep.p_cycles_gt[2]) << "\n";
    std::cout << "wall         " << fmt(rep.wall_seconds) << "s\n";
}

void write_eval_csv(std::ostream& os, const EvalReport& rep,
                    const std::string& prov) {
    CsvWriter w(os);
    w.comment(prov);
    w.row({"procedure", "threshold_params", "err", "err_se", "err_indicator", "ess",
           "ess_se", "mean_theta", "mean_delay", "e_n", "p_n_gt1", "p_n_gt2",
           "p_n_gt3", "reps", "seed"});
    w.row({rep.procedure, rep.params, csv_num(rep.err.mean), csv_num(rep.err.se),
           csv_num(rep.err_indicator), csv_num(rep.ess.mean), csv_num(rep.ess.se),
           csv_num(rep.mean_change_time), csv_num(rep.mean_delay),
           csv_num(rep.cycles.mean), csv_num(rep.p_cycles_gt[0]),
           csv_num(rep.p_cycles_gt[1]), csv_num(rep.p_cycles_gt[2]),
           csv_num(rep.reps), csv_num(rep.seed)});
}

int cmd_metrics(const std::string& model_path, const std::string& out_path) {
    const LoadedConfig config = load_config(model_path);
    const TreatmentQuality q = quality_metrics(config.model);

    std::printf("%-4s %-26s %10s %10s %10s %10s %8s\n", "x", "family", "I", "J", "D",
                "lambda", "zeta");
    for (std::size_t x = 0; x < q.per_treatment.size(); ++x) {
        const auto& e = q.per_treatment[x];
        std::printf("%-4zu %-26s %10s %10s %10s %10s %8s\n", x + 1,
                    describe_family(config.model.response.at(static_cast<int>(x))).c_str(),
                    fmt(e.i_nats).c_str(), fmt(e.j_nats).c_str(), fmt(e.d_rate).c_str(),
                    fmt(e.lambda).c_str(), fmt(e.zeta).c_str());
    }
    std::printf("lambda_star %s   best accelerator %d   best detector %d\n",
                fmt(q.lambda_star).c_str(), q.best_accelerator + 1, q.best_detector + 1);

    if (!out_path.empty()) {
        auto os = must_open(out_path);
        CsvWriter w(os);
        w.comment(std::string("chad ") + CHAD_BUILD_ID + " model=" + model_path);
        w.row({"treatment", "family", "i_nats", "j_nats", "d_rate", "lambda", "zeta",
               "lambda_star"});
        for (std::size_t x = 0; x < q.per_treatment.size(); ++x) {
            const auto& e = q.per_treatment[x];
            w.row({csv_num(static_cast<std::uint64_t>(x + 1)),
                   describe_family(config.model.response.at(static_cast<int>(x))),
                   csv_num(e.i_nats), csv_num(e.j_nats), csv_num(e.d_rate),
                   csv_num(e.lambda), csv_num(e.zeta), csv_num(q.lambda_star)});
        }
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

std::string alpha_tag(double alpha) {
    std::string s = csv_num(alpha);
    for (char& c : s)
        if (c == '.' || c == '-' || c == '+') c = '_';
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"controlled change-point trials: acceleration and detection"};
    app.require_subcommand(1);

    std::string model_path, out_path, proc_token, policies_dir;
    std::vector<std::string> proc_tokens;
    std::uint64_t seed = 0, reps = 100000;
    int threads = 0;
    std::int64_t horizon = kDefaultMaxHorizon;
    double alpha = 0.0;
    std::vector<double> alphas;
    int dp_grid = kDefaultDpGrid;
    double dp_tol = kDefaultDpTol;

    auto add_common = [&](CLI::App* cmd, bool needs_seed) {
        cmd->add_option("--model", model_path, "model/config file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        auto* s = cmd->add_option("--seed", seed, "base seed for all replications");
        if (needs_seed) s->required();
        cmd->add_option("--reps", reps, "Monte Carlo replications");
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
        cmd->add_option("--horizon", horizon, "per-replication step cap");
    };

    auto* metrics = app.add_subcommand("metrics", "per-treatment quality metrics");
    metrics->add_option("--model", model_path, "model/config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    metrics->add_option("--out", out_path, "also write a CSV here");

    auto* eval = app.add_subcommand("eval", "evaluate one stopping rule");
    add_common(eval, true);
    eval->add_option("--proc", proc_token,
                     "proposed:i,j | static:x | dp:policy.json | @name")
        ->required();
    eval->add_option("--alpha", alpha, "false-alarm budget for calibrated rules");
    eval->add_option("--out", out_path, "write a one-row CSV here");

    auto* dpcal = app.add_subcommand("dp-calibrate",
                                     "pick the policy cost for a false-alarm budget");
    add_common(dpcal, true);
    dpcal->add_option("--alpha", alpha, "false-alarm budget")->required();
    dpcal->add_option("--grid", dp_grid, "posterior grid intervals");
    dpcal->add_option("--tol", dp_tol, "value-iteration tolerance");
    dpcal->add_option("--out", out_path, "output directory")->required();

    auto* table2 = app.add_subcommand("table2", "benchmark every rule across budgets");
    add_common(table2, true);
    table2->add_option("--alphas", alphas, "budget grid (default 0.05 1e-2 1e-3 1e-5)");
    table2->add_option("--policies", policies_dir,
                       "directory of policy_alpha_<a>.json files for the optimal rows");
    table2->add_option("--out", out_path, "output directory")->required();

    auto* frontier_cmd = app.add_subcommand("frontier", "error/speed curves");
    add_common(frontier_cmd, true);
    frontier_cmd->add_option("--alphas", alphas,
                             "budget sweep (default 1e-1 .. 1e-7 decades)");
    frontier_cmd->add_option("--procedures", proc_tokens,
                             "families to sweep: proposed:i,j or static:x "
                             "(default: every viable pair and static)");
    frontier_cmd->add_option("--out", out_path, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (metrics->parsed()) return cmd_metrics(model_path, out_path);

        const LoadedConfig config = load_config(model_path);
        const TreatmentQuality quality = quality_metrics(config.model);
        EvalConfig cfg;
        cfg.reps = reps;
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.max_horizon = horizon;

        if (eval->parsed()) {
            const std::optional<double> a =
                eval->count("--alpha") ? std::optional<double>(alpha) : std::nullopt;
            const ProcedureSpec spec =
                parse_procedure_token(proc_token, config, quality, a);
            const EvalReport rep = evaluate(config.model, spec, cfg);
            print_report(rep);
            if (!out_path.empty()) {
                auto os = must_open(out_path);
                write_eval_csv(os, rep, provenance(model_path, seed, reps));
                std::cout << "wrote " << out_path << "\n";
            }
            return 0;
        }

        if (dpcal->parsed()) {
            std::filesystem::create_directories(out_path);
            const CalibrationResult cal =
                calibrate_c(config.model, alpha, reps, seed, threads, {}, dp_grid,
                            dp_tol, horizon);
            const std::string tag = alpha_tag(alpha);
            const std::string table_path =
                out_path + "/calibration_alpha_" + tag + ".csv";
            const std::string policy_path =
                out_path + "/policy_alpha_" + tag + ".json";
            {
                auto os = must_open(table_path);
                write_calibration_csv(os, cal.rows, provenance(model_path, seed, reps));
            }
            write_policy_file(policy_path, cal.policy, alpha);
            const auto& sel = cal.rows[static_cast<std::size_t>(cal.selected)];
            std::cout << "selected c=" << csv_num(sel.c) << "  b_c=" << csv_num(sel.b_c)
                      << "  err=" << fmt(sel.err.mean) << "  ess=" << fmt(sel.ess.mean)
                      << "\nwrote " << table_path << "\nwrote " << policy_path << "\n";
            return 0;
        }

        if (table2->parsed()) {
            std::filesystem::create_directories(out_path);
            Table2Request req;
            if (!alphas.empty()) req.alphas = alphas;
            req.eval = cfg;
            for (double a : req.alphas) {
                std::shared_ptr<const DpPolicy> policy;
                if (!policies_dir.empty()) {
                    const std::string p =
                        policies_dir + "/policy_alpha_" + alpha_tag(a) + ".json";
                    if (std::filesystem::exists(p))
                        policy = std::make_shared<DpPolicy>(read_policy_file(p));
                }
                req.policies.push_back(std::move(policy));
            }
            std::vector<std::string> warnings;
            const auto rows = reproduce_table2(config.model, req, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            const std::string path = out_path + "/table2.csv";
            auto os = must_open(path);
            write_table2_csv(os, rows, provenance(model_path, seed, reps));
            std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
            return 0;
        }

        if (frontier_cmd->parsed()) {
            std::vector<double> sweep = alphas;
            if (sweep.empty())
                for (int e = 1; e <= 7; ++e) sweep.push_back(std::pow(10.0, -e));
            std::vector<ProcedureTemplate> families;
            if (proc_tokens.empty()) {
                const int det = quality.best_detector;
                for (int x = 0; x < config.model.num_treatments(); ++x) {
                    if (x == det) continue;
                    const auto& e = quality.per_treatment[static_cast<std::size_t>(x)];
                    const auto& ed = quality.per_treatment[static_cast<std::size_t>(det)];
                    if (e.zeta > 0.0 && ed.d_rate > e.d_rate) {
                        families.push_back({ProcedureTemplate::Kind::proposed, x, det, 0});
                        families.push_back({ProcedureTemplate::Kind::static_design, 0, 0, x});
                    }
                }
            } else {
                const int k = config.model.num_treatments();
                auto index = [&](const std::string& s, const std::string& token) {
                    int v = 0;
                    try {
                        v = std::stoi(s);
                    } catch (...) {
                        throw ConfigError("bad treatment index in \"" + token + "\"");
                    }
                    if (v < 1 || v > k)
                        throw ConfigError("treatment index " + std::to_string(v) +
                                          " out of range 1.." + std::to_string(k));
                    return v - 1;
                };
                for (const auto& token : proc_tokens) {
                    const auto colon = token.find(':');
                    const std::string head = token.substr(0, colon);
                    const std::string rest =
                        colon == std::string::npos ? "" : token.substr(colon + 1);
                    if (head == "proposed") {
                        const auto comma = rest.find(',');
                        if (comma == std::string::npos)
                            throw ConfigError("expected proposed:<train>,<assess> in \"" +
                                              token + "\"");
                        families.push_back({ProcedureTemplate::Kind::proposed,
                                            index(rest.substr(0, comma), token),
                                            index(rest.substr(comma + 1), token), 0});
                    } else if (head == "static") {
                        families.push_back({ProcedureTemplate::Kind::static_design, 0, 0,
                                            index(rest, token)});
                    } else {
                        throw ConfigError("frontier sweeps recalibrate per alpha, so "
                                          "--procedures takes proposed:i,j or static:x "
                                          "(got \"" + token + "\")");
                    }
                }
            }
            std::vector<std::string> warnings;
            const auto points = frontier(config.model, families, sweep, cfg, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            auto os = must_open(out_path);
            write_frontier_csv(os, points, provenance(model_path, seed, reps));
            std::cout << "wrote " << out_path << " (" << points.size() << " points)\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RuntimeFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
