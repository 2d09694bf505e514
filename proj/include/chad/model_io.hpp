#pragma once

// File formats: the model/config file and the solved-policy file, both JSON.
// Parsing is strict -- unknown keys are errors, not warnings -- because a
// typo like "trasition" silently changing an experiment is the worst failure
// mode a config surface can have.  Treatment indices are 1-based in files
// and reports, 0-based inside the library.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chad/dp.hpp"
#include "chad/errors.hpp"
#include "chad/model.hpp"
#include "chad/procedures.hpp"
#include "chad/quality.hpp"

namespace chad {

namespace io_detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) { known = true; break; }
        if (!known)
            throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
    }
}

inline const json& require(const json& obj, const std::string& where,
                           const char* key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError(where + ": missing required key \"" + key + "\"");
    return *it;
}

inline double number(const json& v, const std::string& where) {
    if (!v.is_number())
        throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

inline int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer())
        throw ConfigError(where + ": expected an integer");
    return v.get<int>();
}

inline std::vector<double> number_array(const json& v, const std::string& where) {
    if (!v.is_array())
        throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

// json::parse reports a byte offset; turn it into line:column for humans.
inline json parse_stream(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = e.byte > 0 ? std::min<std::size_t>(e.byte - 1, text.size())
                                            : 0;
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') { ++line; col = 1; }
            else ++col;
        }
        throw ConfigError(origin + ":" + std::to_string(line) + ":" +
                          std::to_string(col) + ": " + e.what());
    }
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline TreatmentResponse parse_treatment(const json& t, const std::string& where) {
    if (!t.is_object()) throw ConfigError(where + ": expected an object");
    const std::string family = require(t, where, "family").get<std::string>();
    if (family == "bernoulli") {
        check_keys(t, where, {"family", "f"});
        return BernoulliResponse(number(require(t, where, "f"), where + ".f"));
    }
    if (family == "gaussian") {
        check_keys(t, where, {"family", "mu0", "mu1"});
        return GaussianResponse(number(require(t, where, "mu0"), where + ".mu0"),
                                number(require(t, where, "mu1"), where + ".mu1"));
    }
    throw ConfigError(where + ": unknown response family \"" + family + "\"");
}

inline ChangePointModel parse_change_point(const json& cp, std::size_t num_treatments,
                                           const std::string& where) {
    if (!cp.is_object()) throw ConfigError(where + ": expected an object");
    const std::string variant = require(cp, where, "variant").get<std::string>();
    const double pi0 = number(require(cp, where, "pi0"), where + ".pi0");
    std::optional<double> delta;
    if (cp.contains("delta"))
        delta = number(cp["delta"], where + ".delta");

    if (variant == "markovian") {
        check_keys(cp, where, {"variant", "pi0", "p", "delta"});
        auto p = number_array(require(cp, where, "p"), where + ".p");
        if (p.size() != num_treatments)
            throw ConfigError(where + ".p: lists " + std::to_string(p.size()) +
                              " rates for " + std::to_string(num_treatments) +
                              " treatments");
        return ChangePointModel::markovian(pi0, std::move(p), delta);
    }

    if (variant == "history_dependent") {
        check_keys(cp, where, {"variant", "pi0", "rule", "delta"});
        const json& rule = require(cp, where, "rule");
        const std::string rwhere = where + ".rule";
        const std::string name = require(rule, rwhere, "name").get<std::string>();

        if (name == "constant") {
            // pi_t = q for every t >= 1, whatever the path.
            check_keys(rule, rwhere, {"name", "q"});
            const double q = number(require(rule, rwhere, "q"), rwhere + ".q");
            return ChangePointModel::history_dependent(
                pi0, [q](std::span<const int>) { return q; },
                std::vector<double>(num_treatments, q),
                std::vector<double>(num_treatments, q), delta);
        }
        if (name == "last_treatment_ramp") {
            // pi_t = p_x (1 - ramp^t) for the last treatment x: the hazard
            // ramps up to the markovian rates, so the floor is p_x(1 - ramp).
            check_keys(rule, rwhere, {"name", "p", "ramp"});
            auto p = number_array(require(rule, rwhere, "p"), rwhere + ".p");
            const double ramp = number(require(rule, rwhere, "ramp"), rwhere + ".ramp");
            if (p.size() != num_treatments)
                throw ConfigError(rwhere + ".p: wrong number of rates");
            if (!(ramp >= 0.0 && ramp < 1.0))
                throw ConfigError(rwhere + ".ramp: must lie in [0,1)");
            std::vector<double> zeta(num_treatments), limit(num_treatments);
            for (std::size_t x = 0; x < num_treatments; ++x) {
                zeta[x] = p[x] * (1.0 - ramp);
                limit[x] = p[x];
            }
            auto hazard = [p, ramp](std::span<const int> hist) {
                const double t = static_cast<double>(hist.size());
                return p[static_cast<std::size_t>(hist.back())] *
                       (1.0 - std::pow(ramp, t));
            };
            return ChangePointModel::history_dependent(pi0, hazard, std::move(zeta),
                                                       std::move(limit), delta);
        }
        throw ConfigError(rwhere + ": unknown rule \"" + name + "\"");
    }

    throw ConfigError(where + ".variant: must be \"markovian\" or "
                      "\"history_dependent\", got \"" + variant + "\"");
}

} // namespace io_detail

struct ProcedureConfig {
    enum class Kind { proposed, static_design };
    std::string name;
    Kind kind = Kind::proposed;
    int train = 0;      // 0-based
    int assess = 0;     // 0-based
    int treatment = 0;  // 0-based
    std::optional<double> alpha;            // calibrate at this budget
    std::optional<double> b1, bK, d, b;     // or run these thresholds as-is
};

struct LoadedConfig {
    Model model;
    std::vector<ProcedureConfig> procedures;
};

inline ProcedureSpec make_procedure(const ProcedureConfig& pc,
                                    const TreatmentQuality& quality) {
    if (pc.kind == ProcedureConfig::Kind::proposed) {
        if (pc.alpha)
            return ProposedSpec::calibrated(quality, pc.train, pc.assess, *pc.alpha);
        return ProposedSpec(pc.train, pc.assess, *pc.b1, *pc.bK, *pc.d);
    }
    if (pc.alpha) return StaticSpec::calibrated(pc.treatment, *pc.alpha);
    return StaticSpec(pc.treatment, *pc.b);
}

inline LoadedConfig parse_config(const std::string& text, const std::string& origin) {
    using io_detail::json;
    const json root = io_detail::parse_stream(text, origin);
    if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
    io_detail::check_keys(root, origin, {"model", "procedures"});

    const json& m = io_detail::require(root, origin, "model");
    io_detail::check_keys(m, origin + ".model", {"treatments", "change_point"});
    const json& ts = io_detail::require(m, origin + ".model", "treatments");
    if (!ts.is_array() || ts.empty())
        throw ConfigError(origin + ".model.treatments: expected a non-empty array");

    std::vector<TreatmentResponse> treatments;
    treatments.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        treatments.push_back(io_detail::parse_treatment(
            ts[i], origin + ".model.treatments[" + std::to_string(i) + "]"));

    ChangePointModel cp = io_detail::parse_change_point(
        io_detail::require(m, origin + ".model", "change_point"), ts.size(),
        origin + ".model.change_point");

    LoadedConfig out{Model(ResponseModel(std::move(treatments)), std::move(cp)), {}};

    if (root.contains("procedures")) {
        const json& procs = root["procedures"];
        if (!procs.is_array())
            throw ConfigError(origin + ".procedures: expected an array");
        const int k = out.model.num_treatments();
        auto check_1based = [&](int v, const std::string& where) {
            if (v < 1 || v > k)
                throw ConfigError(where + ": treatment index " + std::to_string(v) +
                                  " out of range 1.." + std::to_string(k));
            return v - 1;
        };
        for (std::size_t i = 0; i < procs.size(); ++i) {
            const json& p = procs[i];
            const std::string where = origin + ".procedures[" + std::to_string(i) + "]";
            ProcedureConfig pc;
            pc.name = io_detail::require(p, where, "name").get<std::string>();
            const std::string variant =
                io_detail::require(p, where, "variant").get<std::string>();
            if (variant == "proposed") {
                io_detail::check_keys(p, where, {"name", "variant", "train", "assess",
                                                 "alpha", "b1", "bK", "d"});
                pc.kind = ProcedureConfig::Kind::proposed;
                pc.train = check_1based(
                    io_detail::integer(io_detail::require(p, where, "train"),
                                       where + ".train"), where + ".train");
                pc.assess = check_1based(
                    io_detail::integer(io_detail::require(p, where, "assess"),
                                       where + ".assess"), where + ".assess");
                if (p.contains("alpha")) {
                    pc.alpha = io_detail::number(p["alpha"], where + ".alpha");
                    if (p.contains("b1") || p.contains("bK") || p.contains("d"))
                        throw ConfigError(where + ": give either alpha or explicit "
                                          "thresholds, not both");
                } else {
                    for (const char* key : {"b1", "bK", "d"})
                        if (!p.contains(key))
                            throw ConfigError(where + ": needs alpha or all of "
                                              "b1, bK, d");
                    pc.b1 = io_detail::number(p["b1"], where + ".b1");
                    pc.bK = io_detail::number(p["bK"], where + ".bK");
                    pc.d = io_detail::number(p["d"], where + ".d");
                }
            } else if (variant == "static") {
                io_detail::check_keys(p, where, {"name", "variant", "treatment",
                                                 "alpha", "b"});
                pc.kind = ProcedureConfig::Kind::static_design;
                pc.treatment = check_1based(
                    io_detail::integer(io_detail::require(p, where, "treatment"),
                                       where + ".treatment"), where + ".treatment");
                if (p.contains("alpha") == p.contains("b"))
                    throw ConfigError(where + ": give exactly one of alpha or b");
                if (p.contains("alpha"))
                    pc.alpha = io_detail::number(p["alpha"], where + ".alpha");
                else
                    pc.b = io_detail::number(p["b"], where + ".b");
            } else {
                throw ConfigError(where + ".variant: must be \"proposed\" or "
                                  "\"static\"");
            }
            out.procedures.push_back(std::move(pc));
        }
    }
    return out;
}

inline LoadedConfig load_config(const std::string& path) {
    return parse_config(io_detail::slurp(path), path);
}

// ---------- solved-policy files ----------

inline void write_policy_file(const std::string& path, const DpPolicy& policy,
                              std::optional<double> alpha = std::nullopt) {
    using io_detail::json;
    json j;
    json& p = j["policy"];
    p["cost"] = policy.cost;
    p["grid_size"] = policy.grid_size;
    p["tolerance"] = policy.tol;
    p["iterations"] = policy.iterations;
    p["residual"] = policy.residual;
    p["b_c"] = policy.b_c;
    p["values"] = policy.values;
    p["actions"] = policy.actions;
    p["model"]["pi0"] = policy.pi0;
    p["model"]["rates"] = policy.rates;
    p["model"]["bernoulli_q"] = policy.bern_q;
    if (alpha) p["alpha"] = *alpha;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(1) << "\n";
}

inline DpPolicy read_policy_file(const std::string& path) {
    using io_detail::json;
    const json root = io_detail::parse_stream(io_detail::slurp(path), path);
    io_detail::check_keys(root, path, {"policy"});
    const json& p = io_detail::require(root, path, "policy");
    io_detail::check_keys(p, path + ".policy",
                          {"cost", "grid_size", "tolerance", "iterations", "residual",
                           "b_c", "values", "actions", "model", "alpha"});
    DpPolicy policy;
    policy.cost = io_detail::number(io_detail::require(p, path, "cost"), path);
    policy.grid_size = io_detail::integer(io_detail::require(p, path, "grid_size"), path);
    policy.tol = io_detail::number(io_detail::require(p, path, "tolerance"), path);
    policy.iterations =
        static_cast<std::int64_t>(io_detail::number(io_detail::require(p, path, "iterations"), path));
    policy.residual = io_detail::number(io_detail::require(p, path, "residual"), path);
    policy.b_c = io_detail::number(io_detail::require(p, path, "b_c"), path);
    policy.values = io_detail::number_array(io_detail::require(p, path, "values"), path + ".values");
    const json& actions = io_detail::require(p, path, "actions");
    if (!actions.is_array()) throw ConfigError(path + ".actions: expected an array");
    policy.actions.reserve(actions.size());
    for (const auto& a : actions)
        policy.actions.push_back(io_detail::integer(a, path + ".actions"));
    const json& m = io_detail::require(p, path, "model");
    io_detail::check_keys(m, path + ".policy.model", {"pi0", "rates", "bernoulli_q"});
    policy.pi0 = io_detail::number(io_detail::require(m, path, "pi0"), path);
    policy.rates = io_detail::number_array(io_detail::require(m, path, "rates"), path);
    policy.bern_q = io_detail::number_array(io_detail::require(m, path, "bernoulli_q"), path);

    if (static_cast<int>(policy.values.size()) != policy.grid_size + 1 ||
        policy.values.size() != policy.actions.size())
        throw ConfigError(path + ": values/actions length disagrees with grid_size");
    return policy;
}

} // namespace chad
