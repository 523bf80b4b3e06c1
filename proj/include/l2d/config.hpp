#pragma once

// JSON configuration schemas for the command-line tool. Parsing is strict:
// unknown keys, wrong types, and out-of-range values raise invalid_config with
// a message naming the offending key. Report emitters use ordered JSON so that
// key order in the output files is fixed.

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2d/base_losses.hpp"
#include "l2d/common.hpp"
#include "l2d/core.hpp"
#include "l2d/oracle.hpp"
#include "l2d/surrogates.hpp"
#include "l2d/synthdata.hpp"
#include "l2d/training.hpp"

namespace l2d::cfg {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// --- strict access helpers ---------------------------------------------------------

inline void check_keys(const json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    require<invalid_config>(j.is_object(), where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) { ok = true; break; }
        require<invalid_config>(ok, where + ": unknown key \"" + item.key() + "\"");
    }
}

template <typename T>
T get_req(const json& j, const std::string& where, const char* key) {
    require<invalid_config>(j.contains(key), where + ": missing required key \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw invalid_config(where + ": key \"" + key + "\" has the wrong type");
    }
}

template <typename T>
T get_opt(const json& j, const std::string& where, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw invalid_config(where + ": key \"" + key + "\" has the wrong type");
    }
}

// --- enum name tables --------------------------------------------------------------

inline multiclass_tag parse_family_tag(const std::string& s, const std::string& where) {
    if (s == "comp_sum_mu") return multiclass_tag::comp_sum_mu;
    if (s == "gce") return multiclass_tag::gce;
    if (s == "sum_sq") return multiclass_tag::sum_sq;
    if (s == "sum_exp") return multiclass_tag::sum_exp;
    if (s == "sum_rho") return multiclass_tag::sum_rho;
    if (s == "cstnd_hinge") return multiclass_tag::cstnd_hinge;
    if (s == "cstnd_sq") return multiclass_tag::cstnd_sq;
    if (s == "cstnd_exp") return multiclass_tag::cstnd_exp;
    if (s == "cstnd_rho") return multiclass_tag::cstnd_rho;
    if (s == "margin_rho") return multiclass_tag::margin_rho;
    throw invalid_config(where + ": unknown family tag \"" + s + "\"");
}

inline const char* family_tag_name(multiclass_tag t) {
    switch (t) {
        case multiclass_tag::comp_sum_mu: return "comp_sum_mu";
        case multiclass_tag::gce: return "gce";
        case multiclass_tag::sum_sq: return "sum_sq";
        case multiclass_tag::sum_exp: return "sum_exp";
        case multiclass_tag::sum_rho: return "sum_rho";
        case multiclass_tag::cstnd_hinge: return "cstnd_hinge";
        case multiclass_tag::cstnd_sq: return "cstnd_sq";
        case multiclass_tag::cstnd_exp: return "cstnd_exp";
        case multiclass_tag::cstnd_rho: return "cstnd_rho";
        case multiclass_tag::margin_rho: return "margin_rho";
    }
    return "?";
}

inline surrogate_tag parse_surrogate_tag(const std::string& s, const std::string& where) {
    if (s == "abstain_L_mu") return surrogate_tag::abstain_L_mu;
    if (s == "abstain_two_stage") return surrogate_tag::abstain_two_stage;
    if (s == "pr_single") return surrogate_tag::pr_single;
    if (s == "pr_two_stage") return surrogate_tag::pr_two_stage;
    if (s == "defer_single") return surrogate_tag::defer_single;
    if (s == "defer_two_stage_score") return surrogate_tag::defer_two_stage_score;
    if (s == "defer_two_stage_pr") return surrogate_tag::defer_two_stage_pr;
    if (s == "reg_single") return surrogate_tag::reg_single;
    if (s == "reg_two_stage") return surrogate_tag::reg_two_stage;
    if (s == "reg_single_expert") return surrogate_tag::reg_single_expert;
    throw invalid_config(where + ": unknown surrogate tag \"" + s + "\"");
}

inline const char* surrogate_tag_name(surrogate_tag t) {
    switch (t) {
        case surrogate_tag::abstain_L_mu: return "abstain_L_mu";
        case surrogate_tag::abstain_two_stage: return "abstain_two_stage";
        case surrogate_tag::pr_single: return "pr_single";
        case surrogate_tag::pr_two_stage: return "pr_two_stage";
        case surrogate_tag::defer_single: return "defer_single";
        case surrogate_tag::defer_two_stage_score: return "defer_two_stage_score";
        case surrogate_tag::defer_two_stage_pr: return "defer_two_stage_pr";
        case surrogate_tag::reg_single: return "reg_single";
        case surrogate_tag::reg_two_stage: return "reg_two_stage";
        case surrogate_tag::reg_single_expert: return "reg_single_expert";
    }
    return "?";
}

inline phi_tag parse_phi_tag(const std::string& s, const std::string& where) {
    if (s == "exp") return phi_tag::exp;
    if (s == "logistic") return phi_tag::logistic;
    if (s == "quadratic") return phi_tag::quadratic;
    if (s == "hinge") return phi_tag::hinge;
    if (s == "sigmoid") return phi_tag::sigmoid;
    if (s == "rho_margin") return phi_tag::rho_margin;
    throw invalid_config(where + ": unknown phi tag \"" + s + "\"");
}

// --- component parsers --------------------------------------------------------------

inline multiclass_family parse_family(const json& j, const std::string& where) {
    check_keys(j, where, {"tag", "mu", "alpha", "rho", "scale"});
    multiclass_family f;
    f.tag = parse_family_tag(get_req<std::string>(j, where, "tag"), where);
    f.mu = get_opt<double>(j, where, "mu", f.mu);
    f.alpha = get_opt<double>(j, where, "alpha", f.alpha);
    f.rho = get_opt<double>(j, where, "rho", f.rho);
    f.scale = get_opt<double>(j, where, "scale", f.scale);
    f.validate();
    return f;
}

inline binary_phi parse_phi(const json& j, const std::string& where) {
    check_keys(j, where, {"tag", "k", "rho"});
    binary_phi p;
    p.tag = parse_phi_tag(get_req<std::string>(j, where, "tag"), where);
    p.k = get_opt<double>(j, where, "k", p.k);
    p.rho = get_opt<double>(j, where, "rho", p.rho);
    p.validate();
    return p;
}

inline surrogate_spec parse_surrogate(const json& j, const std::string& where) {
    check_keys(j, where, {"tag", "family", "phi", "psi", "alpha", "beta", "mu", "c"});
    surrogate_spec s;
    s.tag = parse_surrogate_tag(get_req<std::string>(j, where, "tag"), where);
    if (j.contains("family")) s.family = parse_family(j.at("family"), where + ".family");
    if (j.contains("phi")) s.phi = parse_phi(j.at("phi"), where + ".phi");
    if (j.contains("psi")) {
        const std::string p = j.at("psi").get<std::string>();
        if (p == "identity") s.psi = psi_kind::identity;
        else if (p == "scaled_n") s.psi = psi_kind::scaled_n;
        else throw invalid_config(where + ": unknown psi \"" + p + "\"");
    }
    s.alpha_s = get_opt<double>(j, where, "alpha", s.alpha_s);
    s.beta_s = get_opt<double>(j, where, "beta", s.beta_s);
    s.mu = get_opt<double>(j, where, "mu", s.mu);
    s.c = get_opt<double>(j, where, "c", s.c);
    s.validate();
    return s;
}

inline cost_model parse_cost(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "c", "alpha", "beta", "reg_loss"});
    cost_model m;
    const std::string kind = get_req<std::string>(j, where, "kind");
    if (kind == "constant") m.kind = cost_kind::constant;
    else if (kind == "expert_misclassification") m.kind = cost_kind::expert_misclassification;
    else if (kind == "regression_expert") m.kind = cost_kind::regression_expert;
    else throw invalid_config(where + ": unknown cost kind \"" + kind + "\"");
    m.c = get_opt<double>(j, where, "c", m.c);
    m.alpha = get_opt<std::vector<double>>(j, where, "alpha", {});
    m.beta = get_opt<std::vector<double>>(j, where, "beta", {});
    const std::string rl = get_opt<std::string>(j, where, "reg_loss", "squared");
    if (rl == "squared") m.reg_loss = regression_loss::squared;
    else if (rl == "absolute") m.reg_loss = regression_loss::absolute;
    else throw invalid_config(where + ": unknown reg_loss \"" + rl + "\"");
    return m;
}

inline model_spec parse_model(const json& j, const std::string& where) {
    check_keys(j, where, {"arch", "hidden"});
    model_spec m;
    const std::string arch = get_opt<std::string>(j, where, "arch", "linear");
    if (arch == "linear") m.arch = model_arch::linear;
    else if (arch == "mlp") m.arch = model_arch::mlp;
    else throw invalid_config(where + ": unknown arch \"" + arch + "\"");
    m.hidden = get_opt<int>(j, where, "hidden", m.hidden);
    return m;
}

inline optimizer_config parse_optimizer(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "lr", "momentum", "epochs"});
    optimizer_config o;
    const std::string kind = get_opt<std::string>(j, where, "kind", "gd");
    if (kind == "gd") o.kind = optimizer_kind::gd;
    else if (kind == "gd_momentum") o.kind = optimizer_kind::gd_momentum;
    else throw invalid_config(where + ": unknown optimizer kind \"" + kind + "\"");
    o.lr = get_opt<double>(j, where, "lr", o.lr);
    o.momentum = get_opt<double>(j, where, "momentum", o.momentum);
    o.epochs = get_opt<int>(j, where, "epochs", o.epochs);
    o.validate();
    return o;
}

inline grid_spec parse_grid(const json& j, const std::string& where) {
    check_keys(j, where, {"lo", "hi", "resolution"});
    grid_spec g;
    g.lo = get_opt<double>(j, where, "lo", g.lo);
    g.hi = get_opt<double>(j, where, "hi", g.hi);
    g.res = get_opt<double>(j, where, "resolution", g.res);
    g.validate();
    return g;
}

// --- command configs ----------------------------------------------------------------

struct gradcheck_config {
    std::uint64_t seed = 1;
    int points = 100;
    double threshold = 1e-5;
    double step = 1e-6;
    int label_count = 3;
    int expert_count = 2;
    std::vector<surrogate_spec> surrogates;
};

inline gradcheck_config parse_gradcheck(const json& j) {
    const std::string w = "gradcheck";
    check_keys(j, w, {"command", "seed", "points", "threshold", "step", "label_count",
                      "expert_count", "surrogates"});
    gradcheck_config c;
    c.seed = get_opt<std::uint64_t>(j, w, "seed", c.seed);
    c.points = get_opt<int>(j, w, "points", c.points);
    c.threshold = get_opt<double>(j, w, "threshold", c.threshold);
    c.step = get_opt<double>(j, w, "step", c.step);
    c.label_count = get_opt<int>(j, w, "label_count", c.label_count);
    c.expert_count = get_opt<int>(j, w, "expert_count", c.expert_count);
    require<invalid_config>(c.points >= 0, w + ": points must be >= 0");
    require<invalid_config>(c.threshold > 0.0 && c.step > 0.0,
                            w + ": threshold and step must be positive");
    require<invalid_config>(c.label_count >= 2 && c.expert_count >= 1,
                            w + ": need label_count >= 2, expert_count >= 1");
    require<invalid_config>(j.contains("surrogates"), w + ": missing required key \"surrogates\"");
    require<invalid_config>(j.at("surrogates").is_array(), w + ": surrogates must be an array");
    int idx = 0;
    for (const auto& s : j.at("surrogates"))
        c.surrogates.push_back(parse_surrogate(s, w + ".surrogates[" + std::to_string(idx++) + "]"));
    return c;
}

struct oracle_explicit_instance {
    std::vector<std::vector<double>> cond_probs;
    std::vector<double> weights;
    std::vector<std::vector<double>> expected_costs;  // deferral mode only
};

struct oracle_config {
    std::string mode = "abstention";  // or "deferral"
    int label_count = 2;
    int expert_count = 0;
    double c = 0.3;
    std::vector<double> mu_grid;
    std::vector<double> c_grid;
    std::optional<discrete_config> generator;
    std::optional<oracle_explicit_instance> instance;
};

inline oracle_config parse_oracle(const json& j) {
    const std::string w = "oracle";
    check_keys(j, w, {"command", "mode", "label_count", "expert_count", "c", "mu_grid",
                      "c_grid", "generator", "instance"});
    oracle_config c;
    c.mode = get_opt<std::string>(j, w, "mode", c.mode);
    require<invalid_config>(c.mode == "abstention" || c.mode == "deferral",
                            w + ": mode must be \"abstention\" or \"deferral\"");
    c.label_count = get_opt<int>(j, w, "label_count", c.label_count);
    c.expert_count = get_opt<int>(j, w, "expert_count", c.expert_count);
    c.c = get_opt<double>(j, w, "c", c.c);
    require<invalid_config>(c.label_count >= 2, w + ": label_count must be >= 2");
    if (c.mode == "abstention")
        require<invalid_config>(c.c >= 0.0 && c.c < 1.0, w + ": c must lie in [0,1)");
    else
        require<invalid_config>(c.expert_count >= 1, w + ": deferral needs expert_count >= 1");
    c.mu_grid = get_opt<std::vector<double>>(j, w, "mu_grid", {});
    c.c_grid = get_opt<std::vector<double>>(j, w, "c_grid", {});
    for (double m : c.mu_grid) require<invalid_config>(m >= 0.0, w + ": mu_grid entries >= 0");
    for (double cc : c.c_grid)
        require<invalid_config>(cc > 0.0 && cc < 1.0, w + ": c_grid entries in (0,1)");
    require<invalid_config>(!(j.contains("generator") && j.contains("instance")),
                            w + ": give either generator or instance, not both");
    if (j.contains("generator")) {
        const json& g = j.at("generator");
        const std::string gw = w + ".generator";
        check_keys(g, gw, {"points", "cost_lo", "cost_hi", "separation", "seed"});
        discrete_config d;
        d.n = c.label_count;
        d.n_e = c.expert_count;
        d.abstention = c.mode == "abstention";
        d.c = c.c;
        d.points = get_opt<int>(g, gw, "points", d.points);
        d.cost_lo = get_opt<double>(g, gw, "cost_lo", d.cost_lo);
        d.cost_hi = get_opt<double>(g, gw, "cost_hi", d.cost_hi);
        d.separation = get_opt<double>(g, gw, "separation", d.separation);
        d.seed = get_opt<std::uint64_t>(g, gw, "seed", 1);
        c.generator = d;
    }
    if (j.contains("instance")) {
        const json& g = j.at("instance");
        const std::string gw = w + ".instance";
        check_keys(g, gw, {"cond_probs", "weights", "expected_costs"});
        oracle_explicit_instance inst;
        inst.cond_probs = get_req<std::vector<std::vector<double>>>(g, gw, "cond_probs");
        inst.weights = get_opt<std::vector<double>>(g, gw, "weights", {});
        inst.expected_costs =
            get_opt<std::vector<std::vector<double>>>(g, gw, "expected_costs", {});
        require<invalid_config>(!inst.cond_probs.empty(), gw + ": cond_probs must be non-empty");
        if (inst.weights.empty())
            inst.weights.assign(inst.cond_probs.size(),
                                1.0 / static_cast<double>(inst.cond_probs.size()));
        require<invalid_config>(inst.weights.size() == inst.cond_probs.size(),
                                gw + ": weights must match cond_probs");
        if (c.mode == "deferral")
            require<invalid_config>(inst.expected_costs.size() == inst.cond_probs.size(),
                                    gw + ": expected_costs must match cond_probs");
        c.instance = std::move(inst);
    }
    return c;
}

struct bounds_config {
    std::string setting = "abstention";  // deferral_single | deferral_two_stage | regression
    int label_count = 2;
    int expert_count = 2;
    int point_count = 5;
    double c = 0.5;
    double mu = 1.0;
    multiclass_family family = multiclass_family::logistic();
    multiclass_family stage1_family = multiclass_family::logistic();
    int distribution_count = 5;
    int hypotheses = 200;
    grid_spec grid;
    std::uint64_t seed = 1;
    double cost_lo = 0.05, cost_hi = 0.95;
    double separation = 1.35;
    // regression-only support shape
    int value_support = 3;
    double value_lo = -2.0, value_hi = 2.0;
    std::optional<gamma_form> gamma_override;  // sabotage / what-if Γ
};

inline bounds_config parse_bounds(const json& j) {
    const std::string w = "bounds";
    check_keys(j, w,
               {"command", "setting", "label_count", "expert_count", "point_count", "c", "mu",
                "family", "stage1_family", "distribution_count", "hypotheses", "grid", "seed",
                "cost_lo", "cost_hi", "separation", "value_support", "value_lo", "value_hi",
                "gamma_override"});
    bounds_config c;
    c.setting = get_opt<std::string>(j, w, "setting", c.setting);
    require<invalid_config>(c.setting == "abstention" || c.setting == "deferral_single" ||
                                c.setting == "deferral_two_stage" || c.setting == "regression",
                            w + ": unknown setting \"" + c.setting + "\"");
    c.label_count = get_opt<int>(j, w, "label_count", c.label_count);
    c.expert_count = get_opt<int>(j, w, "expert_count", c.expert_count);
    c.point_count = get_opt<int>(j, w, "point_count", c.point_count);
    c.c = get_opt<double>(j, w, "c", c.c);
    c.mu = get_opt<double>(j, w, "mu", c.mu);
    if (j.contains("family")) c.family = parse_family(j.at("family"), w + ".family");
    if (j.contains("stage1_family"))
        c.stage1_family = parse_family(j.at("stage1_family"), w + ".stage1_family");
    c.distribution_count = get_opt<int>(j, w, "distribution_count", c.distribution_count);
    c.hypotheses = get_opt<int>(j, w, "hypotheses", c.hypotheses);
    if (j.contains("grid")) c.grid = parse_grid(j.at("grid"), w + ".grid");
    c.seed = get_opt<std::uint64_t>(j, w, "seed", c.seed);
    c.cost_lo = get_opt<double>(j, w, "cost_lo", c.cost_lo);
    c.cost_hi = get_opt<double>(j, w, "cost_hi", c.cost_hi);
    c.separation = get_opt<double>(j, w, "separation", c.separation);
    c.value_support = get_opt<int>(j, w, "value_support", c.value_support);
    c.value_lo = get_opt<double>(j, w, "value_lo", c.value_lo);
    c.value_hi = get_opt<double>(j, w, "value_hi", c.value_hi);
    require<invalid_config>(c.label_count >= 2, w + ": label_count must be >= 2");
    require<invalid_config>(c.mu >= 0.0, w + ": mu must be >= 0");
    require<invalid_config>(c.c > 0.0 && c.c < 1.0, w + ": c must lie in (0,1)");
    require<invalid_config>(c.distribution_count >= 1 && c.hypotheses >= 1 && c.point_count >= 1,
                            w + ": counts must be positive");
    if (c.setting != "abstention")
        require<invalid_config>(c.expert_count >= 1, w + ": expert_count must be >= 1");
    if (j.contains("gamma_override")) {
        const json& g = j.at("gamma_override");
        const std::string gw = w + ".gamma_override";
        check_keys(g, gw, {"beta", "alpha"});
        const double beta = get_req<double>(g, gw, "beta");
        const double alpha = get_opt<double>(g, gw, "alpha", 1.0);
        c.gamma_override = gamma_generic(beta, alpha);
    }
    return c;
}

struct experiment_config {
    std::string task = "expert_disjoint";  // counterexample | regression_fidelity
    std::string pipeline = "single_stage";
    surrogate_spec surrogate;
    multiclass_family stage1_family = multiclass_family::logistic();
    model_spec model;
    optimizer_config optimizer;
    optimizer_config optimizer2;
    cost_model cost;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<int> expert_counts = {1, 2, 3};
    int train_count = 800;
    int test_count = 2000;
    // expert_disjoint generator
    int label_count = 4;
    std::vector<std::vector<int>> domains = {{0, 1}, {2}, {3}};
    double off_domain_accuracy = 0.25;
    double feature_noise = 0.25;
    // counterexample generator + search
    int sample_count = 100000;
    double c = 0.2;
    int multistart = 16;
    // regression generator
    target_fn target = target_fn::sine;
    std::vector<double> fidelity = {2.0, 1.0, 0.5};
    double sigma = 0.1;
    int dim = 1;
};

inline experiment_config parse_experiment(const json& j) {
    const std::string w = "experiment";
    check_keys(j, w, {"command",  "task",       "pipeline",   "surrogate", "stage1_family",
                      "model",    "optimizer",  "optimizer2", "cost",      "seeds",
                      "expert_counts", "train_count", "test_count", "generator", "multistart"});
    experiment_config c;
    c.task = get_opt<std::string>(j, w, "task", c.task);
    require<invalid_config>(c.task == "expert_disjoint" || c.task == "counterexample" ||
                                c.task == "regression_fidelity",
                            w + ": unknown task \"" + c.task + "\"");
    c.pipeline = get_opt<std::string>(j, w, "pipeline", c.pipeline);
    require<invalid_config>(c.pipeline == "single_stage" || c.pipeline == "two_stage",
                            w + ": pipeline must be single_stage or two_stage");
    if (j.contains("surrogate")) c.surrogate = parse_surrogate(j.at("surrogate"), w + ".surrogate");
    if (j.contains("stage1_family"))
        c.stage1_family = parse_family(j.at("stage1_family"), w + ".stage1_family");
    if (j.contains("model")) c.model = parse_model(j.at("model"), w + ".model");
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer"), w + ".optimizer");
    if (j.contains("optimizer2"))
        c.optimizer2 = parse_optimizer(j.at("optimizer2"), w + ".optimizer2");
    else
        c.optimizer2 = c.optimizer;
    if (j.contains("cost")) c.cost = parse_cost(j.at("cost"), w + ".cost");
    c.seeds = get_opt<std::vector<std::uint64_t>>(j, w, "seeds", c.seeds);
    c.expert_counts = get_opt<std::vector<int>>(j, w, "expert_counts", c.expert_counts);
    c.train_count = get_opt<int>(j, w, "train_count", c.train_count);
    c.test_count = get_opt<int>(j, w, "test_count", c.test_count);
    c.multistart = get_opt<int>(j, w, "multistart", c.multistart);
    require<invalid_config>(!c.seeds.empty(), w + ": seeds must be non-empty");
    require<invalid_config>(c.train_count >= 1 && c.test_count >= 1,
                            w + ": train_count and test_count must be positive");
    if (j.contains("generator")) {
        const json& g = j.at("generator");
        const std::string gw = w + ".generator";
        if (c.task == "expert_disjoint") {
            check_keys(g, gw, {"label_count", "domains", "off_domain_accuracy", "feature_noise"});
            c.label_count = get_opt<int>(g, gw, "label_count", c.label_count);
            c.domains = get_opt<std::vector<std::vector<int>>>(g, gw, "domains", c.domains);
            c.off_domain_accuracy =
                get_opt<double>(g, gw, "off_domain_accuracy", c.off_domain_accuracy);
            c.feature_noise = get_opt<double>(g, gw, "feature_noise", c.feature_noise);
        } else if (c.task == "counterexample") {
            check_keys(g, gw, {"count", "c"});
            c.sample_count = get_opt<int>(g, gw, "count", c.sample_count);
            c.c = get_opt<double>(g, gw, "c", c.c);
            require<invalid_config>(c.c >= 0.0 && c.c < 0.5, gw + ": c must lie in [0,0.5)");
        } else {
            check_keys(g, gw, {"target", "fidelity", "sigma", "dim"});
            const std::string t = get_opt<std::string>(g, gw, "target", "sine");
            if (t == "sine") c.target = target_fn::sine;
            else if (t == "linear") c.target = target_fn::linear;
            else if (t == "constant") c.target = target_fn::constant;
            else throw invalid_config(gw + ": unknown target \"" + t + "\"");
            c.fidelity = get_opt<std::vector<double>>(g, gw, "fidelity", c.fidelity);
            c.sigma = get_opt<double>(g, gw, "sigma", c.sigma);
            c.dim = get_opt<int>(g, gw, "dim", c.dim);
        }
    }
    if (c.task == "expert_disjoint")
        for (int k : c.expert_counts)
            require<invalid_config>(k >= 1 && k <= static_cast<int>(c.domains.size()),
                                    w + ": expert_counts entries must fit the generator");
    return c;
}

// --- top-level dispatch ----------------------------------------------------------------

struct parsed_config {
    std::string command;
    json raw;
};

inline parsed_config parse_top(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw invalid_config(std::string("config: JSON parse error: ") + e.what());
    }
    require<invalid_config>(j.is_object(), "config: top level must be a JSON object");
    parsed_config out;
    out.command = get_req<std::string>(j, "config", "command");
    require<invalid_config>(out.command == "gradcheck" || out.command == "oracle" ||
                                out.command == "bounds" || out.command == "experiment",
                            "config: unknown command \"" + out.command + "\"");
    out.raw = std::move(j);
    return out;
}

}  // namespace l2d::cfg
