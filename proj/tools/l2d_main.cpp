// Command-line front end: reads a JSON config, runs one of four commands
// (gradcheck, oracle, bounds, experiment), and writes CSV/JSON artifacts with
// deterministic, byte-stable content.
//
// Exit codes: 0 success, 2 config error, 3 property violation, 4 inconclusive.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l2d/config.hpp"

namespace fs = std::filesystem;
using namespace l2d;
using cfg::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_violation = 3;
constexpr int exit_inconclusive = 4;

struct cli_options {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    bool verbose = false;
};

void note(const cli_options& opt, const std::string& msg) {
    if (opt.verbose) std::cerr << msg << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    require<io_error>(f.good(), "cannot open " + path.string() + " for writing");
    f << text;
    require<io_error>(f.good(), "failed writing " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

// --- gradcheck -------------------------------------------------------------------

int run_gradcheck(const cfg::gradcheck_config& c, const cli_options& opt) {
    std::string csv = "surrogate,point_id,max_rel_error\n";
    double worst = 0.0;
    bool all_ok = true;
    for (std::size_t si = 0; si < c.surrogates.size(); ++si) {
        const surrogate_spec& spec = c.surrogates[si];
        for (int p = 0; p < c.points; ++p) {
            rng_t g = make_rng(derive_seed(
                c.seed, 0x67630000ull + si * 1000003ull + static_cast<std::uint64_t>(p)));
            surrogate_inputs in;
            in.n = c.label_count;
            in.y = uniform_int(g, 0, c.label_count - 1);
            in.costs.resize(static_cast<std::size_t>(c.expert_count));
            in.cost_complements.resize(static_cast<std::size_t>(c.expert_count));
            for (int j = 0; j < c.expert_count; ++j) {
                in.costs[static_cast<std::size_t>(j)] = uniform_in(g, 0.05, 0.95);
                in.cost_complements[static_cast<std::size_t>(j)] =
                    1.0 - in.costs[static_cast<std::size_t>(j)];
            }
            in.correct = uniform_int(g, 0, 1);
            in.frozen_h.resize(static_cast<std::size_t>(c.label_count));
            in.hp_max = -1e300;
            for (int k = 0; k < c.label_count; ++k) {
                in.frozen_h[static_cast<std::size_t>(k)] = uniform_in(g, -2.0, 2.0);
                in.hp_max = std::max(in.hp_max, in.frozen_h[static_cast<std::size_t>(k)]);
            }
            in.L_val = uniform_in(g, 0.0, 2.0);
            const int dim = surrogate_param_count(spec, in);
            std::vector<double> theta(static_cast<std::size_t>(dim));
            for (double& t : theta) t = uniform_in(g, -2.0, 2.0);
            if (spec.tag == surrogate_tag::reg_single ||
                spec.tag == surrogate_tag::reg_single_expert)
                theta.back() = uniform_in(g, 0.0, 2.0);  // base-loss slot stays nonnegative
            const double err = fd_check(spec, in, theta, c.step);
            worst = std::max(worst, err);
            if (!(err < c.threshold)) all_ok = false;
            csv += std::string(cfg::surrogate_tag_name(spec.tag)) + "," + std::to_string(p) +
                   "," + fmt_double(err) + "\n";
        }
    }
    write_text(fs::path(opt.out_dir) / "gradcheck.csv", csv);
    std::cout << "gradcheck: " << c.surrogates.size() << " surrogates x " << c.points
              << " points, max rel error " << fmt_double(worst) << " -> "
              << (all_ok ? "pass" : "fail") << "\n";
    note(opt, "wrote gradcheck.csv");
    return all_ok ? exit_ok : exit_violation;
}

// --- oracle ----------------------------------------------------------------------

int run_oracle(const cfg::oracle_config& c, const cli_options& opt) {
    ordered_json rep;
    rep["command"] = "oracle";
    rep["mode"] = c.mode;
    rep["label_count"] = c.label_count;
    rep["expert_count"] = c.expert_count;
    rep["c"] = c.c;

    ordered_json gaps = ordered_json::array();
    for (double mu : c.mu_grid)
        for (double cc : c.c_grid) {
            ordered_json row;
            row["mu"] = mu;
            row["c"] = cc;
            row["closed_form"] = min_gap_closed_form(mu, cc);
            row["numeric"] = min_gap_numeric(mu, cc);
            gaps.push_back(row);
        }
    rep["gaps"] = gaps;

    // Assemble per-point conditionals and (deferral) expected costs.
    std::vector<std::vector<double>> probs;
    std::vector<double> weights;
    std::vector<std::vector<double>> ecosts;
    if (c.generator) {
        discrete_instance inst = gen_discrete(*c.generator);
        probs = inst.dist.cond_probs;
        weights = inst.dist.weights;
        if (c.mode == "deferral")
            for (std::size_t i = 0; i < probs.size(); ++i) {
                std::vector<double> e(static_cast<std::size_t>(c.expert_count));
                for (int j = 0; j < c.expert_count; ++j)
                    e[static_cast<std::size_t>(j)] =
                        inst.costs.expected_cost(static_cast<int>(i), j, probs[i]);
                ecosts.push_back(std::move(e));
            }
    } else if (c.instance) {
        probs = c.instance->cond_probs;
        weights = c.instance->weights;
        ecosts = c.instance->expected_costs;
    }

    ordered_json points = ordered_json::array();
    double expected_risk = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        for (double p : probs[i])
            require<invalid_config>(p >= 0.0 && p <= 1.0, "oracle: probabilities must lie in [0,1]");
        bayes_result b;
        std::vector<double> option_risks;
        if (c.mode == "abstention") {
            b = bayes_abstention(probs[i], c.c);
            for (int y = 0; y < c.label_count; ++y)
                option_risks.push_back(1.0 - probs[i][static_cast<std::size_t>(y)]);
            option_risks.push_back(c.c);
        } else {
            b = bayes_deferral(probs[i], ecosts[i]);
            for (int y = 0; y < c.label_count; ++y)
                option_risks.push_back(1.0 - probs[i][static_cast<std::size_t>(y)]);
            for (int j = 0; j < c.expert_count; ++j)
                option_risks.push_back(ecosts[i][static_cast<std::size_t>(j)]);
        }
        ordered_json row;
        row["id"] = static_cast<int>(i);
        row["weight"] = weights[i];
        row["bayes_decision"] = b.decision;
        row["bayes_risk"] = b.risk;
        ordered_json regrets = ordered_json::array();
        for (double r : option_risks) regrets.push_back(r - b.risk);
        row["regrets"] = regrets;
        points.push_back(row);
        expected_risk += weights[i] * b.risk;
    }
    rep["points"] = points;
    rep["expected_bayes_risk"] = expected_risk;

    write_json(fs::path(opt.out_dir) / "oracle.json", rep);
    std::cout << "oracle: " << gaps.size() << " gap entries, " << points.size()
              << " points, expected Bayes risk " << fmt_double(expected_risk) << "\n";
    note(opt, "wrote oracle.json");
    return exit_ok;
}

// --- bounds ----------------------------------------------------------------------

bound_problem make_bound_problem(const cfg::bounds_config& c, int dist_index) {
    bound_problem prob;
    prob.grid = c.grid;
    prob.hypothesis_count = c.hypotheses;
    prob.seed = derive_seed(c.seed, 0xb0000000ull + static_cast<std::uint64_t>(dist_index));
    if (c.gamma_override) prob.gamma_override = *c.gamma_override;

    const std::uint64_t gen_seed =
        derive_seed(c.seed, 0xd0000000ull + static_cast<std::uint64_t>(dist_index));
    if (c.setting == "abstention") {
        prob.setting = bound_setting::abstention_comp_sum;
        prob.ls.n = c.label_count;
        prob.ls.n_e = 1;
        prob.ls.mode = task_mode::abstention;
        prob.c = c.c;
        prob.fam = multiclass_family::comp_sum(c.mu);
        discrete_config g;
        g.points = c.point_count;
        g.n = c.label_count;
        g.n_e = 0;
        g.abstention = true;
        g.c = c.c;
        g.separation = c.separation;
        g.cost_lo = c.cost_lo;
        g.cost_hi = c.cost_hi;
        g.seed = gen_seed;
        discrete_instance inst = gen_discrete(g);
        prob.dist = std::move(inst.dist);
        return prob;
    }
    if (c.setting == "regression") {
        prob.setting = bound_setting::regression_deferral;
        prob.ls.n = 0;
        prob.ls.n_e = c.expert_count;
        prob.ls.mode = task_mode::deferral_regression;
        prob.fam = c.family;
        regression_discrete_config g;
        g.points = c.point_count;
        g.support = c.value_support;
        g.n_e = c.expert_count;
        g.value_lo = c.value_lo;
        g.value_hi = c.value_hi;
        g.cost_lo = c.cost_lo;
        g.cost_hi = c.cost_hi;
        g.seed = gen_seed;
        regression_discrete_instance inst = gen_regression_discrete(g);
        prob.dist = std::move(inst.dist);
        prob.costs = std::move(inst.costs);
        prob.y_values = std::move(inst.y_values);
        return prob;
    }
    prob.setting = c.setting == "deferral_single" ? bound_setting::deferral_single_stage
                                                  : bound_setting::deferral_two_stage;
    prob.ls.n = c.label_count;
    prob.ls.n_e = c.expert_count;
    prob.ls.mode = task_mode::deferral_classification;
    prob.fam = c.family;
    prob.fam1 = c.stage1_family;
    discrete_config g;
    g.points = c.point_count;
    g.n = c.label_count;
    g.n_e = c.expert_count;
    g.separation = c.separation;
    g.cost_lo = c.cost_lo;
    g.cost_hi = c.cost_hi;
    g.seed = gen_seed;
    discrete_instance inst = gen_discrete(g);
    prob.dist = std::move(inst.dist);
    prob.costs = std::move(inst.costs);
    return prob;
}

int run_bounds(const cfg::bounds_config& c, const cli_options& opt) {
    ordered_json rep;
    rep["command"] = "bounds";
    rep["setting"] = c.setting;
    rep["distribution_count"] = c.distribution_count;
    rep["hypotheses"] = c.hypotheses;
    ordered_json dists = ordered_json::array();

    std::string table =
        "dist  status        min_margin        lhs_at_min        rhs_at_min        "
        "surrogate_best    target_best\n";
    double overall_min = 1e300;
    bool any_violation = false, any_inconclusive = false;
    char line[256];

    for (int di = 0; di < c.distribution_count; ++di) {
        bound_problem prob = make_bound_problem(c, di);
        prob.threads = opt.threads;
        bound_report r = verify_bound(prob);
        any_violation = any_violation || r.status == bound_status::violation;
        any_inconclusive = any_inconclusive || r.status == bound_status::inconclusive;
        overall_min = std::min(overall_min, r.min_margin);

        const bound_margin& m = r.per_hypothesis[static_cast<std::size_t>(
            std::max(0, r.min_index))];
        ordered_json row;
        row["id"] = di;
        row["status"] = to_string(r.status);
        row["min_margin"] = r.min_margin;
        row["lhs_at_min"] = m.lhs;
        row["rhs_at_min"] = m.rhs;
        row["surrogate_best"] = r.e_star_surrogate;
        row["target_best"] = r.e_star_target;
        row["refined"] = r.refined;
        row["used_bracketing"] = r.used_bracketing;
        dists.push_back(row);

        std::snprintf(line, sizeof line, "%-5d %-13s %-17s %-17s %-17s %-17s %s\n", di,
                      to_string(r.status), fmt_double(r.min_margin).c_str(),
                      fmt_double(m.lhs).c_str(), fmt_double(m.rhs).c_str(),
                      fmt_double(r.e_star_surrogate).c_str(),
                      fmt_double(r.e_star_target).c_str());
        table += line;
        note(opt, "distribution " + std::to_string(di) + ": " + to_string(r.status));
    }
    rep["distributions"] = dists;
    rep["min_margin"] = overall_min;
    const char* status =
        any_violation ? "violation" : (any_inconclusive ? "inconclusive" : "ok");
    rep["status"] = status;

    write_json(fs::path(opt.out_dir) / "bounds.json", rep);
    write_text(fs::path(opt.out_dir) / "bounds_table.txt", table);
    std::cout << "bounds: " << c.setting << ", " << c.distribution_count
              << " distributions, min margin " << fmt_double(overall_min) << " -> " << status
              << "\n";
    return any_violation ? exit_violation : (any_inconclusive ? exit_inconclusive : exit_ok);
}

// --- experiment ------------------------------------------------------------------

struct agg {
    double sum = 0.0, sumsq = 0.0;
    int count = 0;
    void add(double v) {
        sum += v;
        sumsq += v * v;
        ++count;
    }
    double mean() const { return count > 0 ? sum / count : 0.0; }
    double stdev() const {
        if (count < 2) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, sumsq / count - m * m));
    }
};

int run_experiment_expert_disjoint(const cfg::experiment_config& c, const cli_options& opt) {
    std::string csv = "seed,expert_count,target_loss,system_score,acceptance_error,accepted_fraction\n";
    ordered_json per_count = ordered_json::array();
    std::vector<double> means;
    bool identity_applicable = c.cost.kind == cost_kind::expert_misclassification;
    for (double b : c.cost.beta) identity_applicable = identity_applicable && b == 0.0;
    for (double a : c.cost.alpha) identity_applicable = identity_applicable && a == 1.0;
    double identity_gap = 0.0;

    for (int k : c.expert_counts) {
        agg score_agg, loss_agg;
        for (std::uint64_t seed : c.seeds) {
            expert_disjoint_config g;
            g.n = c.label_count;
            g.domains.assign(c.domains.begin(), c.domains.begin() + k);
            g.off_domain_accuracy = c.off_domain_accuracy;
            g.feature_noise = c.feature_noise;
            g.count = c.train_count;
            g.seed = derive_seed(seed, 0x1000ull + static_cast<std::uint64_t>(k));
            dataset train = gen_expert_disjoint(g);
            g.count = c.test_count;
            g.seed = derive_seed(seed, 0x2000ull + static_cast<std::uint64_t>(k));
            dataset test = gen_expert_disjoint(g);

            cost_model cm = c.cost;
            if (cm.kind != cost_kind::constant) {
                require<invalid_config>(static_cast<int>(cm.alpha.size()) >= k &&
                                            static_cast<int>(cm.beta.size()) >= k,
                                        "experiment: cost alpha/beta shorter than expert count");
                cm.alpha.resize(static_cast<std::size_t>(k));
                cm.beta.resize(static_cast<std::size_t>(k));
            }

            model_spec ms = c.model;
            ms.seed = derive_seed(seed, 0x3000ull + static_cast<std::uint64_t>(k));
            trained_pair tp;
            if (c.pipeline == "single_stage") {
                tp = train_single_stage(train, c.surrogate, ms, cm, c.optimizer);
            } else {
                model_spec ms2 = c.model;
                ms2.seed = derive_seed(seed, 0x4000ull + static_cast<std::uint64_t>(k));
                tp = train_two_stage(train, c.stage1_family, c.surrogate, ms, ms2, cm,
                                     c.optimizer, c.optimizer2);
            }
            system_metrics met = evaluate_system(tp, test, cm);
            score_agg.add(met.system_score);
            loss_agg.add(met.target_loss_mean);
            identity_gap = std::max(identity_gap,
                                    std::fabs(met.target_loss_mean + met.system_score - 1.0));
            csv += std::to_string(seed) + "," + std::to_string(k) + "," +
                   fmt_double(met.target_loss_mean) + "," + fmt_double(met.system_score) + "," +
                   fmt_double(met.acceptance_error) + "," + fmt_double(met.accepted_fraction) +
                   "\n";
            note(opt, "experts " + std::to_string(k) + " seed " + std::to_string(seed) +
                          ": score " + fmt_double(met.system_score));
        }
        ordered_json row;
        row["expert_count"] = k;
        row["mean_system_score"] = score_agg.mean();
        row["std_system_score"] = score_agg.stdev();
        row["mean_target_loss"] = loss_agg.mean();
        row["std_target_loss"] = loss_agg.stdev();
        per_count.push_back(row);
        means.push_back(score_agg.mean());
    }

    bool non_decreasing = true;
    for (std::size_t i = 1; i < means.size(); ++i)
        if (means[i] < means[i - 1] - 0.005) non_decreasing = false;

    ordered_json summary;
    summary["command"] = "experiment";
    summary["task"] = c.task;
    summary["pipeline"] = c.pipeline;
    summary["per_expert_count"] = per_count;
    summary["system_score_non_decreasing"] = non_decreasing;
    summary["identity_applicable"] = identity_applicable;
    if (identity_applicable) summary["identity_max_gap"] = identity_gap;
    const bool identity_failed = identity_applicable && identity_gap > 1e-12;
    if (identity_applicable) summary["identity_holds"] = !identity_failed;

    write_text(fs::path(opt.out_dir) / "experiment.csv", csv);
    write_json(fs::path(opt.out_dir) / "experiment_summary.json", summary);
    std::cout << "experiment: " << c.task << ", mean scores";
    for (double m : means) std::cout << " " << fmt_double(m);
    std::cout << (non_decreasing ? " (non-decreasing)" : " (NOT non-decreasing)") << "\n";
    return identity_failed ? exit_violation : exit_ok;
}

int run_experiment_counterexample(const cfg::experiment_config& c, const cli_options& opt) {
    counterexample_config g;
    g.count = c.sample_count;
    g.c = c.c;
    g.seed = c.seeds.front();
    counterexample_report r =
        run_counterexample_study(g, c.optimizer, c.multistart, c.seeds.front(), opt.threads);

    std::string csv = "method,run,target_loss\n";
    csv += "bayes,0," + fmt_double(r.bayes_loss) + "\n";
    csv += "predictor_rejector,0," + fmt_double(r.pr_loss) + "\n";
    for (std::size_t s = 0; s < r.start_losses.size(); ++s)
        csv += "score_based," + std::to_string(s) + "," + fmt_double(r.start_losses[s]) + "\n";

    ordered_json summary;
    summary["command"] = "experiment";
    summary["task"] = c.task;
    summary["samples"] = c.sample_count;
    summary["c"] = c.c;
    summary["bayes_loss"] = r.bayes_loss;
    summary["pr_loss"] = r.pr_loss;
    summary["score_loss"] = r.score_loss;
    summary["delta"] = r.delta;

    write_text(fs::path(opt.out_dir) / "experiment.csv", csv);
    write_json(fs::path(opt.out_dir) / "experiment_summary.json", summary);
    std::cout << "experiment: counterexample, bayes " << fmt_double(r.bayes_loss) << ", pr "
              << fmt_double(r.pr_loss) << ", score " << fmt_double(r.score_loss) << ", delta "
              << fmt_double(r.delta) << "\n";
    return exit_ok;
}

int run_experiment_regression(const cfg::experiment_config& c, const cli_options& opt) {
    std::string csv = "seed,expert_count,target_loss,system_score,acceptance_error,accepted_fraction\n";
    const int n_e = static_cast<int>(c.fidelity.size());
    agg loss_agg, score_agg;
    for (std::uint64_t seed : c.seeds) {
        regression_task_config g;
        g.target = c.target;
        g.fidelity = c.fidelity;
        g.sigma = c.sigma;
        g.dim = c.dim;
        g.count = c.train_count;
        g.seed = derive_seed(seed, 0x1000ull);
        dataset train = gen_regression_task(g);
        g.count = c.test_count;
        g.seed = derive_seed(seed, 0x2000ull);
        dataset test = gen_regression_task(g);

        model_spec ms = c.model;
        ms.seed = derive_seed(seed, 0x3000ull);
        trained_pair tp;
        if (c.pipeline == "single_stage") {
            tp = train_single_stage(train, c.surrogate, ms, c.cost, c.optimizer,
                                    c.cost.reg_loss);
        } else {
            model_spec ms2 = c.model;
            ms2.seed = derive_seed(seed, 0x4000ull);
            tp = train_two_stage(train, c.stage1_family, c.surrogate, ms, ms2, c.cost,
                                 c.optimizer, c.optimizer2, c.cost.reg_loss);
        }
        system_metrics met = evaluate_system(tp, test, c.cost, c.cost.reg_loss);
        loss_agg.add(met.target_loss_mean);
        score_agg.add(met.system_score);
        csv += std::to_string(seed) + "," + std::to_string(n_e) + "," +
               fmt_double(met.target_loss_mean) + "," + fmt_double(met.system_score) + "," +
               fmt_double(met.acceptance_error) + "," + fmt_double(met.accepted_fraction) + "\n";
    }
    ordered_json summary;
    summary["command"] = "experiment";
    summary["task"] = c.task;
    summary["pipeline"] = c.pipeline;
    summary["mean_target_loss"] = loss_agg.mean();
    summary["std_target_loss"] = loss_agg.stdev();
    summary["mean_system_score"] = score_agg.mean();
    summary["std_system_score"] = score_agg.stdev();

    write_text(fs::path(opt.out_dir) / "experiment.csv", csv);
    write_json(fs::path(opt.out_dir) / "experiment_summary.json", summary);
    std::cout << "experiment: " << c.task << ", mean target loss "
              << fmt_double(loss_agg.mean()) << "\n";
    return exit_ok;
}

int run_experiment(const cfg::experiment_config& c, const cli_options& opt) {
    if (c.task == "counterexample") return run_experiment_counterexample(c, opt);
    if (c.task == "regression_fidelity") return run_experiment_regression(c, opt);
    return run_experiment_expert_disjoint(c, opt);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"surrogate losses and decision rules for abstention and deferral"};
    cli_options opt;
    std::string command;
    app.add_option("command", command, "command to run (must match the config)")
        ->check(CLI::IsMember({"gradcheck", "oracle", "bounds", "experiment"}));
    app.add_option("--config", opt.config_path, "path to the JSON config")->required();
    app.add_option("--out", opt.out_dir, "output directory (default: current)");
    app.add_option("--threads", opt.threads, "worker threads for parallel sections");
    app.add_flag("--verbose", opt.verbose, "progress notes on standard error");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream f(opt.config_path, std::ios::binary);
        require<invalid_config>(f.good(), "cannot open config file " + opt.config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        cfg::parsed_config top = cfg::parse_top(ss.str());
        require<invalid_config>(command.empty() || command == top.command,
                                "config: command \"" + top.command +
                                    "\" does not match the requested \"" + command + "\"");
        require<invalid_config>(opt.threads >= 1, "config: --threads must be >= 1");
        fs::create_directories(opt.out_dir);

        if (top.command == "gradcheck") return run_gradcheck(cfg::parse_gradcheck(top.raw), opt);
        if (top.command == "oracle") return run_oracle(cfg::parse_oracle(top.raw), opt);
        if (top.command == "bounds") return run_bounds(cfg::parse_bounds(top.raw), opt);
        return run_experiment(cfg::parse_experiment(top.raw), opt);
    } catch (const invalid_config& e) {
        ordered_json diag;
        diag["error"] = "config";
        diag["detail"] = e.what();
        std::cerr << diag.dump() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        ordered_json diag;
        diag["error"] = "runtime";
        diag["detail"] = e.what();
        std::cerr << diag.dump() << "\n";
        return exit_config;
    }
}
