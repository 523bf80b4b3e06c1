// Acceptance suite: nine end-to-end criteria covering gradients, exact loss
// identities, Bayes-decision recovery, closed-form gaps, regret-transfer
// verification, the score-based counterexample, realizable two-stage training,
// the multi-expert trend, and CLI determinism. Prints one PASS/FAIL line per
// criterion (with wall time) and exits nonzero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2d/oracle.hpp"
#include "l2d/synthdata.hpp"
#include "l2d/target_losses.hpp"
#include "l2d/training.hpp"

namespace fs = std::filesystem;
using namespace l2d;
using nlohmann::json;

namespace {

constexpr int kThreads = 4;

struct outcome {
    bool ok = false;
    std::string detail;
};

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("l2d_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f.good()) return {};
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path cfg_path(const std::string& name) { return fs::path(L2D_CONFIG_DIR) / name; }

// Runs the CLI binary with stdout/stderr captured; returns the exit code
// (or -1 if the process did not terminate normally).
int run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path dir = scratch() / ("cli_" + std::to_string(counter++));
    fs::create_directories(dir);
    const std::string cmd = std::string(L2D_CLI_PATH) + " " + args + " > " +
                            (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int raw = std::system(cmd.c_str());
    if (raw == -1 || !WIFEXITED(raw)) return -1;
    return WEXITSTATUS(raw);
}

fs::path write_json_file(const std::string& name, const json& j) {
    const fs::path p = scratch() / name;
    std::ofstream f(p, std::ios::binary);
    f << j.dump(2) << "\n";
    return p;
}

multiclass_family gce_family(double alpha) {
    multiclass_family f;
    f.tag = multiclass_tag::gce;
    f.alpha = alpha;
    return f;
}

multiclass_family sum_exp_family() {
    multiclass_family f;
    f.tag = multiclass_tag::sum_exp;
    return f;
}

// ---- criterion 1: finite-difference gradient suite -------------------------------

outcome criterion_gradients() {
    const fs::path out = scratch() / "c1";
    const int rc = run_cli("gradcheck --config " + cfg_path("gradcheck.json").string() +
                           " --out " + out.string());
    if (rc != 0) return {false, "gradcheck exit code " + std::to_string(rc)};

    double worst = 0.0;
    int rows = 0;
    std::istringstream csv(slurp(out / "gradcheck.csv"));
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) return {false, "malformed CSV row: " + line};
        worst = std::max(worst, std::stod(line.substr(comma + 1)));
        ++rows;
    }
    const bool ok = rows > 0 && worst < 1e-5;
    return {ok, std::to_string(rows) + " checks, max rel error " + fmt_double(worst)};
}

// ---- criterion 2: deferral-loss rewrite identity ----------------------------------

outcome criterion_rewrite() {
    rng_t g = make_rng(202);
    double max_dev = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n_e = uniform_int(g, 1, 4);
        std::vector<double> costs(static_cast<std::size_t>(n_e));
        for (double& c : costs) c = uniform_in(g, 0.0, 1.0);
        const double L = uniform_in(g, 0.0, 2.0);
        const int d = uniform_int(g, 0, n_e);
        max_dev = std::max(max_dev, std::fabs(deferral_loss_rewrite(L, costs, d) -
                                              deferral_loss_rejector(L, d, costs)));
    }
    return {max_dev <= 1e-12, "1000 instances, max deviation " + fmt_double(max_dev)};
}

// ---- criterion 3: surrogate minimization recovers the Bayes decisions -------------

outcome criterion_bayes_recovery() {
    const double abst_mus[] = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0};
    const multiclass_family defer_fams[] = {multiclass_family::logistic(), gce_family(0.7),
                                            multiclass_family::mae()};
    int recoveries = 0;
    for (int inst = 0; inst < 100; ++inst) {
        rng_t g = make_rng(derive_seed(300, static_cast<std::uint64_t>(inst)));
        const int n = uniform_int(g, 2, 4);
        const int n_e = uniform_int(g, 1, 3);
        const int points = uniform_int(g, 2, 5);
        const double c = uniform_in(g, 0.2, 0.8);

        discrete_config ag;
        ag.points = points;
        ag.n = n;
        ag.n_e = 0;
        ag.abstention = true;
        ag.c = c;
        // The mu=0 conditional minimizer spreads softmax mass like sqrt(weight), so
        // the top-two score gap is log(separation)/2; 2.0 keeps it above the 0.25
        // grid resolution (the default 1.35 leaves only ~0.15).
        ag.separation = 2.0;
        ag.seed = derive_seed(301, static_cast<std::uint64_t>(inst));
        const finite_distribution abst_dist = gen_discrete(ag).dist;
        for (double mu : abst_mus) {
            bound_problem prob;
            prob.setting = bound_setting::abstention_comp_sum;
            prob.ls = {n, 1, task_mode::abstention};
            prob.c = c;
            prob.fam = multiclass_family::comp_sum(mu);
            prob.dist = abst_dist;
            const auto rep = check_bayes_recovery(prob);
            if (rep.mismatches != 0)
                return {false, "abstention mu=" + fmt_double(mu) + " instance " +
                                   std::to_string(inst) + ": " +
                                   std::to_string(rep.mismatches) + " mismatches"};
            ++recoveries;
        }

        discrete_config dg;
        dg.points = points;
        dg.n = n;
        dg.n_e = n_e;
        dg.separation = 2.0;
        dg.seed = derive_seed(302, static_cast<std::uint64_t>(inst));
        discrete_instance defer_inst = gen_discrete(dg);
        for (const auto& fam : defer_fams) {
            bound_problem prob;
            prob.setting = bound_setting::deferral_single_stage;
            prob.ls = {n, n_e, task_mode::deferral_classification};
            prob.fam = fam;
            prob.dist = defer_inst.dist;
            prob.costs = defer_inst.costs;
            const auto rep = check_bayes_recovery(prob);
            if (rep.mismatches != 0)
                return {false, std::string("deferral ") + to_string(fam.tag) + " instance " +
                                   std::to_string(inst) + ": " +
                                   std::to_string(rep.mismatches) + " mismatches"};
            ++recoveries;
        }
    }
    return {true, std::to_string(recoveries) + " recoveries, 0 mismatches"};
}

// ---- criterion 4: minimizability-gap closed form -----------------------------------

outcome criterion_gap_closed_form() {
    double max_dev = 0.0;
    for (double mu : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0})
        for (double c : {0.1, 0.5, 0.9}) {
            const double closed = min_gap_closed_form(mu, c);
            const double numeric = min_gap_numeric(mu, c);
            max_dev = std::max(max_dev, std::fabs(closed - numeric));
            if (mu == 2.0 && std::fabs(closed - (1.0 - c)) > 1e-12)
                return {false, "closed form at mu=2 is not 1-c (c=" + fmt_double(c) + ")"};
        }
    return {max_dev <= 1e-6, "18 grid cells, max |closed - numeric| " + fmt_double(max_dev)};
}

// ---- criterion 5: regret-transfer bounds over endorsed pairs -----------------------

outcome criterion_bounds() {
    double global_min = 1e300;
    int verified = 0;

    const auto run_problem = [&](bound_problem prob, const std::string& name) -> std::string {
        prob.threads = kThreads;
        const bound_report rep = verify_bound(prob);
        global_min = std::min(global_min, rep.min_margin);
        ++verified;
        if (rep.status != bound_status::ok || rep.min_margin < -1e-9)
            return name + ": status " + std::string(to_string(rep.status)) + ", min margin " +
                   fmt_double(rep.min_margin);
        return {};
    };

    // Abstention pairs: one per comp-sum exponent, each with its own transfer.
    for (double mu : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0})
        for (int di = 0; di < 5; ++di) {
            bound_problem prob;
            prob.setting = bound_setting::abstention_comp_sum;
            prob.ls = {2, 1, task_mode::abstention};
            prob.c = 0.5;
            prob.fam = multiclass_family::comp_sum(mu);
            prob.hypothesis_count = 200;
            prob.seed = derive_seed(510, static_cast<std::uint64_t>(di));
            discrete_config g;
            g.points = 4;
            g.n = 2;
            g.n_e = 0;
            g.abstention = true;
            g.c = 0.5;
            g.seed = derive_seed(511 + static_cast<std::uint64_t>(mu * 2),
                                 static_cast<std::uint64_t>(di));
            prob.dist = gen_discrete(g).dist;
            const std::string err = run_problem(std::move(prob), "abstention mu=" + fmt_double(mu));
            if (!err.empty()) return {false, err};
        }

    // Single-stage deferral pairs: logistic, gce, and mae families.
    const multiclass_family defer_fams[] = {multiclass_family::logistic(), gce_family(0.7),
                                            multiclass_family::mae()};
    for (const auto& fam : defer_fams)
        for (int di = 0; di < 5; ++di) {
            bound_problem prob;
            prob.setting = bound_setting::deferral_single_stage;
            prob.ls = {3, 2, task_mode::deferral_classification};
            prob.fam = fam;
            prob.hypothesis_count = 200;
            prob.seed = derive_seed(520, static_cast<std::uint64_t>(di));
            discrete_config g;
            g.points = 3;
            g.n = 3;
            g.n_e = 2;
            g.seed = derive_seed(521, static_cast<std::uint64_t>(di));
            discrete_instance inst = gen_discrete(g);
            prob.dist = std::move(inst.dist);
            prob.costs = std::move(inst.costs);
            const std::string err =
                run_problem(std::move(prob), std::string("deferral ") + to_string(fam.tag));
            if (!err.empty()) return {false, err};
        }

    // Two-stage deferral: logistic stage-1 with a logistic deferral head.
    for (int di = 0; di < 5; ++di) {
        bound_problem prob;
        prob.setting = bound_setting::deferral_two_stage;
        prob.ls = {3, 2, task_mode::deferral_classification};
        prob.fam = multiclass_family::logistic();
        prob.fam1 = multiclass_family::logistic();
        prob.hypothesis_count = 200;
        prob.seed = derive_seed(530, static_cast<std::uint64_t>(di));
        discrete_config g;
        g.points = 3;
        g.n = 3;
        g.n_e = 2;
        g.seed = derive_seed(531, static_cast<std::uint64_t>(di));
        discrete_instance inst = gen_discrete(g);
        prob.dist = std::move(inst.dist);
        prob.costs = std::move(inst.costs);
        const std::string err = run_problem(std::move(prob), "two-stage deferral");
        if (!err.empty()) return {false, err};
    }

    // Regression deferral with the sum-exponential rejector family.
    for (int di = 0; di < 5; ++di) {
        bound_problem prob;
        prob.setting = bound_setting::regression_deferral;
        prob.ls = {0, 2, task_mode::deferral_regression};
        prob.fam = sum_exp_family();
        prob.hypothesis_count = 200;
        prob.seed = derive_seed(540, static_cast<std::uint64_t>(di));
        regression_discrete_config g;
        g.points = 3;
        g.support = 2;
        g.n_e = 2;
        g.seed = derive_seed(541, static_cast<std::uint64_t>(di));
        regression_discrete_instance inst = gen_regression_discrete(g);
        prob.dist = std::move(inst.dist);
        prob.costs = std::move(inst.costs);
        prob.y_values = std::move(inst.y_values);
        const std::string err = run_problem(std::move(prob), "regression deferral");
        if (!err.empty()) return {false, err};
    }

    // Falsification control: a sabotaged transfer must exit with code 3.
    const int rc = run_cli("bounds --config " + cfg_path("bounds_sabotage.json").string() +
                           " --out " + (scratch() / "c5_sabotage").string());
    if (rc != 3) return {false, "sabotage run exit code " + std::to_string(rc) + " (want 3)"};

    return {true, std::to_string(verified) + " problems certified, min margin " +
                      fmt_double(global_min) + ", sabotage exits 3"};
}

// ---- criterion 6: score-based counterexample ---------------------------------------

outcome criterion_counterexample() {
    counterexample_config gen;
    gen.count = 100000;
    gen.c = 0.2;
    gen.seed = 1;
    optimizer_config opt;
    opt.kind = optimizer_kind::gd_momentum;
    opt.lr = 0.5;
    opt.momentum = 0.9;
    opt.epochs = 120;
    const counterexample_report rep = run_counterexample_study(gen, opt, 12, 1, kThreads);

    const std::string numbers = "bayes " + fmt_double(rep.bayes_loss) + ", pr " +
                                fmt_double(rep.pr_loss) + ", score " +
                                fmt_double(rep.score_loss) + ", delta " +
                                fmt_double(rep.delta);
    if (std::fabs(rep.bayes_loss - 0.1) > 0.005) return {false, "(a) " + numbers};
    if (std::fabs(rep.pr_loss - rep.bayes_loss) > 0.01) return {false, "(b) " + numbers};
    if (!(rep.delta > 0.01)) return {false, "(c) " + numbers};
    return {true, numbers};
}

// ---- criterion 7: realizable two-stage training -------------------------------------

outcome criterion_realizable() {
    expert_disjoint_config gen;
    gen.n = 4;
    gen.domains = {{0, 1}, {2, 3}};
    gen.off_domain_accuracy = 0.0;
    gen.feature_noise = 0.05;
    gen.count = 600;
    gen.seed = 71;
    const dataset train = gen_expert_disjoint(gen);
    gen.count = 1500;
    gen.seed = 72;
    const dataset test = gen_expert_disjoint(gen);

    cost_model cm;
    cm.kind = cost_kind::expert_misclassification;
    cm.alpha = {1.0, 1.0};
    cm.beta = {0.0, 0.0};

    surrogate_spec stage2;
    stage2.tag = surrogate_tag::defer_two_stage_score;
    stage2.family = multiclass_family::logistic();
    model_spec ms1, ms2;
    ms1.seed = 73;
    ms2.seed = 74;
    optimizer_config opt;
    opt.kind = optimizer_kind::gd_momentum;
    opt.lr = 0.5;
    opt.momentum = 0.9;
    opt.epochs = 1500;  // within the 2000-epoch budget

    const trained_pair tp =
        train_two_stage(train, multiclass_family::logistic(), stage2, ms1, ms2, cm, opt, opt);
    const system_metrics met = evaluate_system(tp, test, cm);
    return {met.target_loss_mean < 0.02,
            "deferral loss " + fmt_double(met.target_loss_mean) + " after " +
                std::to_string(opt.epochs) + " epochs"};
}

// ---- criterion 8: multi-expert trend -------------------------------------------------

outcome criterion_expert_trend() {
    const fs::path out = scratch() / "c8";
    const int rc = run_cli("experiment --config " + cfg_path("experiment_experts.json").string() +
                           " --out " + out.string());
    if (rc != 0) return {false, "experiment exit code " + std::to_string(rc)};
    const json summary = json::parse(slurp(out / "experiment_summary.json"));
    if (summary["system_score_non_decreasing"] != true)
        return {false, "mean system score decreases with expert count"};
    std::string means = "mean scores";
    for (const auto& row : summary["per_expert_count"])
        means += " " + fmt_double(row["mean_system_score"].get<double>());

    // Zero base costs: accuracy must equal one minus the mean deferral loss exactly.
    json zero_cfg = json::parse(slurp(cfg_path("experiment_experts.json")));
    zero_cfg["cost"]["beta"] = json::array({0.0, 0.0, 0.0});
    const fs::path zero_path = write_json_file("experts_zero_cost.json", zero_cfg);
    const fs::path out0 = scratch() / "c8_zero";
    const int rc0 = run_cli("experiment --config " + zero_path.string() + " --out " +
                            out0.string());
    if (rc0 != 0) return {false, "zero-cost experiment exit code " + std::to_string(rc0)};
    const json zs = json::parse(slurp(out0 / "experiment_summary.json"));
    if (zs["identity_applicable"] != true || zs["identity_holds"] != true)
        return {false, "zero-cost identity violated, max gap " +
                           fmt_double(zs.value("identity_max_gap", -1.0))};
    return {true, means + "; zero-cost identity gap " +
                      fmt_double(zs["identity_max_gap"].get<double>())};
}

// ---- criterion 9: CLI determinism ----------------------------------------------------

outcome criterion_determinism() {
    struct cli_case {
        const char* command;
        const char* config;
        std::vector<const char*> artifacts;
    };
    const cli_case cases[] = {
        {"gradcheck", "gradcheck.json", {"gradcheck.csv"}},
        {"oracle", "oracle.json", {"oracle.json"}},
        {"bounds", "bounds_abstention.json", {"bounds.json", "bounds_table.txt"}},
        {"experiment", "experiment_experts.json",
         {"experiment.csv", "experiment_summary.json"}},
    };
    for (const auto& cc : cases) {
        const fs::path a = scratch() / (std::string("c9_") + cc.command + "_a");
        const fs::path b = scratch() / (std::string("c9_") + cc.command + "_b");
        for (const fs::path& dir : {a, b}) {
            const int rc = run_cli(std::string(cc.command) + " --config " +
                                   cfg_path(cc.config).string() + " --out " + dir.string());
            if (rc != 0)
                return {false, std::string(cc.command) + " exit code " + std::to_string(rc)};
        }
        for (const char* artifact : cc.artifacts) {
            const std::string ba = slurp(a / artifact);
            if (ba.empty() || ba != slurp(b / artifact))
                return {false, std::string(cc.command) + ": " + artifact +
                                   " differs between identical runs"};
        }
    }
    return {true, "4 commands x 2 runs, all artifacts byte-identical"};
}

}  // namespace

int main() {
    struct criterion {
        const char* name;
        outcome (*run)();
        double budget_s;  // 0 = no budget
    };
    const criterion criteria[] = {
        {"gradient suite", criterion_gradients, 30.0},
        {"rewrite identity", criterion_rewrite, 1.0},
        {"bayes recovery", criterion_bayes_recovery, 120.0},
        {"gap closed form", criterion_gap_closed_form, 10.0},
        {"bound verification", criterion_bounds, 300.0},
        {"counterexample", criterion_counterexample, 300.0},
        {"realizable two-stage", criterion_realizable, 60.0},
        {"multi-expert trend", criterion_expert_trend, 180.0},
        {"cli determinism", criterion_determinism, 0.0},
    };

    int failures = 0;
    for (std::size_t i = 0; i < std::size(criteria); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        outcome res;
        try {
            res = criteria[i].run();
        } catch (const std::exception& e) {
            res = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (criteria[i].budget_s > 0.0 && secs >= criteria[i].budget_s) {
            res.ok = false;
            res.detail += " [over " + fmt_double(criteria[i].budget_s) + "s budget]";
        }
        if (!res.ok) ++failures;
        std::printf("criterion %zu (%s): %s (%.1fs) %s\n", i + 1, criteria[i].name,
                    res.ok ? "PASS" : "FAIL", secs, res.detail.c_str());
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
