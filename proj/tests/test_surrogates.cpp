// Composed surrogate losses: frozen values, reduction identities, dominance
// over the target losses, and the unified-dispatch gradient plumbing.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "l2d/oracle.hpp"
#include "l2d/surrogates.hpp"
#include "l2d/target_losses.hpp"

using namespace l2d;

namespace {
const double LOG3 = std::log(3.0);
}

TEST_CASE("abstain_L_mu frozen values and the c -> 1 structure") {
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK_THAT(abstain_L_mu(zeros, 0, 0.5, 1.0), Catch::Matchers::WithinAbs(1.5 * LOG3, 1e-12));
    CHECK_THAT(abstain_L_mu(zeros, 0, 0.5, 2.0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    // The abstain term enters with weight (1-c): subtracting it recovers the
    // plain class loss for any c, which is the c -> 1 limit statement.
    rng_t g = make_rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s(4);
        for (double& v : s) v = uniform_in(g, -2.0, 2.0);
        const double c = uniform_in(g, 0.05, 0.95);
        const double mu = uniform_in(g, 0.0, 3.0);
        const int y = uniform_int(g, 0, 2);
        const double whole = abstain_L_mu(s, y, c, mu);
        const double cls = ell_mu_value(s, y, mu);
        const double abst = ell_mu_value(s, 3, mu);
        REQUIRE_THAT(whole - (1.0 - c) * abst, Catch::Matchers::WithinAbs(cls, 1e-12));
    }
    CHECK_THROWS_AS(abstain_L_mu(zeros, 0, 1.2, 1.0), invalid_parameter);
    CHECK_THROWS_AS(abstain_L_mu(zeros, 0, 0.5, -1.0), invalid_parameter);
}

TEST_CASE("abstain_two_stage frozen values") {
    const binary_phi exp_phi{phi_tag::exp};
    // Stage-1 misprediction with the extra score at the max: both transforms at 0.
    CHECK_THAT(abstain_two_stage(std::vector<double>{0.0, 1.0}, 1.0, 0, 0.3, exp_phi),
               Catch::Matchers::WithinAbs(1.3, 1e-12));
    // Correct stage-1 prediction, extra score one above the max: only the cost
    // term survives, and it grows as the abstain score pulls ahead.
    CHECK_THAT(abstain_two_stage(std::vector<double>{1.0, 0.0}, 2.0, 0, 0.3, exp_phi),
               Catch::Matchers::WithinAbs(0.3 * std::exp(1.0), 1e-12));
    // Misprediction, extra score one below the max.
    CHECK_THAT(abstain_two_stage(std::vector<double>{0.0, 1.0}, 0.0, 0, 0.3, exp_phi),
               Catch::Matchers::WithinAbs(std::exp(1.0) + 0.3 * std::exp(-1.0), 1e-12));
}

TEST_CASE("pr_single frozen values and monotone structure") {
    const binary_phi exp_phi{phi_tag::exp};
    // MAE class loss at equal two-label scores is 1/2; both transforms at 0.
    CHECK_THAT(pr_single(std::vector<double>{0.0, 0.0}, 0.0, 0, 0.5, multiclass_family::mae(),
                         psi_kind::identity, exp_phi, 1.0, 1.0),
               Catch::Matchers::WithinAbs(1.0, 1e-12));
    // Zero rejection weight: only the class term survives, gated by Phi(-alpha r).
    multiclass_family sum_exp;
    sum_exp.tag = multiclass_tag::sum_exp;
    CHECK_THAT(pr_single(std::vector<double>{0.0, 0.0}, -5.0, 0, 0.0, sum_exp,
                         psi_kind::identity, exp_phi, 1.0, 1.0),
               Catch::Matchers::WithinAbs(std::exp(-5.0), 1e-12));
    // At r = -3 the value is the explicit two-term expression.
    CHECK_THAT(pr_single(std::vector<double>{0.0, 0.0}, -3.0, 0, 0.5, sum_exp,
                         psi_kind::identity, exp_phi, 1.0, 1.0),
               Catch::Matchers::WithinAbs(std::exp(-3.0) + 0.5 * std::exp(3.0), 1e-12));
    // Exponential transforms blow up in both tails around the interior minimizer.
    auto at = [&](double r) {
        return pr_single(std::vector<double>{0.0, 0.0}, r, 0, 0.5, sum_exp, psi_kind::identity,
                         exp_phi, 1.0, 1.0);
    };
    CHECK(at(10.0) > at(0.0));
    CHECK(at(-10.0) > at(0.0));
    CHECK_THROWS_AS(pr_single(std::vector<double>{0.0, 0.0}, 0.0, 0, 0.5, sum_exp,
                              psi_kind::identity, exp_phi, 0.0, 1.0),
                    invalid_parameter);
}

TEST_CASE("psi transform: identity vs n-scaled") {
    CHECK(psi_value(psi_kind::identity, 0.3, 5) == 0.3);
    CHECK_THAT(psi_value(psi_kind::scaled_n, 0.3, 5), Catch::Matchers::WithinAbs(1.5, 1e-15));
}

TEST_CASE("pr_two_stage frozen values and the exp minimizer") {
    const binary_phi exp_phi{phi_tag::exp};
    CHECK_THAT(pr_two_stage(1, 0.0, 0.2, exp_phi), Catch::Matchers::WithinAbs(1.2, 1e-12));
    CHECK_THAT(pr_two_stage(0, 2.0, 0.2, exp_phi),
               Catch::Matchers::WithinAbs(0.2 * std::exp(-2.0), 1e-12));
    // Calculus oracle: e^{r} + c e^{-r} is stationary at r* = (1/2) log c, the
    // negative side (a sure miss should be rejected).
    const double rstar = 0.5 * std::log(0.25);
    double d = 0.0;
    pr_two_stage(1, rstar, 0.25, exp_phi, &d);
    CHECK_THAT(d, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK(pr_two_stage(1, rstar, 0.25, exp_phi) < pr_two_stage(1, rstar + 0.1, 0.25, exp_phi));
    CHECK(pr_two_stage(1, rstar, 0.25, exp_phi) < pr_two_stage(1, rstar - 0.1, 0.25, exp_phi));
}

TEST_CASE("defer_single frozen values and expert weighting") {
    const auto log1 = multiclass_family::logistic();
    // Unit-cost expert contributes nothing.
    rng_t g = make_rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s(3);
        for (double& v : s) v = uniform_in(g, -2.0, 2.0);
        const int y = uniform_int(g, 0, 1);
        CHECK_THAT(defer_single(s, y, 2, std::vector<double>{1.0}, log1),
                   Catch::Matchers::WithinAbs(ell_mu_value(s, y, 1.0), 1e-12));
    }
    // Zero-cost expert at all-zero scores doubles the symmetric value.
    CHECK_THAT(defer_single(std::vector<double>{0.0, 0.0, 0.0}, 0, 2,
                            std::vector<double>{0.0}, log1),
               Catch::Matchers::WithinAbs(2.0 * LOG3, 1e-12));
}

TEST_CASE("defer_two_stage_score frozen values") {
    const auto log1 = multiclass_family::logistic();
    // Only the label-0 term, all three augmented scores equal.
    CHECK_THAT(defer_two_stage_score(0.7, std::vector<double>{0.7, 0.7}, 1,
                                     std::vector<double>{0.0, 0.0}, log1),
               Catch::Matchers::WithinAbs(LOG3, 1e-12));
    // Single expert-1 term at equal scores.
    CHECK_THAT(defer_two_stage_score(0.7, std::vector<double>{0.7, 0.7}, 0,
                                     std::vector<double>{1.0, 0.0}, log1),
               Catch::Matchers::WithinAbs(LOG3, 1e-12));
    CHECK(defer_two_stage_score(0.7, std::vector<double>{0.1, -0.3}, 0,
                                std::vector<double>{0.0, 0.0}, log1) == 0.0);
}

TEST_CASE("defer_two_stage_pr frozen values and negation convention") {
    const auto log1 = multiclass_family::logistic();
    CHECK_THAT(defer_two_stage_pr(std::vector<double>{0.0, 0.0}, 1,
                                  std::vector<double>{0.0, 0.0}, log1),
               Catch::Matchers::WithinAbs(LOG3, 1e-12));
    // Large rejector scores negate into deeply losing augmented slots: the
    // keep-term softmax mass concentrates on label 0.
    CHECK(defer_two_stage_pr(std::vector<double>{20.0, 20.0}, 1,
                             std::vector<double>{0.0, 0.0}, log1) < 1e-6);
    multiclass_family sum_exp;
    sum_exp.tag = multiclass_tag::sum_exp;
    CHECK_THAT(defer_two_stage_pr(std::vector<double>{0.0}, 0, std::vector<double>{1.0},
                                  sum_exp),
               Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("reg_single / reg_two_stage frozen values") {
    const auto log1 = multiclass_family::logistic();
    const std::vector<double> r{0.3, 0.3, 0.3};
    const std::vector<double> costs{0.2, 0.9};
    CHECK_THAT(reg_single(0.5, r, costs, log1),
               Catch::Matchers::WithinAbs(3.2 * LOG3 - 0.5, 1e-12));
    CHECK_THAT(reg_two_stage(0.5, r, costs, log1),
               Catch::Matchers::WithinAbs(3.2 * LOG3, 1e-12));
    CHECK(reg_single(0.0, std::vector<double>{0.1, 0.4}, std::vector<double>{0.0}, log1) == 0.0);
}

TEST_CASE("reg_single_expert frozen values and the exp minimizer") {
    const binary_phi exp_phi{phi_tag::exp};
    CHECK_THAT(reg_single_expert(4.0, 0.0, 1.0, exp_phi), Catch::Matchers::WithinAbs(5.0, 1e-12));
    // Calculus oracle: c e^{-r} + L e^{r} is minimized at r* = (1/2) log(c/L)
    // with value 2 sqrt(L c); here r* = -log 2 and the minimum is 4.
    const double rstar = 0.5 * std::log(1.0 / 4.0);
    CHECK_THAT(reg_single_expert(4.0, rstar, 1.0, exp_phi),
               Catch::Matchers::WithinAbs(4.0, 1e-12));
    CHECK(reg_single_expert(4.0, rstar + 0.1, 1.0, exp_phi) > 4.0);
    CHECK(reg_single_expert(4.0, rstar - 0.1, 1.0, exp_phi) > 4.0);
    CHECK(reg_single_expert(0.0, 0.7, 0.0, exp_phi) == 0.0);
}

TEST_CASE("reduction identities hold to 1e-12") {
    rng_t g = make_rng(42);
    const auto log1 = multiclass_family::logistic();
    multiclass_family sum_exp;
    sum_exp.tag = multiclass_tag::sum_exp;

    for (int trial = 0; trial < 500; ++trial) {
        // Single-expert constant-cost deferral is the abstention surrogate.
        {
            const int n = uniform_int(g, 2, 4);
            std::vector<double> s(static_cast<std::size_t>(n) + 1);
            for (double& v : s) v = uniform_in(g, -2.0, 2.0);
            const int y = uniform_int(g, 0, n - 1);
            const double c = uniform_in(g, 0.05, 0.95);
            const double mu = uniform_in(g, 0.0, 3.0);
            REQUIRE_THAT(defer_single(s, y, n, std::vector<double>{c},
                                      multiclass_family::comp_sum(mu)),
                         Catch::Matchers::WithinAbs(abstain_L_mu(s, y, c, mu), 1e-12));
        }
        // The single-stage and two-stage regression objectives differ by the
        // constant -(n_e - 1) L.
        {
            const int n_e = uniform_int(g, 1, 4);
            std::vector<double> r(static_cast<std::size_t>(n_e) + 1);
            for (double& v : r) v = uniform_in(g, -2.0, 2.0);
            std::vector<double> costs(static_cast<std::size_t>(n_e));
            for (double& c : costs) c = uniform_in(g, 0.0, 1.0);
            const double L = uniform_in(g, 0.0, 2.0);
            REQUIRE_THAT(reg_single(L, r, costs, log1) - reg_two_stage(L, r, costs, log1),
                         Catch::Matchers::WithinAbs(-(n_e - 1.0) * L, 1e-12));
        }
        // With one expert the rejector-score objective collapses to the scalar
        // margin form: sum-exp matches the exp transform, the mu = 1 comp-sum
        // matches the logistic transform, both at u = r_0 - r_1.
        {
            const double r0 = uniform_in(g, -2.0, 2.0);
            const double r1 = uniform_in(g, -2.0, 2.0);
            const double L = uniform_in(g, 0.0, 2.0);
            const double c = uniform_in(g, 0.0, 1.0);
            const std::vector<double> r{r0, r1};
            const std::vector<double> cv{c};
            REQUIRE_THAT(reg_single(L, r, cv, sum_exp),
                         Catch::Matchers::WithinAbs(
                             reg_single_expert(L, r0 - r1, c, binary_phi{phi_tag::exp}), 1e-12));
            REQUIRE_THAT(reg_single(L, r, cv, log1),
                         Catch::Matchers::WithinAbs(
                             reg_single_expert(L, r0 - r1, c, binary_phi{phi_tag::logistic}),
                             1e-12));
        }
    }
}

TEST_CASE("indicator-dominating constituents give surrogate >= target") {
    rng_t g = make_rng(77);
    multiclass_family sum_exp;
    sum_exp.tag = multiclass_tag::sum_exp;
    const auto mu0 = multiclass_family::comp_sum(0.0);
    const std::vector<binary_phi> dom_phis{{phi_tag::exp},
                                           {phi_tag::hinge},
                                           {phi_tag::quadratic},
                                           {phi_tag::sigmoid, 1.5},
                                           {phi_tag::rho_margin, 1.0, 1.0}};

    for (int trial = 0; trial < 1000; ++trial) {
        const double c = uniform_in(g, 0.05, 0.95);
        const int y = uniform_int(g, 0, 1);

        // Score-based abstention, mu = 0 family.
        {
            std::vector<double> s(3);
            for (double& v : s) v = uniform_in(g, -3.0, 3.0);
            const double target = abstention_loss_score(s, y, c);
            REQUIRE(abstain_L_mu(s, y, c, 0.0) >= target - 1e-12);
        }
        // Predictor-rejector abstention, single-stage and two-stage.
        {
            std::vector<double> h(2);
            for (double& v : h) v = uniform_in(g, -3.0, 3.0);
            const double r = uniform_in(g, -3.0, 3.0);
            const double target = abstention_loss_pr(h, r, y, c);
            REQUIRE(pr_single(h, r, y, c, sum_exp, psi_kind::identity, binary_phi{phi_tag::exp},
                              1.0, 1.0) >= target - 1e-12);
            const int miss = predict_label(h) != y ? 1 : 0;
            for (const auto& phi : dom_phis)
                REQUIRE(pr_two_stage(miss, r, c, phi) >= target - 1e-12);
        }
        // Score-based deferral, mu = 0 family.
        {
            const int n_e = uniform_int(g, 1, 3);
            std::vector<double> s(static_cast<std::size_t>(2 + n_e));
            for (double& v : s) v = uniform_in(g, -3.0, 3.0);
            std::vector<double> costs(static_cast<std::size_t>(n_e));
            for (double& cj : costs) cj = uniform_in(g, 0.0, 1.0);
            const double target = deferral_loss_score(s, y, 2, costs);
            REQUIRE(defer_single(s, y, 2, costs, mu0) >= target - 1e-12);
        }
        // Scalar-rejector regression deferral: keep iff r > 0.
        {
            const double L = uniform_in(g, 0.0, 2.0);
            const double r = uniform_in(g, -3.0, 3.0);
            const double cv = uniform_in(g, 0.0, 1.0);
            const double target = r > 0.0 ? L : cv;
            for (const auto& phi : dom_phis)
                REQUIRE(reg_single_expert(L, r, cv, phi) >= target - 1e-12);
        }
    }
}

TEST_CASE("unified dispatch: parameter counts per tag") {
    surrogate_spec s;
    surrogate_inputs in;
    in.n = 3;
    in.costs = {0.1, 0.2};
    in.cost_complements = {0.9, 0.8};
    in.frozen_h = {0.0, 0.0, 0.0};

    s.tag = surrogate_tag::abstain_L_mu;
    CHECK(surrogate_param_count(s, in) == 4);
    s.tag = surrogate_tag::abstain_two_stage;
    CHECK(surrogate_param_count(s, in) == 1);
    s.tag = surrogate_tag::pr_single;
    CHECK(surrogate_param_count(s, in) == 4);
    s.tag = surrogate_tag::pr_two_stage;
    CHECK(surrogate_param_count(s, in) == 1);
    s.tag = surrogate_tag::defer_single;
    CHECK(surrogate_param_count(s, in) == 5);
    s.tag = surrogate_tag::defer_two_stage_score;
    CHECK(surrogate_param_count(s, in) == 2);
    s.tag = surrogate_tag::defer_two_stage_pr;
    CHECK(surrogate_param_count(s, in) == 2);
    s.tag = surrogate_tag::reg_single;
    CHECK(surrogate_param_count(s, in) == 4);
    s.tag = surrogate_tag::reg_two_stage;
    CHECK(surrogate_param_count(s, in) == 3);
    s.tag = surrogate_tag::reg_single_expert;
    CHECK(surrogate_param_count(s, in) == 2);

    // Mismatched theta length is rejected.
    s.tag = surrogate_tag::pr_two_stage;
    std::vector<double> theta{0.0, 0.0};
    CHECK_THROWS_AS(surrogate_eval(s, in, theta, nullptr), invalid_input);
}

TEST_CASE("unified dispatch: gradients match finite differences for every tag") {
    // Kink-free constituents so every seeded point is checkable.
    rng_t g = make_rng(91);
    for (surrogate_tag tag :
         {surrogate_tag::abstain_L_mu, surrogate_tag::abstain_two_stage,
          surrogate_tag::pr_single, surrogate_tag::pr_two_stage, surrogate_tag::defer_single,
          surrogate_tag::defer_two_stage_score, surrogate_tag::defer_two_stage_pr,
          surrogate_tag::reg_single, surrogate_tag::reg_two_stage,
          surrogate_tag::reg_single_expert}) {
        surrogate_spec s;
        s.tag = tag;
        s.family = multiclass_family::logistic();
        s.phi = binary_phi{phi_tag::exp};
        s.mu = 1.5;
        s.c = 0.4;

        for (int point = 0; point < 20; ++point) {
            surrogate_inputs in;
            in.n = 3;
            in.y = uniform_int(g, 0, 2);
            in.correct = uniform_int(g, 0, 1);
            in.hp_max = uniform_in(g, -1.0, 1.0);
            in.L_val = uniform_in(g, 0.0, 2.0);
            for (int j = 0; j < 2; ++j) {
                in.costs.push_back(uniform_in(g, 0.05, 0.95));
                in.cost_complements.push_back(1.0 - in.costs.back());
            }
            for (int k = 0; k < 3; ++k) in.frozen_h.push_back(uniform_in(g, -2.0, 2.0));

            std::vector<double> theta(static_cast<std::size_t>(surrogate_param_count(s, in)));
            for (double& t : theta) t = uniform_in(g, -2.0, 2.0);
            // Trailing slot is a base-loss value for the regression tags.
            if (tag == surrogate_tag::reg_single || tag == surrogate_tag::reg_single_expert)
                theta.back() = uniform_in(g, 0.1, 2.0);

            INFO(to_string(tag) << " point " << point);
            REQUIRE(fd_check(s, in, theta) < 1e-5);
        }
    }
}

TEST_CASE("endorsement flags no-guarantee pr_single combinations") {
    surrogate_spec s;
    s.tag = surrogate_tag::pr_single;
    s.family = multiclass_family::mae();
    s.psi = psi_kind::identity;
    CHECK(endorsement(s).endorsed);

    s.alpha_s = 1.0;
    s.beta_s = 2.0;
    CHECK_FALSE(endorsement(s).endorsed);
    s.beta_s = 1.0;

    s.family.tag = multiclass_tag::margin_rho;
    CHECK(endorsement(s).endorsed);

    s.family.tag = multiclass_tag::cstnd_hinge;
    s.psi = psi_kind::scaled_n;
    CHECK(endorsement(s).endorsed);

    s.family = multiclass_family::logistic();
    s.psi = psi_kind::identity;
    const auto st = endorsement(s);
    CHECK_FALSE(st.endorsed);
    CHECK_FALSE(st.reason.empty());

    s.tag = surrogate_tag::defer_single;
    CHECK(endorsement(s).endorsed);
}
