// Exact target losses and the rejector-deferral rewrite identity.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "l2d/target_losses.hpp"

using namespace l2d;

TEST_CASE("abstention_loss_score: accept, abstain, and tie cases") {
    CHECK(abstention_loss_score(std::vector<double>{2.0, 0.0, 1.0}, 0, 0.3) == 0.0);
    CHECK(abstention_loss_score(std::vector<double>{0.0, 0.0, 5.0}, 1, 0.3) == 0.3);
    // Exact tie between the best class score and the abstain score: abstaining
    // wins (the decision rule uses >= for the abstain slot).
    CHECK(abstention_loss_score(std::vector<double>{1.0, 1.0, 1.0}, 0, 0.3) == 0.3);
    CHECK(abstention_loss_score(std::vector<double>{0.0, 2.0, 1.0}, 0, 0.3) == 1.0);
    CHECK_THROWS_AS(abstention_loss_score(std::vector<double>{1.0, 0.0, 0.0}, 0, 1.5),
                    invalid_input);
    CHECK_THROWS_AS(abstention_loss_score(std::vector<double>{1.0, 0.0, 0.0}, 0, 0.0),
                    invalid_input);
}

TEST_CASE("abstention_loss_pr: rejection at r <= 0 including the boundary") {
    CHECK(abstention_loss_pr(std::vector<double>{2.0, 0.0}, 1.0, 0, 0.5) == 0.0);
    CHECK(abstention_loss_pr(std::vector<double>{2.0, 0.0}, -0.1, 0, 0.5) == 0.5);
    CHECK(abstention_loss_pr(std::vector<double>{0.0, 2.0}, 0.0, 0, 0.2) == 0.2);
    CHECK(abstention_loss_pr(std::vector<double>{0.0, 2.0}, 0.3, 0, 0.2) == 1.0);
}

TEST_CASE("deferral_loss_score routes cost by the augmented argmax") {
    // n = 2 classes, argmax at augmented index n+1 => defer to expert 2.
    CHECK(deferral_loss_score(std::vector<double>{0.0, 0.1, 0.2, 0.9}, 0, 2,
                              std::vector<double>{0.2, 0.9}) == 0.9);
    CHECK(deferral_loss_score(std::vector<double>{1.0, 0.1, 0.2, 0.3}, 0, 2,
                              std::vector<double>{0.2, 0.9}) == 0.0);
    CHECK(deferral_loss_score(std::vector<double>{0.0, 1.0, 0.2, 0.3}, 0, 2,
                              std::vector<double>{0.2, 0.9}) == 1.0);
    CHECK_THROWS_AS(deferral_loss_score(std::vector<double>{0.0, 1.0, 0.2}, 0, 2,
                                        std::vector<double>{0.2, 0.9}),
                    invalid_input);
}

TEST_CASE("deferral_loss_rejector pays the base loss or the selected expert cost") {
    CHECK(deferral_loss_rejector(0.5, 0, std::vector<double>{0.2, 0.9}) == 0.5);
    CHECK(deferral_loss_rejector(0.5, 2, std::vector<double>{0.2, 0.9}) == 0.9);
    CHECK(deferral_loss_rejector(0.0, 0, std::vector<double>{0.4}) == 0.0);
}

TEST_CASE("deferral_loss_rewrite hand-expanded cases") {
    const std::vector<double> costs{0.2, 0.9};
    // deferral to expert 1: 1.1 + (0.5 + 0.2) - 1.6 = 0.2
    CHECK_THAT(deferral_loss_rewrite(0.5, costs, 1), Catch::Matchers::WithinAbs(0.2, 1e-15));
    // keep: 0 + (0.5 + 0.9) + (0.5 + 0.2) - 1.6 = 0.5
    CHECK_THAT(deferral_loss_rewrite(0.5, costs, 0), Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK(deferral_loss_rewrite(0.0, std::vector<double>{0.3}, 0) == 0.0);
}

TEST_CASE("rewrite identity holds to 1e-12 over 1000 seeded instances") {
    rng_t g = make_rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n_e = uniform_int(g, 1, 4);
        std::vector<double> costs(static_cast<std::size_t>(n_e));
        for (double& c : costs) c = uniform_in(g, 0.0, 1.0);
        const double L = uniform_in(g, 0.0, 2.0);
        const int d = uniform_int(g, 0, n_e);
        const double direct = deferral_loss_rejector(L, d, costs);
        const double rewritten = deferral_loss_rewrite(L, costs, d);
        REQUIRE_THAT(rewritten, Catch::Matchers::WithinAbs(direct, 1e-12));
    }
}

TEST_CASE("abstention is score-based deferral with one constant-cost expert") {
    rng_t g = make_rng(55);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = uniform_int(g, 2, 4);
        std::vector<double> scores(static_cast<std::size_t>(n) + 1);
        for (double& s : scores) s = uniform_in(g, -2.0, 2.0);
        const int y = uniform_int(g, 0, n - 1);
        const double c = uniform_in(g, 0.05, 0.95);
        // The score-based deferral rule breaks the keep-vs-defer tie toward the
        // lower (class) index, while the abstention rule lets the abstain slot win
        // ties; nudge exact ties off the boundary so the two rules coincide.
        const int top = predict_label(std::span<const double>(scores).first(scores.size() - 1));
        if (scores.back() == scores[static_cast<std::size_t>(top)]) scores.back() += 1e-9;
        CHECK(abstention_loss_score(scores, y, c) ==
              deferral_loss_score(scores, y, n, std::vector<double>{c}));
    }
}

TEST_CASE("target losses stay within [0, max(1, max cost)]") {
    rng_t g = make_rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const int n_e = uniform_int(g, 1, 3);
        std::vector<double> costs(static_cast<std::size_t>(n_e));
        double cmax = 1.0;
        for (double& c : costs) {
            c = uniform_in(g, 0.0, 1.5);
            cmax = std::max(cmax, c);
        }
        const double L = uniform_in(g, 0.0, 1.0);
        const int d = uniform_int(g, 0, n_e);
        const double v = deferral_loss_rejector(L, d, costs);
        CHECK(v >= 0.0);
        CHECK(v <= cmax);
    }
}

TEST_CASE("target_loss dispatch covers every kind") {
    score_bundle s;
    target_loss_args a;

    s.h_scores = {1.0, 0.0, 2.0};
    a.y = 0;
    a.c = 0.3;
    CHECK(target_loss(target_kind::abstain_score, s, a) == 0.3);

    s.h_scores = {1.0, 0.0};
    s.r_scores = {0.0, -1.0};
    CHECK(target_loss(target_kind::abstain_pr, s, a) == 0.3);

    s.h_scores = {0.0, 0.1, 0.9};
    a.n = 2;
    a.costs = {0.4};
    CHECK(target_loss(target_kind::defer_score, s, a) == 0.4);

    // argmin convention: expert score at the zero threshold defers.
    s.h_scores = {1.0, 0.0};
    s.r_scores = {0.0, 0.0};
    CHECK(target_loss(target_kind::defer_pr, s, a) == 0.4);
    s.r_scores = {0.0, 0.5};
    CHECK(target_loss(target_kind::defer_pr, s, a) == 0.0);  // keep, prediction correct

    // argmax convention for regression deferral.
    s.r_scores = {0.2, 0.5};
    a.base_loss = 0.7;
    CHECK(target_loss(target_kind::defer_regression, s, a) == 0.4);
    s.r_scores = {0.6, 0.5};
    CHECK(target_loss(target_kind::defer_regression, s, a) == 0.7);
}
