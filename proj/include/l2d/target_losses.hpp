#pragma once

// Exact (non-surrogate) target losses for abstention and deferral, plus the
// algebraic rewrite of the regression deferral loss used by its surrogates.

#include <span>
#include <vector>

#include "l2d/core.hpp"

namespace l2d {

enum class target_kind { abstain_score, abstain_pr, defer_score, defer_pr, defer_regression };

inline const char* to_string(target_kind k) {
    switch (k) {
        case target_kind::abstain_score: return "abstain_score";
        case target_kind::abstain_pr: return "abstain_pr";
        case target_kind::defer_score: return "defer_score";
        case target_kind::defer_pr: return "defer_pr";
        case target_kind::defer_regression: return "defer_regression";
    }
    return "?";
}

// Decision rule for augmented abstention scores: the abstain label (index n)
// wins exact ties against the best class score; class ties go to lowest index.
inline int abstention_decision(std::span<const double> scores) {
    require(scores.size() >= 2, "abstention_decision: need at least one class plus abstain");
    require_finite(scores, "abstention_decision");
    const int n = static_cast<int>(scores.size()) - 1;
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (scores[i] > scores[best]) best = i;
    return scores[n] >= scores[best] ? n : best;
}

// 1{pred != y, pred != abstain} + c * 1{pred = abstain}; scores length n+1.
inline double abstention_loss_score(std::span<const double> scores, int y, double c) {
    require(c > 0.0 && c < 1.0, "abstention_loss_score: c must lie in (0,1)");
    const int n = static_cast<int>(scores.size()) - 1;
    require(y >= 0 && y < n, "abstention_loss_score: label out of range");
    const int d = abstention_decision(scores);
    if (d == n) return c;
    return d != y ? 1.0 : 0.0;
}

// Predictor-rejector abstention: reject (pay c) iff r <= 0, else 0-1 loss.
inline double abstention_loss_pr(std::span<const double> h_scores, double r, int y, double c) {
    require(c > 0.0 && c < 1.0, "abstention_loss_pr: c must lie in (0,1)");
    require(y >= 0 && y < static_cast<int>(h_scores.size()),
            "abstention_loss_pr: label out of range");
    if (r <= 0.0) return c;
    return predict_label(h_scores) != y ? 1.0 : 0.0;
}

// Score-based deferral over n+n_e augmented labels: misclassification cost on
// a kept prediction, c_j when the argmax lands on defer-label j.
inline double deferral_loss_score(std::span<const double> scores, int y, int n,
                                  std::span<const double> costs) {
    const int n_e = static_cast<int>(costs.size());
    require(static_cast<int>(scores.size()) == n + n_e,
            "deferral_loss_score: scores must cover n + n_e labels");
    require(y >= 0 && y < n, "deferral_loss_score: label out of range");
    const int d = predict_label(scores);
    if (d < n) return d != y ? 1.0 : 0.0;
    return costs[static_cast<std::size_t>(d - n)];
}

// Rejector-driven deferral: base loss (0-1 or regression) when the rejector
// keeps the prediction, c_j when it routes to expert j.
inline double deferral_loss_rejector(double base_loss_value, int decision,
                                     std::span<const double> costs) {
    require(decision >= 0 && decision <= static_cast<int>(costs.size()),
            "deferral_loss_rejector: decision out of range");
    if (decision == 0) return base_loss_value;
    return costs[static_cast<std::size_t>(decision - 1)];
}

// Unified entry point over the five target kinds.
struct target_loss_args {
    int y = 0;                   // class label (classification kinds)
    double c = 0.3;              // abstention cost (abstain kinds)
    std::vector<double> costs;   // per-expert deferral costs (defer kinds)
    double base_loss = 0.0;      // L(h(x), y) for defer_regression
    int n = 2;                   // class count (defer_score)
};

inline double target_loss(target_kind kind, const score_bundle& s, const target_loss_args& a) {
    switch (kind) {
        case target_kind::abstain_score:
            return abstention_loss_score(s.h_scores, a.y, a.c);
        case target_kind::abstain_pr:
            require(s.r_scores.size() == 2, "target_loss: abstain_pr expects r_scores (0, r)");
            return abstention_loss_pr(s.h_scores, s.r_scores[1], a.y, a.c);
        case target_kind::defer_score:
            return deferral_loss_score(s.h_scores, a.y, a.n, a.costs);
        case target_kind::defer_pr: {
            const int d = rejector_decision(s.r_scores, rejector_convention::argmin_defer);
            const double base = predict_label(s.h_scores) != a.y ? 1.0 : 0.0;
            return deferral_loss_rejector(base, d, a.costs);
        }
        case target_kind::defer_regression: {
            const int d = rejector_decision(s.r_scores, rejector_convention::argmax_defer);
            return deferral_loss_rejector(a.base_loss, d, a.costs);
        }
    }
    throw invalid_parameter("target_loss: unknown kind");
}

// Rewritten form of the rejector-driven deferral loss:
//   [sum_j c_j] 1{d != 0} + sum_j [L + sum_{k != j} c_k] 1{d != j} - (n_e-1)[L + sum_j c_j].
// Equals deferral_loss_rejector identically; kept separate so the identity is testable.
inline double deferral_loss_rewrite(double base_loss_value, std::span<const double> costs,
                                    int decision) {
    const int n_e = static_cast<int>(costs.size());
    require(n_e >= 1, "deferral_loss_rewrite: needs at least one expert");
    require(decision >= 0 && decision <= n_e, "deferral_loss_rewrite: decision out of range");
    double cost_sum = 0.0;
    for (double cj : costs) cost_sum += cj;
    double v = decision != 0 ? cost_sum : 0.0;
    for (int j = 1; j <= n_e; ++j)
        if (decision != j)
            v += base_loss_value + (cost_sum - costs[static_cast<std::size_t>(j - 1)]);
    v -= (n_e - 1) * (base_loss_value + cost_sum);
    return v;
}

}  // namespace l2d
