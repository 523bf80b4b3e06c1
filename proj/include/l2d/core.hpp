#pragma once

// Label-space conventions, score containers, cost models, finite
// distributions, and the deterministic decision rules shared by all modules.
//
// Index conventions (0-based throughout):
//   classes            0 .. n-1
//   abstain label      n            (abstention mode, augmented length n+1)
//   defer-to-expert j  n+j          (score-based deferral, experts j = 0 .. n_e-1,
//                                    augmented length n+n_e)
//   rejector vector    0 .. n_e     (entry 0 = keep the prediction)

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l2d/common.hpp"

namespace l2d {

enum class task_mode { abstention, deferral_classification, deferral_regression };

inline const char* to_string(task_mode m) {
    switch (m) {
        case task_mode::abstention: return "abstention";
        case task_mode::deferral_classification: return "deferral_classification";
        case task_mode::deferral_regression: return "deferral_regression";
    }
    return "?";
}

struct label_space {
    int n = 2;       // class count
    int n_e = 1;     // expert count (abstention: treated as a single implicit expert)
    task_mode mode = task_mode::abstention;

    void validate() const {
        if (mode != task_mode::deferral_regression)
            require<invalid_config>(n >= 2, "label_space: n >= 2 required in classification modes");
        if (mode != task_mode::abstention)
            require<invalid_config>(n_e >= 1, "label_space: n_e >= 1 required in deferral modes");
        require<invalid_config>(n_e >= 0, "label_space: n_e must be non-negative");
    }

    // Length of the augmented score vector in score-based formulations.
    int augmented_count() const {
        return mode == task_mode::abstention ? n + 1 : n + n_e;
    }
    // Length of the rejector vector in predictor-rejector formulations.
    int rejector_count() const { return n_e + 1; }
};

// Loose carrier for the per-input function values a decision rule consumes.
// Which fields are populated depends on the formulation being exercised.
struct score_bundle {
    std::vector<double> h_scores;  // class or augmented-label scores
    std::vector<double> r_scores;  // rejector scores indexed 0..n_e
    double h_value = 0.0;          // regression prediction

    void validate(const label_space& ls, bool want_h, bool want_r) const {
        if (want_h) {
            require(static_cast<int>(h_scores.size()) == ls.augmented_count() ||
                        static_cast<int>(h_scores.size()) == ls.n,
                    "score_bundle: h_scores length does not match the label space");
            require_finite(h_scores, "score_bundle.h_scores");
        }
        if (want_r) {
            require(static_cast<int>(r_scores.size()) == ls.rejector_count(),
                    "score_bundle: r_scores length must be n_e+1");
            require_finite(r_scores, "score_bundle.r_scores");
        }
    }
};

// --- decision rules ------------------------------------------------------------

// Argmax with ties broken toward the lowest index (fixed deterministic rule).
inline int predict_label(std::span<const double> scores) {
    require(!scores.empty(), "predict_label: empty score vector");
    require_finite(scores, "predict_label");
    int best = 0;
    for (int i = 1; i < static_cast<int>(scores.size()); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

enum class rejector_convention { argmax_defer, argmin_defer };

// argmax_defer: pick argmax over 0..n_e (ties to lowest index).
// argmin_defer: keep the prediction only when the option-0 score is strictly
// below every expert score (callers model the fixed-at-zero threshold by
// passing r_scores[0] = 0); otherwise defer to the smallest expert score,
// ties among experts to the lowest index.
inline int rejector_decision(std::span<const double> r_scores, rejector_convention conv) {
    require(!r_scores.empty(), "rejector_decision: empty score vector");
    require_finite(r_scores, "rejector_decision");
    const int n_e = static_cast<int>(r_scores.size()) - 1;
    if (conv == rejector_convention::argmax_defer) return predict_label(r_scores);
    require(n_e >= 1, "rejector_decision: argmin_defer needs at least one expert entry");
    int best = 1;
    for (int j = 2; j <= n_e; ++j)
        if (r_scores[j] < r_scores[best]) best = j;
    return r_scores[0] < r_scores[best] ? 0 : best;
}

// --- cost models ----------------------------------------------------------------

enum class cost_kind { constant, expert_misclassification, regression_expert };

enum class regression_loss { squared, absolute };

inline double regression_loss_value(regression_loss tag, double pred, double target) {
    const double d = pred - target;
    return tag == regression_loss::squared ? d * d : std::abs(d);
}

inline double regression_loss_deriv(regression_loss tag, double pred, double target) {
    const double d = pred - target;
    if (tag == regression_loss::squared) return 2.0 * d;
    return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);  // kink derivative fixed to 0
}

// Per-expert deferral costs c_j(x,y).
//   constant:                  c_j = c for every expert (abstention uses n_e=1)
//   expert_misclassification:  c_j = alpha_j * 1{g_j(x) != y} + beta_j
//   regression_expert:         c_j = L(g_j(x), y) + alpha_j
struct cost_model {
    cost_kind kind = cost_kind::constant;
    double c = 0.3;
    std::vector<double> alpha;  // per expert
    std::vector<double> beta;   // per expert (classification kind only)
    regression_loss reg_loss = regression_loss::squared;
    std::vector<double> c_lo;   // per-expert lower cost bounds
    std::vector<double> c_hi;   // per-expert upper cost bounds

    void validate(int n_e) const {
        switch (kind) {
            case cost_kind::constant:
                require<invalid_config>(c > 0.0 && c < 1.0,
                                        "cost_model: constant cost must lie in (0,1)");
                break;
            case cost_kind::expert_misclassification:
                require<invalid_config>(static_cast<int>(alpha.size()) == n_e &&
                                            static_cast<int>(beta.size()) == n_e,
                                        "cost_model: alpha/beta must have one entry per expert");
                break;
            case cost_kind::regression_expert:
                require<invalid_config>(static_cast<int>(alpha.size()) == n_e,
                                        "cost_model: alpha must have one entry per expert");
                break;
        }
        if (!c_lo.empty() || !c_hi.empty())
            require<invalid_config>(c_lo.size() == c_hi.size() &&
                                        static_cast<int>(c_lo.size()) == n_e,
                                    "cost_model: bounds must cover every expert");
    }
};

// Classification experts: integer predictions. Regression experts: real outputs.
struct expert_outputs {
    std::vector<int> labels;     // classification predictions g_j(x)
    std::vector<double> values;  // regression outputs g_j(x)
};

inline std::vector<double> eval_cost(const cost_model& m, const expert_outputs& g, int y,
                                     double y_value = 0.0, int n_e = -1) {
    switch (m.kind) {
        case cost_kind::constant: {
            const int count = n_e >= 0 ? n_e : 1;
            return std::vector<double>(static_cast<std::size_t>(count), m.c);
        }
        case cost_kind::expert_misclassification: {
            require(g.labels.size() == m.alpha.size(),
                    "eval_cost: one expert prediction required per expert");
            std::vector<double> out(m.alpha.size());
            for (std::size_t j = 0; j < out.size(); ++j)
                out[j] = m.alpha[j] * (g.labels[j] != y ? 1.0 : 0.0) + m.beta[j];
            return out;
        }
        case cost_kind::regression_expert: {
            require(g.values.size() == m.alpha.size(),
                    "eval_cost: one expert output required per expert");
            std::vector<double> out(m.alpha.size());
            for (std::size_t j = 0; j < out.size(); ++j)
                out[j] = regression_loss_value(m.reg_loss, g.values[j], y_value) + m.alpha[j];
            return out;
        }
    }
    throw invalid_parameter("eval_cost: unknown cost kind");
}

// --- finite distributions -------------------------------------------------------

// Finite input set with conditional label probabilities; the substrate for the
// brute-force Bayes oracles and bound checks.
struct finite_distribution {
    std::vector<int> point_ids;                       // input ids
    std::vector<std::vector<double>> cond_probs;      // per point, over n labels
    std::vector<double> weights;                      // marginal over points
    std::vector<std::vector<double>> features;        // optional geometry

    int size() const { return static_cast<int>(point_ids.size()); }

    void validate(int n) const {
        require<invalid_input>(point_ids.size() == cond_probs.size() &&
                                   point_ids.size() == weights.size(),
                               "finite_distribution: ragged containers");
        require<invalid_input>(!point_ids.empty(), "finite_distribution: empty support");
        constexpr double tol = 1e-12;
        double wsum = 0.0;
        for (double w : weights) {
            require<invalid_input>(w >= 0.0, "finite_distribution: negative weight");
            wsum += w;
        }
        require<invalid_input>(std::abs(wsum - 1.0) <= tol,
                               "finite_distribution: weights must sum to 1");
        for (const auto& row : cond_probs) {
            require<invalid_input>(static_cast<int>(row.size()) == n,
                                   "finite_distribution: conditional row length mismatch");
            double s = 0.0;
            for (double p : row) {
                require<invalid_input>(p >= 0.0, "finite_distribution: negative probability");
                s += p;
            }
            require<invalid_input>(std::abs(s - 1.0) <= tol,
                                   "finite_distribution: conditional row must sum to 1");
        }
    }
};

// Per-point, per-expert, per-label deferral costs c_j(x,y) on a finite support,
// plus eagerly computed bounds. Feeds the oracle and bound-verification paths.
struct cost_table {
    std::vector<std::vector<std::vector<double>>> c;  // [point][expert][label]
    std::vector<double> c_lo, c_hi;                   // per-expert bounds over the table

    int experts() const { return c.empty() ? 0 : static_cast<int>(c[0].size()); }

    void compute_bounds() {
        const int n_e = experts();
        c_lo.assign(n_e, std::numeric_limits<double>::infinity());
        c_hi.assign(n_e, -std::numeric_limits<double>::infinity());
        for (const auto& per_point : c)
            for (int j = 0; j < n_e; ++j)
                for (double v : per_point[j]) {
                    c_lo[j] = std::min(c_lo[j], v);
                    c_hi[j] = std::max(c_hi[j], v);
                }
    }

    // E_{y~p}[c_j(x,y)] for one point.
    double expected_cost(int point, int expert, std::span<const double> p) const {
        const auto& row = c[point][expert];
        require(row.size() == p.size(), "cost_table: label count mismatch");
        double s = 0.0;
        for (std::size_t y = 0; y < row.size(); ++y) s += p[y] * row[y];
        return s;
    }
};

}  // namespace l2d
