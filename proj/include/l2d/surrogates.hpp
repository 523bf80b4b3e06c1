#pragma once

// Composed surrogate losses for abstention and deferral, each with value and
// analytic gradient with respect to every trainable score. Two-stage variants
// differentiate only the second-stage scores; frozen quantities enter as data.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "l2d/base_losses.hpp"
#include "l2d/core.hpp"

namespace l2d {

enum class surrogate_tag {
    abstain_L_mu,
    abstain_two_stage,
    pr_single,
    pr_two_stage,
    defer_single,
    defer_two_stage_score,
    defer_two_stage_pr,
    reg_single,
    reg_two_stage,
    reg_single_expert,
};

inline const char* to_string(surrogate_tag t) {
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

// Rejection-cost transform in the single-stage predictor-rejector loss.
enum class psi_kind { identity, scaled_n };

inline double psi_value(psi_kind psi, double c, int n) {
    return psi == psi_kind::identity ? c : n * c;
}

// --- individual surrogate operations ---------------------------------------------

// L_mu score-based abstention surrogate over n+1 augmented scores:
//   ell_mu(scores, y) + (1-c) * ell_mu(scores, abstain).
inline double abstain_L_mu(std::span<const double> scores, int y, double c, double mu,
                           std::vector<double>* grad = nullptr) {
    require<invalid_parameter>(c > 0.0 && c < 1.0, "abstain_L_mu: c must lie in (0,1)");
    require<invalid_parameter>(mu >= 0.0, "abstain_L_mu: mu must be >= 0");
    const int n = static_cast<int>(scores.size()) - 1;
    require(n >= 1 && y >= 0 && y < n, "abstain_L_mu: label/shape mismatch");
    const multiclass_family fam = multiclass_family::comp_sum(mu);
    std::vector<double> g1, g2;
    const double v1 = family_eval(fam, scores, y, grad ? &g1 : nullptr);
    const double v2 = family_eval(fam, scores, n, grad ? &g2 : nullptr);
    if (grad) {
        grad->assign(scores.size(), 0.0);
        for (std::size_t k = 0; k < scores.size(); ++k) (*grad)[k] = g1[k] + (1.0 - c) * g2[k];
    }
    return v1 + (1.0 - c) * v2;
}

// Second-stage abstention surrogate: stage-1 class scores are frozen, only the
// extra (abstain) score is trainable.
//   1{pred != y} * Phi(h_extra - max h_Y) + c * Phi(max h_Y - h_extra).
inline double abstain_two_stage(std::span<const double> h_Y_scores, double h_extra, int y,
                                double c, const binary_phi& phi, double* d_h_extra = nullptr) {
    require<invalid_parameter>(c > 0.0 && c < 1.0, "abstain_two_stage: c must lie in (0,1)");
    require(y >= 0 && y < static_cast<int>(h_Y_scores.size()),
            "abstain_two_stage: label out of range");
    const int pred = predict_label(h_Y_scores);
    double mh = h_Y_scores[0];
    for (double s : h_Y_scores) mh = std::max(mh, s);
    const double miss = pred != y ? 1.0 : 0.0;
    const double diff = h_extra - mh;
    if (d_h_extra) *d_h_extra = miss * phi_grad(phi, diff) - c * phi_grad(phi, -diff);
    return miss * phi_value(phi, diff) + c * phi_value(phi, -diff);
}

// Single-stage predictor-rejector abstention surrogate:
//   ell(h, y) * Phi(-alpha_s r) + Psi(c) * Phi(beta_s r).
inline double pr_single(std::span<const double> h_scores, double r, int y, double c,
                        const multiclass_family& fam, psi_kind psi, const binary_phi& phi,
                        double alpha_s, double beta_s, std::vector<double>* d_h = nullptr,
                        double* d_r = nullptr) {
    require<invalid_parameter>(alpha_s > 0.0 && beta_s > 0.0,
                               "pr_single: scale constants must be positive");
    const int n = static_cast<int>(h_scores.size());
    require(y >= 0 && y < n, "pr_single: label out of range");
    const double keep_w = phi_value(phi, -alpha_s * r);
    const double rej_w = phi_value(phi, beta_s * r);
    const double psi_c = psi_value(psi, c, n);
    std::vector<double> gh;
    const double lv = family_eval(fam, h_scores, y, d_h ? &gh : nullptr);
    if (d_h) {
        d_h->assign(h_scores.size(), 0.0);
        for (std::size_t k = 0; k < gh.size(); ++k) (*d_h)[k] = gh[k] * keep_w;
    }
    if (d_r)
        *d_r = lv * phi_grad(phi, -alpha_s * r) * (-alpha_s) +
               psi_c * phi_grad(phi, beta_s * r) * beta_s;
    return lv * keep_w + psi_c * rej_w;
}

// Second-stage predictor-rejector abstention surrogate (predictor frozen):
//   1{miss} * Phi(-r) + c * Phi(r).
inline double pr_two_stage(int misclassified, double r, double c, const binary_phi& phi,
                           double* d_r = nullptr) {
    require(misclassified == 0 || misclassified == 1, "pr_two_stage: indicator must be 0/1");
    const double m = misclassified;
    if (d_r) *d_r = -m * phi_grad(phi, -r) + c * phi_grad(phi, r);
    return m * phi_value(phi, -r) + c * phi_value(phi, r);
}

// Single-stage score-based deferral surrogate over n+n_e augmented scores:
//   ell(scores, y) + sum_j (1 - c_j) * ell(scores, n+j).
inline double defer_single(std::span<const double> scores, int y, int n,
                           std::span<const double> costs, const multiclass_family& fam,
                           std::vector<double>* grad = nullptr) {
    const int n_e = static_cast<int>(costs.size());
    require(static_cast<int>(scores.size()) == n + n_e,
            "defer_single: scores must cover n + n_e labels");
    require(y >= 0 && y < n, "defer_single: label out of range");
    std::vector<double> g;
    double value = family_eval(fam, scores, y, grad ? &g : nullptr);
    if (grad) *grad = g;
    for (int j = 0; j < n_e; ++j) {
        const double w = 1.0 - costs[static_cast<std::size_t>(j)];
        if (w == 0.0) continue;
        value += w * family_eval(fam, scores, n + j, grad ? &g : nullptr);
        if (grad)
            for (std::size_t k = 0; k < g.size(); ++k) (*grad)[k] += w * g[k];
    }
    return value;
}

// Second-stage score-based deferral surrogate. The deferral scores h_d (one per
// expert) are trainable; category 0 carries the frozen max first-stage score.
//   1{correct} * ell2(hbar, 0) + sum_j cbar_j * ell2(hbar, j),  hbar = (hp_max, h_d).
inline double defer_two_stage_score(double hp_max, std::span<const double> hd_scores,
                                    int correct, std::span<const double> cost_complements,
                                    const multiclass_family& fam,
                                    std::vector<double>* d_hd = nullptr) {
    const int n_e = static_cast<int>(hd_scores.size());
    require(n_e >= 1 && cost_complements.size() == hd_scores.size(),
            "defer_two_stage_score: one complement weight per expert required");
    require(correct == 0 || correct == 1, "defer_two_stage_score: indicator must be 0/1");
    std::vector<double> hbar(static_cast<std::size_t>(n_e) + 1);
    hbar[0] = hp_max;
    for (int j = 0; j < n_e; ++j) hbar[static_cast<std::size_t>(j) + 1] = hd_scores[static_cast<std::size_t>(j)];
    std::vector<double> acc, g;
    if (d_hd) acc.assign(hbar.size(), 0.0);
    double value = 0.0;
    auto add_term = [&](double w, int tgt) {
        if (w == 0.0) return;
        value += w * family_eval(fam, hbar, tgt, d_hd ? &g : nullptr);
        if (d_hd)
            for (std::size_t k = 0; k < g.size(); ++k) acc[k] += w * g[k];
    };
    add_term(static_cast<double>(correct), 0);
    for (int j = 0; j < n_e; ++j) add_term(cost_complements[static_cast<std::size_t>(j)], j + 1);
    if (d_hd) d_hd->assign(acc.begin() + 1, acc.end());  // slot 0 frozen
    return value;
}

// Second-stage predictor-rejector deferral surrogate; rejector scores are
// negated into rbar = (0, -r_1, ..., -r_{n_e}) with slot 0 frozen at 0.
inline double defer_two_stage_pr(std::span<const double> r_scores, int correct,
                                 std::span<const double> cost_complements,
                                 const multiclass_family& fam,
                                 std::vector<double>* d_r = nullptr) {
    const int n_e = static_cast<int>(r_scores.size());
    require(n_e >= 1 && cost_complements.size() == r_scores.size(),
            "defer_two_stage_pr: one complement weight per expert required");
    require(correct == 0 || correct == 1, "defer_two_stage_pr: indicator must be 0/1");
    std::vector<double> rbar(static_cast<std::size_t>(n_e) + 1, 0.0);
    for (int j = 0; j < n_e; ++j) rbar[static_cast<std::size_t>(j) + 1] = -r_scores[static_cast<std::size_t>(j)];
    std::vector<double> acc, g;
    if (d_r) acc.assign(rbar.size(), 0.0);
    double value = 0.0;
    auto add_term = [&](double w, int tgt) {
        if (w == 0.0) return;
        value += w * family_eval(fam, rbar, tgt, d_r ? &g : nullptr);
        if (d_r)
            for (std::size_t k = 0; k < g.size(); ++k) acc[k] += w * g[k];
    };
    add_term(static_cast<double>(correct), 0);
    for (int j = 0; j < n_e; ++j) add_term(cost_complements[static_cast<std::size_t>(j)], j + 1);
    if (d_r) {
        d_r->assign(r_scores.size(), 0.0);
        for (int j = 0; j < n_e; ++j) (*d_r)[static_cast<std::size_t>(j)] = -acc[static_cast<std::size_t>(j) + 1];
    }
    return value;
}

// Single-stage regression-deferral surrogate over rejector scores r_0..r_{n_e}:
//   [sum c_j] ell(r, 0) + sum_j [L + sum_{j' != j} c_{j'}] ell(r, j) - (n_e - 1) L.
// Gradients flow into both the rejector scores and the base loss value L.
inline double reg_single(double L_val, std::span<const double> r_scores,
                         std::span<const double> costs, const multiclass_family& fam,
                         std::vector<double>* d_r = nullptr, double* d_L = nullptr) {
    const int n_e = static_cast<int>(costs.size());
    require(n_e >= 1 && static_cast<int>(r_scores.size()) == n_e + 1,
            "reg_single: r_scores must have length n_e + 1");
    require(L_val >= 0.0, "reg_single: base loss must be non-negative");
    double cost_sum = 0.0;
    for (double cj : costs) cost_sum += cj;
    std::vector<double> g;
    if (d_r) d_r->assign(r_scores.size(), 0.0);
    if (d_L) *d_L = -(n_e - 1.0);
    double value = -(n_e - 1.0) * L_val;
    auto add_term = [&](double w, int tgt, bool l_weighted) {
        const double lv = family_eval(fam, r_scores, tgt, d_r ? &g : nullptr);
        value += w * lv;
        if (d_r)
            for (std::size_t k = 0; k < g.size(); ++k) (*d_r)[k] += w * g[k];
        if (d_L && l_weighted) *d_L += lv;
    };
    add_term(cost_sum, 0, false);
    for (int j = 0; j < n_e; ++j)
        add_term(L_val + cost_sum - costs[static_cast<std::size_t>(j)], j + 1, true);
    return value;
}

// Two-stage variant: identical weights without the -(n_e-1)L correction, and
// the base loss is frozen (no gradient into L).
inline double reg_two_stage(double L_val, std::span<const double> r_scores,
                            std::span<const double> costs, const multiclass_family& fam,
                            std::vector<double>* d_r = nullptr) {
    double value = reg_single(L_val, r_scores, costs, fam, d_r, nullptr);
    return value + (static_cast<int>(costs.size()) - 1.0) * L_val;
}

// Single-expert regression-deferral surrogate over one scalar rejector score:
//   c * Phi(r) + L * Phi(-r).
inline double reg_single_expert(double L_val, double r, double c_val, const binary_phi& phi,
                                double* d_r = nullptr, double* d_L = nullptr) {
    require(L_val >= 0.0 && c_val >= 0.0, "reg_single_expert: losses/costs must be >= 0");
    if (d_r) *d_r = c_val * phi_grad(phi, r) - L_val * phi_grad(phi, -r);
    if (d_L) *d_L = phi_value(phi, -r);
    return c_val * phi_value(phi, r) + L_val * phi_value(phi, -r);
}

// --- unified dispatch --------------------------------------------------------------
//
// One spec + per-sample inputs + flat trainable-parameter vector. Used by the
// finite-difference checker, the trainers, and the CLI so every surrogate is
// exercised through a single code path.

struct surrogate_spec {
    surrogate_tag tag = surrogate_tag::abstain_L_mu;
    multiclass_family family;      // ell (single-stage) or ell2 (two-stage)
    binary_phi phi;                // margin transform where applicable
    psi_kind psi = psi_kind::identity;
    double alpha_s = 1.0;          // pr_single scale constants
    double beta_s = 1.0;
    double mu = 1.0;               // abstain_L_mu family parameter
    double c = 0.3;                // abstention cost (abstain/pr tags)

    void validate() const {
        family.validate();
        phi.validate();
        switch (tag) {
            case surrogate_tag::abstain_L_mu:
                require<invalid_parameter>(mu >= 0.0, "surrogate_spec: mu must be >= 0");
                [[fallthrough]];
            case surrogate_tag::abstain_two_stage:
            case surrogate_tag::pr_single:
            case surrogate_tag::pr_two_stage:
                require<invalid_parameter>(c > 0.0 && c < 1.0,
                                           "surrogate_spec: abstention cost must lie in (0,1)");
                break;
            default: break;
        }
        if (tag == surrogate_tag::pr_single)
            require<invalid_parameter>(alpha_s > 0.0 && beta_s > 0.0,
                                       "surrogate_spec: scale constants must be positive");
    }
};

// Consistency-guarantee status of a spec; combinations outside the endorsed
// set still evaluate but carry a structured warning.
struct guarantee_status {
    bool endorsed = true;
    std::string reason;
};

inline guarantee_status endorsement(const surrogate_spec& s) {
    if (s.tag != surrogate_tag::pr_single) return {true, ""};
    if (s.alpha_s != s.beta_s)
        return {false, "pr_single: guarantees require alpha_s == beta_s"};
    const bool mae_id = s.family.tag == multiclass_tag::comp_sum_mu && s.family.mu == 2.0 &&
                        s.psi == psi_kind::identity;
    const bool rho_id =
        s.family.tag == multiclass_tag::margin_rho && s.psi == psi_kind::identity;
    const bool hinge_n =
        s.family.tag == multiclass_tag::cstnd_hinge && s.psi == psi_kind::scaled_n;
    if (mae_id || rho_id || hinge_n) return {true, ""};
    return {false,
            "pr_single: no consistency guarantee for this (ell, Psi) combination; endorsed: "
            "mae with identity Psi, rho-margin with identity Psi, constrained hinge with "
            "n-scaled Psi"};
}

// Per-sample fixed context for surrogate_eval. Only the fields a tag consumes
// need to be populated.
struct surrogate_inputs {
    int y = 0;                              // class label
    int n = 2;                              // class count
    std::vector<double> costs;              // c_j(x,y), single-stage deferral
    std::vector<double> cost_complements;   // 1 - c_j(x,y), two-stage deferral
    int correct = 1;                        // 1{stage-1 prediction == y}
    double hp_max = 0.0;                    // frozen stage-1 max score
    std::vector<double> frozen_h;           // frozen stage-1 class scores
    double L_val = 0.0;                     // frozen regression base loss
};

// Number of trainable parameters the tag expects in theta.
inline int surrogate_param_count(const surrogate_spec& s, const surrogate_inputs& in) {
    switch (s.tag) {
        case surrogate_tag::abstain_L_mu: return in.n + 1;
        case surrogate_tag::abstain_two_stage: return 1;
        case surrogate_tag::pr_single: return in.n + 1;  // h_0..h_{n-1}, r
        case surrogate_tag::pr_two_stage: return 1;
        case surrogate_tag::defer_single:
            return in.n + static_cast<int>(in.costs.size());
        case surrogate_tag::defer_two_stage_score:
        case surrogate_tag::defer_two_stage_pr:
            return static_cast<int>(in.cost_complements.size());
        case surrogate_tag::reg_single:
            return static_cast<int>(in.costs.size()) + 2;  // r_0..r_{n_e}, L
        case surrogate_tag::reg_two_stage:
            return static_cast<int>(in.costs.size()) + 1;  // r_0..r_{n_e}
        case surrogate_tag::reg_single_expert: return 2;   // r, L
    }
    throw invalid_parameter("surrogate_param_count: unknown tag");
}

inline double surrogate_eval(const surrogate_spec& s, const surrogate_inputs& in,
                             std::span<const double> theta, std::vector<double>* grad) {
    s.validate();
    require(static_cast<int>(theta.size()) == surrogate_param_count(s, in),
            "surrogate_eval: parameter count mismatch");
    switch (s.tag) {
        case surrogate_tag::abstain_L_mu:
            return abstain_L_mu(theta, in.y, s.c, s.mu, grad);
        case surrogate_tag::abstain_two_stage: {
            double d = 0.0;
            const double v =
                abstain_two_stage(in.frozen_h, theta[0], in.y, s.c, s.phi, grad ? &d : nullptr);
            if (grad) grad->assign(1, d);
            return v;
        }
        case surrogate_tag::pr_single: {
            std::span<const double> h = theta.subspan(0, static_cast<std::size_t>(in.n));
            double dr = 0.0;
            std::vector<double> dh;
            const double v = pr_single(h, theta[static_cast<std::size_t>(in.n)], in.y, s.c,
                                       s.family, s.psi, s.phi, s.alpha_s, s.beta_s,
                                       grad ? &dh : nullptr, grad ? &dr : nullptr);
            if (grad) {
                *grad = dh;
                grad->push_back(dr);
            }
            return v;
        }
        case surrogate_tag::pr_two_stage: {
            double d = 0.0;
            const double v =
                pr_two_stage(1 - in.correct, theta[0], s.c, s.phi, grad ? &d : nullptr);
            if (grad) grad->assign(1, d);
            return v;
        }
        case surrogate_tag::defer_single:
            return defer_single(theta, in.y, in.n, in.costs, s.family, grad);
        case surrogate_tag::defer_two_stage_score:
            return defer_two_stage_score(in.hp_max, theta, in.correct, in.cost_complements,
                                         s.family, grad);
        case surrogate_tag::defer_two_stage_pr:
            return defer_two_stage_pr(theta, in.correct, in.cost_complements, s.family, grad);
        case surrogate_tag::reg_single: {
            const std::size_t m = theta.size() - 1;
            double dL = 0.0;
            std::vector<double> dr;
            const double v = reg_single(theta[m], theta.subspan(0, m), in.costs, s.family,
                                        grad ? &dr : nullptr, grad ? &dL : nullptr);
            if (grad) {
                *grad = dr;
                grad->push_back(dL);
            }
            return v;
        }
        case surrogate_tag::reg_two_stage:
            return reg_two_stage(in.L_val, theta, in.costs, s.family, grad);
        case surrogate_tag::reg_single_expert: {
            double dr = 0.0, dL = 0.0;
            const double v = reg_single_expert(theta[1], theta[0], in.costs.empty() ? 1.0 : in.costs[0],
                                               s.phi, grad ? &dr : nullptr, grad ? &dL : nullptr);
            if (grad) {
                grad->assign(2, 0.0);
                (*grad)[0] = dr;
                (*grad)[1] = dL;
            }
            return v;
        }
    }
    throw invalid_parameter("surrogate_eval: unknown tag");
}

}  // namespace l2d
