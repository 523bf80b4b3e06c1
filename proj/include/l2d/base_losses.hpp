#pragma once

// Atomic multi-class and binary loss families. Every composed surrogate is
// built from these; each exposes a value and a hand-derived gradient with
// respect to the scores. Derivatives at kinks are fixed to 0.

#include <cmath>
#include <span>
#include <vector>

#include "l2d/common.hpp"

namespace l2d {

// --- multi-class families -------------------------------------------------------
//
//   comp_sum_mu : one-parameter family over softmax probabilities,
//                   mu != 1: ((1/s_y)^(mu-1) ... ) == (s_y^(mu-1) - 1)/(1 - mu)
//                   mu  = 1: -log s_y        (multinomial logistic)
//                   mu  = 2: 1 - s_y         (mean absolute error)
//   gce         : (1 - s_y^alpha)/alpha with its own alpha in (0,1)
//   sum_*       : sum over wrong labels of Phi(h_y - h_{y'})
//   cstnd_*     : sum over wrong labels of Phi(-h_{y'}) with scores first
//                 projected to zero mean (implements the sum-to-zero constraint)
//   margin_rho  : rho-margin transform of the confidence margin
//                 h_y - max_{y' != y} h_{y'}

enum class multiclass_tag {
    comp_sum_mu,
    gce,
    sum_sq,
    sum_exp,
    sum_rho,
    cstnd_hinge,
    cstnd_sq,
    cstnd_exp,
    cstnd_rho,
    margin_rho,
};

inline const char* to_string(multiclass_tag t) {
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

struct multiclass_family {
    multiclass_tag tag = multiclass_tag::comp_sum_mu;
    double mu = 1.0;     // comp_sum_mu
    double alpha = 0.7;  // gce
    double rho = 1.0;    // sum_rho / cstnd_rho / cstnd_hinge margin scale
    double scale = 1.0;  // overall multiplier (e.g. 1/log 2 turns logistic base-2)

    void validate() const {
        if (tag == multiclass_tag::comp_sum_mu)
            require<invalid_parameter>(mu >= 0.0, "multiclass_family: mu must be >= 0");
        if (tag == multiclass_tag::gce)
            require<invalid_parameter>(alpha > 0.0 && alpha < 1.0,
                                       "multiclass_family: gce alpha must lie in (0,1)");
        if (tag == multiclass_tag::sum_rho || tag == multiclass_tag::cstnd_rho ||
            tag == multiclass_tag::cstnd_hinge || tag == multiclass_tag::margin_rho)
            require<invalid_parameter>(rho > 0.0, "multiclass_family: rho must be positive");
        require<invalid_parameter>(scale > 0.0 && std::isfinite(scale),
                                   "multiclass_family: scale must be positive and finite");
    }

    static multiclass_family comp_sum(double mu) {
        multiclass_family f;
        f.tag = multiclass_tag::comp_sum_mu;
        f.mu = mu;
        return f;
    }
    static multiclass_family logistic() { return comp_sum(1.0); }
    static multiclass_family mae() { return comp_sum(2.0); }
};

namespace detail {

// comp_sum_mu / gce share the softmax-power structure:
//   value = f(s_y), d value / d h_k = -s_y^q * (1{k=y} - s_k)
// with q = mu-1 (comp-sum) or q = alpha (gce).
inline double softmax_power_eval(std::span<const double> scores, int target, double q,
                                 bool gce_form, double gce_alpha, double mu,
                                 std::vector<double>* grad) {
    std::vector<double> s;
    softmax_into(scores, s);
    const double sy = s[static_cast<std::size_t>(target)];
    // log s_y computed stably straight from the scores
    const double log_sy = scores[static_cast<std::size_t>(target)] - log_sum_exp(scores);
    double value;
    if (gce_form) {
        value = (1.0 - std::exp(gce_alpha * log_sy)) / gce_alpha;
    } else if (mu == 1.0) {
        value = -log_sy;
    } else {
        value = (std::exp((mu - 1.0) * log_sy) - 1.0) / (1.0 - mu);
    }
    if (grad) {
        const double power = std::exp(q * log_sy);  // s_y^q
        grad->assign(s.size(), 0.0);
        for (std::size_t k = 0; k < s.size(); ++k)
            (*grad)[k] = -power * ((static_cast<int>(k) == target ? 1.0 : 0.0) - s[k]);
        (void)sy;
    }
    return value;
}

// Margin transforms used by the sum_* families, Phi(t) applied to t = h_y - h_{y'}.
inline double sum_phi(multiclass_tag tag, double rho, double t, double* dphi) {
    switch (tag) {
        case multiclass_tag::sum_sq: {
            const double m = std::max(0.0, 1.0 - t);
            if (dphi) *dphi = -2.0 * m;
            return m * m;
        }
        case multiclass_tag::sum_exp:
            if (dphi) *dphi = -std::exp(-t);
            return std::exp(-t);
        case multiclass_tag::sum_rho: {
            if (dphi) *dphi = (t > 0.0 && t < rho) ? -1.0 / rho : 0.0;
            return std::min(std::max(0.0, 1.0 - t / rho), 1.0);
        }
        default: throw invalid_parameter("sum_phi: not a sum-family tag");
    }
}

// Terms of the constrained families, psi(p) applied to each wrong-label
// projected score p = h_{y'}; returns d psi / d p through dpsi.
inline double cstnd_term(multiclass_tag tag, double rho, double p, double* dpsi) {
    switch (tag) {
        case multiclass_tag::cstnd_hinge: {
            const double m = std::max(0.0, 1.0 + p / rho);
            if (dpsi) *dpsi = (1.0 + p / rho) > 0.0 ? 1.0 / rho : 0.0;
            return m;
        }
        case multiclass_tag::cstnd_sq: {
            const double m = std::max(0.0, 1.0 + p);
            if (dpsi) *dpsi = 2.0 * m;
            return m * m;
        }
        case multiclass_tag::cstnd_exp:
            if (dpsi) *dpsi = std::exp(p);
            return std::exp(p);
        case multiclass_tag::cstnd_rho: {
            const double u = 1.0 + p / rho;
            if (dpsi) *dpsi = (u > 0.0 && u < 1.0) ? 1.0 / rho : 0.0;
            return std::min(std::max(0.0, u), 1.0);
        }
        default: throw invalid_parameter("cstnd_term: not a constrained-family tag");
    }
}

}  // namespace detail

namespace detail {

inline double family_eval_raw(const multiclass_family& fam, std::span<const double> scores,
                              int target, std::vector<double>* grad) {
    fam.validate();
    require(!scores.empty(), "family_eval: empty scores");
    require(target >= 0 && target < static_cast<int>(scores.size()),
            "family_eval: target out of range");
    require_finite(scores, "family_eval");
    const int K = static_cast<int>(scores.size());

    switch (fam.tag) {
        case multiclass_tag::comp_sum_mu:
            return detail::softmax_power_eval(scores, target, fam.mu - 1.0, false, 0.0, fam.mu,
                                              grad);
        case multiclass_tag::gce:
            return detail::softmax_power_eval(scores, target, fam.alpha, true, fam.alpha, 0.0,
                                              grad);
        case multiclass_tag::sum_sq:
        case multiclass_tag::sum_exp:
        case multiclass_tag::sum_rho: {
            double value = 0.0;
            if (grad) grad->assign(scores.size(), 0.0);
            const double hy = scores[static_cast<std::size_t>(target)];
            for (int k = 0; k < K; ++k) {
                if (k == target) continue;
                double dphi = 0.0;
                value += detail::sum_phi(fam.tag, fam.rho, hy - scores[static_cast<std::size_t>(k)],
                                         grad ? &dphi : nullptr);
                if (grad) {
                    (*grad)[static_cast<std::size_t>(target)] += dphi;
                    (*grad)[static_cast<std::size_t>(k)] -= dphi;
                }
            }
            return value;
        }
        case multiclass_tag::cstnd_hinge:
        case multiclass_tag::cstnd_sq:
        case multiclass_tag::cstnd_exp:
        case multiclass_tag::cstnd_rho: {
            double mean = 0.0;
            for (double x : scores) mean += x;
            mean /= K;
            double value = 0.0;
            std::vector<double> g;
            if (grad) g.assign(scores.size(), 0.0);
            for (int k = 0; k < K; ++k) {
                if (k == target) continue;
                double dpsi = 0.0;
                value += detail::cstnd_term(fam.tag, fam.rho,
                                            scores[static_cast<std::size_t>(k)] - mean,
                                            grad ? &dpsi : nullptr);
                if (grad) g[static_cast<std::size_t>(k)] = dpsi;
            }
            if (grad) {
                double gmean = 0.0;
                for (double x : g) gmean += x;
                gmean /= K;
                grad->assign(scores.size(), 0.0);
                for (int k = 0; k < K; ++k) (*grad)[static_cast<std::size_t>(k)] = g[static_cast<std::size_t>(k)] - gmean;
            }
            return value;
        }
        case multiclass_tag::margin_rho: {
            require(K >= 2, "family_eval: margin_rho needs at least two labels");
            int rival = target == 0 ? 1 : 0;
            for (int k = 0; k < K; ++k) {
                if (k == target || k == rival) continue;
                if (scores[static_cast<std::size_t>(k)] > scores[static_cast<std::size_t>(rival)])
                    rival = k;
            }
            const double u =
                scores[static_cast<std::size_t>(target)] - scores[static_cast<std::size_t>(rival)];
            if (grad) {
                const double dphi = (u > 0.0 && u < fam.rho) ? -1.0 / fam.rho : 0.0;
                grad->assign(scores.size(), 0.0);
                (*grad)[static_cast<std::size_t>(target)] = dphi;
                (*grad)[static_cast<std::size_t>(rival)] = -dphi;
            }
            return std::min(std::max(0.0, 1.0 - u / fam.rho), 1.0);
        }
    }
    throw invalid_parameter("family_eval: unknown family tag");
}

}  // namespace detail

// Value of the family at (scores, target); when grad != nullptr it is filled
// with the exact analytic gradient with respect to the raw scores (for the
// constrained families this chains through the zero-mean projection).
// `fam.scale` multiplies both the value and the gradient.
inline double family_eval(const multiclass_family& fam, std::span<const double> scores,
                          int target, std::vector<double>* grad) {
    const double value = detail::family_eval_raw(fam, scores, target, grad);
    if (fam.scale == 1.0) return value;
    if (grad)
        for (double& g : *grad) g *= fam.scale;
    return value * fam.scale;
}

inline double family_value(const multiclass_family& fam, std::span<const double> scores,
                           int target) {
    return family_eval(fam, scores, target, nullptr);
}

inline std::vector<double> family_grad(const multiclass_family& fam,
                                       std::span<const double> scores, int target) {
    std::vector<double> g;
    family_eval(fam, scores, target, &g);
    return g;
}

// Named entry point for the comp-sum family.
inline double ell_mu_value(std::span<const double> scores, int target, double mu) {
    return family_value(multiclass_family::comp_sum(mu), scores, target);
}

inline std::vector<double> ell_mu_grad(std::span<const double> scores, int target, double mu) {
    return family_grad(multiclass_family::comp_sum(mu), scores, target);
}

// --- binary margin losses ---------------------------------------------------------
//
// All non-increasing. Every member except logistic upper-bounds u -> 1{u <= 0};
// the natural-log logistic only dominates it up to the factor log 2 (it dips to
// log 2 at u = 0), so callers that need a strict upper bound use exp or hinge.

enum class phi_tag { exp, logistic, quadratic, hinge, sigmoid, rho_margin };

inline const char* to_string(phi_tag t) {
    switch (t) {
        case phi_tag::exp: return "exp";
        case phi_tag::logistic: return "logistic";
        case phi_tag::quadratic: return "quadratic";
        case phi_tag::hinge: return "hinge";
        case phi_tag::sigmoid: return "sigmoid";
        case phi_tag::rho_margin: return "rho_margin";
    }
    return "?";
}

struct binary_phi {
    phi_tag tag = phi_tag::exp;
    double k = 1.0;    // sigmoid steepness
    double rho = 1.0;  // rho_margin width

    void validate() const {
        if (tag == phi_tag::sigmoid)
            require<invalid_parameter>(k > 0.0, "binary_phi: sigmoid k must be positive");
        if (tag == phi_tag::rho_margin)
            require<invalid_parameter>(rho > 0.0, "binary_phi: rho must be positive");
    }
};

inline double phi_value(const binary_phi& phi, double u) {
    phi.validate();
    require(std::isfinite(u), "phi_value: non-finite argument");
    switch (phi.tag) {
        case phi_tag::exp: return std::exp(-u);
        case phi_tag::logistic:
            // log(1 + e^{-u}) without overflow on either side
            return u > 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
        case phi_tag::quadratic: {
            const double m = std::max(0.0, 1.0 - u);
            return m * m;
        }
        case phi_tag::hinge: return std::max(0.0, 1.0 - u);
        case phi_tag::sigmoid: return 1.0 - std::tanh(phi.k * u);
        case phi_tag::rho_margin: return std::min(std::max(0.0, 1.0 - u / phi.rho), 1.0);
    }
    throw invalid_parameter("phi_value: unknown tag");
}

inline double phi_grad(const binary_phi& phi, double u) {
    phi.validate();
    require(std::isfinite(u), "phi_grad: non-finite argument");
    switch (phi.tag) {
        case phi_tag::exp: return -std::exp(-u);
        case phi_tag::logistic: return -1.0 / (1.0 + std::exp(u));
        case phi_tag::quadratic: return -2.0 * std::max(0.0, 1.0 - u);
        case phi_tag::hinge: return u < 1.0 ? -1.0 : 0.0;
        case phi_tag::sigmoid: {
            const double th = std::tanh(phi.k * u);
            return -phi.k * (1.0 - th * th);
        }
        case phi_tag::rho_margin: return (u > 0.0 && u < phi.rho) ? -1.0 / phi.rho : 0.0;
    }
    throw invalid_parameter("phi_grad: unknown tag");
}

// Locations where the derivative jumps, for tests that must stay away from kinks.
inline std::vector<double> phi_kinks(const binary_phi& phi) {
    switch (phi.tag) {
        case phi_tag::hinge:
        case phi_tag::quadratic: return {1.0};
        case phi_tag::rho_margin: return {0.0, phi.rho};
        default: return {};
    }
}

}  // namespace l2d
