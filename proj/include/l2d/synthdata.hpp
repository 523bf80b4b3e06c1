#pragma once

// Seeded synthetic data: the linear-geometry abstention task where score-based
// linear triples provably fall short of the predictor-rejector pair, disjoint
// expert-domain classification tasks, fidelity-ordered regression experts, and
// random finite distributions with cost tables for the oracle and bound checks.
// Every generator is a pure function of (config, seed); sample i is produced
// from its own derived RNG stream, so outputs are stable under resizing and
// safe to generate in parallel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "l2d/common.hpp"
#include "l2d/core.hpp"

namespace l2d {

struct dataset {
    task_mode mode = task_mode::deferral_classification;
    int n = 2;    // class count (classification modes)
    int n_e = 0;  // expert count
    std::vector<std::vector<double>> x;
    std::vector<int> y;                              // class labels
    std::vector<double> y_value;                     // regression targets
    std::vector<std::vector<int>> expert_labels;     // [sample][expert]
    std::vector<std::vector<double>> expert_values;  // [sample][expert]
    std::vector<int> region;                         // generator audit metadata

    int size() const { return static_cast<int>(x.size()); }
    int dim() const { return x.empty() ? 0 : static_cast<int>(x[0].size()); }
};

// CSV layout: header, then x_0..x_{d-1},y,expert_0..expert_{n_e-1}.
inline void write_dataset_csv(const dataset& d, std::ostream& os) {
    const int dim = d.dim();
    for (int k = 0; k < dim; ++k) os << "x_" << k << ",";
    os << "y";
    for (int j = 0; j < d.n_e; ++j) os << ",expert_" << j;
    os << "\n";
    const bool regression = d.mode == task_mode::deferral_regression;
    for (int i = 0; i < d.size(); ++i) {
        for (int k = 0; k < dim; ++k)
            os << fmt_double(d.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) << ",";
        if (regression)
            os << fmt_double(d.y_value[static_cast<std::size_t>(i)]);
        else
            os << d.y[static_cast<std::size_t>(i)];
        for (int j = 0; j < d.n_e; ++j) {
            os << ",";
            if (regression)
                os << fmt_double(
                    d.expert_values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            else
                os << d.expert_labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        os << "\n";
    }
}

namespace detail {

inline std::vector<double> sample_unit_ball(rng_t& g, int dim) {
    // Gaussian direction scaled to radius U^{1/dim}: uniform in the ball.
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& t : v) {
            t = gaussian(g);
            norm2 += t * t;
        }
    } while (norm2 == 0.0);
    const double r = std::pow(uniform01(g), 1.0 / dim) / std::sqrt(norm2);
    for (auto& t : v) t *= r;
    return v;
}

inline double dot_plus(const std::vector<double>& w, const std::vector<double>& x, double b) {
    double s = b;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[k];
    return s;
}

}  // namespace detail

// --- linear-geometry abstention counterexample ---------------------------------------
//
// Two unit-norm linear functionals split the unit ball into three regions:
//   f_abs(x) <= 0            -> y Bernoulli(1/2) over the two classes (region 0)
//   f_abs(x) > 0, f_pred > 0 -> y = class 0 (region 1)
//   f_abs(x) > 0, f_pred <= 0 -> y = class 1 (region 2)
// With c < 1/2 the optimal rule abstains exactly on region 0 and predicts by the
// sign of f_pred elsewhere, for an expected abstention loss of c * P(region 0).

struct counterexample_config {
    std::vector<double> w_abs{1.0, 0.0};
    double b_abs = 0.0;
    std::vector<double> w_pred{0.0, 1.0};
    double b_pred = 0.0;
    double c = 0.2;
    int count = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        require<invalid_config>(w_abs.size() == w_pred.size() && !w_abs.empty(),
                                "counterexample_config: functionals must share a dimension");
        auto unit = [](const std::vector<double>& w) {
            double s = 0.0;
            for (double t : w) s += t * t;
            return std::abs(std::sqrt(s) - 1.0) <= 1e-9;
        };
        require<invalid_config>(unit(w_abs) && unit(w_pred),
                                "counterexample_config: weight vectors must have unit norm");
        require<invalid_config>(c >= 0.0 && c < 0.5,
                                "counterexample_config: c must lie in [0, 0.5)");
        require<invalid_config>(count >= 1, "counterexample_config: count must be positive");
    }
};

inline dataset gen_counterexample(const counterexample_config& cfg) {
    cfg.validate();
    const int dim = static_cast<int>(cfg.w_abs.size());
    dataset d;
    d.mode = task_mode::abstention;
    d.n = 2;
    d.n_e = 0;
    d.x.resize(static_cast<std::size_t>(cfg.count));
    d.y.resize(static_cast<std::size_t>(cfg.count));
    d.region.resize(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) {
        rng_t g = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        std::vector<double> x = detail::sample_unit_ball(g, dim);
        const double fa = detail::dot_plus(cfg.w_abs, x, cfg.b_abs);
        const double fp = detail::dot_plus(cfg.w_pred, x, cfg.b_pred);
        int region, label;
        if (fa <= 0.0) {
            region = 0;
            label = uniform01(g) < 0.5 ? 0 : 1;
        } else if (fp > 0.0) {
            region = 1;
            label = 0;
        } else {
            region = 2;
            label = 1;
        }
        d.x[static_cast<std::size_t>(i)] = std::move(x);
        d.y[static_cast<std::size_t>(i)] = label;
        d.region[static_cast<std::size_t>(i)] = region;
    }
    return d;
}

// --- expert-disjoint classification ----------------------------------------------------
//
// Class prototypes are one-hot corners plus Gaussian feature noise. Expert j
// answers correctly on its domain classes; off-domain it is correct with the
// configured probability and otherwise uniform over the wrong labels.

struct expert_disjoint_config {
    int n = 4;
    std::vector<std::vector<int>> domains{{0, 1}};
    double off_domain_accuracy = 0.25;
    double feature_noise = 0.25;
    int count = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        require<invalid_config>(n >= 2, "expert_disjoint_config: need n >= 2");
        require<invalid_config>(!domains.empty(), "expert_disjoint_config: need experts");
        for (const auto& dom : domains) {
            require<invalid_config>(!dom.empty(), "expert_disjoint_config: empty expert domain");
            for (int cls : dom)
                require<invalid_config>(cls >= 0 && cls < n,
                                        "expert_disjoint_config: domain class out of range");
        }
        require<invalid_config>(off_domain_accuracy >= 0.0 && off_domain_accuracy <= 1.0,
                                "expert_disjoint_config: off-domain accuracy must lie in [0,1]");
        require<invalid_config>(feature_noise >= 0.0,
                                "expert_disjoint_config: noise must be non-negative");
        require<invalid_config>(count >= 1, "expert_disjoint_config: count must be positive");
    }
};

inline dataset gen_expert_disjoint(const expert_disjoint_config& cfg) {
    cfg.validate();
    const int n_e = static_cast<int>(cfg.domains.size());
    dataset d;
    d.mode = task_mode::deferral_classification;
    d.n = cfg.n;
    d.n_e = n_e;
    d.x.resize(static_cast<std::size_t>(cfg.count));
    d.y.resize(static_cast<std::size_t>(cfg.count));
    d.expert_labels.resize(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) {
        rng_t g = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        const int y = uniform_int(g, 0, cfg.n - 1);
        std::vector<double> x(static_cast<std::size_t>(cfg.n), 0.0);
        x[static_cast<std::size_t>(y)] = 1.0;
        for (auto& t : x) t += cfg.feature_noise * gaussian(g);
        std::vector<int> experts(static_cast<std::size_t>(n_e));
        for (int j = 0; j < n_e; ++j) {
            const auto& dom = cfg.domains[static_cast<std::size_t>(j)];
            const bool on_domain = std::find(dom.begin(), dom.end(), y) != dom.end();
            if (on_domain || uniform01(g) < cfg.off_domain_accuracy) {
                experts[static_cast<std::size_t>(j)] = y;
            } else {
                int wrong = uniform_int(g, 0, cfg.n - 2);
                if (wrong >= y) ++wrong;
                experts[static_cast<std::size_t>(j)] = wrong;
            }
        }
        d.x[static_cast<std::size_t>(i)] = std::move(x);
        d.y[static_cast<std::size_t>(i)] = y;
        d.expert_labels[static_cast<std::size_t>(i)] = std::move(experts);
    }
    return d;
}

// --- regression deferral task -----------------------------------------------------------
//
// Experts are the target plus a bounded analytic perturbation whose magnitude is
// the fidelity level, so expert quality is exactly controllable and their MSEs
// are ordered by fidelity.

enum class target_fn { sine, linear, constant };

inline const char* to_string(target_fn t) {
    switch (t) {
        case target_fn::sine: return "sine";
        case target_fn::linear: return "linear";
        case target_fn::constant: return "constant";
    }
    return "?";
}

struct regression_task_config {
    target_fn target = target_fn::sine;
    std::vector<double> fidelity{2.0, 1.0, 0.5};  // per-expert error magnitude
    double sigma = 0.1;
    int dim = 1;
    int count = 1000;
    double constant_value = 1.0;
    std::uint64_t seed = 1;

    void validate() const {
        require<invalid_config>(sigma >= 0.0, "regression_task_config: sigma must be >= 0");
        require<invalid_config>(dim >= 1 && count >= 1,
                                "regression_task_config: dim and count must be positive");
        for (double f : fidelity)
            require<invalid_config>(f >= 0.0,
                                    "regression_task_config: fidelity must be non-negative");
    }

    double target_value(const std::vector<double>& x) const {
        switch (target) {
            case target_fn::sine: return std::sin(2.0 * std::numbers::pi * x[0]);
            case target_fn::linear: {
                double s = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k)
                    s += x[k] / static_cast<double>(k + 1);
                return s;
            }
            case target_fn::constant: return constant_value;
        }
        return 0.0;
    }
};

inline dataset gen_regression_task(const regression_task_config& cfg) {
    cfg.validate();
    const int n_e = static_cast<int>(cfg.fidelity.size());
    dataset d;
    d.mode = task_mode::deferral_regression;
    d.n = 0;
    d.n_e = n_e;
    d.x.resize(static_cast<std::size_t>(cfg.count));
    d.y_value.resize(static_cast<std::size_t>(cfg.count));
    d.expert_values.resize(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) {
        rng_t g = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        std::vector<double> x(static_cast<std::size_t>(cfg.dim));
        for (auto& t : x) t = uniform_in(g, -1.0, 1.0);
        const double f = cfg.target_value(x);
        d.y_value[static_cast<std::size_t>(i)] = f + cfg.sigma * gaussian(g);
        std::vector<double> experts(static_cast<std::size_t>(n_e));
        for (int j = 0; j < n_e; ++j) {
            // Fixed phase-shifted bounded perturbation per expert.
            const double phase = 2.399963229728653 * static_cast<double>(j + 1);
            experts[static_cast<std::size_t>(j)] =
                f + cfg.fidelity[static_cast<std::size_t>(j)] *
                        std::cos(2.0 * std::numbers::pi * x[0] + phase);
        }
        d.x[static_cast<std::size_t>(i)] = std::move(x);
        d.expert_values[static_cast<std::size_t>(i)] = std::move(experts);
    }
    return d;
}

// --- random finite distributions + cost tables ------------------------------------------
//
// Conditional rows are uniform on the simplex; costs are uniform in the
// configured band. To make grid-minimizer decision checks meaningful, the
// generator enforces a minimum ratio between the two largest augmented Bayes
// weights (p and either 1-c or the expected cost complements): near-ties would
// make the finite-resolution score grid round distinct optima onto the same
// grid point, where the fixed tie-break can differ from the exact argmax even
// though both decisions are essentially optimal.

struct discrete_config {
    int points = 5;
    int n = 3;
    int n_e = 2;
    double cost_lo = 0.05;
    double cost_hi = 0.95;
    double separation = 1.35;  // min top-two augmented-weight ratio; <= 1 disables
    bool abstention = false;   // augment with 1-c instead of expert columns
    double c = 0.3;            // abstention cost used when abstention is set
    std::uint64_t seed = 1;

    void validate() const {
        require<invalid_config>(points >= 1 && n >= 2 && n_e >= 0,
                                "discrete_config: sizes must be positive");
        require<invalid_config>(0.0 <= cost_lo && cost_lo <= cost_hi && cost_hi < 1.0,
                                "discrete_config: need 0 <= cost_lo <= cost_hi < 1");
        if (abstention)
            require<invalid_config>(c > 0.0 && c < 1.0, "discrete_config: c must lie in (0,1)");
    }
};

struct discrete_instance {
    finite_distribution dist;
    cost_table costs;  // empty when abstention is set
};

inline discrete_instance gen_discrete(const discrete_config& cfg) {
    cfg.validate();
    discrete_instance out;
    out.dist.point_ids.resize(static_cast<std::size_t>(cfg.points));
    out.dist.cond_probs.resize(static_cast<std::size_t>(cfg.points));
    out.dist.weights.resize(static_cast<std::size_t>(cfg.points));
    if (!cfg.abstention) out.costs.c.resize(static_cast<std::size_t>(cfg.points));

    double wsum = 0.0;
    for (int i = 0; i < cfg.points; ++i) {
        rng_t g = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        out.dist.point_ids[static_cast<std::size_t>(i)] = i;
        const double w = 0.2 + uniform01(g);  // bounded away from zero
        out.dist.weights[static_cast<std::size_t>(i)] = w;
        wsum += w;

        std::vector<double> p(static_cast<std::size_t>(cfg.n));
        std::vector<std::vector<double>> costs;
        for (int attempt = 0; attempt < 4096; ++attempt) {
            // Uniform simplex row.
            double s = 0.0;
            for (auto& t : p) {
                t = -std::log(std::max(uniform01(g), 1e-300));
                s += t;
            }
            for (auto& t : p) t /= s;

            std::vector<double> aug(p);
            if (cfg.abstention) {
                aug.push_back(1.0 - cfg.c);
            } else {
                costs.assign(static_cast<std::size_t>(cfg.n_e), {});
                for (int j = 0; j < cfg.n_e; ++j) {
                    auto& row = costs[static_cast<std::size_t>(j)];
                    row.resize(static_cast<std::size_t>(cfg.n));
                    double ec = 0.0;
                    for (int y = 0; y < cfg.n; ++y) {
                        row[static_cast<std::size_t>(y)] =
                            uniform_in(g, cfg.cost_lo, cfg.cost_hi);
                        ec += p[static_cast<std::size_t>(y)] * row[static_cast<std::size_t>(y)];
                    }
                    aug.push_back(1.0 - ec);
                }
            }
            if (cfg.separation <= 1.0) break;
            double top1 = -1.0, top2 = -1.0;
            for (double v : aug) {
                if (v > top1) {
                    top2 = top1;
                    top1 = v;
                } else if (v > top2) {
                    top2 = v;
                }
            }
            if (top2 <= 0.0 || top1 >= cfg.separation * top2) break;
        }
        out.dist.cond_probs[static_cast<std::size_t>(i)] = std::move(p);
        if (!cfg.abstention) out.costs.c[static_cast<std::size_t>(i)] = std::move(costs);
    }
    for (auto& w : out.dist.weights) w /= wsum;
    if (!cfg.abstention) out.costs.compute_bounds();
    out.dist.validate(cfg.n);
    return out;
}

// Regression analogue: per point a small target-value support with probabilities,
// plus expert cost rows per support value. The top-two separation is enforced on
// the deferral option values (best constant prediction vs expected expert costs).
struct regression_discrete_config {
    int points = 4;
    int support = 3;  // target values per point
    int n_e = 2;
    double value_lo = -2.0, value_hi = 2.0;
    double cost_lo = 0.05, cost_hi = 0.95;
    double min_gap = 0.05;  // min lead of the best option over the runner-up
    std::uint64_t seed = 1;

    void validate() const {
        require<invalid_config>(points >= 1 && support >= 1 && n_e >= 1,
                                "regression_discrete_config: sizes must be positive");
        require<invalid_config>(value_hi > value_lo, "regression_discrete_config: empty range");
        require<invalid_config>(0.0 <= cost_lo && cost_lo <= cost_hi && cost_hi < 1.0,
                                "regression_discrete_config: need 0 <= cost_lo <= cost_hi < 1");
        require<invalid_config>(min_gap >= 0.0, "regression_discrete_config: min_gap >= 0");
    }
};

struct regression_discrete_instance {
    finite_distribution dist;                   // rows over the value support
    cost_table costs;                           // [point][expert][support index]
    std::vector<std::vector<double>> y_values;  // [point][support index]
};

inline regression_discrete_instance gen_regression_discrete(
    const regression_discrete_config& cfg) {
    cfg.validate();
    regression_discrete_instance out;
    out.dist.point_ids.resize(static_cast<std::size_t>(cfg.points));
    out.dist.cond_probs.resize(static_cast<std::size_t>(cfg.points));
    out.dist.weights.resize(static_cast<std::size_t>(cfg.points));
    out.costs.c.resize(static_cast<std::size_t>(cfg.points));
    out.y_values.resize(static_cast<std::size_t>(cfg.points));

    double wsum = 0.0;
    for (int i = 0; i < cfg.points; ++i) {
        rng_t g = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        out.dist.point_ids[static_cast<std::size_t>(i)] = i;
        const double w = 0.2 + uniform01(g);
        out.dist.weights[static_cast<std::size_t>(i)] = w;
        wsum += w;

        std::vector<double> p(static_cast<std::size_t>(cfg.support));
        std::vector<double> vals(static_cast<std::size_t>(cfg.support));
        std::vector<std::vector<double>> costs;
        for (int attempt = 0; attempt < 4096; ++attempt) {
            double s = 0.0;
            for (auto& t : p) {
                t = -std::log(std::max(uniform01(g), 1e-300));
                s += t;
            }
            for (auto& t : p) t /= s;
            for (auto& v : vals) v = uniform_in(g, cfg.value_lo, cfg.value_hi);

            costs.assign(static_cast<std::size_t>(cfg.n_e), {});
            std::vector<double> options;
            // Best single prediction under squared loss is the mean; its risk is
            // the variance of the value distribution.
            double mean = 0.0;
            for (int k = 0; k < cfg.support; ++k)
                mean += p[static_cast<std::size_t>(k)] * vals[static_cast<std::size_t>(k)];
            double var = 0.0;
            for (int k = 0; k < cfg.support; ++k) {
                const double dlt = vals[static_cast<std::size_t>(k)] - mean;
                var += p[static_cast<std::size_t>(k)] * dlt * dlt;
            }
            options.push_back(var);
            for (int j = 0; j < cfg.n_e; ++j) {
                auto& row = costs[static_cast<std::size_t>(j)];
                row.resize(static_cast<std::size_t>(cfg.support));
                double ec = 0.0;
                for (int k = 0; k < cfg.support; ++k) {
                    row[static_cast<std::size_t>(k)] = uniform_in(g, cfg.cost_lo, cfg.cost_hi);
                    ec += p[static_cast<std::size_t>(k)] * row[static_cast<std::size_t>(k)];
                }
                options.push_back(ec);
            }
            if (cfg.min_gap <= 0.0) break;
            double best = options[0], second = std::numeric_limits<double>::infinity();
            for (std::size_t k = 1; k < options.size(); ++k) {
                if (options[k] < best) {
                    second = best;
                    best = options[k];
                } else if (options[k] < second) {
                    second = options[k];
                }
            }
            if (second - best >= cfg.min_gap) break;
        }
        out.dist.cond_probs[static_cast<std::size_t>(i)] = std::move(p);
        out.y_values[static_cast<std::size_t>(i)] = std::move(vals);
        out.costs.c[static_cast<std::size_t>(i)] = std::move(costs);
    }
    for (auto& w : out.dist.weights) w /= wsum;
    out.costs.compute_bounds();
    out.dist.validate(cfg.support);
    return out;
}

}  // namespace l2d
