#pragma once

// Deterministic full-batch gradient-descent training of linear and one-hidden-
// layer models against any surrogate spec, the single-stage and two-stage
// pipelines, and system-level evaluation of trained predictor/deferral pairs.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "l2d/base_losses.hpp"
#include "l2d/common.hpp"
#include "l2d/core.hpp"
#include "l2d/surrogates.hpp"
#include "l2d/synthdata.hpp"
#include "l2d/target_losses.hpp"

namespace l2d {

// --- models -----------------------------------------------------------------------

enum class model_arch { linear, mlp };

struct model_spec {
    model_arch arch = model_arch::linear;
    int in_dim = 2;
    int out_dim = 2;
    int hidden = 16;           // mlp only
    std::uint64_t seed = 1;    // parameter initialization stream
    bool zero_output = false;  // zero the (last) affine map: scores start at 0

    void validate() const {
        require<invalid_config>(in_dim >= 1 && out_dim >= 1,
                                "model_spec: dimensions must be positive");
        if (arch == model_arch::mlp)
            require<invalid_config>(hidden >= 1, "model_spec: hidden width must be positive");
    }
};

// Parameters live in one flat vector:
//   linear: W (out x in, row-major), b (out)
//   mlp:    W1 (hidden x in), b1 (hidden), W2 (out x hidden), b2 (out), rectifier units
struct model {
    model_spec spec;
    std::vector<double> params;

    int param_count() const {
        if (spec.arch == model_arch::linear) return spec.out_dim * (spec.in_dim + 1);
        return spec.hidden * (spec.in_dim + 1) + spec.out_dim * (spec.hidden + 1);
    }

    void forward(std::span<const double> x, std::vector<double>& out,
                 std::vector<double>* hidden_act = nullptr) const {
        const int in = spec.in_dim, od = spec.out_dim;
        if (spec.arch == model_arch::linear) {
            out.assign(static_cast<std::size_t>(od), 0.0);
            const double* W = params.data();
            const double* b = params.data() + od * in;
            for (int o = 0; o < od; ++o) {
                double s = b[o];
                for (int k = 0; k < in; ++k) s += W[o * in + k] * x[static_cast<std::size_t>(k)];
                out[static_cast<std::size_t>(o)] = s;
            }
            return;
        }
        const int h = spec.hidden;
        const double* W1 = params.data();
        const double* b1 = params.data() + h * in;
        const double* W2 = b1 + h;
        const double* b2 = W2 + od * h;
        std::vector<double> a(static_cast<std::size_t>(h));
        for (int u = 0; u < h; ++u) {
            double s = b1[u];
            for (int k = 0; k < in; ++k) s += W1[u * in + k] * x[static_cast<std::size_t>(k)];
            a[static_cast<std::size_t>(u)] = s > 0.0 ? s : 0.0;
        }
        out.assign(static_cast<std::size_t>(od), 0.0);
        for (int o = 0; o < od; ++o) {
            double s = b2[o];
            for (int u = 0; u < h; ++u) s += W2[o * h + u] * a[static_cast<std::size_t>(u)];
            out[static_cast<std::size_t>(o)] = s;
        }
        if (hidden_act) *hidden_act = std::move(a);
    }

    // Accumulates d loss / d params given d loss / d scores for one sample.
    void backward(std::span<const double> x, std::span<const double> dscores,
                  std::span<const double> hidden_act, std::vector<double>& grad) const {
        const int in = spec.in_dim, od = spec.out_dim;
        if (spec.arch == model_arch::linear) {
            double* gW = grad.data();
            double* gb = grad.data() + od * in;
            for (int o = 0; o < od; ++o) {
                const double g = dscores[static_cast<std::size_t>(o)];
                if (g == 0.0) continue;
                for (int k = 0; k < in; ++k) gW[o * in + k] += g * x[static_cast<std::size_t>(k)];
                gb[o] += g;
            }
            return;
        }
        const int h = spec.hidden;
        const double* W2 = params.data() + h * in + h;
        double* gW1 = grad.data();
        double* gb1 = grad.data() + h * in;
        double* gW2 = gb1 + h;
        double* gb2 = gW2 + od * h;
        std::vector<double> da(static_cast<std::size_t>(h), 0.0);
        for (int o = 0; o < od; ++o) {
            const double g = dscores[static_cast<std::size_t>(o)];
            if (g == 0.0) continue;
            for (int u = 0; u < h; ++u) {
                gW2[o * h + u] += g * hidden_act[static_cast<std::size_t>(u)];
                da[static_cast<std::size_t>(u)] += g * W2[o * h + u];
            }
            gb2[o] += g;
        }
        for (int u = 0; u < h; ++u) {
            if (hidden_act[static_cast<std::size_t>(u)] <= 0.0) continue;  // rectifier gate
            const double g = da[static_cast<std::size_t>(u)];
            if (g == 0.0) continue;
            for (int k = 0; k < in; ++k) gW1[u * in + k] += g * x[static_cast<std::size_t>(k)];
            gb1[u] += g;
        }
    }

    // Order-sensitive bitwise digest of the parameter vector (freeze contract).
    std::uint64_t checksum() const {
        std::uint64_t h = 1469598103934665603ull;
        for (double p : params) {
            std::uint64_t bits;
            std::memcpy(&bits, &p, sizeof bits);
            for (int k = 0; k < 8; ++k) {
                h ^= (bits >> (8 * k)) & 0xff;
                h *= 1099511628211ull;
            }
        }
        return h;
    }
};

inline model init_model(const model_spec& spec) {
    spec.validate();
    model m;
    m.spec = spec;
    m.params.assign(static_cast<std::size_t>(m.param_count()), 0.0);
    rng_t g = make_rng(derive_seed(spec.seed, 0x6d6f64656cull));
    const int in = spec.in_dim, od = spec.out_dim, h = spec.hidden;
    if (spec.arch == model_arch::linear) {
        if (!spec.zero_output) {
            const double s = 1.0 / std::sqrt(static_cast<double>(in));
            for (int k = 0; k < od * in; ++k) m.params[static_cast<std::size_t>(k)] = s * gaussian(g);
        }
        return m;
    }
    const double s1 = std::sqrt(2.0 / static_cast<double>(in));
    for (int k = 0; k < h * in; ++k) m.params[static_cast<std::size_t>(k)] = s1 * gaussian(g);
    if (!spec.zero_output) {
        const double s2 = std::sqrt(2.0 / static_cast<double>(h));
        for (int k = 0; k < od * h; ++k)
            m.params[static_cast<std::size_t>(h * in + h + k)] = s2 * gaussian(g);
    }
    return m;
}

// --- datasets as surrogate samples ---------------------------------------------------

// Per-sample fixed context extracted from a dataset + cost model once, then fed
// to the per-sample loss adapters during training and evaluation.
struct sample_ctx {
    int y = 0;                          // class label
    double y_value = 0.0;               // regression target
    std::vector<double> costs;          // c_j(x,y) per expert
    std::vector<double> complements;    // 1 - c_j(x,y)
    // two-stage frozen quantities
    std::vector<double> frozen_scores;  // first-stage class scores
    int pred = 0;                       // first-stage argmax
    double hp_max = 0.0;
    int correct = 0;
    double frozen_L = 0.0;              // first-stage base loss (regression)
};

inline std::vector<sample_ctx> make_sample_ctx(const dataset& d, const cost_model& cm) {
    std::vector<sample_ctx> out(static_cast<std::size_t>(d.size()));
    cm.validate(d.n_e);
    for (int i = 0; i < d.size(); ++i) {
        auto& s = out[static_cast<std::size_t>(i)];
        expert_outputs g;
        if (d.mode == task_mode::deferral_regression) {
            s.y_value = d.y_value[static_cast<std::size_t>(i)];
            if (d.n_e > 0) g.values = d.expert_values[static_cast<std::size_t>(i)];
        } else {
            s.y = d.y[static_cast<std::size_t>(i)];
            if (d.n_e > 0) g.labels = d.expert_labels[static_cast<std::size_t>(i)];
        }
        if (d.n_e > 0) {
            s.costs = eval_cost(cm, g, s.y, s.y_value, d.n_e);
            s.complements.resize(s.costs.size());
            for (std::size_t j = 0; j < s.costs.size(); ++j)
                s.complements[j] = 1.0 - s.costs[j];
        }
    }
    return out;
}

// --- optimizers and the generic fit loop ----------------------------------------------

enum class optimizer_kind { gd, gd_momentum };

struct optimizer_config {
    optimizer_kind kind = optimizer_kind::gd;
    double lr = 0.1;
    double momentum = 0.9;
    int epochs = 500;

    void validate() const {
        require<invalid_config>(lr > 0.0, "optimizer_config: lr must be positive");
        require<invalid_config>(epochs >= 0, "optimizer_config: epochs must be >= 0");
        if (kind == optimizer_kind::gd_momentum)
            require<invalid_config>(momentum >= 0.0 && momentum < 1.0,
                                    "optimizer_config: momentum must lie in [0,1)");
    }
};

struct trace_row {
    int epoch = 0;
    double surrogate = 0.0;
    double target = 0.0;
};

struct fit_result {
    model m;
    std::vector<trace_row> trace;  // entry 0 = initialization, then one per epoch
    bool converged = true;         // final surrogate loss <= initial
};

// Per-sample loss adapter: returns the loss at `scores` for sample i and fills
// dscores with its gradient. The paired target adapter returns the evaluation
// loss used for the trace only.
using sample_loss_fn =
    std::function<double(int i, std::span<const double> scores, std::vector<double>& dscores)>;
using sample_target_fn = std::function<double(int i, std::span<const double> scores)>;

inline fit_result fit_model(model m, const dataset& d, const sample_loss_fn& loss,
                            const sample_target_fn& target, const optimizer_config& opt) {
    opt.validate();
    require<invalid_input>(d.size() >= 1, "fit_model: empty dataset");
    const int count = d.size();
    const double inv = 1.0 / count;
    std::vector<double> grad(m.params.size());
    std::vector<double> velocity(m.params.size(), 0.0);
    std::vector<double> scores, dscores, hidden;
    fit_result res;

    const auto epoch_pass = [&](bool with_grad) {
        if (with_grad) std::fill(grad.begin(), grad.end(), 0.0);
        double sur = 0.0, tgt = 0.0;
        for (int i = 0; i < count; ++i) {
            m.forward(d.x[static_cast<std::size_t>(i)], scores,
                      m.spec.arch == model_arch::mlp ? &hidden : nullptr);
            const double v = loss(i, scores, dscores);
            if (!std::isfinite(v))
                throw training_error("fit_model: non-finite loss at sample " + std::to_string(i));
            sur += v;
            tgt += target(i, scores);
            if (with_grad) {
                for (double& gv : dscores) gv *= inv;
                m.backward(d.x[static_cast<std::size_t>(i)], dscores, hidden, grad);
            }
        }
        return trace_row{0, sur * inv, tgt * inv};
    };

    trace_row t0 = epoch_pass(false);
    res.trace.push_back(t0);
    for (int e = 1; e <= opt.epochs; ++e) {
        epoch_pass(true);
        for (std::size_t k = 0; k < m.params.size(); ++k) {
            if (!std::isfinite(grad[k]))
                throw training_error("fit_model: non-finite gradient at epoch " +
                                     std::to_string(e));
            if (opt.kind == optimizer_kind::gd_momentum) {
                velocity[k] = opt.momentum * velocity[k] - opt.lr * grad[k];
                m.params[k] += velocity[k];
            } else {
                m.params[k] -= opt.lr * grad[k];
            }
        }
        trace_row t = epoch_pass(false);
        t.epoch = e;
        res.trace.push_back(t);
    }
    res.converged = res.trace.back().surrogate <= res.trace.front().surrogate + 1e-12;
    res.m = std::move(m);
    return res;
}

// --- surrogate adapters -----------------------------------------------------------------

// Expected model output width for a surrogate tag on a given task.
inline int surrogate_output_dim(surrogate_tag tag, int n, int n_e) {
    switch (tag) {
        case surrogate_tag::abstain_L_mu: return n + 1;
        case surrogate_tag::abstain_two_stage: return 1;
        case surrogate_tag::pr_single: return n + 1;  // class scores then rejector
        case surrogate_tag::pr_two_stage: return 1;
        case surrogate_tag::defer_single: return n + n_e;
        case surrogate_tag::defer_two_stage_score: return n_e;
        case surrogate_tag::defer_two_stage_pr: return n_e;
        case surrogate_tag::reg_single: return n_e + 2;  // r_0..r_{n_e}, prediction
        case surrogate_tag::reg_two_stage: return n_e + 1;
        case surrogate_tag::reg_single_expert: return 2;  // rejector score, prediction
    }
    throw invalid_parameter("surrogate_output_dim: unknown tag");
}

// Builds the per-sample training loss for a surrogate spec over precomputed
// sample contexts. Model outputs are mapped onto the surrogate's trainable
// parameters; regression tags compute the base loss from the predicted value
// and chain its derivative.
inline sample_loss_fn make_surrogate_loss(const surrogate_spec& spec,
                                          const std::vector<sample_ctx>& ctx,
                                          const dataset& d, regression_loss reg = regression_loss::squared) {
    spec.validate();
    const int n = d.n;
    return [spec, &ctx, n, reg](int i, std::span<const double> scores,
                                std::vector<double>& dscores) -> double {
        const sample_ctx& s = ctx[static_cast<std::size_t>(i)];
        surrogate_inputs in;
        in.y = s.y;
        in.n = n;
        in.costs = s.costs;
        in.cost_complements = s.complements;
        in.correct = s.correct;
        in.hp_max = s.hp_max;
        in.frozen_h = s.frozen_scores;
        dscores.assign(scores.size(), 0.0);
        std::vector<double> grad;
        switch (spec.tag) {
            case surrogate_tag::reg_single:
            case surrogate_tag::reg_single_expert: {
                // scores = [r ..., prediction]; surrogate theta = [r ..., L].
                const double h = scores.back();
                const double L = regression_loss_value(reg, h, s.y_value);
                std::vector<double> theta(scores.begin(), scores.end() - 1);
                theta.push_back(L);
                const double v = surrogate_eval(spec, in, theta, &grad);
                for (std::size_t k = 0; k + 1 < scores.size(); ++k) dscores[k] = grad[k];
                dscores.back() = grad.back() * regression_loss_deriv(reg, h, s.y_value);
                return v;
            }
            case surrogate_tag::reg_two_stage: {
                in.L_val = s.frozen_L;
                std::vector<double> theta(scores.begin(), scores.end());
                const double v = surrogate_eval(spec, in, theta, &grad);
                for (std::size_t k = 0; k < scores.size(); ++k) dscores[k] = grad[k];
                return v;
            }
            default: {
                std::vector<double> theta(scores.begin(), scores.end());
                const double v = surrogate_eval(spec, in, theta, &grad);
                for (std::size_t k = 0; k < scores.size(); ++k) dscores[k] = grad[k];
                return v;
            }
        }
    };
}

// Target (evaluation) loss induced by the surrogate's decision rule.
inline sample_target_fn make_target_loss(const surrogate_spec& spec,
                                         const std::vector<sample_ctx>& ctx, const dataset& d,
                                         regression_loss reg = regression_loss::squared) {
    const int n = d.n;
    return [tag = spec.tag, c = spec.c, &ctx, n, reg](int i,
                                                      std::span<const double> scores) -> double {
        const sample_ctx& s = ctx[static_cast<std::size_t>(i)];
        switch (tag) {
            case surrogate_tag::abstain_L_mu: {
                const int dcn = abstention_decision(scores);
                return dcn == n ? c : (dcn == s.y ? 0.0 : 1.0);
            }
            case surrogate_tag::abstain_two_stage: {
                // scores = [extra]; abstain when the extra score wins (ties abstain).
                double mx = s.frozen_scores[0];
                for (double t : s.frozen_scores) mx = std::max(mx, t);
                if (scores[0] >= mx) return c;
                return s.pred == s.y ? 0.0 : 1.0;
            }
            case surrogate_tag::pr_single: {
                const double r = scores.back();
                if (r <= 0.0) return c;
                std::span<const double> h(scores.data(), scores.size() - 1);
                return predict_label(h) == s.y ? 0.0 : 1.0;
            }
            case surrogate_tag::pr_two_stage:
                return scores[0] <= 0.0 ? c : (s.correct ? 0.0 : 1.0);
            case surrogate_tag::defer_single: {
                const int dcn = predict_label(scores);
                if (dcn < n) return dcn == s.y ? 0.0 : 1.0;
                return s.costs[static_cast<std::size_t>(dcn - n)];
            }
            case surrogate_tag::defer_two_stage_score: {
                std::vector<double> hbar;
                hbar.reserve(scores.size() + 1);
                hbar.push_back(s.hp_max);
                hbar.insert(hbar.end(), scores.begin(), scores.end());
                const int dcn = predict_label(hbar);
                if (dcn == 0) return s.correct ? 0.0 : 1.0;
                return s.costs[static_cast<std::size_t>(dcn - 1)];
            }
            case surrogate_tag::defer_two_stage_pr: {
                std::vector<double> r;
                r.reserve(scores.size() + 1);
                r.push_back(0.0);
                r.insert(r.end(), scores.begin(), scores.end());
                const int dcn = rejector_decision(r, rejector_convention::argmin_defer);
                if (dcn == 0) return s.correct ? 0.0 : 1.0;
                return s.costs[static_cast<std::size_t>(dcn - 1)];
            }
            case surrogate_tag::reg_single:
            case surrogate_tag::reg_single_expert: {
                std::span<const double> r(scores.data(), scores.size() - 1);
                const int dcn = predict_label(r);
                if (dcn == 0) return regression_loss_value(reg, scores.back(), s.y_value);
                return s.costs[static_cast<std::size_t>(dcn - 1)];
            }
            case surrogate_tag::reg_two_stage: {
                const int dcn = predict_label(scores);
                if (dcn == 0) return s.frozen_L;
                return s.costs[static_cast<std::size_t>(dcn - 1)];
            }
        }
        throw invalid_parameter("make_target_loss: unknown tag");
    };
}

// --- pipelines ----------------------------------------------------------------------------

struct trained_pair {
    model predictor;                 // stage-1 / single-stage model
    std::optional<model> deferral;   // stage-2 model
    surrogate_spec spec;             // the (stage-2) surrogate trained against
    std::vector<trace_row> trace1;   // single-stage or stage-1 trace
    std::vector<trace_row> trace2;   // stage-2 trace
    std::uint64_t frozen_checksum = 0;
    bool converged = true;
};

inline trained_pair train_single_stage(const dataset& d, const surrogate_spec& spec,
                                       model_spec mspec, const cost_model& cm,
                                       const optimizer_config& opt,
                                       regression_loss reg = regression_loss::squared) {
    spec.validate();
    require<invalid_config>(spec.tag == surrogate_tag::abstain_L_mu ||
                                spec.tag == surrogate_tag::pr_single ||
                                spec.tag == surrogate_tag::defer_single ||
                                spec.tag == surrogate_tag::reg_single ||
                                spec.tag == surrogate_tag::reg_single_expert,
                            "train_single_stage: single-stage surrogate required");
    mspec.in_dim = d.dim();
    mspec.out_dim = surrogate_output_dim(spec.tag, d.n, d.n_e);
    const auto ctx = make_sample_ctx(d, cm);
    auto loss = make_surrogate_loss(spec, ctx, d, reg);
    auto tgt = make_target_loss(spec, ctx, d, reg);
    fit_result fr = fit_model(init_model(mspec), d, loss, tgt, opt);
    trained_pair out;
    out.predictor = std::move(fr.m);
    out.spec = spec;
    out.trace1 = std::move(fr.trace);
    out.converged = fr.converged;
    return out;
}

// Stage-1: plain multiclass training of the class scores (classification) or a
// least-squares fit of the prediction (regression deferral).
inline fit_result fit_stage1(const dataset& d, const multiclass_family& fam1,
                             model_spec mspec, const optimizer_config& opt,
                             regression_loss reg = regression_loss::squared) {
    mspec.in_dim = d.dim();
    if (d.mode == task_mode::deferral_regression) {
        mspec.out_dim = 1;
        sample_loss_fn loss = [&d, reg](int i, std::span<const double> scores,
                                        std::vector<double>& dscores) {
            dscores.assign(1, regression_loss_deriv(reg, scores[0],
                                                    d.y_value[static_cast<std::size_t>(i)]));
            return regression_loss_value(reg, scores[0], d.y_value[static_cast<std::size_t>(i)]);
        };
        sample_target_fn tgt = [&d, reg](int i, std::span<const double> scores) {
            return regression_loss_value(reg, scores[0], d.y_value[static_cast<std::size_t>(i)]);
        };
        return fit_model(init_model(mspec), d, loss, tgt, opt);
    }
    mspec.out_dim = d.n;
    sample_loss_fn loss = [&d, fam1](int i, std::span<const double> scores,
                                     std::vector<double>& dscores) {
        const double v = family_eval(fam1, scores, d.y[static_cast<std::size_t>(i)], &dscores);
        return v;
    };
    sample_target_fn tgt = [&d](int i, std::span<const double> scores) {
        return predict_label(scores) == d.y[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
    };
    return fit_model(init_model(mspec), d, loss, tgt, opt);
}

inline trained_pair train_two_stage(const dataset& d, const multiclass_family& stage1_family,
                                    const surrogate_spec& stage2, model_spec mspec1,
                                    model_spec mspec2, const cost_model& cm,
                                    const optimizer_config& opt1, const optimizer_config& opt2,
                                    regression_loss reg = regression_loss::squared) {
    stage2.validate();
    require<invalid_config>(stage2.tag == surrogate_tag::abstain_two_stage ||
                                stage2.tag == surrogate_tag::pr_two_stage ||
                                stage2.tag == surrogate_tag::defer_two_stage_score ||
                                stage2.tag == surrogate_tag::defer_two_stage_pr ||
                                stage2.tag == surrogate_tag::reg_two_stage,
                            "train_two_stage: second-stage surrogate required");
    fit_result fr1 = fit_stage1(d, stage1_family, mspec1, opt1, reg);
    const std::uint64_t frozen = fr1.m.checksum();

    // Freeze stage 1 into the sample contexts.
    auto ctx = make_sample_ctx(d, cm);
    std::vector<double> scores;
    for (int i = 0; i < d.size(); ++i) {
        auto& s = ctx[static_cast<std::size_t>(i)];
        fr1.m.forward(d.x[static_cast<std::size_t>(i)], scores);
        if (d.mode == task_mode::deferral_regression) {
            s.frozen_L = regression_loss_value(reg, scores[0],
                                               d.y_value[static_cast<std::size_t>(i)]);
        } else {
            s.frozen_scores = scores;
            s.pred = predict_label(scores);
            s.hp_max = scores[static_cast<std::size_t>(s.pred)];
            s.correct = s.pred == d.y[static_cast<std::size_t>(i)] ? 1 : 0;
        }
    }

    mspec2.in_dim = d.dim();
    mspec2.out_dim = surrogate_output_dim(stage2.tag, d.n, d.n_e);
    mspec2.zero_output = true;  // deferral scores start at zero
    auto loss = make_surrogate_loss(stage2, ctx, d, reg);
    auto tgt = make_target_loss(stage2, ctx, d, reg);
    fit_result fr2 = fit_model(init_model(mspec2), d, loss, tgt, opt2);

    require<training_error>(fr1.m.checksum() == frozen,
                            "train_two_stage: first-stage parameters changed during stage 2");
    trained_pair out;
    out.predictor = std::move(fr1.m);
    out.deferral = std::move(fr2.m);
    out.spec = stage2;
    out.trace1 = std::move(fr1.trace);
    out.trace2 = std::move(fr2.trace);
    out.frozen_checksum = frozen;
    out.converged = fr2.converged;
    return out;
}

// --- system evaluation ----------------------------------------------------------------------

struct system_metrics {
    double target_loss_mean = 0.0;   // mean deferral/abstention target loss
    double system_score = 0.0;       // accuracy (classification) or MSE (regression)
    double acceptance_error = 0.0;   // error rate among non-deferred samples
    double accepted_fraction = 0.0;  // fraction handled by the predictor
    std::vector<double> deferral_ratio;  // per expert (abstention: single entry)
};

// Final decision of a trained pair on one sample: -1 = keep the prediction /
// abstain slot 0, j >= 0 = route to expert j.
inline int pair_decision(const trained_pair& tp, const dataset& d, int i,
                         std::vector<double>& scores, std::vector<double>& scores2) {
    tp.predictor.forward(d.x[static_cast<std::size_t>(i)], scores);
    switch (tp.spec.tag) {
        case surrogate_tag::abstain_L_mu:
            return abstention_decision(scores) == d.n ? 0 : -1;
        case surrogate_tag::pr_single:
            return scores.back() <= 0.0 ? 0 : -1;
        case surrogate_tag::defer_single: {
            const int dcn = predict_label(scores);
            return dcn < d.n ? -1 : dcn - d.n;
        }
        case surrogate_tag::reg_single:
        case surrogate_tag::reg_single_expert: {
            std::span<const double> r(scores.data(), scores.size() - 1);
            const int dcn = predict_label(r);
            return dcn == 0 ? -1 : dcn - 1;
        }
        case surrogate_tag::abstain_two_stage: {
            tp.deferral->forward(d.x[static_cast<std::size_t>(i)], scores2);
            double mx = scores[0];
            for (double t : scores) mx = std::max(mx, t);
            return scores2[0] >= mx ? 0 : -1;
        }
        case surrogate_tag::pr_two_stage: {
            tp.deferral->forward(d.x[static_cast<std::size_t>(i)], scores2);
            return scores2[0] <= 0.0 ? 0 : -1;
        }
        case surrogate_tag::defer_two_stage_score: {
            tp.deferral->forward(d.x[static_cast<std::size_t>(i)], scores2);
            const int pred = predict_label(scores);
            std::vector<double> hbar;
            hbar.reserve(scores2.size() + 1);
            hbar.push_back(scores[static_cast<std::size_t>(pred)]);
            hbar.insert(hbar.end(), scores2.begin(), scores2.end());
            const int dcn = predict_label(hbar);
            return dcn == 0 ? -1 : dcn - 1;
        }
        case surrogate_tag::defer_two_stage_pr: {
            tp.deferral->forward(d.x[static_cast<std::size_t>(i)], scores2);
            std::vector<double> r;
            r.reserve(scores2.size() + 1);
            r.push_back(0.0);
            r.insert(r.end(), scores2.begin(), scores2.end());
            const int dcn = rejector_decision(r, rejector_convention::argmin_defer);
            return dcn == 0 ? -1 : dcn - 1;
        }
        case surrogate_tag::reg_two_stage: {
            tp.deferral->forward(d.x[static_cast<std::size_t>(i)], scores2);
            const int dcn = predict_label(scores2);
            return dcn == 0 ? -1 : dcn - 1;
        }
    }
    throw invalid_parameter("pair_decision: unknown tag");
}

inline system_metrics evaluate_system(const trained_pair& tp, const dataset& d,
                                      const cost_model& cm,
                                      regression_loss reg = regression_loss::squared) {
    const auto ctx = make_sample_ctx(d, cm);
    const bool regression = d.mode == task_mode::deferral_regression;
    const bool abstention = d.n_e == 0;
    system_metrics out;
    out.deferral_ratio.assign(static_cast<std::size_t>(std::max(1, d.n_e)), 0.0);
    std::vector<double> scores, scores2;
    int accepted = 0, accepted_wrong = 0;
    double loss_sum = 0.0, score_sum = 0.0;
    for (int i = 0; i < d.size(); ++i) {
        const auto& s = ctx[static_cast<std::size_t>(i)];
        // pair_decision leaves the predictor's raw outputs in `scores`.
        const int route = pair_decision(tp, d, i, scores, scores2);
        double pred_value = 0.0;
        int pred_label = 0;
        if (regression) {
            pred_value =
                tp.spec.tag == surrogate_tag::reg_two_stage ? scores[0] : scores.back();
        } else {
            if (tp.spec.tag == surrogate_tag::abstain_L_mu ||
                tp.spec.tag == surrogate_tag::defer_single) {
                std::span<const double> h(scores.data(), static_cast<std::size_t>(d.n));
                pred_label = predict_label(h);
            } else if (tp.spec.tag == surrogate_tag::pr_single) {
                std::span<const double> h(scores.data(), scores.size() - 1);
                pred_label = predict_label(h);
            } else {
                pred_label = predict_label(scores);
            }
        }
        if (route < 0) {
            ++accepted;
            if (regression) {
                const double l = regression_loss_value(reg, pred_value, s.y_value);
                loss_sum += l;
                score_sum += l;
            } else {
                const bool wrong = pred_label != s.y;
                accepted_wrong += wrong ? 1 : 0;
                loss_sum += wrong ? 1.0 : 0.0;
                score_sum += wrong ? 0.0 : 1.0;
            }
        } else {
            out.deferral_ratio[static_cast<std::size_t>(route)] += 1.0;
            if (abstention) {
                loss_sum += cm.c;
                score_sum += 0.0;  // abstention yields no system answer
            } else if (regression) {
                loss_sum += s.costs[static_cast<std::size_t>(route)];
                score_sum += regression_loss_value(
                    reg, d.expert_values[static_cast<std::size_t>(i)][static_cast<std::size_t>(route)],
                    s.y_value);
            } else {
                loss_sum += s.costs[static_cast<std::size_t>(route)];
                score_sum += d.expert_labels[static_cast<std::size_t>(i)]
                                            [static_cast<std::size_t>(route)] == s.y
                                 ? 1.0
                                 : 0.0;
            }
        }
    }
    const double inv = 1.0 / d.size();
    out.target_loss_mean = loss_sum * inv;
    out.system_score = score_sum * inv;
    out.acceptance_error = accepted > 0 ? static_cast<double>(accepted_wrong) / accepted : 0.0;
    out.accepted_fraction = accepted * inv;
    for (double& r : out.deferral_ratio) r *= inv;
    return out;
}

// --- predictor-rejector vs. score-based study on the two-region ball task --------------

// Compares, on the planar abstention task whose optimal abstain region is a
// halfplane, (a) the generating rule's empirical loss, (b) a trained linear
// predictor-rejector pair, and (c) the best unit-norm linear score triple
// found by multi-start pattern search. With unit-norm weights the triple's
// abstain region {f2 >= |f1|} is a right-angle wedge, so (c) stays bounded
// away from (a) while (b) can match it.
struct counterexample_report {
    double bayes_loss = 0.0;
    double pr_loss = 0.0;
    double score_loss = 0.0;
    double delta = 0.0;  // score_loss - bayes_loss
    std::vector<double> start_losses;
};

namespace detail {

// Mean abstention loss of the unit-norm triple (theta1,b1,theta2,b2):
// abstain (cost c) iff f2 >= |f1|, otherwise predict 0 iff f1 > 0.
inline double score_triple_loss(const dataset& d, double c, const double q[4]) {
    const double w1x = std::cos(q[0]), w1y = std::sin(q[0]);
    const double w2x = std::cos(q[2]), w2y = std::sin(q[2]);
    double sum = 0.0;
    for (int i = 0; i < d.size(); ++i) {
        const double x0 = d.x[static_cast<std::size_t>(i)][0];
        const double x1 = d.x[static_cast<std::size_t>(i)][1];
        const double f1 = w1x * x0 + w1y * x1 + q[1];
        const double f2 = w2x * x0 + w2y * x1 + q[3];
        if (f2 >= std::fabs(f1)) {
            sum += c;
        } else {
            const int pred = f1 > 0.0 ? 0 : 1;
            sum += pred == d.y[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
        }
    }
    return sum / d.size();
}

inline double pattern_search(const dataset& d, double c, double q[4]) {
    double step[4] = {0.3, 0.2, 0.3, 0.2};
    double best = score_triple_loss(d, c, q);
    while (std::max(std::max(step[0], step[1]), std::max(step[2], step[3])) > 1e-3) {
        bool moved = false;
        for (int k = 0; k < 4; ++k) {
            for (double sgn : {1.0, -1.0}) {
                double trial[4] = {q[0], q[1], q[2], q[3]};
                trial[k] += sgn * step[k];
                const double v = score_triple_loss(d, c, trial);
                if (v < best - 1e-12) {
                    best = v;
                    q[k] = trial[k];
                    moved = true;
                    break;
                }
            }
        }
        if (!moved)
            for (double& s : step) s *= 0.5;
    }
    return best;
}

}  // namespace detail

inline counterexample_report run_counterexample_study(const counterexample_config& gen,
                                                      const optimizer_config& pr_opt,
                                                      int multistart, std::uint64_t seed,
                                                      int threads = 1) {
    require<invalid_config>(multistart >= 1, "run_counterexample_study: multistart >= 1");
    require<invalid_config>(gen.w_abs.size() == 2, "run_counterexample_study: planar task only");
    dataset d = gen_counterexample(gen);
    counterexample_report rep;

    // (a) loss of the generating rule: abstain on the coin-flip region, predict
    // the deterministic label elsewhere.
    int region0 = 0;
    for (int v : d.region) region0 += v == 0 ? 1 : 0;
    rep.bayes_loss = gen.c * static_cast<double>(region0) / d.size();

    // (b) trained predictor-rejector pair (unconstrained linear scores). The
    // pair is trained in two stages: the predictor alone, then the rejector
    // against the frozen predictor's miss indicator. Joint training of the
    // coupled surrogate stalls here: once the rejector turns negative its
    // weight on the predictor loss vanishes and the predictor stops learning.
    // The rejector uses a bounded margin transform; an unbounded one lets the
    // zero-miss half keep pulling the rejector up and biases its intercept.
    cost_model cm;
    cm.kind = cost_kind::constant;
    cm.c = gen.c;
    surrogate_spec pr;
    pr.tag = surrogate_tag::pr_two_stage;
    pr.phi.tag = phi_tag::sigmoid;
    pr.phi.k = 4.0;
    pr.c = gen.c;
    model_spec ms1;
    ms1.arch = model_arch::linear;
    ms1.seed = derive_seed(seed, 0x70720000u);
    model_spec ms2 = ms1;
    ms2.seed = derive_seed(seed, 0x70720001u);
    trained_pair tp = train_two_stage(d, multiclass_family::logistic(), pr, ms1, ms2, cm,
                                      pr_opt, pr_opt);
    rep.pr_loss = evaluate_system(tp, d, cm).target_loss_mean;

    // (c) best unit-norm score triple over seeded multi-starts plus one start
    // aligned with the generating geometry.
    const int starts = multistart + 1;
    rep.start_losses.assign(static_cast<std::size_t>(starts), 0.0);
    std::vector<std::array<double, 4>> inits(static_cast<std::size_t>(starts));
    inits[0] = {std::atan2(gen.w_pred[1], gen.w_pred[0]), gen.b_pred,
                std::atan2(-gen.w_abs[1], -gen.w_abs[0]), 0.0};
    for (int s = 1; s < starts; ++s) {
        rng_t g = make_rng(derive_seed(seed, 0x73630000u + static_cast<std::uint64_t>(s)));
        inits[static_cast<std::size_t>(s)] = {uniform_in(g, 0.0, 2.0 * std::numbers::pi),
                                              uniform_in(g, -0.9, 0.9),
                                              uniform_in(g, 0.0, 2.0 * std::numbers::pi),
                                              uniform_in(g, -0.9, 0.9)};
    }
    parallel_for(starts, threads, [&](int s) {
        double q[4] = {inits[static_cast<std::size_t>(s)][0], inits[static_cast<std::size_t>(s)][1],
                       inits[static_cast<std::size_t>(s)][2], inits[static_cast<std::size_t>(s)][3]};
        rep.start_losses[static_cast<std::size_t>(s)] = detail::pattern_search(d, gen.c, q);
    });
    rep.score_loss = rep.start_losses[0];
    for (double v : rep.start_losses) rep.score_loss = std::min(rep.score_loss, v);
    rep.delta = rep.score_loss - rep.bayes_loss;
    return rep;
}

}  // namespace l2d
