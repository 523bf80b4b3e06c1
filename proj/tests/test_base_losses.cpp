// Atomic multiclass families and binary margin transforms: frozen values,
// analytic-vs-finite-difference gradients, and the dominance/monotonicity
// properties the composed surrogates rely on.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "l2d/base_losses.hpp"

using namespace l2d;

namespace {

// Central finite difference of family_eval in every coordinate.
double family_fd_max_rel_error(const multiclass_family& fam, std::vector<double> s, int target,
                               double step = 1e-6) {
    std::vector<double> grad;
    family_eval(fam, s, target, &grad);
    double worst = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double saved = s[k];
        s[k] = saved + step;
        const double up = family_eval(fam, s, target, nullptr);
        s[k] = saved - step;
        const double dn = family_eval(fam, s, target, nullptr);
        s[k] = saved;
        const double fd = (up - dn) / (2.0 * step);
        worst = std::max(worst, std::abs(grad[k] - fd) / std::max(1.0, std::abs(grad[k])));
    }
    return worst;
}

// Piecewise-linear pieces of the rho families make FD meaningless within a step
// of the kink; resample until every relevant inner argument clears the kinks.
bool away_from_kinks(const multiclass_family& fam, const std::vector<double>& s, int target,
                     double gap = 1e-3) {
    auto clear = [gap](double u, std::initializer_list<double> kinks) {
        for (double k : kinks)
            if (std::abs(u - k) < gap) return false;
        return true;
    };
    const int K = static_cast<int>(s.size());
    switch (fam.tag) {
        case multiclass_tag::sum_rho:
            for (int k = 0; k < K; ++k)
                if (k != target &&
                    !clear(s[static_cast<std::size_t>(target)] - s[static_cast<std::size_t>(k)],
                           {0.0, fam.rho}))
                    return false;
            return true;
        case multiclass_tag::cstnd_hinge:
        case multiclass_tag::cstnd_rho: {
            double mean = 0.0;
            for (double x : s) mean += x;
            mean /= K;
            for (int k = 0; k < K; ++k)
                if (k != target &&
                    !clear(s[static_cast<std::size_t>(k)] - mean, {-fam.rho, 0.0}))
                    return false;
            return true;
        }
        case multiclass_tag::margin_rho: {
            // Rival switching is itself a kink: demand a separated runner-up.
            std::vector<double> rest;
            for (int k = 0; k < K; ++k)
                if (k != target) rest.push_back(s[static_cast<std::size_t>(k)]);
            std::sort(rest.begin(), rest.end());
            if (rest.size() >= 2 && rest.back() - rest[rest.size() - 2] < gap) return false;
            return clear(s[static_cast<std::size_t>(target)] - rest.back(), {0.0, fam.rho});
        }
        default: return true;
    }
}

}  // namespace

TEST_CASE("ell_mu frozen values") {
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK_THAT(ell_mu_value(zeros, 0, 1.0), Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));
    CHECK_THAT(ell_mu_value(zeros, 2, 1.0), Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));
    CHECK_THAT(ell_mu_value(zeros, 0, 2.0), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(ell_mu_value(std::vector<double>{2.0, 0.0, 0.0}, 0, 1.0),
               Catch::Matchers::WithinAbs(std::log(1.0 + 2.0 * std::exp(-2.0)), 1e-12));
    CHECK_THROWS_AS(ell_mu_value(zeros, 0, -0.5), invalid_parameter);
}

TEST_CASE("ell_mu is stable under large score shifts") {
    // Max-shifted evaluation: adding a huge constant to every score must not
    // overflow, and the value is shift-invariant.
    const std::vector<double> s{700.0, 698.0, 690.0};
    CHECK_THAT(ell_mu_value(s, 0, 1.0),
               Catch::Matchers::WithinAbs(
                   ell_mu_value(std::vector<double>{10.0, 8.0, 0.0}, 0, 1.0), 1e-12));
    CHECK(std::isfinite(ell_mu_value(s, 2, 0.0)));
    CHECK(std::isfinite(ell_mu_value(s, 2, 3.0)));
}

TEST_CASE("ell_mu is continuous in mu at mu = 1") {
    rng_t g = make_rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(static_cast<std::size_t>(uniform_int(g, 2, 5)));
        for (double& v : s) v = uniform_in(g, -3.0, 3.0);
        const int y = uniform_int(g, 0, static_cast<int>(s.size()) - 1);
        const double at1 = ell_mu_value(s, y, 1.0);
        CHECK(std::abs(ell_mu_value(s, y, 1.0 + 1e-6) - at1) < 1e-4);
        CHECK(std::abs(ell_mu_value(s, y, 1.0 - 1e-6) - at1) < 1e-4);
    }
}

TEST_CASE("ell_mu is non-increasing in mu at fixed scores") {
    rng_t g = make_rng(4);
    const std::vector<double> mus{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s(static_cast<std::size_t>(uniform_int(g, 2, 5)));
        for (double& v : s) v = uniform_in(g, -3.0, 3.0);
        const int y = uniform_int(g, 0, static_cast<int>(s.size()) - 1);
        double prev = ell_mu_value(s, y, mus[0]);
        for (std::size_t i = 1; i < mus.size(); ++i) {
            const double cur = ell_mu_value(s, y, mus[i]);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("family_value frozen values") {
    multiclass_family sum_exp;
    sum_exp.tag = multiclass_tag::sum_exp;
    CHECK_THAT(family_value(sum_exp, std::vector<double>{0.0, 0.0}, 0),
               Catch::Matchers::WithinAbs(1.0, 1e-12));

    multiclass_family ch;
    ch.tag = multiclass_tag::cstnd_hinge;
    CHECK_THAT(family_value(ch, std::vector<double>{0.0, 0.0, 0.0}, 0),
               Catch::Matchers::WithinAbs(2.0, 1e-12));

    multiclass_family srho;
    srho.tag = multiclass_tag::sum_rho;
    srho.rho = 1.0;
    CHECK_THAT(family_value(srho, std::vector<double>{5.0, 0.0}, 0),
               Catch::Matchers::WithinAbs(0.0, 1e-12));

    multiclass_family gce;
    gce.tag = multiclass_tag::gce;
    gce.alpha = 0.7;
    CHECK_THAT(family_value(gce, std::vector<double>{0.0, 0.0, 0.0}, 1),
               Catch::Matchers::WithinAbs((1.0 - std::pow(1.0 / 3.0, 0.7)) / 0.7, 1e-12));

    // scale turns the natural-log logistic into its base-2 variant.
    multiclass_family log2 = multiclass_family::logistic();
    log2.scale = 1.0 / std::log(2.0);
    CHECK_THAT(family_value(log2, std::vector<double>{0.0, 0.0}, 0),
               Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("constrained families are invariant under uniform score shifts") {
    multiclass_family fams[3];
    fams[0].tag = multiclass_tag::cstnd_hinge;
    fams[1].tag = multiclass_tag::cstnd_sq;
    fams[2].tag = multiclass_tag::cstnd_exp;
    rng_t g = make_rng(9);
    for (const auto& fam : fams) {
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> s(3);
            for (double& v : s) v = uniform_in(g, -2.0, 2.0);
            const double base = family_value(fam, s, 0);
            const double shift = uniform_in(g, -5.0, 5.0);
            std::vector<double> t(s);
            for (double& v : t) v += shift;
            CHECK_THAT(family_value(fam, t, 0), Catch::Matchers::WithinAbs(base, 1e-9));
        }
    }
}

TEST_CASE("every family passes the finite-difference gradient check") {
    std::vector<multiclass_family> fams;
    for (double mu : {0.0, 0.5, 1.0, 1.3, 2.0, 3.0}) fams.push_back(multiclass_family::comp_sum(mu));
    multiclass_family f;
    f.tag = multiclass_tag::gce;
    f.alpha = 0.7;
    fams.push_back(f);
    for (multiclass_tag tag : {multiclass_tag::sum_sq, multiclass_tag::sum_exp,
                               multiclass_tag::sum_rho, multiclass_tag::cstnd_hinge,
                               multiclass_tag::cstnd_sq, multiclass_tag::cstnd_exp,
                               multiclass_tag::cstnd_rho, multiclass_tag::margin_rho}) {
        multiclass_family h;
        h.tag = tag;
        h.rho = 1.25;
        fams.push_back(h);
    }

    for (const auto& fam : fams) {
        rng_t g = make_rng(100 + static_cast<std::uint64_t>(fam.tag), 31 + static_cast<std::uint64_t>(fam.mu * 4));
        int checked = 0;
        int attempts = 0;
        while (checked < 200 && attempts < 4000) {
            ++attempts;
            std::vector<double> s(static_cast<std::size_t>(uniform_int(g, 2, 5)));
            for (double& v : s) v = uniform_in(g, -3.0, 3.0);
            const int y = uniform_int(g, 0, static_cast<int>(s.size()) - 1);
            if (!away_from_kinks(fam, s, y)) continue;
            INFO(to_string(fam.tag) << " mu=" << fam.mu << " point " << checked);
            REQUIRE(family_fd_max_rel_error(fam, s, y) < 1e-5);
            ++checked;
        }
        REQUIRE(checked == 200);
    }
}

TEST_CASE("phi frozen values") {
    CHECK(phi_value({phi_tag::exp}, 0.0) == 1.0);
    CHECK(phi_value({phi_tag::hinge}, 2.0) == 0.0);
    CHECK_THAT(phi_value({phi_tag::logistic}, 0.0),
               Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
    CHECK_THAT(phi_value({phi_tag::quadratic}, -1.0), Catch::Matchers::WithinAbs(4.0, 1e-12));
    CHECK(phi_value({phi_tag::sigmoid, 2.0}, 0.0) == 1.0);
    binary_phi rm{phi_tag::rho_margin, 1.0, 2.0};
    CHECK_THAT(phi_value(rm, 1.0), Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK(phi_value(rm, -3.0) == 1.0);
    CHECK(phi_value(rm, 5.0) == 0.0);
}

TEST_CASE("phi gradients match finite differences away from kinks") {
    std::vector<binary_phi> phis{{phi_tag::exp},    {phi_tag::logistic},
                                 {phi_tag::quadratic}, {phi_tag::hinge},
                                 {phi_tag::sigmoid, 3.0}, {phi_tag::rho_margin, 1.0, 1.5}};
    const double step = 1e-6;
    for (const auto& phi : phis) {
        rng_t g = make_rng(200 + static_cast<std::uint64_t>(phi.tag));
        const auto kinks = phi_kinks(phi);
        int checked = 0;
        while (checked < 200) {
            const double u = uniform_in(g, -4.0, 4.0);
            bool near = false;
            for (double k : kinks) near = near || std::abs(u - k) < 1e-3;
            if (near) continue;
            const double fd = (phi_value(phi, u + step) - phi_value(phi, u - step)) / (2.0 * step);
            const double an = phi_grad(phi, u);
            INFO(to_string(phi.tag) << " at u=" << u);
            REQUIRE(std::abs(an - fd) / std::max(1.0, std::abs(an)) < 1e-5);
            ++checked;
        }
    }
}

TEST_CASE("every phi is non-increasing; all but natural-log logistic dominate the indicator") {
    std::vector<binary_phi> phis{{phi_tag::exp},    {phi_tag::logistic},
                                 {phi_tag::quadratic}, {phi_tag::hinge},
                                 {phi_tag::sigmoid, 0.7}, {phi_tag::rho_margin, 1.0, 2.0}};
    for (const auto& phi : phis) {
        double prev = phi_value(phi, -10.0);
        for (int i = 1; i <= 400; ++i) {
            const double u = -10.0 + i * 0.05;
            const double v = phi_value(phi, u);
            INFO(to_string(phi.tag) << " at u=" << u);
            CHECK(v <= prev + 1e-12);
            if (phi.tag != phi_tag::logistic) {
                CHECK(v >= (u <= 0.0 ? 1.0 : 0.0));
            } else {
                // The natural-log logistic dips to log 2 at u = 0 and only
                // dominates the indicator scaled by log 2.
                CHECK(v >= (u <= 0.0 ? std::log(2.0) : 0.0));
            }
            prev = v;
        }
        CHECK(phi_value(phi, 0.0) >= (phi.tag == phi_tag::logistic ? std::log(2.0) : 1.0));
    }
}

TEST_CASE("parameter validation rejects out-of-range family settings") {
    multiclass_family bad_gce;
    bad_gce.tag = multiclass_tag::gce;
    bad_gce.alpha = 1.5;
    CHECK_THROWS_AS(bad_gce.validate(), invalid_parameter);

    multiclass_family bad_rho;
    bad_rho.tag = multiclass_tag::sum_rho;
    bad_rho.rho = 0.0;
    CHECK_THROWS_AS(bad_rho.validate(), invalid_parameter);

    binary_phi bad_sig{phi_tag::sigmoid, 0.0};
    CHECK_THROWS_AS(bad_sig.validate(), invalid_parameter);
}
