#include <doctest.h>

#include <cmath>

#include "bg_quadrature.hpp"
#include "vampce/bg_denoiser.hpp"
#include "vampce/rng.hpp"

using namespace vampce;

TEST_SUITE_BEGIN("denoiser");

TEST_CASE("dense prior collapses to gaussian shrinkage") {
    CVector r(3);
    r << cdouble(1, 2), cdouble(-0.5, 0), cdouble(0, 0);
    const double g1 = 3.0, gh = 2.0;
    const DenoiserOutput d = bg_posterior(r, g1, {1.0, gh}, {}, true);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(std::abs(d.pi(i) - 1.0) < 1e-11);
        CHECK(std::abs(d.h_hat(i) - g1 * r(i) / (g1 + gh)) < 1e-11);
    }
    CHECK(std::abs(d.nu - 1.0 / (g1 + gh)) < 1e-15);

    const DenoiserOutput z = bg_posterior(r, g1, {0.0, gh}, {}, true);
    CHECK(z.h_hat.cwiseAbs().maxCoeff() < 1e-11);
    CHECK_THROWS_AS(bg_posterior(r, g1, {1.0, gh}), ConfigError);
}

TEST_CASE("zero observation closed form") {
    const double g1 = 4.0, lambda = 0.3, gh = 0.5;
    const DenoiserOutput d = bg_posterior(CVector::Zero(1), g1, {lambda, gh});
    const double expected = 1.0 / (1.0 + (1.0 - lambda) / lambda * (1.0 / g1 + 1.0 / gh) / (1.0 / g1));
    CHECK(std::abs(d.pi(0) - expected) < 1e-15);
    CHECK(d.h_hat(0) == cdouble(0, 0));
}

TEST_CASE("scalar posterior against quadrature") {
    const cdouble r(0.8, 0.3);
    const double g1 = 4.0, lambda = 0.2, gh = 1.0;
    const DenoiserOutput d = bg_posterior(CVector::Constant(1, r), g1, {lambda, gh});
    const auto q = vampce_test::bg_posterior_quadrature(r, g1, lambda, gh, 8.0, 400);
    CHECK(std::abs(d.pi(0) - q.pi) < 1e-6);
    CHECK(std::abs(d.h_hat(0) - q.mean) < 1e-6);
    CHECK(std::abs(d.pi(0) * (std::norm(d.mu(0)) + d.nu) - q.second) < 1e-6);
}

TEST_CASE("large observations do not underflow") {
    CVector r(2);
    r << cdouble(1e3, 0), cdouble(0, -50);
    const DenoiserOutput d = bg_posterior(r, 1e4, {0.01, 1e-2});
    CHECK(d.pi.allFinite());
    CHECK(d.h_hat.allFinite());
    CHECK(d.pi(0) == doctest::Approx(1.0 - 1e-12));
    CHECK(d.pi(1) == doctest::Approx(1.0 - 1e-12));
}

TEST_CASE("shrinkage and monotonicity") {
    const double g1 = 2.5, gh = 7.0;
    const BgParams p{0.15, gh};
    SeedStream s(31);
    CVector r(500);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        r(i) = cdouble(s.next_normal(), s.next_normal()) * (3.0 * s.next_uniform());
    }
    const DenoiserOutput d = bg_posterior(r, g1, p);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        CHECK(std::abs(d.h_hat(i)) <= std::abs(r(i)) * g1 / (g1 + gh) + 1e-15);
        CHECK(d.pi(i) >= 0.0);
        CHECK(d.pi(i) <= 1.0);
    }

    CVector grid(400);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        grid(i) = std::polar(0.01 * double(i), 0.7);
    }
    const DenoiserOutput g = bg_posterior(grid, g1, p);
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
        CHECK(g.pi(i) >= g.pi(i - 1));
    }
}

TEST_CASE("divergence equals the frozen-pi jacobian average") {
    const double g1 = 3.0;
    const BgParams p{0.2, 1.5};
    SeedStream s(32);
    CVector r(200);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        r(i) = cdouble(s.next_normal(), s.next_normal());
    }
    const DenoiserOutput d = bg_posterior(r, g1, p);
    double fd_sum = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double step = 1e-6 * (1.0 + std::abs(r(i)));
        const cdouble mu_plus = bg_posterior(CVector::Constant(1, r(i) + step), g1, p).mu(0);
        const cdouble mu_minus = bg_posterior(CVector::Constant(1, r(i) - step), g1, p).mu(0);
        fd_sum += d.pi(i) * ((mu_plus - mu_minus) / (2.0 * step)).real();
    }
    CHECK(std::abs(fd_sum / double(r.size()) - d.alpha) < 1e-4);
    CHECK(std::abs(d.eta - g1 / d.alpha) < 1e-12 * d.eta);
}

TEST_CASE("divergence clamp") {
    const DenoiserOutput d = bg_posterior(CVector::Zero(4), 1e-9, {1e-6, 1e9});
    CHECK(d.alpha == doctest::Approx(1e-11));
    CHECK(d.alpha_clamped);
}

TEST_CASE("gaussian division") {
    SeedStream s(33);
    CVector r(6), h(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
        r(i) = cdouble(s.next_normal(), s.next_normal());
        h(i) = cdouble(s.next_normal(), s.next_normal());
    }
    const DivisionResult fixed = gaussian_division(r, 0.5, r, 3.0);
    CHECK((fixed.r - r).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(fixed.gamma == doctest::Approx(3.0));

    for (double alpha : {0.1, 0.37, 0.9}) {
        const double g = 2.0 + alpha;
        const DivisionResult out = gaussian_division(h, alpha, r, g);
        REQUIRE(out.valid);
        const CVector lhs = out.gamma * out.r;
        const CVector rhs = (g / alpha) * h - g * r;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * rhs.cwiseAbs().maxCoeff());
    }

    const DivisionResult tiny = gaussian_division(h, 1e-11, r, 1.0);
    CHECK((tiny.r - h).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_FALSE(gaussian_division(h, 0.0, r, 1.0).valid);
    CHECK_FALSE(gaussian_division(h, 1.0, r, 1.0).valid);
}

TEST_CASE("denoiser rejects bad precisions") {
    CHECK_THROWS_AS(bg_posterior(CVector::Zero(2), 0.0, {0.1, 1.0}), ConfigError);
    CHECK_THROWS_AS(bg_posterior(CVector::Zero(2), 1.0, {0.1, -1.0}), ConfigError);
    CHECK_THROWS_AS(bg_posterior(CVector::Zero(2), 1.0, {1.5, 1.0}, {}, true), ConfigError);
}

TEST_SUITE_END();
