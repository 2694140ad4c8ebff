#include "conetest/error.hpp"
#include "conetest/io.hpp"
#include "conetest/testkit.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace conetest;

namespace {

const auto kI2 = CovarianceSpec::identity(2);
const auto kI3 = CovarianceSpec::identity(3);

PolyhedralCone quadrant_alternative()
{
    return build_cone(Matrix::Identity(2, 2)); // mu >= 0
}

} // namespace

TEST_CASE("adaptive type B examples")
{
    const auto orth = PolyhedralCone::orthant(2);
    auto o = adaptive_test_b(Vector{{-1.0, -1.0}}, orth, kI2, 0.05, AlphaAdjustment::none());
    CHECK(o.statistic == 0.0);
    CHECK(o.df_selected == 0);
    CHECK(o.critical_value == 0.0);
    CHECK_FALSE(o.reject);
    CHECK(o.p_value == 1.0);

    o = adaptive_test_b(Vector{{2.5, -1.0}}, orth, kI2, 0.05, AlphaAdjustment::exact(4.0 / 3.0));
    CHECK(o.df_selected == 1);
    CHECK(o.statistic == doctest::Approx(6.25));
    CHECK(o.critical_value == doctest::Approx(3.36324).epsilon(1e-5));
    CHECK(o.effective_alpha == doctest::Approx(0.05 * 4.0 / 3.0));
    CHECK(o.reject);
    CHECK(o.method == TestMethod::AdaptiveB);

    o = adaptive_test_b(Vector{{3.0, 1.0, 2.0}}, PolyhedralCone::isotonic(3), kI3, 0.05,
                        AlphaAdjustment::exact(6.0 / 5.0));
    CHECK(o.df_selected == 2);
    CHECK(o.statistic == doctest::Approx(2.0));
    CHECK(o.critical_value == doctest::Approx(-2.0 * std::log(0.06)).epsilon(1e-12));
    CHECK_FALSE(o.reject);
}

TEST_CASE("mixture type B examples")
{
    const auto iso = PolyhedralCone::isotonic(3);
    auto o = mixture_test_b(Vector{{3.0, 1.0, 2.0}}, iso, kI3, 0.05, isotonic_weights(3));
    CHECK(o.statistic == doctest::Approx(2.0));
    CHECK(o.critical_value == doctest::Approx(4.6).epsilon(0.05 / 4.6));
    CHECK_FALSE(o.reject);
    CHECK_FALSE(o.df_selected.has_value());
    CHECK(o.method == TestMethod::MixtureB);

    o = mixture_test_b(Vector{{2.5, -1.0}}, PolyhedralCone::orthant(2), kI2, 0.05, orthant_weights(2));
    CHECK(o.statistic == doctest::Approx(6.25));
    CHECK(o.critical_value == doctest::Approx(4.2306).epsilon(1e-4));
    CHECK(o.reject);

    o = mixture_test_b(Vector{{-1.0, -3.0}}, PolyhedralCone::orthant(2), kI2, 0.05, orthant_weights(2));
    CHECK(o.statistic == 0.0);
    CHECK_FALSE(o.reject);
}

TEST_CASE("adaptive and mixture tests share the statistic")
{
    std::mt19937_64 rng(21);
    const auto iso = PolyhedralCone::isotonic(4);
    const auto cov = CovarianceSpec::identity(4);
    const auto mix = isotonic_weights(4);
    for (int rep = 0; rep < 200; ++rep) {
        const Vector y = oracle::normal_vector(rng, 4);
        const auto a = adaptive_test_b(y, iso, cov, 0.05, AlphaAdjustment::none());
        const auto m = mixture_test_b(y, iso, cov, 0.05, mix);
        CHECK(a.statistic == m.statistic);
        // decision rule and the df = 0 convention
        CHECK(a.reject == (a.statistic > a.critical_value));
        CHECK((a.critical_value == 0.0) == (a.df_selected == 0));
    }
}

TEST_CASE("unknown-variance test")
{
    const auto orth1 = PolyhedralCone::orthant(1);
    const Matrix one = Matrix::Identity(1, 1);
    const int m = 10;
    const double sigma_hat2 = 2.0;
    const double q = fratio_quantile(1, m, 0.95);
    // statistic is y^2 / sigma_hat2 for y > 0
    const double t = std::sqrt(q) * 1.01;
    auto o = adaptive_test_b_unknown_var(Vector{{std::sqrt(sigma_hat2) * t}}, orth1, one, sigma_hat2, m, 0.05,
                                         AlphaAdjustment::none());
    CHECK(o.reject);
    CHECK(o.statistic == doctest::Approx(t * t));
    CHECK(o.critical_value == doctest::Approx(q));
    CHECK(o.method == TestMethod::AdaptiveBUnknownVar);

    o = adaptive_test_b_unknown_var(Vector{{-1.0, -2.0}}, PolyhedralCone::orthant(2), Matrix::Identity(2, 2),
                                    sigma_hat2, m, 0.05, AlphaAdjustment::none());
    CHECK(o.statistic == 0.0);
    CHECK_FALSE(o.reject);

    CHECK_THROWS_AS(adaptive_test_b_unknown_var(Vector{{1.0}}, orth1, one, 0.0, m, 0.05, AlphaAdjustment::none()),
                    Error);
    try {
        adaptive_test_b_unknown_var(Vector{{1.0}}, orth1, one, -1.0, m, 0.05, AlphaAdjustment::none());
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveVarianceEstimate);
    }
}

TEST_CASE("unknown-variance face rank does not depend on sigma_hat2")
{
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 200; ++rep) {
        const int p = 2 + rep % 4;
        const Matrix a = oracle::normal_matrix(rng, 1 + rep % 5, p);
        const auto cone = build_cone(a);
        const Matrix sigma = oracle::random_spd(rng, p);
        const Vector y = oracle::normal_vector(rng, p);
        const auto base = adaptive_test_b_unknown_var(y, cone, sigma, 1.0, 8, 0.05, AlphaAdjustment::none());
        for (double s2 : {0.01, 0.7, 3.0, 250.0}) {
            const auto o = adaptive_test_b_unknown_var(y, cone, sigma, s2, 8, 0.05, AlphaAdjustment::none());
            CHECK(o.df_selected == base.df_selected);
            CHECK(o.statistic == doctest::Approx(base.statistic / s2));
            CHECK(o.critical_value == base.critical_value);
        }
    }
}

TEST_CASE("adaptive type A examples")
{
    const auto alt = quadrant_alternative();
    auto o = adaptive_test_a(Vector{{-1.0, -2.0}}, alt, kI2, 0.05, AlphaAdjustment::none());
    CHECK(o.statistic == 0.0);
    CHECK_FALSE(o.reject);

    o = adaptive_test_a(Vector{{3.0, -1.0}}, alt, kI2, 0.05, AlphaAdjustment::exact(4.0 / 3.0));
    CHECK(o.df_selected == 1);
    CHECK(o.statistic == doctest::Approx(9.0));
    CHECK(o.critical_value == doctest::Approx(3.36324).epsilon(1e-5));
    CHECK(o.reject);
    CHECK(o.method == TestMethod::AdaptiveA);

    o = adaptive_test_a(Vector{{2.0, 2.0}}, alt, kI2, 0.05, AlphaAdjustment::none());
    CHECK(o.df_selected == 2);
    CHECK(o.statistic == doctest::Approx(8.0));
    CHECK(o.critical_value == doctest::Approx(5.991464547).epsilon(1e-9));
    CHECK(o.reject);
}

TEST_CASE("exact alpha adjustments")
{
    AdjustmentRequest req;
    CHECK(alpha_adjustment_for(PolyhedralCone::orthant(2), req).factor == doctest::Approx(4.0 / 3.0));
    CHECK(alpha_adjustment_for(PolyhedralCone::isotonic(3), req).factor == doctest::Approx(6.0 / 5.0));
    CHECK(alpha_adjustment_for(PolyhedralCone::orthant(10), req).factor == doctest::Approx(1024.0 / 1023.0));
    CHECK(alpha_adjustment_for(PolyhedralCone::isotonic(5), req).factor == doctest::Approx(120.0 / 119.0));
    CHECK(alpha_adjustment_for(PolyhedralCone::isotonic(13), req).factor == 1.0);
    CHECK(alpha_adjustment_for(PolyhedralCone::isotonic(12), req).factor > 1.0);
    CHECK(alpha_adjustment_for(PolyhedralCone::orthant(2), req).basis == AdjustmentBasis::ExactBound);

    Matrix a(2, 2);
    a << 1, 1, 0, 1;
    try {
        alpha_adjustment_for(build_cone(a), req);
        FAIL("expected UnsupportedFamily");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedFamily);
    }
    CHECK(default_adjustment(build_cone(a), kI2).basis == AdjustmentBasis::None);
    CHECK(default_adjustment(PolyhedralCone::orthant(2), kI2).factor == doctest::Approx(4.0 / 3.0));

    req.problem = Problem::TypeA;
    CHECK(alpha_adjustment_for(quadrant_alternative(), req).factor == doctest::Approx(4.0 / 3.0));
    CHECK(alpha_adjustment_for(PolyhedralCone::isotonic(3), req).factor == 1.0);
}

TEST_CASE("Monte Carlo alpha adjustment")
{
    AdjustmentRequest req;
    req.mode = AdjustmentBasis::MonteCarloEstimate;
    req.nsim = 200000;
    req.seed = 4;
    const auto adj = alpha_adjustment_for(PolyhedralCone::orthant(2), req);
    CHECK(adj.warning);
    CHECK(adj.basis == AdjustmentBasis::MonteCarloEstimate);
    // P(Y in C) = 1/4, factor = 4/3; delta method half-width
    const double sd = std::sqrt(0.25 * 0.75 / req.nsim) / (0.75 * 0.75);
    CHECK(std::abs(adj.factor - 4.0 / 3.0) < 4 * sd);

    const auto o = adaptive_test_b(Vector{{2.0, -1.0}}, PolyhedralCone::orthant(2), kI2, 0.05, adj);
    CHECK(o.adjustment_warning);
}

TEST_CASE("level checks")
{
    const auto orth = PolyhedralCone::orthant(2);
    CHECK_THROWS_AS(adaptive_test_b(Vector{{1.0, 1.0}}, orth, kI2, 0.0, AlphaAdjustment::none()), Error);
    CHECK_THROWS_AS(adaptive_test_b(Vector{{1.0, 1.0}}, orth, kI2, 1.0, AlphaAdjustment::none()), Error);
    try {
        adaptive_test_b(Vector{{1.0, 1.0}}, orth, kI2, 0.8, AlphaAdjustment::exact(4.0 / 3.0));
        FAIL("expected AlphaOverflow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AlphaOverflow);
    }
}

TEST_CASE("outcome csv round-trip")
{
    const auto orth = PolyhedralCone::orthant(2);
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        const Vector y = 2 * oracle::normal_vector(rng, 2);
        const auto o = rep % 2 ? adaptive_test_b(y, orth, kI2, 0.05, AlphaAdjustment::exact(4.0 / 3.0))
                               : mixture_test_b(y, orth, kI2, 0.05, orthant_weights(2));
        std::stringstream first;
        write_outcome_csv(first, o);
        const auto once = read_outcome_csv(first);
        std::stringstream second;
        write_outcome_csv(second, once);
        const std::string text = second.str();
        const auto twice = read_outcome_csv(second);
        CHECK(twice == once);
        std::stringstream third;
        write_outcome_csv(third, twice);
        CHECK(third.str() == text);
        // fields survive to the printed precision
        CHECK(once.df_selected == o.df_selected);
        CHECK(once.reject == o.reject);
        CHECK(once.method == o.method);
        CHECK(once.statistic == doctest::Approx(o.statistic).epsilon(1e-9));
    }
    // values exact at 10 digits come back identical
    TestOutcome exact{2.0, 5.5, 2, false, 0.06, TestMethod::AdaptiveA, 0.25, true};
    std::stringstream ss;
    write_outcome_csv(ss, exact);
    CHECK(read_outcome_csv(ss) == exact);

    std::istringstream bad("statistic,critical_value,df_selected,reject,effective_alpha,method,p_value,"
                           "adjustment_warning\n1,2,x,false,0.05,adaptive-b,1,false\n");
    CHECK_THROWS_AS(read_outcome_csv(bad), Error);
}

TEST_CASE("Mill's ratio: P(Y^2 > q | Y >= 0) is nondecreasing in the mean on [-3, 0]")
{
    const double q1 = chi2_quantile(1, 0.95);
    const double root = std::sqrt(q1);
    auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); };
    double prev = -1.0;
    for (int i = 0; i < 10; ++i) {
        const double mu = -3.0 + 3.0 * i / 9.0;
        const double upper = mu + 12.0;
        // densities of Y ~ N(mu, 1) integrated directly
        const double above = oracle::integrate([&](double y) { return phi(y - mu); }, root, std::max(upper, root + 1.0));
        const double positive = oracle::integrate([&](double y) { return phi(y - mu); }, 0.0, std::max(upper, 1.0));
        const double ratio = above / positive;
        CHECK(ratio >= prev - 1e-12);
        prev = ratio;
    }
}

TEST_CASE("type A: given the face rank the statistic is chi-square")
{
    const auto alt = quadrant_alternative();
    ProjectionOptions opt;
    opt.primal_face = true;
    const ConeProjector projector(alt, kI2, opt);
    std::mt19937_64 rng(24);
    std::vector<double> by_rank[3];
    for (int i = 0; i < 100000; ++i) {
        const auto r = projector.project(oracle::normal_vector(rng, 2));
        by_rank[r.primal_face_rank].push_back(r.point_norm2);
    }
    CHECK(by_rank[0].size() == doctest::Approx(25000).epsilon(0.05));
    for (int df = 1; df <= 2; ++df) {
        auto& xs = by_rank[df];
        std::sort(xs.begin(), xs.end());
        double ks = 0.0;
        const double n = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double f = chi2_cdf(df, xs[i]);
            ks = std::max({ks, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
        }
        CHECK(ks < 0.02);
    }
}
