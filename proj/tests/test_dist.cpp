#include "conetest/dist.hpp"
#include "conetest/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace conetest;

TEST_CASE("chi-square quantiles")
{
    CHECK(chi2_quantile(1, 0.95) == doctest::Approx(3.841458820694124).epsilon(1e-12));
    CHECK(chi2_quantile(2, 0.94) == doctest::Approx(-2.0 * std::log(0.06)).epsilon(1e-12));
    CHECK(chi2_quantile(0, 0.5) == 0.0);
    CHECK(chi2_cdf(0, 0.0) == 1.0);
    CHECK(chi2_sf(0, 0.0) == 0.0);
    CHECK_THROWS_AS(chi2_quantile(1, 1.5), Error);
    CHECK_THROWS_AS(chi2_quantile(-1, 0.5), Error);
}

TEST_CASE("two degrees of freedom have a closed form")
{
    for (double x : {0.01, 0.5, 2.0, 7.0, 30.0}) {
        CHECK(chi2_cdf(2, x) == doctest::Approx(1.0 - std::exp(-x / 2)).epsilon(1e-13));
        CHECK(chi2_sf(2, x) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-13));
    }
    for (double q : {1e-10, 0.01, 0.5, 0.99, 1.0 - 1e-12}) {
        CHECK(chi2_quantile(2, q) == doctest::Approx(-2.0 * std::log1p(-q)).epsilon(1e-10));
    }
}

TEST_CASE("quantile inverts the cdf")
{
    for (int df = 1; df <= 60; df += 3) {
        for (double q : {1e-6, 0.05, 0.5, 0.95, 0.999999}) {
            const double x = chi2_quantile(df, q);
            CHECK(chi2_cdf(df, x) == doctest::Approx(q).epsilon(1e-10));
        }
        CHECK(chi2_cdf(df, 3.0) + chi2_sf(df, 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("chi-square ratio against simulation and the F relation")
{
    // r/m times the F quantile, with F(r,m) from its defining ratio
    std::mt19937_64 rng(3);
    for (auto [r, m] : {std::pair{1, 10}, std::pair{2, 10}, std::pair{3, 5}}) {
        std::chi_squared_distribution<double> num(r), den(m);
        const double q = fratio_quantile(r, m, 0.95);
        const int n = 200000;
        int above = 0;
        for (int i = 0; i < n; ++i) above += num(rng) / den(rng) > q;
        const double rate = static_cast<double>(above) / n;
        CHECK(std::abs(rate - 0.05) < 4.0 * std::sqrt(0.05 * 0.95 / n));
        CHECK(fratio_sf(r, m, q) == doctest::Approx(0.05).epsilon(1e-10));
    }
    // r = 2, m = 2: P(X/Y > x) = 1/(1+x)
    CHECK(fratio_sf(2, 2, 3.0) == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(fratio_quantile(2, 2, 0.75) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("exact orthant weights")
{
    const auto w = orthant_weights(2);
    REQUIRE(w.weights.size() == 3);
    CHECK(w.weights[0] == 0.25);
    CHECK(w.weights[1] == 0.5);
    CHECK(w.weights[2] == 0.25);
    for (int p = 1; p <= 200; p += 7) {
        const auto wp = orthant_weights(p);
        CHECK(std::accumulate(wp.weights.begin(), wp.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        // symmetric: C(p, i) = C(p, p - i)
        CHECK(wp.weights.front() == doctest::Approx(wp.weights.back()));
    }
}

TEST_CASE("exact isotonic weights")
{
    const auto w3 = isotonic_weights(3);
    REQUIRE(w3.weights.size() == 4);
    CHECK(w3.weights[0] == doctest::Approx(1.0 / 6));
    CHECK(w3.weights[1] == doctest::Approx(0.5));
    CHECK(w3.weights[2] == doctest::Approx(1.0 / 3));
    CHECK(w3.weights[3] == 0.0);

    // unsigned Stirling numbers of the first kind by their own recursion
    for (int p = 2; p <= 12; ++p) {
        std::vector<std::vector<double>> s(p + 1, std::vector<double>(p + 1, 0.0));
        s[0][0] = 1;
        for (int n = 1; n <= p; ++n)
            for (int j = 1; j <= n; ++j) s[n][j] = s[n - 1][j - 1] + (n - 1) * s[n - 1][j];
        double fact = 1;
        for (int n = 2; n <= p; ++n) fact *= n;
        const auto w = isotonic_weights(p);
        for (int i = 0; i < p; ++i) CHECK(w.weights[i] == doctest::Approx(s[p][p - i] / fact).epsilon(1e-12));
    }
    const auto big = isotonic_weights(150);
    CHECK(std::accumulate(big.weights.begin(), big.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(isotonic_weights(1), Error);
}

TEST_CASE("mixture quantiles")
{
    CHECK(mixture_quantile(isotonic_weights(3), 0.05) == doctest::Approx(4.5773).epsilon(1e-4));
    CHECK(mixture_quantile(orthant_weights(2), 0.05) == doctest::Approx(4.2306).epsilon(1e-4));

    for (int p = 2; p <= 30; p += 4) {
        const auto mix = orthant_weights(p);
        const double q = mixture_quantile(mix, 0.05);
        CHECK(mix.tail(q) == doctest::Approx(0.05).epsilon(1e-7));
        // bracketed by the extreme components
        CHECK(q <= chi2_quantile(p, 0.95));
        CHECK(q >= chi2_quantile(1, 0.95));
    }
    // every component above level alpha at zero: quantile is 0
    CHECK(mixture_quantile(orthant_weights(2), 0.9) == 0.0);

    ChiBarMixture bad;
    bad.weights = {0.5, 0.4};
    CHECK_THROWS_AS(mixture_quantile(bad, 0.05), Error);
}

TEST_CASE("simulated weights track the exact ones")
{
    const auto cone = PolyhedralCone::orthant(3);
    const auto cov = CovarianceSpec::identity(3);
    const std::uint64_t n = 200000;
    const auto mc = mc_weights(cone, cov, n, 99);
    const auto exact = orthant_weights(3);
    REQUIRE(mc.weights.size() == exact.weights.size());
    for (std::size_t i = 0; i < exact.weights.size(); ++i) {
        const double w = exact.weights[i];
        CHECK(std::abs(mc.weights[i] - w) <= 4.0 * std::sqrt(w * (1 - w) / n));
    }
    CHECK(std::accumulate(mc.weights.begin(), mc.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mc.source == WeightSource::MonteCarlo);
    CHECK(mc.seed == 99);

    // same seed, same weights; thread count does not matter
    const auto again = mc_weights(cone, cov, n, 99, 3);
    CHECK(again.weights == mc.weights);
    CHECK_THROWS_AS(mc_weights(cone, cov, 100, 1), Error);
}

TEST_CASE("simulated weights converge as nsim grows")
{
    const auto cone = PolyhedralCone::isotonic(4);
    const auto cov = CovarianceSpec::identity(4);
    const auto exact = isotonic_weights(4);
    double prev = 1.0;
    int improvements = 0;
    for (std::uint64_t n : {10000ull, 160000ull, 2560000ull}) {
        const auto mc = mc_weights(cone, cov, n, 5);
        double err = 0.0;
        for (std::size_t i = 0; i < exact.weights.size(); ++i) err = std::max(err, std::abs(mc.weights[i] - exact.weights[i]));
        improvements += err < prev;
        prev = err;
    }
    CHECK(improvements >= 2);
    CHECK(prev < 2e-3);
}

TEST_CASE("correlated covariance: orthant p = 2 weight on chi2(0) is 1/4 + asin(rho)/(2 pi)")
{
    // for N(0, V) with correlation rho, P(Z1 <= 0, Z2 <= 0) has this closed form
    const double rho = 0.6;
    Matrix v(2, 2);
    v << 1, rho, rho, 1;
    const std::uint64_t n = 400000;
    const auto mc = mc_weights(PolyhedralCone::orthant(2), CovarianceSpec::from_matrix(v), n, 17);
    const double w0 = 0.25 + std::asin(rho) / (2 * M_PI);
    CHECK(std::abs(mc.weights[0] - w0) <= 4 * std::sqrt(w0 * (1 - w0) / n));
}

TEST_CASE("weights csv round-trip")
{
    const auto w = isotonic_weights(5);
    std::stringstream ss;
    write_weights_csv(ss, w);
    const auto back = read_weights_csv(ss);
    REQUIRE(back.weights.size() == w.weights.size());
    for (std::size_t i = 0; i < w.weights.size(); ++i) CHECK(back.weights[i] == doctest::Approx(w.weights[i]).epsilon(1e-9));
    CHECK(back.source == WeightSource::ExactIsotonic);
}
