#pragma once
// Chi-square and chi-square-ratio distribution functions, chi-bar-squared
// mixture weights and mixture quantiles.

#include "conetest/cone.hpp"
#include "conetest/project.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace conetest {

/// P(chi2(df) <= x). df = 0 is the point mass at zero.
double chi2_cdf(int df, double x);
/// P(chi2(df) > x), computed directly (no 1 - cdf cancellation).
double chi2_sf(int df, double x);
/// Smallest x with chi2_cdf(df, x) >= prob; identically 0 for df = 0.
double chi2_quantile(int df, double prob);

/// Quantile of chi2(r) / chi2(m) for independent chi-squares (no division by
/// the degrees of freedom), i.e. (r/m) times the F(r, m) quantile.
double fratio_quantile(int r, int m, double prob);
/// P(chi2(r) / chi2(m) > x).
double fratio_sf(int r, int m, double x);

enum class WeightSource { ExactOrthant, ExactIsotonic, MonteCarlo };

const char* to_string(WeightSource source) noexcept;

/// Least favourable null law of the LR: sum_i weights[i] * chi2(i).
struct ChiBarMixture {
    std::vector<double> weights; // weights[i] is the weight on chi2(i)
    WeightSource source = WeightSource::MonteCarlo;
    std::uint64_t nsim = 0;
    std::uint64_t seed = 0;

    int max_df() const noexcept { return static_cast<int>(weights.size()) - 1; }
    /// P(mixture > c)
    double tail(double c) const;
};

/// Binomial(p, 1/2) weights of the orthant { mu <= 0 } with V = I.
ChiBarMixture orthant_weights(int p);

/// Isotonic weights with V = I: weights[i] is the probability that PAVA on p
/// iid normals returns p - i levels, i.e. |s(p, p - i)| / p!. Computed by the
/// level-count recursion in log space; weights[p] = 0.
ChiBarMixture isotonic_weights(int p);

/// Empirical law of the polar face rank under Z ~ N(0, V). Draws are split in
/// fixed chunks with one seeded stream each, so the counts do not depend on
/// the thread count.
ChiBarMixture mc_weights(const PolyhedralCone& cone, const CovarianceSpec& cov, std::uint64_t nsim,
                         std::uint64_t seed, int threads = 0);

/// Exact weights when the family has a closed form and V = I, simulation
/// otherwise.
ChiBarMixture weights_for(const PolyhedralCone& cone, const CovarianceSpec& cov, std::uint64_t nsim,
                          std::uint64_t seed, int threads = 0);

/// Smallest c >= 0 with mixture tail(c) <= alpha, by bisection to 1e-9.
double mixture_quantile(const ChiBarMixture& mix, double alpha);

/// CSV with header "df,weight"; '#' comment lines carry the provenance.
void write_weights_csv(std::ostream& out, const ChiBarMixture& mix);
ChiBarMixture read_weights_csv(std::istream& in);

} // namespace conetest
