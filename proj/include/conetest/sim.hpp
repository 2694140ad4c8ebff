#pragma once
// Monte Carlo harness: rejection rates at null points (level checks), power
// surfaces over a 2-d mean grid, and the deterministic crossover curve.

#include "conetest/cone.hpp"
#include "conetest/dist.hpp"
#include "conetest/project.hpp"
#include "conetest/testkit.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace conetest {

/// What to simulate. `method` picks the adaptive variant (AdaptiveB,
/// AdaptiveBUnknownVar or AdaptiveA). When `mixture` is set, the type B
/// mixture test is evaluated on the same draws.
struct TestConfig {
    PolyhedralCone cone;
    CovarianceSpec cov;
    double alpha = 0.05;
    TestMethod method = TestMethod::AdaptiveB;
    AlphaAdjustment adjustment;
    std::optional<ChiBarMixture> mixture;
    /// Degrees of freedom of sigma_hat2 for AdaptiveBUnknownVar.
    int m = 0;
};

struct SimReport {
    std::vector<Vector> mu_grid;
    /// Grid coordinates (x, y) for power surfaces; empty otherwise.
    std::vector<std::array<double, 2>> coords;
    std::vector<double> rate_adaptive;
    std::vector<double> rate_mixture; // empty without a mixture
    std::vector<double> half_width;   // 95% half-width of rate_adaptive
    std::vector<double> half_width_mixture;
    std::uint64_t nsim = 0;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::string family;
};

double binomial_half_width(double rate, std::uint64_t nsim);

/// Rejection rates at each mean. Y = mu + L xi with V = L L^T; draw streams
/// are keyed by (seed, point index, chunk) so the report is bit-identical
/// for any thread count.
SimReport estimate_rates(const TestConfig& config, const std::vector<Vector>& mus, std::uint64_t nsim,
                         std::uint64_t seed, int threads = 0);

/// Level run at a null mean: mu in C for type B, mu = 0 for type A.
SimReport estimate_level(const TestConfig& config, const Vector& mu, std::uint64_t nsim, std::uint64_t seed,
                         int threads = 0);

enum class GridParam {
    RawMeans,   // (x, y) = (mu1, mu2), p = 2
    Differences // (x, y) = (mu1 - mu2, mu2 - mu3), p = 3, mu1 = 0
};

struct Grid2D {
    double x_min = -1.0;
    double x_max = 6.0;
    double y_min = -1.0;
    double y_max = 6.0;
    int nx = 41;
    int ny = 41;
    GridParam param = GridParam::RawMeans;

    /// Default lattice for the orthant power surface.
    static Grid2D orthant_default();
    /// Default lattice for the isotonic (eta1, eta2) power surface.
    static Grid2D isotonic_default();
};

Vector grid_mean(GridParam param, double x, double y);

/// Power of the adaptive test and the mixture test at every grid point.
/// Requires config.mixture.
SimReport power_grid(const TestConfig& config, const Grid2D& grid, std::uint64_t nsim, std::uint64_t seed,
                     int threads = 0);

struct CrossoverCurve {
    std::vector<int> p_range;
    double alpha = 0.05;
    ConeFamily family = ConeFamily::Orthant;
    /// Largest k with chi2_quantile(k, 1 - alpha) < mixture quantile; 0 when
    /// no k >= 1 qualifies.
    std::vector<int> max_violations;
    std::vector<double> mixture_quantile;
};

CrossoverCurve crossover_curve(ConeFamily family, const std::vector<int>& p_range, double alpha);

/// "x,y,rate_adaptive,rate_mixture,diff,half_width"; diff = mixture - adaptive.
void write_power_csv(std::ostream& out, const SimReport& report);
/// "point,mu,rate_adaptive,rate_mixture,half_width"; mu joined with ';'.
void write_level_csv(std::ostream& out, const SimReport& report);
/// "p,max_violations,mixture_quantile"
void write_crossover_csv(std::ostream& out, const CrossoverCurve& curve);

} // namespace conetest
