#include "conetest/sim.hpp"

#include "conetest/error.hpp"
#include "conetest/io.hpp"
#include "conetest/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace conetest {

namespace {

constexpr std::uint64_t kSimStreamTag = 0x73696d756c617465ULL;

void write_header(std::ostream& out, const SimReport& r)
{
    out << "# seed=" << r.seed << " nsim=" << r.nsim << " alpha=" << io::format_double(r.alpha)
        << " family=" << r.family << '\n';
}

std::string family_label(const PolyhedralCone& cone)
{
    return std::string(to_string(cone.family())) + "-p" + std::to_string(cone.dim());
}

} // namespace

double binomial_half_width(double rate, std::uint64_t nsim)
{
    if (nsim == 0) return 0.0;
    return 1.96 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(nsim));
}

SimReport estimate_rates(const TestConfig& config, const std::vector<Vector>& mus, std::uint64_t nsim,
                         std::uint64_t seed, int threads)
{
    if (nsim == 0) throw Error(ErrorCode::UsageError, "nsim must be positive");
    const int p = config.cone.dim();
    if (config.cov.dim() != p) throw Error(ErrorCode::DimensionMismatch, "covariance and cone dimensions differ");
    const bool unknown_var = config.method == TestMethod::AdaptiveBUnknownVar;
    const bool type_a = config.method == TestMethod::AdaptiveA;
    if (config.method == TestMethod::MixtureB) {
        throw Error(ErrorCode::UsageError, "pick an adaptive method; the mixture test rides along via config.mixture");
    }
    if (unknown_var && config.m < 1) throw Error(ErrorCode::UsageError, "unknown-variance runs need m >= 1");
    if (config.mixture && (unknown_var || type_a)) {
        throw Error(ErrorCode::UsageError, "the mixture comparison is only defined for the type B known-variance test");
    }

    // Critical values depend only on the selected df, so tabulate them once.
    const double level = config.adjustment.factor * config.alpha;
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error(ErrorCode::InvalidProbability, "alpha must lie in (0, 1)");
    if (level >= 1.0) throw Error(ErrorCode::AlphaOverflow, "adjusted level is not below 1");
    std::vector<double> critical(static_cast<std::size_t>(p) + 1, 0.0);
    for (int r = 1; r <= p; ++r) {
        critical[static_cast<std::size_t>(r)] =
            unknown_var ? fratio_quantile(r, config.m, 1.0 - level) : chi2_quantile(r, 1.0 - level);
    }
    const double mixture_critical = config.mixture ? mixture_quantile(*config.mixture, config.alpha) : 0.0;

    ProjectionOptions options;
    options.primal_face = type_a;
    const ConeProjector projector(config.cone, config.cov, options);

    SimReport report;
    report.nsim = nsim;
    report.seed = seed;
    report.alpha = config.alpha;
    report.family = family_label(config.cone);
    report.mu_grid = mus;

    for (std::size_t point = 0; point < mus.size(); ++point) {
        const Vector& mu = mus[point];
        if (mu.size() != p) throw Error(ErrorCode::DimensionMismatch, "mean vector has the wrong length");
        const Vector mu_white = config.cov.whiten(mu);
        const auto counts = tally_chunks(
            nsim, 2, threads,
            [&](std::uint64_t chunk, std::uint64_t count, std::vector<std::uint64_t>& tally) {
                auto rng = make_stream(seed, {kSimStreamTag, point, chunk});
                std::normal_distribution<double> normal;
                std::chi_squared_distribution<double> chi2(unknown_var ? config.m : 1);
                Vector z(p);
                for (std::uint64_t d = 0; d < count; ++d) {
                    for (int i = 0; i < p; ++i) z[i] = mu_white[i] + normal(rng);
                    const ConeProjection proj = projector.project_whitened(z);
                    bool reject_adaptive = false;
                    if (type_a) {
                        const int r = proj.primal_face_rank;
                        reject_adaptive = r > 0 && proj.point_norm2 > critical[static_cast<std::size_t>(r)];
                    } else if (unknown_var) {
                        const double sigma_hat2 = chi2(rng);
                        const int r = proj.face_rank;
                        reject_adaptive = r > 0 && proj.lr / sigma_hat2 > critical[static_cast<std::size_t>(r)];
                    } else {
                        const int r = proj.face_rank;
                        reject_adaptive = r > 0 && proj.lr > critical[static_cast<std::size_t>(r)];
                    }
                    tally[0] += reject_adaptive;
                    if (config.mixture) tally[1] += proj.lr > mixture_critical;
                }
            });
        const double n = static_cast<double>(nsim);
        const double ra = static_cast<double>(counts[0]) / n;
        report.rate_adaptive.push_back(ra);
        report.half_width.push_back(binomial_half_width(ra, nsim));
        if (config.mixture) {
            const double rm = static_cast<double>(counts[1]) / n;
            report.rate_mixture.push_back(rm);
            report.half_width_mixture.push_back(binomial_half_width(rm, nsim));
        }
    }
    return report;
}

SimReport estimate_level(const TestConfig& config, const Vector& mu, std::uint64_t nsim, std::uint64_t seed,
                         int threads)
{
    if (nsim < 10000) throw Error(ErrorCode::UsageError, "level runs need nsim >= 10000");
    if (config.method == TestMethod::AdaptiveA) {
        if (mu.size() != config.cone.dim() || mu.cwiseAbs().maxCoeff() != 0.0) {
            throw Error(ErrorCode::MuOutsideNull, "the type A null is mu = 0");
        }
    } else if (!contains(config.cone, mu)) {
        throw Error(ErrorCode::MuOutsideNull, "mu is not in the null cone; use a power run instead");
    }
    return estimate_rates(config, {mu}, nsim, seed, threads);
}

Grid2D Grid2D::orthant_default()
{
    return {-1.0, 6.0, -1.0, 6.0, 41, 41, GridParam::RawMeans};
}

Grid2D Grid2D::isotonic_default()
{
    return {-6.0, 1.0, -6.0, 1.0, 41, 41, GridParam::Differences};
}

Vector grid_mean(GridParam param, double x, double y)
{
    if (param == GridParam::RawMeans) return Vector{{x, y}};
    return Vector{{0.0, -x, -x - y}};
}

SimReport power_grid(const TestConfig& config, const Grid2D& grid, std::uint64_t nsim, std::uint64_t seed,
                     int threads)
{
    if (!config.mixture) throw Error(ErrorCode::UsageError, "power grids compare against the mixture test");
    const int expected_p = grid.param == GridParam::RawMeans ? 2 : 3;
    if (config.cone.dim() != expected_p) {
        throw Error(ErrorCode::DimensionMismatch, "grid parameterisation needs p = " + std::to_string(expected_p));
    }
    if (grid.nx < 1 || grid.ny < 1) throw Error(ErrorCode::UsageError, "grid needs at least one point per axis");
    std::vector<Vector> mus;
    std::vector<std::array<double, 2>> coords;
    auto axis = [](double lo, double hi, int n, int i) {
        return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = axis(grid.x_min, grid.x_max, grid.nx, ix);
            const double y = axis(grid.y_min, grid.y_max, grid.ny, iy);
            coords.push_back({x, y});
            mus.push_back(grid_mean(grid.param, x, y));
        }
    }
    SimReport report = estimate_rates(config, mus, nsim, seed, threads);
    report.coords = std::move(coords);
    return report;
}

CrossoverCurve crossover_curve(ConeFamily family, const std::vector<int>& p_range, double alpha)
{
    if (family == ConeFamily::General) {
        throw Error(ErrorCode::UnsupportedFamily, "crossover curves need exact weights (orthant or isotonic)");
    }
    CrossoverCurve curve;
    curve.p_range = p_range;
    curve.alpha = alpha;
    curve.family = family;
    for (int p : p_range) {
        const ChiBarMixture mix = family == ConeFamily::Orthant ? orthant_weights(p) : isotonic_weights(p);
        const double q = mixture_quantile(mix, alpha);
        int best = 0;
        for (int k = 1; k <= p; ++k) {
            if (chi2_quantile(k, 1.0 - alpha) < q) best = k;
        }
        curve.max_violations.push_back(best);
        curve.mixture_quantile.push_back(q);
    }
    return curve;
}

void write_power_csv(std::ostream& out, const SimReport& r)
{
    write_header(out, r);
    out << "x,y,rate_adaptive,rate_mixture,diff,half_width\n";
    for (std::size_t i = 0; i < r.coords.size(); ++i) {
        const double ra = r.rate_adaptive[i];
        const double rm = r.rate_mixture.empty() ? 0.0 : r.rate_mixture[i];
        const double hw = std::max(r.half_width[i], r.half_width_mixture.empty() ? 0.0 : r.half_width_mixture[i]);
        out << io::format_double(r.coords[i][0]) << ',' << io::format_double(r.coords[i][1]) << ','
            << io::format_double(ra) << ',' << io::format_double(rm) << ',' << io::format_double(rm - ra) << ','
            << io::format_double(hw) << '\n';
    }
}

void write_level_csv(std::ostream& out, const SimReport& r)
{
    write_header(out, r);
    out << "point,mu,rate_adaptive,rate_mixture,half_width\n";
    for (std::size_t i = 0; i < r.mu_grid.size(); ++i) {
        out << i << ',';
        for (Eigen::Index j = 0; j < r.mu_grid[i].size(); ++j) {
            if (j) out << ';';
            out << io::format_double(r.mu_grid[i][j]);
        }
        out << ',' << io::format_double(r.rate_adaptive[i]) << ','
            << (r.rate_mixture.empty() ? std::string() : io::format_double(r.rate_mixture[i])) << ','
            << io::format_double(r.half_width[i]) << '\n';
    }
}

void write_crossover_csv(std::ostream& out, const CrossoverCurve& c)
{
    out << "# alpha=" << io::format_double(c.alpha) << " family=" << to_string(c.family) << '\n';
    out << "p,max_violations,mixture_quantile\n";
    for (std::size_t i = 0; i < c.p_range.size(); ++i) {
        out << c.p_range[i] << ',' << c.max_violations[i] << ',' << io::format_double(c.mixture_quantile[i]) << '\n';
    }
}

} // namespace conetest
