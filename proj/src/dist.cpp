#include "conetest/dist.hpp"

#include "conetest/error.hpp"
#include "conetest/io.hpp"
#include "conetest/parallel.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace conetest {

namespace {

void check_probability(double prob, const char* what)
{
    if (!(prob > 0.0 && prob < 1.0)) {
        throw Error(ErrorCode::InvalidProbability,
                    std::string(what) + " must lie in (0, 1), got " + io::format_double(prob));
    }
}

void check_df(int df)
{
    if (df < 0) throw Error(ErrorCode::DimensionMismatch, "degrees of freedom must be >= 0");
}

double log_add_exp(double a, double b)
{
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

} // namespace

double chi2_cdf(int df, double x)
{
    check_df(df);
    if (std::isnan(x)) throw Error(ErrorCode::InvalidProbability, "chi2_cdf of NaN");
    if (x < 0.0) return 0.0;
    if (df == 0) return 1.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chi2_sf(int df, double x)
{
    check_df(df);
    if (std::isnan(x)) throw Error(ErrorCode::InvalidProbability, "chi2_sf of NaN");
    if (x < 0.0) return 1.0;
    if (df == 0) return 0.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chi2_quantile(int df, double prob)
{
    check_df(df);
    check_probability(prob, "probability");
    if (df == 0) return 0.0;
    const double a = 0.5 * df;
    if (prob > 0.5) return 2.0 * boost::math::gamma_q_inv(a, 1.0 - prob);
    return 2.0 * boost::math::gamma_p_inv(a, prob);
}

double fratio_quantile(int r, int m, double prob)
{
    if (r < 1 || m < 1) throw Error(ErrorCode::DimensionMismatch, "ratio degrees of freedom must be >= 1");
    check_probability(prob, "probability");
    // chi2(r) / chi2(m) = B / (1 - B) with B ~ Beta(r/2, m/2).
    const double a = 0.5 * r;
    const double b = 0.5 * m;
    const double x = boost::math::ibeta_inv(a, b, prob);
    const double one_minus_x = boost::math::ibeta_inv(b, a, 1.0 - prob);
    return x / one_minus_x;
}

double fratio_sf(int r, int m, double x)
{
    if (r < 1 || m < 1) throw Error(ErrorCode::DimensionMismatch, "ratio degrees of freedom must be >= 1");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::ibetac(0.5 * r, 0.5 * m, x / (1.0 + x));
}

const char* to_string(WeightSource source) noexcept
{
    switch (source) {
    case WeightSource::ExactOrthant: return "exact-orthant";
    case WeightSource::ExactIsotonic: return "exact-isotonic";
    case WeightSource::MonteCarlo: return "monte-carlo";
    }
    return "monte-carlo";
}

double ChiBarMixture::tail(double c) const
{
    double acc = 0.0;
    for (std::size_t i = 1; i < weights.size(); ++i) {
        if (weights[i] > 0.0) acc += weights[i] * chi2_sf(static_cast<int>(i), c);
    }
    return acc;
}

ChiBarMixture orthant_weights(int p)
{
    if (p < 1) throw Error(ErrorCode::DimensionMismatch, "orthant weights need p >= 1");
    ChiBarMixture mix;
    mix.source = WeightSource::ExactOrthant;
    mix.weights.resize(static_cast<std::size_t>(p) + 1);
    double w = std::ldexp(1.0, -p);
    for (int i = 0; i <= p; ++i) {
        mix.weights[static_cast<std::size_t>(i)] = w;
        w = w * (p - i) / (i + 1);
    }
    return mix;
}

ChiBarMixture isotonic_weights(int p)
{
    if (p < 2) throw Error(ErrorCode::DimensionMismatch, "isotonic weights need p >= 2");
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    // log_levels[l] = log P(l levels) for the current n; starts at n = 1.
    std::vector<double> log_levels(static_cast<std::size_t>(p) + 1, neg_inf);
    log_levels[1] = 0.0;
    for (int n = 2; n <= p; ++n) {
        const double log_new = -std::log(static_cast<double>(n));
        const double log_same = std::log(static_cast<double>(n - 1)) - std::log(static_cast<double>(n));
        for (int l = n; l >= 1; --l) {
            log_levels[static_cast<std::size_t>(l)] =
                log_add_exp(log_new + log_levels[static_cast<std::size_t>(l - 1)],
                            log_same + log_levels[static_cast<std::size_t>(l)]);
        }
    }
    ChiBarMixture mix;
    mix.source = WeightSource::ExactIsotonic;
    mix.weights.assign(static_cast<std::size_t>(p) + 1, 0.0);
    for (int i = 0; i < p; ++i) {
        mix.weights[static_cast<std::size_t>(i)] = std::exp(log_levels[static_cast<std::size_t>(p - i)]);
    }
    return mix;
}

ChiBarMixture mc_weights(const PolyhedralCone& cone, const CovarianceSpec& cov, std::uint64_t nsim,
                         std::uint64_t seed, int threads)
{
    if (nsim < 10000) throw Error(ErrorCode::UsageError, "mc_weights needs nsim >= 10000");
    const ConeProjector projector(cone, cov);
    const int p = cone.dim();
    // Face ranks are invariant under whitening, so draw the whitened vector directly.
    const auto counts = tally_chunks(
        nsim, static_cast<std::size_t>(p) + 1, threads,
        [&](std::uint64_t chunk, std::uint64_t count, std::vector<std::uint64_t>& tally) {
            auto rng = make_stream(seed, {0x77656967687473ULL, chunk});
            std::normal_distribution<double> normal;
            Vector z(p);
            for (std::uint64_t d = 0; d < count; ++d) {
                for (int i = 0; i < p; ++i) z[i] = normal(rng);
                ++tally[static_cast<std::size_t>(projector.project_whitened(z).face_rank)];
            }
        });
    ChiBarMixture mix;
    mix.source = WeightSource::MonteCarlo;
    mix.nsim = nsim;
    mix.seed = seed;
    mix.weights.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        mix.weights[i] = static_cast<double>(counts[i]) / static_cast<double>(nsim);
    }
    return mix;
}

ChiBarMixture weights_for(const PolyhedralCone& cone, const CovarianceSpec& cov, std::uint64_t nsim,
                          std::uint64_t seed, int threads)
{
    if (cov.is_identity()) {
        if (cone.family() == ConeFamily::Orthant) return orthant_weights(cone.dim());
        if (cone.family() == ConeFamily::Isotonic) return isotonic_weights(cone.dim());
    }
    return mc_weights(cone, cov, nsim, seed, threads);
}

double mixture_quantile(const ChiBarMixture& mix, double alpha)
{
    check_probability(alpha, "alpha");
    if (mix.weights.empty()) throw Error(ErrorCode::InvalidProbability, "empty mixture");
    double total = 0.0;
    int top = 0;
    for (std::size_t i = 0; i < mix.weights.size(); ++i) {
        if (mix.weights[i] < 0.0) throw Error(ErrorCode::InvalidProbability, "negative mixture weight");
        total += mix.weights[i];
        if (mix.weights[i] > 0.0) top = static_cast<int>(i);
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidProbability, "mixture weights sum to " + io::format_double(total));
    }
    if (top == 0 || mix.tail(0.0) <= alpha) return 0.0;

    double lo = 0.0;
    double hi = chi2_quantile(top, 1.0 - alpha) + 1.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (mix.tail(mid) <= alpha) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

void write_weights_csv(std::ostream& out, const ChiBarMixture& mix)
{
    out << "# source=" << to_string(mix.source);
    if (mix.source == WeightSource::MonteCarlo) out << " nsim=" << mix.nsim << " seed=" << mix.seed;
    out << '\n' << "df,weight\n";
    for (std::size_t i = 0; i < mix.weights.size(); ++i) {
        out << i << ',' << io::format_double(mix.weights[i]) << '\n';
    }
}

ChiBarMixture read_weights_csv(std::istream& in)
{
    ChiBarMixture mix;
    std::string raw;
    int line = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = io::trim(raw);
        if (s.empty()) continue;
        if (s.front() == '#') {
            std::istringstream words(s.substr(1));
            std::string kv;
            while (words >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = kv.substr(0, eq);
                const std::string value = kv.substr(eq + 1);
                if (key == "source") {
                    if (value == "exact-orthant") mix.source = WeightSource::ExactOrthant;
                    else if (value == "exact-isotonic") mix.source = WeightSource::ExactIsotonic;
                    else mix.source = WeightSource::MonteCarlo;
                } else if (key == "nsim") {
                    mix.nsim = std::stoull(value);
                } else if (key == "seed") {
                    mix.seed = std::stoull(value);
                }
            }
            continue;
        }
        if (!header_seen) {
            if (s != "df,weight") {
                throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected header 'df,weight'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = io::split_fields(s);
        if (fields.size() != 2) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected 'df,weight'");
        }
        const double df = io::parse_double(fields[0], line);
        if (df != static_cast<double>(mix.weights.size())) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": df out of sequence");
        }
        mix.weights.push_back(io::parse_double(fields[1], line));
    }
    if (mix.weights.empty()) throw Error(ErrorCode::ParseError, "no weights found");
    return mix;
}

} // namespace conetest
