#include "conetest/testkit.hpp"

#include "conetest/error.hpp"
#include "conetest/io.hpp"
#include "conetest/parallel.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

namespace conetest {

const char* to_string(TestMethod method) noexcept
{
    switch (method) {
    case TestMethod::AdaptiveB: return "adaptive-b";
    case TestMethod::MixtureB: return "mixture-b";
    case TestMethod::AdaptiveBUnknownVar: return "adaptive-b-unknown-var";
    case TestMethod::AdaptiveA: return "adaptive-a";
    }
    return "adaptive-b";
}

std::optional<TestMethod> parse_method(const std::string& name)
{
    for (auto m : {TestMethod::AdaptiveB, TestMethod::MixtureB, TestMethod::AdaptiveBUnknownVar,
                   TestMethod::AdaptiveA}) {
        if (name == to_string(m)) return m;
    }
    return std::nullopt;
}

const char* to_string(AdjustmentBasis basis) noexcept
{
    switch (basis) {
    case AdjustmentBasis::None: return "none";
    case AdjustmentBasis::ExactBound: return "exact";
    case AdjustmentBasis::MonteCarloEstimate: return "monte-carlo";
    }
    return "none";
}

namespace {

void check_levels(double alpha, const AlphaAdjustment& adj)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::InvalidProbability, "alpha must lie in (0, 1)");
    }
    if (!(adj.factor >= 1.0)) {
        throw Error(ErrorCode::InvalidProbability, "adjustment factor must be >= 1");
    }
    if (adj.factor * alpha >= 1.0) {
        throw Error(ErrorCode::AlphaOverflow, "adjusted level " + io::format_double(adj.factor * alpha) +
                                                  " is not below 1");
    }
}

bool is_sign_diagonal(const Matrix& a)
{
    if (a.rows() != a.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if ((i == j) != (a(i, j) != 0.0)) return false;
        }
    }
    return true;
}

double orthant_factor(int p)
{
    if (p > 52) return 1.0;
    const double full = std::ldexp(1.0, p);
    return full / (full - 1.0);
}

double isotonic_factor(int p)
{
    if (p >= 13) return 1.0;
    std::uint64_t fact = 1;
    for (int i = 2; i <= p; ++i) fact *= static_cast<std::uint64_t>(i);
    return static_cast<double>(fact) / static_cast<double>(fact - 1);
}

std::optional<double> exact_factor(const PolyhedralCone& cone, Problem problem)
{
    if (problem == Problem::TypeB) {
        if (cone.family() == ConeFamily::Orthant) return orthant_factor(cone.dim());
        if (cone.family() == ConeFamily::Isotonic) return isotonic_factor(cone.dim());
        return std::nullopt;
    }
    if (is_sign_diagonal(cone.constraints())) return orthant_factor(cone.dim());
    // The isotonic cone contains the constant vectors, so Y never lands in its polar.
    if (cone.family() == ConeFamily::Isotonic) return 1.0;
    return std::nullopt;
}

TestOutcome finish(TestOutcome out)
{
    // df = 0 means the projection sits at the apex: never a rejection.
    out.reject = out.df_selected != 0 && out.statistic > out.critical_value;
    return out;
}

} // namespace

AlphaAdjustment alpha_adjustment_for(const PolyhedralCone& cone, const AdjustmentRequest& request)
{
    const CovarianceSpec cov = request.cov ? *request.cov : CovarianceSpec::identity(cone.dim());
    switch (request.mode) {
    case AdjustmentBasis::None:
        return AlphaAdjustment::none();
    case AdjustmentBasis::ExactBound: {
        const auto factor = cov.is_identity() ? exact_factor(cone, request.problem) : std::nullopt;
        if (!factor) {
            throw Error(ErrorCode::UnsupportedFamily,
                        std::string("no exact bound for a ") + to_string(cone.family()) +
                            " cone with this covariance; use the Monte Carlo estimate");
        }
        return AlphaAdjustment::exact(*factor);
    }
    case AdjustmentBasis::MonteCarloEstimate: {
        if (request.nsim < 1000) throw Error(ErrorCode::UsageError, "Monte Carlo adjustment needs nsim >= 1000");
        ProjectionOptions options;
        options.primal_face = request.problem == Problem::TypeA;
        const ConeProjector projector(cone, cov, options);
        const int p = cone.dim();
        const bool type_a = request.problem == Problem::TypeA;
        const auto hits = tally_chunks(
            request.nsim, 1, request.threads,
            [&](std::uint64_t chunk, std::uint64_t count, std::vector<std::uint64_t>& tally) {
                auto rng = make_stream(request.seed, {0x61646a757374ULL, chunk});
                std::normal_distribution<double> normal;
                Vector z(p);
                for (std::uint64_t d = 0; d < count; ++d) {
                    for (int i = 0; i < p; ++i) z[i] = normal(rng);
                    const auto proj = projector.project_whitened(z);
                    tally[0] += type_a ? proj.primal_face_rank == 0 : proj.face_rank == 0;
                }
            });
        const double prob = static_cast<double>(hits[0]) / static_cast<double>(request.nsim);
        AlphaAdjustment adj;
        adj.factor = prob < 1.0 ? 1.0 / (1.0 - prob) : 1.0;
        adj.basis = AdjustmentBasis::MonteCarloEstimate;
        adj.nsim = request.nsim;
        adj.seed = request.seed;
        adj.warning = true;
        return adj;
    }
    }
    return AlphaAdjustment::none();
}

AlphaAdjustment default_adjustment(const PolyhedralCone& cone, const CovarianceSpec& cov, Problem problem)
{
    if (!cov.is_identity()) return AlphaAdjustment::none();
    const auto factor = exact_factor(cone, problem);
    return factor ? AlphaAdjustment::exact(*factor) : AlphaAdjustment::none();
}

TestOutcome adaptive_b_from_projection(const ConeProjection& proj, double alpha, const AlphaAdjustment& adj)
{
    check_levels(alpha, adj);
    TestOutcome out;
    out.method = TestMethod::AdaptiveB;
    out.statistic = proj.lr;
    out.df_selected = proj.face_rank;
    out.effective_alpha = adj.factor * alpha;
    out.adjustment_warning = adj.warning;
    if (proj.face_rank > 0) {
        out.critical_value = chi2_quantile(proj.face_rank, 1.0 - out.effective_alpha);
        out.p_value = chi2_sf(proj.face_rank, proj.lr) / adj.factor;
    }
    return finish(out);
}

TestOutcome mixture_b_from_projection(const ConeProjection& proj, double alpha, const ChiBarMixture& mix,
                                      double critical_value)
{
    TestOutcome out;
    out.method = TestMethod::MixtureB;
    out.statistic = proj.lr;
    out.critical_value = critical_value;
    out.effective_alpha = alpha;
    out.p_value = proj.lr > 0.0 ? mix.tail(proj.lr) : 1.0;
    return finish(out);
}

TestOutcome unknown_var_from_projection(const ConeProjection& proj, double sigma_hat2, int m, double alpha,
                                        const AlphaAdjustment& adj)
{
    check_levels(alpha, adj);
    if (!(sigma_hat2 > 0.0) || !std::isfinite(sigma_hat2)) {
        throw Error(ErrorCode::NonPositiveVarianceEstimate, "sigma_hat2 must be positive and finite");
    }
    if (m < 1) throw Error(ErrorCode::DimensionMismatch, "m must be >= 1");
    TestOutcome out;
    out.method = TestMethod::AdaptiveBUnknownVar;
    out.statistic = proj.lr / sigma_hat2;
    out.df_selected = proj.face_rank;
    out.effective_alpha = adj.factor * alpha;
    out.adjustment_warning = adj.warning;
    if (proj.face_rank > 0) {
        out.critical_value = fratio_quantile(proj.face_rank, m, 1.0 - out.effective_alpha);
        out.p_value = fratio_sf(proj.face_rank, m, out.statistic) / adj.factor;
    }
    return finish(out);
}

TestOutcome adaptive_a_from_projection(const ConeProjection& proj, double alpha, const AlphaAdjustment& adj)
{
    check_levels(alpha, adj);
    if (proj.primal_face_rank < 0) {
        throw Error(ErrorCode::UsageError, "projection was computed without the primal face rank");
    }
    TestOutcome out;
    out.method = TestMethod::AdaptiveA;
    out.df_selected = proj.primal_face_rank;
    out.effective_alpha = adj.factor * alpha;
    out.adjustment_warning = adj.warning;
    out.statistic = proj.point_norm2;
    if (proj.primal_face_rank > 0) {
        out.critical_value = chi2_quantile(proj.primal_face_rank, 1.0 - out.effective_alpha);
        out.p_value = chi2_sf(proj.primal_face_rank, proj.point_norm2) / adj.factor;
    }
    return finish(out);
}

TestOutcome adaptive_test_b(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov,
                            double alpha, const AlphaAdjustment& adj)
{
    check_levels(alpha, adj);
    return adaptive_b_from_projection(project(y, cone, cov), alpha, adj);
}

TestOutcome mixture_test_b(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov,
                           double alpha, const ChiBarMixture& mix)
{
    if (mix.max_df() > cone.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "mixture has more components than the cone dimension allows");
    }
    const double critical = mixture_quantile(mix, alpha);
    return mixture_b_from_projection(project(y, cone, cov), alpha, mix, critical);
}

TestOutcome adaptive_test_b_unknown_var(const Vector& y, const PolyhedralCone& cone, const Matrix& sigma_mat,
                                        double sigma_hat2, int m, double alpha, const AlphaAdjustment& adj)
{
    check_levels(alpha, adj);
    if (!(sigma_hat2 > 0.0) || !std::isfinite(sigma_hat2)) {
        throw Error(ErrorCode::NonPositiveVarianceEstimate, "sigma_hat2 must be positive and finite");
    }
    // The active face does not depend on the positive scalar sigma_hat2.
    const auto proj = project(y, cone, CovarianceSpec::from_matrix(sigma_mat));
    return unknown_var_from_projection(proj, sigma_hat2, m, alpha, adj);
}

TestOutcome adaptive_test_a(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov,
                            double alpha, const AlphaAdjustment& adj)
{
    check_levels(alpha, adj);
    ProjectionOptions options;
    options.primal_face = true;
    return adaptive_a_from_projection(ConeProjector(cone, cov, options).project(y), alpha, adj);
}

bool operator==(const TestOutcome& a, const TestOutcome& b)
{
    return a.statistic == b.statistic && a.critical_value == b.critical_value &&
           a.df_selected == b.df_selected && a.reject == b.reject &&
           a.effective_alpha == b.effective_alpha && a.method == b.method && a.p_value == b.p_value &&
           a.adjustment_warning == b.adjustment_warning;
}

namespace {
constexpr const char* kOutcomeHeader =
    "statistic,critical_value,df_selected,reject,effective_alpha,method,p_value,adjustment_warning";
}

void write_outcome_csv(std::ostream& out, const TestOutcome& o)
{
    out << kOutcomeHeader << '\n';
    out << io::format_double(o.statistic) << ',' << io::format_double(o.critical_value) << ','
        << (o.df_selected ? std::to_string(*o.df_selected) : std::string("mixture")) << ','
        << (o.reject ? "true" : "false") << ',' << io::format_double(o.effective_alpha) << ','
        << to_string(o.method) << ',' << io::format_double(o.p_value) << ','
        << (o.adjustment_warning ? "true" : "false") << '\n';
}

TestOutcome read_outcome_csv(std::istream& in)
{
    std::string raw;
    int line = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = io::trim(raw);
        if (s.empty() || s.front() == '#') continue;
        if (!header_seen) {
            if (s != kOutcomeHeader) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad header");
            header_seen = true;
            continue;
        }
        const auto f = io::split_fields(s);
        if (f.size() != 8) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected 8 fields");
        auto parse_bool = [&](const std::string& v) {
            if (v == "true") return true;
            if (v == "false") return false;
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected true/false");
        };
        TestOutcome o;
        o.statistic = io::parse_double(f[0], line);
        o.critical_value = io::parse_double(f[1], line);
        if (f[2] != "mixture") {
            const double df = io::parse_double(f[2], line);
            if (df < 0 || df != std::floor(df)) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad df");
            o.df_selected = static_cast<int>(df);
        }
        o.reject = parse_bool(f[3]);
        o.effective_alpha = io::parse_double(f[4], line);
        const auto method = parse_method(f[5]);
        if (!method) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": unknown method '" + f[5] + "'");
        o.method = *method;
        o.p_value = io::parse_double(f[6], line);
        o.adjustment_warning = parse_bool(f[7]);
        return o;
    }
    throw Error(ErrorCode::ParseError, "no outcome record found");
}

void print_outcome(std::ostream& out, const TestOutcome& o)
{
    out << "method: " << to_string(o.method)
        << (o.method == TestMethod::MixtureB ? " (chi-bar-squared mixture)" : " (adaptive critical value)")
        << '\n';
    out << "statistic: " << io::format_double(o.statistic) << '\n'
        << "df: " << (o.df_selected ? std::to_string(*o.df_selected) : std::string("mixture")) << '\n'
        << "critical_value: " << io::format_double(o.critical_value) << '\n'
        << "effective_alpha: " << io::format_double(o.effective_alpha) << '\n'
        << "decision: " << (o.reject ? "reject" : "do not reject") << '\n'
        << "p_value (informal): " << io::format_double(o.p_value) << '\n';
    if (o.adjustment_warning) {
        out << "warning: alpha adjustment was estimated by simulation; the level may exceed alpha\n";
    }
}

} // namespace conetest
