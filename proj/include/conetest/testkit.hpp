#pragma once
// Likelihood ratio tests of polyhedral-cone hypotheses.
//
// Type B: H1: mu in C against all alternatives. The adaptive test compares
// the LR with the (1 - factor * alpha) chi-square quantile whose degrees of
// freedom equal the rank of the polar face receiving the projection; the
// mixture test uses the chi-bar-squared quantile.
//
// Type A: H0: mu = 0 against H1: mu in C, with the degrees of freedom taken
// from the face of C containing the projection.

#include "conetest/cone.hpp"
#include "conetest/dist.hpp"
#include "conetest/project.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace conetest {

enum class TestMethod { AdaptiveB, MixtureB, AdaptiveBUnknownVar, AdaptiveA };

const char* to_string(TestMethod method) noexcept;
std::optional<TestMethod> parse_method(const std::string& name);

enum class AdjustmentBasis { None, ExactBound, MonteCarloEstimate };

const char* to_string(AdjustmentBasis basis) noexcept;

/// Multiplier applied to alpha to spend the slack 1 - P(Y in C) (type B) or
/// 1 - P(Y in C°) (type A) left by the level bound.
struct AlphaAdjustment {
    double factor = 1.0;
    AdjustmentBasis basis = AdjustmentBasis::None;
    std::uint64_t nsim = 0;
    std::uint64_t seed = 0;
    /// Set for estimated factors: the level is then only approximately alpha.
    bool warning = false;

    static AlphaAdjustment none() { return {}; }
    static AlphaAdjustment exact(double factor) { return {factor, AdjustmentBasis::ExactBound}; }
};

enum class Problem { TypeB, TypeA };

struct AdjustmentRequest {
    AdjustmentBasis mode = AdjustmentBasis::ExactBound;
    std::uint64_t nsim = 100000;
    std::uint64_t seed = 0;
    Problem problem = Problem::TypeB;
    /// Covariance for MonteCarloEstimate; identity when empty.
    std::optional<CovarianceSpec> cov;
    int threads = 0;
};

/// ExactBound: 2^p/(2^p - 1) for the orthant, p!/(p! - 1) for the isotonic
/// cone (clamped to 1 from p = 13). For type A the bound uses P(Y in C°),
/// exact (2^-p) only for sign-diagonal constraint matrices. Throws
/// UnsupportedFamily otherwise. MonteCarloEstimate returns 1 / (1 - P^) and
/// carries the warning flag.
AlphaAdjustment alpha_adjustment_for(const PolyhedralCone& cone, const AdjustmentRequest& request);

/// ExactBound when the family admits one, None otherwise.
AlphaAdjustment default_adjustment(const PolyhedralCone& cone, const CovarianceSpec& cov,
                                   Problem problem = Problem::TypeB);

struct TestOutcome {
    double statistic = 0.0;
    double critical_value = 0.0;
    /// Adaptive degrees of freedom; empty for the mixture test.
    std::optional<int> df_selected;
    bool reject = false;
    double effective_alpha = 0.0;
    TestMethod method = TestMethod::AdaptiveB;
    /// Informal p-value: P(ref(r) > statistic) / factor, 1 when r = 0.
    double p_value = 1.0;
    /// Copied from an estimated alpha adjustment.
    bool adjustment_warning = false;
};

bool operator==(const TestOutcome& a, const TestOutcome& b);

TestOutcome adaptive_test_b(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov,
                            double alpha, const AlphaAdjustment& adj);
TestOutcome mixture_test_b(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov,
                           double alpha, const ChiBarMixture& mix);
/// V = sigma^2 * Sigma with sigma^2 unknown; sigma_hat2 / sigma^2 ~ chi2(m).
TestOutcome adaptive_test_b_unknown_var(const Vector& y, const PolyhedralCone& cone,
                                        const Matrix& sigma_mat, double sigma_hat2, int m,
                                        double alpha, const AlphaAdjustment& adj);
TestOutcome adaptive_test_a(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov,
                            double alpha, const AlphaAdjustment& adj);

// Building blocks on a precomputed projection; used by the simulation loop.
TestOutcome adaptive_b_from_projection(const ConeProjection& proj, double alpha,
                                       const AlphaAdjustment& adj);
TestOutcome mixture_b_from_projection(const ConeProjection& proj, double alpha,
                                      const ChiBarMixture& mix, double critical_value);
TestOutcome unknown_var_from_projection(const ConeProjection& proj, double sigma_hat2, int m,
                                        double alpha, const AlphaAdjustment& adj);
/// Requires proj.primal_face_rank (ProjectionOptions::primal_face).
TestOutcome adaptive_a_from_projection(const ConeProjection& proj, double alpha,
                                       const AlphaAdjustment& adj);

/// One-record CSV with header; floats at 10 significant digits.
void write_outcome_csv(std::ostream& out, const TestOutcome& outcome);
TestOutcome read_outcome_csv(std::istream& in);

/// Human-readable key: value report.
void print_outcome(std::ostream& out, const TestOutcome& outcome);

} // namespace conetest
