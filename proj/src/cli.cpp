#include "conetest/cli.hpp"

#include "conetest/cone.hpp"
#include "conetest/dist.hpp"
#include "conetest/error.hpp"
#include "conetest/io.hpp"
#include "conetest/parallel.hpp"
#include "conetest/project.hpp"
#include "conetest/sim.hpp"
#include "conetest/testkit.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace conetest {

namespace {

struct ConeArgs {
    std::string file;
    int orthant = 0;
    int isotonic = 0;
    std::string cov_file;
};

struct StochasticArgs {
    std::uint64_t nsim = 100000;
    std::uint64_t seed = 0;
    CLI::Option* seed_option = nullptr;
    int threads = 0;
};

void add_cone_options(CLI::App* cmd, ConeArgs& args)
{
    auto* file = cmd->add_option("--cone", args.file, "Cone file (constraint rows)");
    auto* orth = cmd->add_option("--orthant", args.orthant, "Nonnegative orthant in dimension p")
                     ->check(CLI::Range(1, 200));
    auto* iso = cmd->add_option("--isotonic", args.isotonic, "Simple-order cone in dimension p")
                    ->check(CLI::Range(2, 200));
    file->excludes(orth)->excludes(iso);
    orth->excludes(iso);
    cmd->add_option("--cov", args.cov_file, "Covariance file (p x p); identity when omitted");
}

void add_stochastic_options(CLI::App* cmd, StochasticArgs& args, std::uint64_t default_nsim)
{
    args.nsim = default_nsim;
    cmd->add_option("--nsim", args.nsim, "Monte Carlo draws")->capture_default_str();
    args.seed_option = cmd->add_option("--seed", args.seed, "Random seed");
    cmd->add_option("--threads", args.threads, "Worker threads (0: $CONETEST_THREADS or all cores)");
}

PolyhedralCone load_cone(const ConeArgs& args)
{
    if (!args.file.empty()) return read_cone_file(args.file);
    if (args.orthant > 0) return PolyhedralCone::orthant(args.orthant);
    if (args.isotonic > 0) return PolyhedralCone::isotonic(args.isotonic);
    throw Error(ErrorCode::UsageError, "one of --cone, --orthant or --isotonic is required");
}

CovarianceSpec load_cov(const ConeArgs& args, int p)
{
    if (args.cov_file.empty()) return CovarianceSpec::identity(p);
    const Matrix v = io::read_matrix_file(args.cov_file);
    if (v.rows() != p) {
        throw Error(ErrorCode::DimensionMismatch, "covariance is " + std::to_string(v.rows()) + "x" +
                                                      std::to_string(v.cols()) + ", cone dimension is " +
                                                      std::to_string(p));
    }
    return CovarianceSpec::from_matrix(v);
}

std::uint64_t require_seed(const StochasticArgs& args, const std::string& why)
{
    if (args.seed_option->count() == 0) throw Error(ErrorCode::UsageError, "--seed is required " + why);
    return args.seed;
}

void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::UsageError, "--alpha must lie in (0, 1)");
}

bool exact_weights_available(const PolyhedralCone& cone, const CovarianceSpec& cov)
{
    return cov.is_identity() && cone.family() != ConeFamily::General;
}

AdjustmentBasis parse_adjust(const std::string& mode)
{
    if (mode == "none") return AdjustmentBasis::None;
    if (mode == "exact") return AdjustmentBasis::ExactBound;
    return AdjustmentBasis::MonteCarloEstimate;
}

AlphaAdjustment make_adjustment(const std::string& mode, const PolyhedralCone& cone, const CovarianceSpec& cov,
                                Problem problem, const StochasticArgs& sargs)
{
    AdjustmentRequest req;
    req.mode = parse_adjust(mode);
    req.problem = problem;
    req.cov = cov;
    req.threads = sargs.threads;
    if (mode == "auto") return default_adjustment(cone, cov, problem);
    if (req.mode == AdjustmentBasis::None) return AlphaAdjustment::none();
    if (req.mode == AdjustmentBasis::MonteCarloEstimate) {
        req.seed = require_seed(sargs, "for --adjust mc");
        req.nsim = sargs.nsim;
    }
    return alpha_adjustment_for(cone, req);
}

/// Writes to --out when given, to `fallback` otherwise.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& writer)
{
    if (path.empty()) {
        writer(fallback);
        return;
    }
    std::ofstream file(path);
    if (!file) throw Error(ErrorCode::UsageError, "cannot write '" + path + "'");
    writer(file);
    if (!file) throw Error(ErrorCode::UsageError, "write to '" + path + "' failed");
}

Vector parse_mu(const std::string& text, int line)
{
    std::vector<double> values;
    for (const auto& field : io::split_fields(text)) values.push_back(io::parse_double(field, line));
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::UsageError:
    case ErrorCode::InvalidProbability:
    case ErrorCode::AlphaOverflow:
    case ErrorCode::UnsupportedFamily:
    case ErrorCode::MuOutsideNull:
        return kExitUsage;
    default:
        return kExitData;
    }
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Likelihood ratio tests for polyhedral-cone hypotheses", "conetest"};
    app.require_subcommand(1);

    const std::vector<std::string> adjust_modes{"auto", "none", "exact", "mc"};

    // test
    ConeArgs test_cone;
    StochasticArgs test_stoch;
    std::string data_file, test_out, test_method = "adaptive-b", test_adjust = "auto";
    double test_alpha = 0.05;
    double sigma_hat2 = 0.0;
    int test_m = 0;
    auto* test = app.add_subcommand("test", "Run a test on one observation vector");
    add_cone_options(test, test_cone);
    add_stochastic_options(test, test_stoch, 100000);
    test->add_option("--data", data_file, "Observation vector y")->required();
    test->add_option("--alpha", test_alpha, "Nominal level")->capture_default_str();
    test->add_option("--method", test_method, "adaptive-b, mixture-b or adaptive-a")
        ->check(CLI::IsMember({"adaptive-b", "mixture-b", "adaptive-a"}))
        ->capture_default_str();
    test->add_option("--adjust", test_adjust, "Alpha adjustment: auto (exact when available), none, exact or mc")
        ->check(CLI::IsMember(adjust_modes))
        ->capture_default_str();
    auto* s2_opt = test->add_option("--sigma-hat2", sigma_hat2, "Variance estimate (unknown-variance test)");
    auto* m_opt = test->add_option("--m", test_m, "Degrees of freedom of --sigma-hat2")->check(CLI::PositiveNumber);
    s2_opt->needs(m_opt);
    m_opt->needs(s2_opt);
    test->add_option("--out", test_out, "CSV output path");

    // weights
    ConeArgs w_cone;
    StochasticArgs w_stoch;
    std::string w_out;
    auto* weights = app.add_subcommand("weights", "Chi-bar-squared mixture weights");
    add_cone_options(weights, w_cone);
    add_stochastic_options(weights, w_stoch, 1000000);
    weights->add_option("--out", w_out, "CSV output path");

    // level
    ConeArgs l_cone;
    StochasticArgs l_stoch;
    std::string l_out, l_method = "adaptive-b", l_adjust = "auto";
    std::vector<std::string> l_mu;
    double l_alpha = 0.05;
    int l_m = 0;
    auto* level = app.add_subcommand("level", "Rejection rates at null means");
    add_cone_options(level, l_cone);
    add_stochastic_options(level, l_stoch, 100000);
    level->add_option("--alpha", l_alpha, "Nominal level")->capture_default_str();
    level->add_option("--method", l_method, "adaptive-b, adaptive-b-unknown-var or adaptive-a")
        ->check(CLI::IsMember({"adaptive-b", "adaptive-b-unknown-var", "adaptive-a"}))
        ->capture_default_str();
    level->add_option("--adjust", l_adjust, "Alpha adjustment: auto (exact when available), none, exact or mc")
        ->check(CLI::IsMember(adjust_modes))
        ->capture_default_str();
    level->add_option("--m", l_m, "Variance degrees of freedom (adaptive-b-unknown-var)")
        ->check(CLI::PositiveNumber);
    level->add_option("--mu", l_mu, "Null mean, comma separated (repeatable; default 0)");
    level->add_option("--out", l_out, "CSV output path");

    // power
    ConeArgs p_cone;
    StochasticArgs p_stoch;
    std::string p_out, p_adjust = "auto", p_grid;
    double p_alpha = 0.05;
    std::vector<double> p_xrange, p_yrange;
    int p_nx = 41, p_ny = 41;
    auto* power = app.add_subcommand("power", "Power surface of the adaptive and mixture tests");
    add_cone_options(power, p_cone);
    add_stochastic_options(power, p_stoch, 100000);
    power->add_option("--alpha", p_alpha, "Nominal level")->capture_default_str();
    power->add_option("--adjust", p_adjust, "Alpha adjustment: auto (exact when available), none, exact or mc")
        ->check(CLI::IsMember(adjust_modes))
        ->capture_default_str();
    power->add_option("--grid", p_grid, "raw (mu1, mu2; p = 2) or diff (mu1 - mu2, mu2 - mu3; p = 3)")
        ->check(CLI::IsMember({"raw", "diff"}));
    power->add_option("--x-range", p_xrange, "x min and max")->expected(2);
    power->add_option("--y-range", p_yrange, "y min and max")->expected(2);
    power->add_option("--nx", p_nx, "Grid points along x")->check(CLI::PositiveNumber)->capture_default_str();
    power->add_option("--ny", p_ny, "Grid points along y")->check(CLI::PositiveNumber)->capture_default_str();
    power->add_option("--out", p_out, "CSV output path");

    // crossover
    bool c_orthant = false, c_isotonic = false;
    int c_pmin = 2, c_pmax = 100;
    double c_alpha = 0.05;
    std::string c_out;
    auto* crossover = app.add_subcommand("crossover", "Largest adaptive df whose quantile is below the mixture's");
    auto* co = crossover->add_flag("--orthant", c_orthant, "Orthant family");
    auto* ci = crossover->add_flag("--isotonic", c_isotonic, "Simple-order family");
    co->excludes(ci);
    crossover->add_option("--pmin", c_pmin, "Smallest p")->check(CLI::Range(1, 200))->capture_default_str();
    crossover->add_option("--pmax", c_pmax, "Largest p")->check(CLI::Range(1, 200))->capture_default_str();
    crossover->add_option("--alpha", c_alpha, "Nominal level")->capture_default_str();
    crossover->add_option("--out", c_out, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*test) {
            check_alpha(test_alpha);
            const PolyhedralCone cone = load_cone(test_cone);
            const Vector y = io::read_vector_file(data_file);
            if (y.size() != cone.dim()) {
                throw Error(ErrorCode::DimensionMismatch, "data has " + std::to_string(y.size()) +
                                                              " values, cone dimension is " +
                                                              std::to_string(cone.dim()));
            }
            const bool unknown_var = s2_opt->count() > 0;
            const TestMethod method = *parse_method(test_method);
            if (unknown_var && method != TestMethod::AdaptiveB) {
                throw Error(ErrorCode::UsageError, "--sigma-hat2 only applies to the adaptive type B test");
            }
            if (method == TestMethod::MixtureB && test_adjust != "auto" && test_adjust != "none") {
                throw Error(ErrorCode::UsageError, "the mixture test takes no alpha adjustment");
            }
            TestOutcome outcome;
            if (unknown_var) {
                const Matrix sigma_mat = test_cone.cov_file.empty() ? Matrix::Identity(cone.dim(), cone.dim())
                                                                     : io::read_matrix_file(test_cone.cov_file);
                const CovarianceSpec shape =
                    test_cone.cov_file.empty() ? CovarianceSpec::identity(cone.dim()) : load_cov(test_cone, cone.dim());
                const AlphaAdjustment adj = make_adjustment(test_adjust, cone, shape, Problem::TypeB, test_stoch);
                outcome = adaptive_test_b_unknown_var(y, cone, sigma_mat, sigma_hat2, test_m, test_alpha, adj);
            } else {
                const CovarianceSpec cov = load_cov(test_cone, cone.dim());
                if (method == TestMethod::MixtureB) {
                    std::uint64_t seed = 0;
                    if (!exact_weights_available(cone, cov)) {
                        seed = require_seed(test_stoch, "when mixture weights are simulated");
                    }
                    const ChiBarMixture mix = weights_for(cone, cov, test_stoch.nsim, seed, test_stoch.threads);
                    outcome = mixture_test_b(y, cone, cov, test_alpha, mix);
                } else if (method == TestMethod::AdaptiveA) {
                    const AlphaAdjustment adj = make_adjustment(test_adjust, cone, cov, Problem::TypeA, test_stoch);
                    outcome = adaptive_test_a(y, cone, cov, test_alpha, adj);
                } else {
                    const AlphaAdjustment adj = make_adjustment(test_adjust, cone, cov, Problem::TypeB, test_stoch);
                    outcome = adaptive_test_b(y, cone, cov, test_alpha, adj);
                }
            }
            print_outcome(out, outcome);
            if (!test_out.empty()) emit(test_out, out, [&](std::ostream& s) { write_outcome_csv(s, outcome); });
            return kExitOk;
        }

        if (*weights) {
            const PolyhedralCone cone = load_cone(w_cone);
            const CovarianceSpec cov = load_cov(w_cone, cone.dim());
            std::uint64_t seed = 0;
            if (!exact_weights_available(cone, cov)) seed = require_seed(w_stoch, "when weights are simulated");
            const ChiBarMixture mix = weights_for(cone, cov, w_stoch.nsim, seed, w_stoch.threads);
            emit(w_out, out, [&](std::ostream& s) { write_weights_csv(s, mix); });
            return kExitOk;
        }

        if (*level) {
            check_alpha(l_alpha);
            const PolyhedralCone cone = load_cone(l_cone);
            const CovarianceSpec cov = load_cov(l_cone, cone.dim());
            const std::uint64_t seed = require_seed(l_stoch, "for level runs");
            const TestMethod method = *parse_method(l_method);
            if ((method == TestMethod::AdaptiveBUnknownVar) != (l_m > 0)) {
                throw Error(ErrorCode::UsageError, "--m goes with --method adaptive-b-unknown-var");
            }
            const Problem problem = method == TestMethod::AdaptiveA ? Problem::TypeA : Problem::TypeB;
            TestConfig config{cone, cov, l_alpha, method, make_adjustment(l_adjust, cone, cov, problem, l_stoch),
                              std::nullopt, l_m};
            if (method == TestMethod::AdaptiveB) {
                config.mixture = weights_for(cone, cov, l_stoch.nsim, seed, l_stoch.threads);
            }
            std::vector<Vector> mus;
            for (std::size_t i = 0; i < l_mu.size(); ++i) mus.push_back(parse_mu(l_mu[i], static_cast<int>(i) + 1));
            if (mus.empty()) mus.push_back(Vector::Zero(cone.dim()));
            SimReport report;
            for (std::size_t i = 0; i < mus.size(); ++i) {
                // Validates each mean against the null before any draws.
                if (mus[i].size() != cone.dim()) {
                    throw Error(ErrorCode::DimensionMismatch, "--mu has the wrong length");
                }
                if (method == TestMethod::AdaptiveA ? mus[i].cwiseAbs().maxCoeff() != 0.0 : !contains(cone, mus[i])) {
                    throw Error(ErrorCode::MuOutsideNull, "--mu " + l_mu[i] + " is outside the null");
                }
            }
            report = estimate_rates(config, mus, l_stoch.nsim, seed, l_stoch.threads);
            emit(l_out, out, [&](std::ostream& s) { write_level_csv(s, report); });
            return kExitOk;
        }

        if (*power) {
            check_alpha(p_alpha);
            const PolyhedralCone cone = load_cone(p_cone);
            const CovarianceSpec cov = load_cov(p_cone, cone.dim());
            const std::uint64_t seed = require_seed(p_stoch, "for power runs");
            Grid2D grid = (p_grid == "diff" || (p_grid.empty() && cone.family() == ConeFamily::Isotonic))
                              ? Grid2D::isotonic_default()
                              : Grid2D::orthant_default();
            if (!p_xrange.empty()) {
                grid.x_min = p_xrange[0];
                grid.x_max = p_xrange[1];
            }
            if (!p_yrange.empty()) {
                grid.y_min = p_yrange[0];
                grid.y_max = p_yrange[1];
            }
            grid.nx = p_nx;
            grid.ny = p_ny;
            TestConfig config{cone, cov, p_alpha, TestMethod::AdaptiveB,
                              make_adjustment(p_adjust, cone, cov, Problem::TypeB, p_stoch),
                              weights_for(cone, cov, p_stoch.nsim, seed, p_stoch.threads), 0};
            const SimReport report = power_grid(config, grid, p_stoch.nsim, seed, p_stoch.threads);
            emit(p_out, out, [&](std::ostream& s) { write_power_csv(s, report); });
            return kExitOk;
        }

        if (*crossover) {
            check_alpha(c_alpha);
            if (c_orthant == c_isotonic) throw Error(ErrorCode::UsageError, "pass exactly one of --orthant, --isotonic");
            if (c_pmin > c_pmax) throw Error(ErrorCode::UsageError, "--pmin exceeds --pmax");
            const ConeFamily family = c_orthant ? ConeFamily::Orthant : ConeFamily::Isotonic;
            std::vector<int> ps;
            for (int p = std::max(c_pmin, family == ConeFamily::Isotonic ? 2 : 1); p <= c_pmax; ++p) ps.push_back(p);
            const CrossoverCurve curve = crossover_curve(family, ps, c_alpha);
            emit(c_out, out, [&](std::ostream& s) { write_crossover_csv(s, curve); });
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "conetest: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "conetest: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace conetest
