#include "conetest/project.hpp"

#include "conetest/error.hpp"
#include "conetest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace conetest {

namespace {

std::span<const double> view(const Vector& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<double> view(Vector& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<const double> column(const Matrix& m, Eigen::Index j)
{
    return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}

int numerical_rank(const Matrix& m, double rank_tol)
{
    if (m.size() == 0) return 0;
    const Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    const double cutoff = static_cast<double>(std::max(m.rows(), m.cols())) * sv[0] * rank_tol;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv[i] > cutoff;
    return rank;
}

struct Block {
    double weight;
    double mean;
    int first;
    int last; // inclusive
};

std::vector<Block> pool_adjacent_violators(const Vector& y, const Vector& w)
{
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(y.size()));
    for (int i = 0; i < static_cast<int>(y.size()); ++i) {
        blocks.push_back({w[i], y[i], i, i});
        // strict: equal neighbouring means stay separate blocks
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
            Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            const double total = prev.weight + top.weight;
            prev.mean = (prev.weight * prev.mean + top.weight * top.mean) / total;
            prev.weight = total;
            prev.last = top.last;
        }
    }
    return blocks;
}

int distinct_levels(const std::vector<Block>& blocks)
{
    int levels = blocks.empty() ? 0 : 1;
    for (std::size_t b = 1; b < blocks.size(); ++b) levels += blocks[b].mean != blocks[b - 1].mean;
    return levels;
}

} // namespace

// ---------------------------------------------------------------------------
// CovarianceSpec

CovarianceSpec CovarianceSpec::identity(int p)
{
    if (p < 1) throw Error(ErrorCode::DimensionMismatch, "covariance dimension must be >= 1");
    CovarianceSpec spec;
    spec.covariance_ = Matrix::Identity(p, p);
    spec.whitener_ = spec.covariance_;
    spec.cholesky_ = spec.covariance_;
    spec.identity_ = true;
    return spec;
}

CovarianceSpec CovarianceSpec::from_matrix(const Matrix& v)
{
    if (v.rows() != v.cols() || v.rows() < 1) {
        throw Error(ErrorCode::DimensionMismatch, "covariance must be a non-empty square matrix");
    }
    if (!v.allFinite()) throw Error(ErrorCode::SingularCovariance, "covariance has non-finite entries");
    const double scale = v.cwiseAbs().maxCoeff();
    if (scale == 0.0 || (v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorCode::SingularCovariance, "covariance must be symmetric and nonzero");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(v, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 1e-14 * eig.eigenvalues().maxCoeff()) {
        throw Error(ErrorCode::SingularCovariance, "covariance is not positive definite");
    }
    const Eigen::LLT<Matrix> llt(v);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularCovariance, "Cholesky factorisation failed");
    }
    if (v == Matrix::Identity(v.rows(), v.cols())) return identity(static_cast<int>(v.rows()));

    CovarianceSpec spec;
    spec.covariance_ = v;
    spec.cholesky_ = llt.matrixL();
    spec.whitener_ = spec.cholesky_.triangularView<Eigen::Lower>().solve(
        Matrix::Identity(v.rows(), v.cols()));
    return spec;
}

Vector CovarianceSpec::whiten(const Vector& y) const
{
    if (y.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "vector/covariance size mismatch");
    if (identity_) return y;
    return whitener_.triangularView<Eigen::Lower>() * y;
}

Vector CovarianceSpec::unwhiten(const Vector& z) const
{
    if (z.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "vector/covariance size mismatch");
    if (identity_) return z;
    return cholesky_.triangularView<Eigen::Lower>() * z;
}

// ---------------------------------------------------------------------------
// PAVA

IsotonicFit pava(const Vector& y, const Vector& weights)
{
    if (y.size() == 0) throw Error(ErrorCode::EmptyInput, "pava needs at least one value");
    if (weights.size() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, "weights and values differ in length");
    }
    if ((weights.array() <= 0.0).any()) {
        throw Error(ErrorCode::DimensionMismatch, "pava weights must be positive");
    }
    const auto blocks = pool_adjacent_violators(y, weights);
    IsotonicFit fit;
    fit.fitted.resize(y.size());
    for (const auto& b : blocks) {
        fit.fitted.segment(b.first, b.last - b.first + 1).setConstant(b.mean);
    }
    fit.levels = distinct_levels(blocks);
    return fit;
}

IsotonicFit pava(const Vector& y)
{
    return pava(y, Vector::Ones(y.size()));
}

// ---------------------------------------------------------------------------
// Orthant fast path

ConeProjection project_orthant(const Vector& y)
{
    ConeProjection out;
    out.point.resize(y.size());
    out.polar_point.resize(y.size());
    kernels::split_orthant(view(y), view(out.point), view(out.polar_point));
    const auto pos = kernels::positive_part(view(y));
    out.lr = pos.sum_squares;
    out.face_rank = pos.count;
    out.point_norm2 = kernels::squared_norm(view(out.point));
    out.active_set.reserve(static_cast<std::size_t>(pos.count));
    for (int i = 0; i < static_cast<int>(y.size()); ++i) {
        if (y[i] > 0.0) out.active_set.push_back(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ConeProjector

ConeProjector::ConeProjector(PolyhedralCone cone, CovarianceSpec cov, ProjectionOptions options)
    : cone_(std::move(cone)), cov_(std::move(cov)), options_(options)
{
    if (cov_.dim() != cone_.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "covariance and cone dimensions differ");
    }
    if (cov_.is_identity()) {
        whitened_constraints_ = cone_.constraints();
    } else {
        whitened_constraints_ = cone_.constraints() * cov_.cholesky_factor().triangularView<Eigen::Lower>();
    }
    generators_ = -whitened_constraints_.transpose();
    generator_norms_ = generators_.colwise().norm().transpose();
    if (options_.max_iterations <= 0) options_.max_iterations = 50 * cone_.num_constraints();
}

bool ConeProjector::uses_fast_path() const noexcept
{
    return options_.use_fast_paths && cov_.is_identity() && cone_.family() != ConeFamily::General;
}

ConeProjection ConeProjector::project(const Vector& y) const
{
    if (y.size() != dim()) {
        throw Error(ErrorCode::DimensionMismatch, "observation has length " + std::to_string(y.size()) +
                                                      ", cone dimension is " + std::to_string(dim()));
    }
    if (cov_.is_identity()) return project_whitened(y);
    ConeProjection out = project_whitened(cov_.whiten(y));
    out.point = cov_.unwhiten(out.point);
    out.polar_point = y - out.point;
    return out;
}

ConeProjection ConeProjector::project_whitened(const Vector& z) const
{
    if (z.size() != dim()) {
        throw Error(ErrorCode::DimensionMismatch, "observation has length " + std::to_string(z.size()) +
                                                      ", cone dimension is " + std::to_string(dim()));
    }
    ConeProjection out;
    if (uses_fast_path() && cone_.family() == ConeFamily::Orthant) {
        out = project_orthant(z);
    } else if (uses_fast_path() && cone_.family() == ConeFamily::Isotonic) {
        const auto blocks = pool_adjacent_violators(z, Vector::Ones(z.size()));
        out.point.resize(z.size());
        for (const auto& b : blocks) {
            out.point.segment(b.first, b.last - b.first + 1).setConstant(b.mean);
            for (int i = b.first; i < b.last; ++i) out.active_set.push_back(i);
        }
        out.polar_point = z - out.point;
        out.lr = kernels::squared_norm(view(out.polar_point));
        out.point_norm2 = kernels::squared_norm(view(out.point));
        // Tied neighbouring blocks share one level, so a tie at the boundary
        // of a pooled block raises the rank; an untouched y (lr = 0) keeps 0.
        out.face_rank = out.active_set.empty() ? 0 : static_cast<int>(z.size()) - distinct_levels(blocks);
    } else {
        out = project_active_set(z);
    }
    if (options_.primal_face) out.primal_face_rank = primal_rank_whitened(out.point, std::sqrt(kernels::squared_norm(view(z))));
    return out;
}

// Lawson-Hanson active set on the polar generators:
//   min |z - G lambda|^2  s.t. lambda >= 0,
// G lambda is the projection onto the polar cone and the residual is the
// projection onto the cone itself.
ConeProjection ConeProjector::project_active_set(const Vector& z) const
{
    const Eigen::Index p = generators_.rows();
    const Eigen::Index k = generators_.cols();
    const double z_norm = std::sqrt(kernels::squared_norm(view(z)));
    const double enter_tol = 1e-11 * z_norm;

    std::vector<char> passive(static_cast<std::size_t>(k), 0);
    std::vector<int> pset;
    Vector lambda = Vector::Zero(k);
    Vector residual = z;
    Vector gradient(k);
    int iterations = 0;

    auto compute_gradient = [&] {
        for (Eigen::Index j = 0; j < k; ++j) {
            gradient[j] = kernels::dot(column(generators_, j), view(residual));
        }
    };
    auto bump = [&] {
        if (++iterations > options_.max_iterations) {
            throw Error(ErrorCode::MaxIterationsExceeded,
                        "active-set projection did not converge in " +
                            std::to_string(options_.max_iterations) + " iterations");
        }
    };
    auto solve_passive = [&]() -> Vector {
        Matrix gp(p, static_cast<Eigen::Index>(pset.size()));
        for (std::size_t t = 0; t < pset.size(); ++t) gp.col(static_cast<Eigen::Index>(t)) = generators_.col(pset[t]);
        return gp.colPivHouseholderQr().solve(z);
    };

    compute_gradient();
    while (true) {
        int enter = -1;
        double best = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (passive[static_cast<std::size_t>(j)]) continue;
            const double score = gradient[j] / generator_norms_[j];
            if (score > enter_tol && score > best) {
                best = score;
                enter = static_cast<int>(j);
            }
        }
        if (enter < 0) break;
        bump();
        passive[static_cast<std::size_t>(enter)] = 1;
        pset.push_back(enter);

        Vector s = solve_passive();
        if (s[static_cast<Eigen::Index>(pset.size()) - 1] <= 0.0) {
            // The entering generator cannot move: the gradient was rounding noise.
            passive[static_cast<std::size_t>(enter)] = 0;
            pset.pop_back();
            break;
        }
        while (s.size() > 0 && s.minCoeff() <= 0.0) {
            bump();
            double step = 1.0;
            std::size_t blocking = 0;
            for (std::size_t t = 0; t < pset.size(); ++t) {
                const double st = s[static_cast<Eigen::Index>(t)];
                if (st > 0.0) continue;
                const double lj = lambda[pset[t]];
                const double ratio = lj / (lj - st);
                if (ratio < step) {
                    step = ratio;
                    blocking = t;
                }
            }
            for (std::size_t t = 0; t < pset.size(); ++t) {
                double& lj = lambda[pset[t]];
                lj += step * (s[static_cast<Eigen::Index>(t)] - lj);
            }
            lambda[pset[blocking]] = 0.0;
            std::vector<int> kept;
            for (int j : pset) {
                if (lambda[j] > 0.0) {
                    kept.push_back(j);
                } else {
                    lambda[j] = 0.0;
                    passive[static_cast<std::size_t>(j)] = 0;
                }
            }
            pset = std::move(kept);
            s = pset.empty() ? Vector() : solve_passive();
        }
        lambda.setZero();
        residual = z;
        for (std::size_t t = 0; t < pset.size(); ++t) {
            const double st = s[static_cast<Eigen::Index>(t)];
            lambda[pset[t]] = st;
            kernels::axpy(-st, column(generators_, pset[t]), view(residual));
        }
        compute_gradient();
    }

    ConeProjection out;
    std::sort(pset.begin(), pset.end());
    out.active_set = pset;
    out.point = residual;
    out.polar_point = z - residual;
    out.lr = kernels::squared_norm(view(out.polar_point));
    out.point_norm2 = kernels::squared_norm(view(out.point));
    if (!pset.empty()) {
        Matrix gp(p, static_cast<Eigen::Index>(pset.size()));
        for (std::size_t t = 0; t < pset.size(); ++t) gp.col(static_cast<Eigen::Index>(t)) = generators_.col(pset[t]);
        out.face_rank = numerical_rank(gp, options_.rank_tol);
        out.degenerate_face = out.face_rank < static_cast<int>(pset.size());
    }
    return out;
}

int ConeProjector::primal_rank_whitened(const Vector& point, double input_norm) const
{
    const Eigen::Index p = whitened_constraints_.cols();
    const Vector slack = whitened_constraints_ * point;
    // Tightness is judged on the scale of the observation: a projection that
    // collapses to the apex carries rounding noise of that size.
    const double scale = std::max(input_norm, std::numeric_limits<double>::min());
    std::vector<Eigen::Index> tight;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
        if (std::abs(slack[i]) <= 1e-9 * generator_norms_[i] * scale) tight.push_back(i);
    }
    if (tight.empty()) return static_cast<int>(p);
    Matrix rows(static_cast<Eigen::Index>(tight.size()), p);
    for (std::size_t t = 0; t < tight.size(); ++t) rows.row(static_cast<Eigen::Index>(t)) = whitened_constraints_.row(tight[t]);
    return static_cast<int>(p) - numerical_rank(rows, options_.rank_tol);
}

ConeProjection project(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov)
{
    return ConeProjector(cone, cov).project(y);
}

ConeProjection project_active_set(const Vector& y, const PolyhedralCone& cone,
                                  const CovarianceSpec& cov)
{
    ProjectionOptions options;
    options.use_fast_paths = false;
    return ConeProjector(cone, cov, options).project(y);
}

} // namespace conetest
