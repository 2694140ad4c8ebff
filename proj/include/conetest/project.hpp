#pragma once
// Projection of an observation onto a polyhedral cone and its polar under the
// V-norm |x|_V^2 = x^T V^{-1} x, together with the rank of the polar face
// that receives the projection (the data-dependent degrees of freedom).

#include "conetest/cone.hpp"

#include <vector>

namespace conetest {

/// Known covariance V with its whitening factor W (V^{-1} = W^T W, W lower
/// triangular) and the Cholesky factor L = W^{-1} (V = L L^T).
class CovarianceSpec {
public:
    static CovarianceSpec identity(int p);
    /// Throws SingularCovariance unless V is symmetric positive definite.
    static CovarianceSpec from_matrix(const Matrix& v);

    int dim() const noexcept { return static_cast<int>(covariance_.rows()); }
    bool is_identity() const noexcept { return identity_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    const Matrix& whitener() const noexcept { return whitener_; }
    const Matrix& cholesky_factor() const noexcept { return cholesky_; }

    Vector whiten(const Vector& y) const;
    Vector unwhiten(const Vector& z) const;

private:
    CovarianceSpec() = default;

    Matrix covariance_;
    Matrix whitener_;
    Matrix cholesky_;
    bool identity_ = false;
};

struct ConeProjection {
    Vector point;       // Pi_V(y | C), the constrained MLE
    Vector polar_point; // Pi_V(y | C°) = y - point
    double lr = 0.0;    // |polar_point|_V^2
    /// |point|_V^2, the type A statistic.
    double point_norm2 = 0.0;
    /// Polar generators (constraint rows) with strictly positive coefficients.
    std::vector<int> active_set;
    /// Rank of the span of the polar face containing polar_point. On the
    /// isotonic fast path this is p - (distinct fitted values) whenever
    /// lr > 0, which counts exact ties between pooled blocks.
    int face_rank = 0;
    /// Active generators are linearly dependent (rank-deficient A).
    bool degenerate_face = false;
    /// Dimension of the face of C containing point in its relative interior;
    /// -1 unless requested through ProjectionOptions::primal_face.
    int primal_face_rank = -1;
};

struct ProjectionOptions {
    /// Use PAVA / the componentwise orthant map when V = I and the cone is
    /// Isotonic / Orthant.
    bool use_fast_paths = true;
    bool primal_face = false;
    /// Active-set iteration guard; 0 means 50 * k.
    int max_iterations = 0;
    /// Singular values above p * sigma_max * rank_tol count towards the rank.
    double rank_tol = 1e-10;
};

/// Precomputed whitened cone for repeated projections under one (C, V).
class ConeProjector {
public:
    ConeProjector(PolyhedralCone cone, CovarianceSpec cov, ProjectionOptions options = {});

    const PolyhedralCone& cone() const noexcept { return cone_; }
    const CovarianceSpec& covariance() const noexcept { return cov_; }
    int dim() const noexcept { return cone_.dim(); }
    bool uses_fast_path() const noexcept;

    /// Projection in the original coordinates.
    ConeProjection project(const Vector& y) const;

    /// Projection of an already whitened observation z = W y; point and
    /// polar_point are returned in the whitened frame.
    ConeProjection project_whitened(const Vector& z) const;

    /// Constraint matrix of the whitened cone W C = { z : A L z >= 0 }.
    const Matrix& whitened_constraints() const noexcept { return whitened_constraints_; }

private:
    ConeProjection project_active_set(const Vector& z) const;
    int primal_rank_whitened(const Vector& point, double input_norm) const;

    PolyhedralCone cone_;
    CovarianceSpec cov_;
    ProjectionOptions options_;
    Matrix whitened_constraints_; // k x p
    Matrix generators_;           // p x k, columns -a~_i
    Vector generator_norms_;
};

ConeProjection project(const Vector& y, const PolyhedralCone& cone, const CovarianceSpec& cov);

/// Same projection through the general active-set engine, bypassing the
/// orthant/isotonic fast paths.
ConeProjection project_active_set(const Vector& y, const PolyhedralCone& cone,
                                  const CovarianceSpec& cov);

/// Componentwise projection onto { mu <= 0 } for V = I.
ConeProjection project_orthant(const Vector& y);

struct IsotonicFit {
    Vector fitted;
    /// Number of distinct fitted values.
    int levels = 0;
};

/// Weighted pool-adjacent-violators: nondecreasing least-squares fit
/// minimising sum_i w_i (y_i - f_i)^2.
IsotonicFit pava(const Vector& y, const Vector& weights);
IsotonicFit pava(const Vector& y);

} // namespace conetest
