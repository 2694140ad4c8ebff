#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace conetest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ConeFamily { Orthant, Isotonic, General };

const char* to_string(ConeFamily family) noexcept;
std::optional<ConeFamily> parse_family(const std::string& name);

class PolyhedralCone;

/// Builds a cone from its inequality description. The family is detected
/// from the exact matrix pattern. A hint of General disables fast paths; any
/// other hint must agree with the detected pattern.
PolyhedralCone build_cone(const Matrix& constraint_matrix,
                          std::optional<ConeFamily> family_hint = std::nullopt);

/// The closed convex cone C = { mu in R^p : A mu >= 0 }.
///
/// Orthant means A = -I (the null mu <= 0); Isotonic means A is the
/// (p-1) x p difference matrix with A(i,i) = -1, A(i,i+1) = 1. Both patterns
/// unlock exact fast paths elsewhere in the library. Instances are immutable.
class PolyhedralCone {
public:
    int dim() const noexcept { return static_cast<int>(constraints_.cols()); }
    int num_constraints() const noexcept { return static_cast<int>(constraints_.rows()); }
    const Matrix& constraints() const noexcept { return constraints_; }
    ConeFamily family() const noexcept { return family_; }

    static PolyhedralCone orthant(int p);
    static PolyhedralCone isotonic(int p);

private:
    friend PolyhedralCone build_cone(const Matrix&, std::optional<ConeFamily>);
    PolyhedralCone(Matrix constraints, ConeFamily family)
        : constraints_(std::move(constraints)), family_(family) {}

    Matrix constraints_;
    ConeFamily family_;
};

/// C° = { sum_i lambda_i (-a_i) : lambda >= 0 }, stored by generators.
struct PolarCone {
    /// p x k, column i is -a_i.
    Matrix generators;
};

inline constexpr double kDefaultMembershipTol = 1e-9;

/// min_i a_i^T mu >= -tol * |a_i| * |mu|
bool contains(const PolyhedralCone& cone, const Vector& mu,
              double tol = kDefaultMembershipTol);

PolarCone polar(const PolyhedralCone& cone);

/// Cone specification text: optional "# family=orthant|isotonic|general"
/// header, then "p k", then k rows of p numbers. Other '#' lines are comments.
PolyhedralCone read_cone(std::istream& in);
PolyhedralCone read_cone_file(const std::string& path);
void write_cone(std::ostream& out, const PolyhedralCone& cone);

} // namespace conetest
