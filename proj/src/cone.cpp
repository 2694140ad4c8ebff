#include "conetest/cone.hpp"

#include "conetest/error.hpp"
#include "conetest/io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace conetest {

const char* to_string(ConeFamily family) noexcept
{
    switch (family) {
    case ConeFamily::Orthant: return "orthant";
    case ConeFamily::Isotonic: return "isotonic";
    case ConeFamily::General: return "general";
    }
    return "general";
}

std::optional<ConeFamily> parse_family(const std::string& name)
{
    if (name == "orthant") return ConeFamily::Orthant;
    if (name == "isotonic") return ConeFamily::Isotonic;
    if (name == "general") return ConeFamily::General;
    return std::nullopt;
}

namespace {

bool is_orthant_pattern(const Matrix& a)
{
    return a.rows() == a.cols() && a == -Matrix::Identity(a.rows(), a.cols());
}

bool is_isotonic_pattern(const Matrix& a)
{
    const Eigen::Index p = a.cols();
    if (p < 2 || a.rows() != p - 1) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const double expected = j == i ? -1.0 : (j == i + 1 ? 1.0 : 0.0);
            if (a(i, j) != expected) return false;
        }
    }
    return true;
}

} // namespace

PolyhedralCone build_cone(const Matrix& constraint_matrix, std::optional<ConeFamily> family_hint)
{
    if (constraint_matrix.rows() < 1 || constraint_matrix.cols() < 1) {
        throw Error(ErrorCode::DimensionMismatch, "constraint matrix must be at least 1 x 1");
    }
    if (!constraint_matrix.allFinite()) {
        throw Error(ErrorCode::DimensionMismatch, "constraint matrix has non-finite entries");
    }
    for (Eigen::Index i = 0; i < constraint_matrix.rows(); ++i) {
        if ((constraint_matrix.row(i).array() == 0.0).all()) {
            throw Error(ErrorCode::ZeroRow, "constraint row " + std::to_string(i) + " is all zeros");
        }
    }

    ConeFamily detected = ConeFamily::General;
    if (is_orthant_pattern(constraint_matrix)) {
        detected = ConeFamily::Orthant;
    } else if (is_isotonic_pattern(constraint_matrix)) {
        detected = ConeFamily::Isotonic;
    }

    ConeFamily family = detected;
    if (family_hint) {
        if (*family_hint == ConeFamily::General) {
            family = ConeFamily::General;
        } else if (*family_hint != detected) {
            throw Error(ErrorCode::FamilyMismatch,
                        std::string("hint '") + to_string(*family_hint) +
                            "' does not match the constraint matrix");
        }
    }
    return PolyhedralCone(constraint_matrix, family);
}

PolyhedralCone PolyhedralCone::orthant(int p)
{
    if (p < 1) throw Error(ErrorCode::DimensionMismatch, "orthant needs p >= 1");
    return build_cone(-Matrix::Identity(p, p));
}

PolyhedralCone PolyhedralCone::isotonic(int p)
{
    if (p < 2) throw Error(ErrorCode::DimensionMismatch, "isotonic cone needs p >= 2");
    Matrix a = Matrix::Zero(p - 1, p);
    for (int i = 0; i + 1 < p; ++i) {
        a(i, i) = -1.0;
        a(i, i + 1) = 1.0;
    }
    return build_cone(a);
}

bool contains(const PolyhedralCone& cone, const Vector& mu, double tol)
{
    if (mu.size() != cone.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "mu has length " + std::to_string(mu.size()) + ", cone dimension is " +
                        std::to_string(cone.dim()));
    }
    const double mu_norm = mu.norm();
    const Vector slack = cone.constraints() * mu;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
        if (slack[i] < -tol * cone.constraints().row(i).norm() * mu_norm) return false;
    }
    return true;
}

PolarCone polar(const PolyhedralCone& cone)
{
    return {-cone.constraints().transpose()};
}

PolyhedralCone read_cone(std::istream& in)
{
    const auto text = io::read_numeric_text(in);
    std::optional<ConeFamily> hint;
    for (const auto& comment : text.comments) {
        const auto eq = comment.find('=');
        if (eq == std::string::npos || io::trim(comment.substr(0, eq)) != "family") continue;
        const std::string name = io::trim(comment.substr(eq + 1));
        hint = parse_family(name);
        if (!hint) throw Error(ErrorCode::ParseError, "unknown cone family '" + name + "'");
    }
    if (text.rows.empty()) throw Error(ErrorCode::ParseError, "empty cone file");

    const auto& header = text.rows.front();
    auto as_count = [&](double v) {
        if (v < 1 || v != static_cast<double>(static_cast<long>(v))) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(header.line) + ": 'p k' must be positive integers");
        }
        return static_cast<Eigen::Index>(v);
    };
    if (header.values.size() != 2) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(header.line) + ": expected 'p k'");
    }
    const Eigen::Index p = as_count(header.values[0]);
    const Eigen::Index k = as_count(header.values[1]);
    if (static_cast<Eigen::Index>(text.rows.size()) - 1 != k) {
        throw Error(ErrorCode::ParseError, "expected " + std::to_string(k) + " constraint rows, got " +
                                               std::to_string(text.rows.size() - 1));
    }
    Matrix a(k, p);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& row = text.rows[static_cast<std::size_t>(i + 1)];
        if (static_cast<Eigen::Index>(row.values.size()) != p) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(row.line) + ": expected " +
                                                   std::to_string(p) + " values");
        }
        for (Eigen::Index j = 0; j < p; ++j) a(i, j) = row.values[static_cast<std::size_t>(j)];
    }
    return build_cone(a, hint);
}

PolyhedralCone read_cone_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    return read_cone(in);
}

void write_cone(std::ostream& out, const PolyhedralCone& cone)
{
    out << "# family=" << to_string(cone.family()) << '\n';
    out << cone.dim() << ' ' << cone.num_constraints() << '\n';
    for (Eigen::Index i = 0; i < cone.constraints().rows(); ++i) {
        for (Eigen::Index j = 0; j < cone.constraints().cols(); ++j) {
            if (j) out << ' ';
            out << io::format_double(cone.constraints()(i, j));
        }
        out << '\n';
    }
}

} // namespace conetest
