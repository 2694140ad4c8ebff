#pragma once
// Plain-text numeric input shared by the cone, covariance, data, weights and
// outcome readers. Tokens are separated by whitespace and/or commas; blank
// lines are skipped; lines starting with '#' are collected as comments.

#include "conetest/cone.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace conetest::io {

struct NumericRow {
    int line = 0; // 1-based source line
    std::vector<double> values;
};

struct NumericText {
    std::vector<NumericRow> rows;
    std::vector<std::string> comments; // text after '#', trimmed
};

NumericText read_numeric_text(std::istream& in);

/// Splits on commas and whitespace; empty fields between commas are errors.
std::vector<std::string> split_fields(const std::string& line);

/// Strict double parse of a whole token; throws ParseError with the line.
double parse_double(const std::string& token, int line);

/// All numbers in the stream concatenated (one observation vector).
Vector read_vector(std::istream& in);
Vector read_vector_file(const std::string& path);

/// Square matrix, one row per line.
Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::string& path);

/// 10 significant digits, shortest form ("%.10g").
std::string format_double(double value);

std::string trim(const std::string& s);

} // namespace conetest::io
