#include "conetest/io.hpp"

#include "conetest/error.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace conetest::io {

std::string trim(const std::string& s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        const std::string piece = trim(line.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin));
        if (piece.empty()) {
            out.emplace_back(); // rejected by parse_double
        } else {
            std::istringstream words(piece);
            std::string w;
            while (words >> w) out.push_back(w);
        }
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    return out;
}

double parse_double(const std::string& token, int line)
{
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (token.empty() || ec != std::errc() || ptr != last) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": not a number: '" + token + "'");
    }
    return value;
}

NumericText read_numeric_text(std::istream& in)
{
    NumericText text;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '#') {
            text.comments.push_back(trim(s.substr(1)));
            continue;
        }
        NumericRow row;
        row.line = line;
        for (const auto& field : split_fields(s)) {
            row.values.push_back(parse_double(field, line));
        }
        text.rows.push_back(std::move(row));
    }
    return text;
}

Vector read_vector(std::istream& in)
{
    const auto text = read_numeric_text(in);
    std::vector<double> all;
    for (const auto& row : text.rows) {
        all.insert(all.end(), row.values.begin(), row.values.end());
    }
    if (all.empty()) {
        throw Error(ErrorCode::ParseError, "no values in observation vector");
    }
    return Eigen::Map<const Vector>(all.data(), static_cast<Eigen::Index>(all.size()));
}

Matrix read_matrix(std::istream& in)
{
    const auto text = read_numeric_text(in);
    const auto n = static_cast<Eigen::Index>(text.rows.size());
    if (n == 0) {
        throw Error(ErrorCode::ParseError, "empty matrix");
    }
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = text.rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.values.size()) != n) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(row.line) + ": expected " + std::to_string(n) +
                            " values, got " + std::to_string(row.values.size()));
        }
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row.values[static_cast<std::size_t>(j)];
    }
    return m;
}

namespace {

std::ifstream open_or_throw(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    }
    return in;
}

} // namespace

Vector read_vector_file(const std::string& path)
{
    auto in = open_or_throw(path);
    return read_vector(in);
}

Matrix read_matrix_file(const std::string& path)
{
    auto in = open_or_throw(path);
    return read_matrix(in);
}

std::string format_double(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

} // namespace conetest::io
