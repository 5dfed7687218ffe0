#pragma once

#include "sfpas/matrix.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sfpas::json_io {

using nlohmann::json;

inline json encode(const Rational& q) { return to_string(q); }

inline json encode(const ExactScalar& z) { return json{{"re", to_string(z.re())}, {"im", to_string(z.im())}}; }

inline json encode(const ExactMatrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(encode(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json encode(const RationalMatrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(encode(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Float complex matrices are written as {"re": x, "im": y} with doubles.
inline json encode_float(const FloatMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json{{"re", m(r, c).real()}, {"im", m(r, c).imag()}});
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Accepts a JSON integer, a "p/q" string, or (for exact floats written
/// as integers-valued doubles) a number with no fractional part.
inline Rational decode_rational(const json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(BigInt(j.get<std::int64_t>()));
    if (j.is_number_float()) {
        double d = j.get<double>();
        if (d == static_cast<double>(static_cast<std::int64_t>(d))) return Rational(BigInt(static_cast<std::int64_t>(d)));
        throw InvalidInput("non-integer JSON number where an exact rational is required; write it as \"p/q\"");
    }
    throw InvalidInput("expected a rational (\"p/q\" string or integer), got " + j.dump());
}

inline ExactScalar decode_scalar(const json& j) {
    if (j.is_object()) {
        Rational re = j.contains("re") ? decode_rational(j.at("re")) : Rational(0);
        Rational im = j.contains("im") ? decode_rational(j.at("im")) : Rational(0);
        return {re, im};
    }
    return ExactScalar(decode_rational(j));
}

/// Row-major nested arrays. With expected dimensions, an empty array is
/// accepted for any shape with zero rows, and empty rows for zero columns.
inline ExactMatrix decode_matrix(const json& j, long expected_rows = -1, long expected_cols = -1) {
    if (!j.is_array()) throw InvalidInput("matrix must be a nested JSON array");
    const std::size_t rows = j.size();
    std::size_t cols = rows ? j.front().size() : (expected_cols >= 0 ? static_cast<std::size_t>(expected_cols) : 0);
    if (expected_rows >= 0 && rows != static_cast<std::size_t>(expected_rows))
        throw InvalidInput("matrix has " + std::to_string(rows) + " rows, expected " + std::to_string(expected_rows));
    if (expected_cols >= 0 && rows && cols != static_cast<std::size_t>(expected_cols))
        throw InvalidInput("matrix has " + std::to_string(cols) + " columns, expected " + std::to_string(expected_cols));
    ExactMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != cols) throw InvalidInput("ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = decode_scalar(row[c]);
    }
    return m;
}

inline RationalMatrix decode_rational_matrix(const json& j) {
    ExactMatrix m = decode_matrix(j);
    RationalMatrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (!m(r, c).is_real()) throw InvalidInput("expected a real matrix");
            out(r, c) = m(r, c).re();
        }
    return out;
}

inline std::vector<Rational> decode_rational_vector(const json& j) {
    if (!j.is_array()) throw InvalidInput("expected an array of rationals");
    std::vector<Rational> out;
    for (const auto& x : j) out.push_back(decode_rational(x));
    return out;
}

inline json encode(const std::vector<Rational>& v) {
    json out = json::array();
    for (const auto& x : v) out.push_back(encode(x));
    return out;
}

}  // namespace sfpas::json_io
