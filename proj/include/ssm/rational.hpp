#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>
#include <vector>

namespace ssm {

// Exact rational arithmetic for probability weights. Atom positions are
// doubles; weights stay rational end-to-end so that multiset identities
// (weights summing to exactly 1, convolution products, block regroupings)
// can be tested with equality instead of tolerances.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Parses "3/4", "1", "0.25", "-1.5e-2". Decimal strings convert exactly
// (base-10 mantissa over a power of ten). Throws std::invalid_argument.
Rational parse_rational(const std::string& text);

// Canonical form: "num/den", or "num" when den == 1.
std::string format_rational(const Rational& value);

double to_double(const Rational& value);

// Exact conversion; every finite double is a binary rational.
Rational rational_from_double(double value);

bool is_probability_vector(const std::vector<Rational>& weights);

// Shannon entropy -sum p log2 p in bits, 0 log 0 = 0.
double entropy_bits(const std::vector<Rational>& probs);

}  // namespace ssm
