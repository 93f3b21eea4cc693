#include "ssm/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ssm {

namespace {

BigInt pow10(int e) {
  BigInt r = 1;
  for (int i = 0; i < e; ++i) r *= 10;
  return r;
}

// cpp_int treats a leading 0 as octal; force base-10
BigInt big_from_decimal(std::string s) {
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s.erase(0, 1);
  }
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("malformed integer: " + s);
  const auto first = s.find_first_not_of('0');
  s = first == std::string::npos ? "0" : s.substr(first);
  BigInt v(s);
  return neg ? -v : v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw std::invalid_argument("empty rational literal");

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    if (slash == 0 || slash + 1 >= s.size())
      throw std::invalid_argument("malformed fraction: " + text);
    BigInt num = big_from_decimal(s.substr(0, slash));
    BigInt den = big_from_decimal(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: " + text);
    return Rational(num, den);
  }

  // decimal or integer, optional exponent
  bool neg = false;
  size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    neg = (s[i] == '-');
    ++i;
  }
  std::string digits;
  int frac_digits = 0;
  bool seen_dot = false, seen_digit = false;
  long exp10 = 0;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("malformed number: " + text);
      seen_dot = true;
    } else if (c == 'e' || c == 'E') {
      exp10 = std::stol(s.substr(i + 1));
      break;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (seen_dot) ++frac_digits;
      seen_digit = true;
    } else {
      throw std::invalid_argument("malformed number: " + text);
    }
  }
  if (!seen_digit) throw std::invalid_argument("malformed number: " + text);
  BigInt num = big_from_decimal(digits.empty() ? "0" : digits);
  if (neg) num = -num;
  long net = exp10 - frac_digits;
  if (net >= 0) return Rational(num * pow10(static_cast<int>(net)), 1);
  return Rational(num, pow10(static_cast<int>(-net)));
}

std::string format_rational(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite double");
  if (value == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(value, &exp);  // value = mant * 2^exp, |mant| in [0.5,1)
  auto m = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  Rational r(m);
  BigInt two = 2;
  if (exp >= 0) {
    BigInt scale = 1;
    for (int i = 0; i < exp; ++i) scale *= two;
    r *= Rational(scale);
  } else {
    BigInt scale = 1;
    for (int i = 0; i < -exp; ++i) scale *= two;
    r /= Rational(scale);
  }
  return r;
}

bool is_probability_vector(const std::vector<Rational>& weights) {
  if (weights.empty()) return false;
  Rational sum = 0;
  for (const auto& w : weights) {
    if (w <= 0) return false;
    sum += w;
  }
  return sum == 1;
}

double entropy_bits(const std::vector<Rational>& probs) {
  double h = 0.0;
  for (const auto& p : probs) {
    const double x = to_double(p);
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

}  // namespace ssm
