#include "ssm/complex_ifs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssm {

Similarity::Similarity(Complex lambda_, Complex t_) : lambda(lambda_), t(t_) {
  const double r = std::abs(lambda);
  if (!(r > 0.0) || !(r < 1.0))
    throw std::invalid_argument("similarity requires 0 < |lambda| < 1");
}

Ifs::Ifs(std::vector<Similarity> maps_, std::vector<Rational> probs_)
    : maps(std::move(maps_)), probs(std::move(probs_)) {
  if (maps.empty()) throw std::invalid_argument("IFS needs at least one map");
  if (maps.size() != probs.size())
    throw std::invalid_argument("probability vector length mismatch");
  if (!is_probability_vector(probs))
    throw std::invalid_argument("probabilities must be positive and sum to 1");
}

double Ifs::max_contraction() const {
  double r = 0.0;
  for (const auto& m : maps) r = std::max(r, m.contraction());
  return r;
}

double Ifs::max_translation() const {
  double t = 0.0;
  for (const auto& m : maps) t = std::max(t, std::abs(m.t));
  return t;
}

bool Ifs::is_homogeneous(double tol) const {
  for (const auto& m : maps)
    if (std::abs(m.lambda - maps.front().lambda) > tol) return false;
  return true;
}

double Ifs::support_radius() const {
  const double base = max_translation() / (1.0 - max_contraction());
  return base * 1.01;
}

namespace {

void check_word(const Ifs& ifs, const Word& word) {
  if (word.length() == 0)
    throw std::invalid_argument("empty word: identity is not a contraction");
  for (int s : word.symbols)
    if (s < 1 || s > ifs.size())
      throw std::out_of_range("word symbol outside alphabet {1.." +
                              std::to_string(ifs.size()) + "}");
}

}  // namespace

Similarity compose(const Ifs& ifs, const Word& word) {
  check_word(ifs, word);
  Complex lambda = 1.0;
  Complex t = 0.0;
  // first symbol outermost: t_u = sum (prod_{j<k} lambda_j) t_k
  for (int s : word.symbols) {
    const Similarity& g = ifs.maps[static_cast<size_t>(s - 1)];
    t += lambda * g.t;
    lambda *= g.lambda;
  }
  return Similarity(lambda, t);
}

Complex truncated_projection(const Ifs& ifs, const Word& word) {
  check_word(ifs, word);
  Complex prefix = 1.0;
  Complex sum = 0.0;
  for (int s : word.symbols) {
    const Similarity& g = ifs.maps[static_cast<size_t>(s - 1)];
    sum += prefix * g.t;
    prefix *= g.lambda;
  }
  return sum;
}

double similarity_dimension(const Ifs& ifs) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < ifs.size(); ++i) {
    const double p = to_double(ifs.probs[static_cast<size_t>(i)]);
    num += p * std::log2(p);
    den += p * std::log2(ifs.maps[static_cast<size_t>(i)].contraction());
  }
  return num / den;
}

std::vector<Complex> enumerate_projections(const Ifs& ifs, int n, std::size_t budget) {
  if (n < 1) throw std::invalid_argument("depth must be >= 1");
  const auto k = static_cast<std::size_t>(ifs.size());
  std::size_t count = 1;
  for (int i = 0; i < n; ++i) {
    if (count > budget / k) throw BudgetError("k^n exceeds enumeration budget");
    count *= k;
  }
  std::vector<Complex> points;
  points.reserve(count);
  // odometer over words; prefix sums/products maintained per position
  std::vector<int> word(static_cast<size_t>(n), 1);
  std::vector<Complex> prefix_lambda(static_cast<size_t>(n) + 1, 1.0);
  std::vector<Complex> prefix_sum(static_cast<size_t>(n) + 1, 0.0);
  auto refresh_from = [&](int pos) {
    for (int j = pos; j < n; ++j) {
      const Similarity& g = ifs.maps[static_cast<size_t>(word[static_cast<size_t>(j)] - 1)];
      prefix_sum[static_cast<size_t>(j) + 1] =
          prefix_sum[static_cast<size_t>(j)] + prefix_lambda[static_cast<size_t>(j)] * g.t;
      prefix_lambda[static_cast<size_t>(j) + 1] =
          prefix_lambda[static_cast<size_t>(j)] * g.lambda;
    }
  };
  refresh_from(0);
  while (true) {
    points.push_back(prefix_sum[static_cast<size_t>(n)]);
    int pos = n - 1;
    while (pos >= 0 && word[static_cast<size_t>(pos)] == static_cast<int>(k)) {
      word[static_cast<size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++word[static_cast<size_t>(pos)];
    refresh_from(pos);
  }
  return points;
}

double min_pairwise_distance(const std::vector<Complex>& points, double tol) {
  const std::size_t n = points.size();
  if (n < 2) return 0.0;
  // sort by real part; classic sweep bounds the inner loop by the best
  // distance found so far
  std::vector<Complex> sorted(points);
  std::sort(sorted.begin(), sorted.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  double best = std::abs(sorted[1] - sorted[0]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sorted[j].real() - sorted[i].real() >= best) break;
      best = std::min(best, std::abs(sorted[j] - sorted[i]));
      if (best <= tol) return 0.0;
    }
  }
  return best <= tol ? 0.0 : best;
}

double min_separation(const Ifs& ifs, int n, std::size_t budget, double tol) {
  const auto points = enumerate_projections(ifs, n, budget);
  if (points.size() < 2) return 0.0;
  return min_pairwise_distance(points, tol);
}

}  // namespace ssm
