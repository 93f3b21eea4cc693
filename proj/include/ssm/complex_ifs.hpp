#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ssm/errors.hpp"
#include "ssm/rational.hpp"

namespace ssm {

using Complex = std::complex<double>;

// One contracting similarity z -> lambda*z + t on the complex plane,
// with the contraction factor split as lambda = r * phi, |phi| = 1.
struct Similarity {
  Complex lambda;
  Complex t;

  Similarity(Complex lambda_, Complex t_);

  double contraction() const { return std::abs(lambda); }   // r
  Complex rotation() const { return lambda / std::abs(lambda); }  // phi
  Complex apply(Complex z) const { return lambda * z + t; }
  Complex fixed_point() const { return t / (1.0 - lambda); }
};

// Finite ordered list of similarities with exact rational probabilities.
struct Ifs {
  std::vector<Similarity> maps;
  std::vector<Rational> probs;

  Ifs(std::vector<Similarity> maps_, std::vector<Rational> probs_);

  int size() const { return static_cast<int>(maps.size()); }
  double max_contraction() const;
  double max_translation() const;

  // True when all maps share one linear part (within tol).
  bool is_homogeneous(double tol = kAtomTolerance) const;

  // Closure radius: every map sends B(0,R) into itself. Any radius at
  // least max|t|/(1-r_max) works; we return the minimal one plus 1%
  // headroom. The constant is not canonical.
  double support_radius() const;
};

// Finite word over {1..k}; symbols are 1-based to match the usual
// cylinder notation. The first symbol is the outermost map.
struct Word {
  std::vector<int> symbols;

  Word() = default;
  explicit Word(std::vector<int> symbols_) : symbols(std::move(symbols_)) {}
  int length() const { return static_cast<int>(symbols.size()); }
};

// g_{u_1} o ... o g_{u_n}; lambda_u is the product of the factors and
// t_u the value of the composition at 0. Throws on empty word (the
// identity is not a contraction) or out-of-range symbols.
Similarity compose(const Ifs& ifs, const Word& word);

// f_{u|n}(0) = sum_{k<=n} (prod_{j<k} lambda_{u_j}) t_{u_k}.
// Agrees with compose(ifs, word).t exactly.
Complex truncated_projection(const Ifs& ifs, const Word& word);

// s(lambda, p) = (sum p_i log p_i) / (sum p_i log |lambda_i|), base-2 logs.
double similarity_dimension(const Ifs& ifs);

// Minimum pairwise distance of the k^n depth-n cylinder projections of 0;
// 0 if two coincide within tol. Throws BudgetError when k^n exceeds the
// enumeration budget.
double min_separation(const Ifs& ifs, int n, std::size_t budget = kDefaultAtomBudget,
                      double tol = kAtomTolerance);

// All depth-n projections f_u(0) in lexicographic word order.
std::vector<Complex> enumerate_projections(const Ifs& ifs, int n,
                                           std::size_t budget = kDefaultAtomBudget);

// Smallest pairwise distance in a point cloud (0 for fewer than 2 points).
double min_pairwise_distance(const std::vector<Complex>& points, double tol = kAtomTolerance);

}  // namespace ssm
