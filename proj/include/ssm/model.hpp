#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssm/measure.hpp"

namespace ssm {

// Generator of index sequences omega. Finite prefixes are materialized
// on demand from the seeded stream, so runs are reproducible and the
// infinite sequence never exists as data.
struct SelectionProcess {
  enum class Kind { Bernoulli, Markov, Explicit };

  Kind kind = Kind::Bernoulli;
  std::vector<Rational> marginal;              // Bernoulli
  std::vector<std::vector<Rational>> matrix;   // Markov transition rows
  std::vector<int> sequence;                   // Explicit (0-based, cycled)
  std::uint64_t seed = 0;

  static SelectionProcess bernoulli(std::vector<Rational> marginal, std::uint64_t seed);
  static SelectionProcess markov(std::vector<std::vector<Rational>> matrix, std::uint64_t seed);
  static SelectionProcess fixed(std::vector<int> sequence);

  int state_count() const;
  // Exact one-coordinate marginal: Bernoulli marginal, Markov stationary
  // vector, or symbol frequencies over one explicit period.
  std::vector<Rational> invariant_marginal() const;
  // First n symbols of the seeded stream (0-based indices).
  std::vector<int> generate(int n) const;
};

// Exact stationary vector of an irreducible stochastic matrix.
std::vector<Rational> stationary_vector(const std::vector<std::vector<Rational>>& matrix);

// Family of homogeneous IFS indexed by a finite set, plus a selection
// process. Within each system all maps share one linear part.
struct Model {
  std::vector<std::string> names;
  std::vector<Ifs> systems;
  SelectionProcess selection;

  Model(std::vector<std::string> names_, std::vector<Ifs> systems_, SelectionProcess sel);

  int index_count() const { return static_cast<int>(systems.size()); }
  Complex lambda(int i) const { return systems[static_cast<size_t>(i)].maps.front().lambda; }
  double contraction(int i) const { return std::abs(lambda(i)); }
  Complex rotation(int i) const { return lambda(i) / std::abs(lambda(i)); }
  int branch_count(int i) const { return systems[static_cast<size_t>(i)].size(); }
  double r_min() const;
  double r_max() const;

  // Closure radius over every map of every system (minimal + 1%).
  double support_radius() const;

  // True when some system has two maps with distinct translations.
  bool non_degenerate(double tol = kAtomTolerance) const;
  // max |Im phi_i| over positively weighted indices; the "phi not real"
  // assumption has no quantitative margin, so we report the value.
  double max_rotation_imaginary() const;

  // omega prefix of length n: pinned head (if any) extended by the
  // seeded selection stream.
  std::vector<int> omega(int n, const std::vector<int>& pinned = {}) const;
};

// prod_j k_{omega_j}; throws BudgetError beyond the budget.
std::size_t word_space_size(const Model& model, const std::vector<int>& omega,
                            std::size_t budget = kDefaultAtomBudget);

// Streams (atom, weight) pairs of the depth-n truncation of eta^(omega),
// n = omega.size(), in lexicographic word order.
void enumerate_eta(const Model& model, const std::vector<int>& omega,
                   const std::function<void(Complex, const Rational&)>& sink,
                   std::size_t budget = kDefaultAtomBudget);

// Depth-n atomic approximation of eta^(omega): one atom per cylinder.
DiscreteMeasure eta_truncated(const Model& model, const std::vector<int>& omega,
                              std::size_t budget = kDefaultAtomBudget);

// Checks the depth-|omega| truncation of the k-step self-similarity
// expansion: eta^(omega) vs sum over u in X_k of p_u (f_u eta^(T^k omega)).
MeasureCompareResult verify_dynamic_self_similarity(const Model& model,
                                                    const std::vector<int>& omega, int k,
                                                    std::size_t budget = kDefaultAtomBudget);

// Checks the convolution decomposition at scale k: the depth-(n'+tail)
// truncation of eta^(omega) equals nu^(omega,n') convolved with the
// lambda-product rescaling of the depth-tail truncation of eta^(T^{n'} omega).
MeasureCompareResult verify_convolution_decomposition(const Model& model,
                                                      const std::vector<int>& omega, int k,
                                                      int tail,
                                                      std::size_t budget = kDefaultAtomBudget);

// sdim in bits/bit. Bernoulli and Markov use closed forms; Explicit uses
// the exact symbol frequencies of one period.
double model_sdim(const Model& model);

// Minimal pairwise distance of depth-n cylinder images of 0; n is the
// prefix length; 0 when the word space is a single point.
double delta_n(const Model& model, const std::vector<int>& omega,
               std::size_t budget = kDefaultAtomBudget, double tol = kAtomTolerance);

// Unique k' with 2R prod_{i<=k'} r_{omega_i} <= 2^-k <= 2R prod_{i<k'} r.
// R is the model support radius, raised if needed so that 2R >= 1 and
// 2R r_min > 1/2. Throws std::invalid_argument when the prefix is too short.
int k_prime(const Model& model, const std::vector<int>& omega, int k);

// |n' + k'(T^{n'} omega) - (n+k)'|, the almost-additive cocycle defect.
int k_prime_cocycle_defect(const Model& model, const std::vector<int>& omega, int n, int k);

struct SkewOrbitReport {
  std::vector<LineDirection> orbit;     // V_0 = w0, V_j = phi^-1_{omega_j} V_{j-1}
  std::vector<double> occupation;       // fraction of orbit per angle bin
  int bins = 0;
};
SkewOrbitReport skew_orbit(const Model& model, const std::vector<int>& omega,
                           LineDirection w0, int steps, int bins = 64);

}  // namespace ssm
