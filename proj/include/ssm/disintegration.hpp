#pragma once

#include <string>
#include <vector>

#include "ssm/model.hpp"

namespace ssm {

// lambda^beta via the principal branch of log. Bases on (-inf, 0] are
// rejected instead of silently picking a branch.
Complex complex_power(Complex base, Complex expo);

// Occurrence-count vector of a length-r word over {1..k}.
struct BlockIndex {
  std::vector<int> counts;
  int total() const;
  std::string label() const;  // "n1,n2,...,nk"
  bool operator==(const BlockIndex&) const = default;
};

BlockIndex psi(const Word& word, int k);

// All count vectors over {1..k} summing to r, lexicographically.
std::vector<BlockIndex> block_index_set(int k, int r);

// Plan for disintegrating the non-homogeneous IFS g_{lambda,i}(z) =
// lambda^{beta_i} z + t_i into a block model: words of length r are
// grouped by symbol counts (commutativity makes the linear part a
// function of the counts alone), and the split period s cuts the block
// sequence into the eta' / eta'' convolution factors.
struct DisintegrationPlan {
  std::vector<Complex> translations;
  std::vector<Rational> probs;
  std::vector<Complex> betas;  // beta_1 = 1
  int block_len = 2;           // r >= 2
  int split_period = 2;        // s >= 2

  DisintegrationPlan(std::vector<Complex> translations_, std::vector<Rational> probs_,
                     std::vector<Complex> betas_, int r, int s);

  int symbol_count() const { return static_cast<int>(translations.size()); }
  // The base IFS {g_{lambda,i}} at a given lambda.
  Ifs base_ifs(Complex lambda) const;
};

struct BlockModel {
  Model model;                        // over I(r) with Bernoulli marginal q
  std::vector<BlockIndex> index_set;  // parallel to model.systems
  std::vector<Complex> gammas;        // gamma_n = sum n_j beta_j
};

// Gathers the k^r compositions of length r into one homogeneous system
// per count vector; weights q_n = |Psi^-1(n)| prod p_i^{n_i}; within a
// system the probabilities are uniform. Throws std::invalid_argument when
// some |lambda^gamma| >= 1.
BlockModel build_block_model(const DisintegrationPlan& plan, Complex lambda,
                             std::size_t budget = kDefaultAtomBudget);

// Depth-(r*m) truncation of the self-similar measure vs the q-mixture of
// depth-m block-model truncations (both sides enumerate k^{rm} weighted
// points; weights must match exactly, atoms within tolerance).
MeasureCompareResult verify_disintegration(const DisintegrationPlan& plan, Complex lambda,
                                           int depth_blocks,
                                           std::size_t budget = kDefaultAtomBudget);

struct SplitModels {
  Model keep_last;      // Sigma': only the s-th block of each group translates
  Model drop_last;      // Sigma'': blocks 1..s-1 composed, uniform weights
  int group_size = 0;   // s
};

// Over I(r)^s: Sigma' keeps the final block's translations, Sigma''
// composes the first s-1 blocks; eta = eta' * eta'' at matched depths.
SplitModels split_model(const DisintegrationPlan& plan, Complex lambda,
                        std::size_t budget = kDefaultAtomBudget);

// Checks eta^(omega) = eta'^(F(omega)) * eta''^(F(omega)) on truncations:
// omega is a block-model prefix whose length is a multiple of s.
MeasureCompareResult verify_split_identity(const DisintegrationPlan& plan, Complex lambda,
                                           const std::vector<int>& omega_blocks,
                                           std::size_t budget = kDefaultAtomBudget);

// (1 - H(q)/(r H(p))) * s(lambda, p): the closed form the block model's
// sdim must reproduce.
double block_sdim_closed_form(const DisintegrationPlan& plan, Complex lambda);

// min over u != v in {1..k}^n of |g_u(0) - g_v(0)| for the base IFS.
double base_min_separation(const DisintegrationPlan& plan, Complex lambda, int depth,
                           std::size_t budget = kDefaultAtomBudget);

struct NondegeneracyReport {
  std::vector<Complex> fixed_points;  // t_i / (1 - lambda^{beta_i})
  double min_fixed_point_gap = 0.0;
  bool shared_fixed_point = false;          // some pair coincides within tol
  Complex pair_root_value{0, 0};            // lambda t2 - lambda^{beta_2} t1 + t1 - t2
  bool pair_root_condition = false;         // |value| <= tol for maps 1,2
  bool block_model_non_degenerate = false;  // some system has 2 distinct maps
};

NondegeneracyReport nondegeneracy_check(const DisintegrationPlan& plan, Complex lambda,
                                        double tol = kAtomTolerance);

}  // namespace ssm
