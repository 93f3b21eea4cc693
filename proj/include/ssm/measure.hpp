#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ssm/complex_ifs.hpp"
#include "ssm/errors.hpp"
#include "ssm/rational.hpp"

namespace ssm {

// Dyadic partition level: cells of side 2^-n. Level 60 keeps cell
// indices exact in 64-bit integers for the supports we handle.
struct DyadicLevel {
  int n;
  explicit DyadicLevel(int n_) : n(n_) {
    if (n < 0 || n > 60) throw std::invalid_argument("dyadic level outside [0,60]");
  }
};

// Element of the projective line, as an angle in [0, pi).
struct LineDirection {
  double angle;
  explicit LineDirection(double a);
  Complex unit() const { return {std::cos(angle), std::sin(angle)}; }
  LineDirection perpendicular() const { return LineDirection(angle + 1.5707963267948966); }
};

struct CellId {
  std::int64_t x = 0;
  std::int64_t y = 0;
  int level = 0;
  bool operator==(const CellId&) const = default;
};

CellId dyadic_cell(Complex z, int level);
// Lower-left corner of the half-open cell.
Complex cell_corner(const CellId& cell);

// Finitely supported probability measure on the plane: double atoms,
// exact rational weights. Construction merges atoms that fall within
// tol of each other (union-find over tol-balls, weights added exactly,
// position at the weighted centroid) and sorts atoms lexicographically,
// so equal measures have identical layouts.
class DiscreteMeasure {
 public:
  static DiscreteMeasure normalized(std::vector<Complex> atoms, std::vector<Rational> weights,
                                    double tol = kAtomTolerance);
  static DiscreteMeasure dirac(Complex z);

  const std::vector<Complex>& atoms() const { return atoms_; }
  const std::vector<Rational>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

  double support_radius() const;  // max |atom|

  // Pushforward by z -> lambda*z + t.
  DiscreteMeasure affine_image(Complex lambda, Complex t) const;

 private:
  DiscreteMeasure() = default;
  std::vector<Complex> atoms_;
  std::vector<Rational> weights_;
};

// ---- partitions ---------------------------------------------------------

// A partition of the plane used for entropy: the full dyadic grid, the
// partition induced by dyadic intervals along a line through the origin
// (D_n^W), or their join D_n^{W (+) Wperp}. The planar grid accepts an
// offset so translated grids can be compared.
struct PartitionSpec {
  enum class Kind { Planar, Line, Join };
  Kind kind = Kind::Planar;
  int level = 0;
  double angle = 0.0;       // Line/Join
  Complex offset = {0, 0};  // Planar only

  static PartitionSpec planar(int level, Complex offset = {0, 0});
  static PartitionSpec line(int level, LineDirection w);
  static PartitionSpec join(int level, LineDirection w);

  std::pair<std::int64_t, std::int64_t> key(Complex z) const;
};

// H(mu, partition) in bits; 0 log 0 = 0.
double entropy(const DiscreteMeasure& mu, const PartitionSpec& spec);
double entropy(const DiscreteMeasure& mu, DyadicLevel level);
double normalized_entropy(const DiscreteMeasure& mu, DyadicLevel level);

// H(mu, fine | coarse) = sum_F mu(F) H(mu_F, fine). Throws when fine and
// coarse are same-kind dyadic specs with the fine level coarser than the
// conditioning level.
double conditional_entropy(const DiscreteMeasure& mu, const PartitionSpec& fine,
                           const PartitionSpec& coarse);

// ---- components ----------------------------------------------------------

// Raw D-component: mu restricted to the cell, renormalized. Rescaled:
// pushed forward by the similarity mapping the cell onto the unit square.
// Throws std::invalid_argument when mu(D) = 0.
DiscreteMeasure component(const DiscreteMeasure& mu, const CellId& cell, bool rescaled);

struct CellComponent {
  CellId cell;
  Rational mass;
};
// Non-empty cells of D_level with their masses, in sorted cell order.
std::vector<CellComponent> level_components(const DiscreteMeasure& mu, int level);

// E_{lo<=i<=hi} of statistic(rescaled component): uniform average over
// levels, mu-weighted average over cells.
double component_expectation(const DiscreteMeasure& mu, int level_lo, int level_hi,
                             const std::function<double(const DiscreteMeasure&)>& statistic);

// ---- projections / convolution -------------------------------------------

// Orthogonal projection onto the line in direction w, embedded in C as
// atoms on the real axis.
DiscreteMeasure project(const DiscreteMeasure& mu, LineDirection w);

DiscreteMeasure convolve(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         std::size_t budget = kDefaultAtomBudget);

// ---- tubes and balls -------------------------------------------------------

// Mass of the heaviest closed tube of half-width r in direction w
// (exact over all translates: sliding window on projections onto wperp).
double max_tube_mass(const DiscreteMeasure& mu, LineDirection w, double r);

// Mass of the closed ball B(center, r).
double ball_mass(const DiscreteMeasure& mu, Complex center, double r);

struct TubeFrostmanReport {
  std::vector<std::pair<double, double>> max_tube_masses;  // (r, mass)
  double rho = 0.0;  // slope fit of log max mass vs log r
};
// Max tube mass per radius over a uniform direction grid (>= 8 required).
// golden_offset shifts every angle by the golden fraction of the grid
// spacing, avoiding resonance with lattice-supported measures.
TubeFrostmanReport tube_frostman_statistic(const DiscreteMeasure& mu,
                                           const std::vector<double>& radii,
                                           int direction_grid,
                                           bool golden_offset = false);

// ---- comparison -----------------------------------------------------------

struct MeasureCompareResult {
  bool equal = false;
  double max_atom_mismatch = 0.0;  // largest matched-atom displacement
  Rational weight_residue = 0;     // total unmatched / mismatched mass
  std::string detail;              // first mismatch, empty when equal
};

// Weighted-multiset equality: exact weights, atoms within tol.
MeasureCompareResult measure_equal(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                   double tol = kAtomTolerance);

// ---- streaming entropy -----------------------------------------------------

// Accumulates exact cell masses at a finest level; entropies at coarser
// levels come from exact parent sums. Lets depth-n truncations with tens
// of millions of words be profiled without materializing the atom list.
class CellMassAccumulator {
 public:
  explicit CellMassAccumulator(int finest_level);
  void add(Complex z, const Rational& w);
  // Entropy in bits at each requested level (all <= finest level).
  std::vector<double> entropies(const std::vector<int>& levels) const;
  std::size_t cell_count() const { return masses_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const;
  };
  int level_;
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, Rational, KeyHash> masses_;
};

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

// Depth-n truncation of the stationary measure of a (possibly
// non-homogeneous) IFS: one atom per word with product weights.
DiscreteMeasure ifs_truncation(const Ifs& ifs, int depth,
                               std::size_t budget = kDefaultAtomBudget);

}  // namespace ssm
