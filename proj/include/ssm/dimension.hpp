#pragma once

#include <optional>
#include <vector>

#include "ssm/measure.hpp"
#include "ssm/rng.hpp"

namespace ssm {

// Subspace V in a saturation/concentration query: the origin, a line
// through the origin, or the whole plane.
struct SubspaceQuery {
  enum class Kind { Zero, Line, Plane };
  Kind kind = Kind::Plane;
  double angle = 0.0;

  static SubspaceQuery zero() { return {Kind::Zero, 0.0}; }
  static SubspaceQuery line(LineDirection w) { return {Kind::Line, w.angle}; }
  static SubspaceQuery plane() { return {Kind::Plane, 0.0}; }
  int dim() const { return kind == Kind::Zero ? 0 : kind == Kind::Line ? 1 : 2; }
};

struct SaturationQuery {
  SubspaceQuery v;
  double eps;
  int m;  // dyadic scale, >= 1

  SaturationQuery(SubspaceQuery v_, double eps_, int m_) : v(v_), eps(eps_), m(m_) {
    if (!(eps > 0.0) || eps > 2.0) throw std::invalid_argument("eps must lie in (0,2]");
    if (m < 1) throw std::invalid_argument("scale m must be >= 1");
  }
};

struct SaturationResult {
  bool saturated = false;
  double margin = 0.0;  // H_m(mu) - H_m(pi_{Vperp} mu) - dim V + eps
};

// Literal evaluation of H_m(mu) >= H_m(pi_{Vperp} mu) + dim V - eps.
// Callers rescale components to the unit square first.
SaturationResult is_saturated(const DiscreteMeasure& mu, const SaturationQuery& query);

// (V,eps)-concentration: some translate of V has eps-neighborhood mass
// >= 1-eps. Lines search every translate exactly (sliding window on the
// perpendicular projection); V = {0} searches atom-anchored balls plus a
// ring of offset candidates. No query for the full plane (always true).
bool is_concentrated(const DiscreteMeasure& mu, const std::optional<LineDirection>& v,
                     double eps);

// Direction-grid resolution for sup-over-lines approximations: at least
// 180 angles, at least pi 2^m (grid spacing below the scale-m projection
// modulus of continuity), capped at 4096.
int default_direction_grid(int m);

// Largest dim V such that at least 1-eps of the mu-mass of level-k cells
// has its rescaled component (V,eps,m)-saturated. The plane is tested
// first, then a direction grid, else 0. grid 0 = default_direction_grid(m).
int satdim_estimate(const DiscreteMeasure& mu, double eps, int m, int k,
                    int direction_grid = 0);

struct DimensionReport {
  std::vector<int> levels;
  std::vector<double> normalized_entropies;  // H_n(mu) = H(mu, D_n)/n
  std::vector<bool> trusted;   // below the atom-resolution cutoff
  double slope = 0.0;          // fitted d H(mu,D_n) / dn over trusted levels
  int saturation_level = -1;   // first untrusted level, -1 if none
  std::vector<std::pair<Complex, double>> local_samples;  // (point, slope)
};

// H_n per level plus a slope fit over the window where cells still
// aggregate atoms (H below 95% of the atom-multiset entropy).
DimensionReport entropy_dimension_curve(const DiscreteMeasure& mu,
                                        const std::vector<int>& levels);

// Least-squares slope of log mu(B(x,r)) vs log r at mu-sampled points.
// Radii must span at least two decades; radii at the single-atom floor
// are dropped before fitting.
std::vector<std::pair<Complex, double>> local_dimension_samples(const DiscreteMeasure& mu,
                                                                const std::vector<double>& radii,
                                                                int sample_count,
                                                                std::uint64_t seed);

}  // namespace ssm
