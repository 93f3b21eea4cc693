#include "ssm/dimension.hpp"

#include <algorithm>
#include <cmath>

namespace ssm {

namespace {

constexpr double kPi = 3.14159265358979323846;

double atom_multiset_entropy(const DiscreteMeasure& mu) {
  double h = 0.0;
  for (const auto& w : mu.weights()) {
    const double x = to_double(w);
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

}  // namespace

SaturationResult is_saturated(const DiscreteMeasure& mu, const SaturationQuery& query) {
  const double h_mu = normalized_entropy(mu, DyadicLevel(query.m));
  double h_proj = 0.0;
  switch (query.v.kind) {
    case SubspaceQuery::Kind::Plane:
      h_proj = 0.0;  // projection to {0}
      break;
    case SubspaceQuery::Kind::Zero:
      h_proj = h_mu;  // projection is the identity
      break;
    case SubspaceQuery::Kind::Line: {
      const LineDirection perp = LineDirection(query.v.angle).perpendicular();
      h_proj = entropy(project(mu, perp), DyadicLevel(query.m)) / query.m;
      break;
    }
  }
  SaturationResult res;
  res.margin = h_mu - h_proj - query.v.dim() + query.eps;
  res.saturated = res.margin >= 0.0;
  return res;
}

bool is_concentrated(const DiscreteMeasure& mu, const std::optional<LineDirection>& v,
                     double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const double target = 1.0 - eps;
  if (v.has_value()) return max_tube_mass(mu, *v, eps) >= target;

  // V = {0}: eps-balls anchored at atoms plus a ring of offsets
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (ball_mass(mu, mu.atoms()[i], eps) >= target) return true;
    for (int j = 0; j < 8; ++j) {
      const double a = 2.0 * kPi * j / 8.0;
      const Complex off = mu.atoms()[i] + 0.5 * eps * Complex(std::cos(a), std::sin(a));
      if (ball_mass(mu, off, eps) >= target) return true;
    }
  }
  return false;
}

int default_direction_grid(int m) {
  const int scale_driven = static_cast<int>(std::ceil(kPi * std::ldexp(1.0, m)));
  return std::min(4096, std::max(180, scale_driven));
}

int satdim_estimate(const DiscreteMeasure& mu, double eps, int m, int k,
                    int direction_grid) {
  if (direction_grid == 0) direction_grid = default_direction_grid(m);

  const auto cells = level_components(mu, k);
  std::vector<DiscreteMeasure> comps;
  std::vector<double> masses;
  comps.reserve(cells.size());
  for (const auto& cc : cells) {
    comps.push_back(component(mu, cc.cell, /*rescaled=*/true));
    masses.push_back(to_double(cc.mass));
  }
  const double target = 1.0 - eps;

  auto saturated_mass = [&](const SubspaceQuery& v) {
    double mass = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i)
      if (is_saturated(comps[i], SaturationQuery(v, eps, m)).saturated) mass += masses[i];
    return mass;
  };

  if (saturated_mass(SubspaceQuery::plane()) >= target) return 2;
  for (int d = 0; d < direction_grid; ++d) {
    const SubspaceQuery v = SubspaceQuery::line(LineDirection(kPi * d / direction_grid));
    if (saturated_mass(v) >= target) return 1;
  }
  return 0;
}

DimensionReport entropy_dimension_curve(const DiscreteMeasure& mu,
                                        const std::vector<int>& levels) {
  if (levels.empty()) throw std::invalid_argument("need at least one level");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1])
      throw std::invalid_argument("levels must be strictly increasing");

  DimensionReport report;
  report.levels = levels;
  const double cap = atom_multiset_entropy(mu);

  std::vector<double> fit_x, fit_y;
  for (int n : levels) {
    const double h = entropy(mu, DyadicLevel(n));
    report.normalized_entropies.push_back(n > 0 ? h / n : 0.0);
    const bool ok = cap == 0.0 || h < 0.95 * cap;
    report.trusted.push_back(ok);
    if (ok) {
      fit_x.push_back(static_cast<double>(n));
      fit_y.push_back(h);
    } else if (report.saturation_level < 0) {
      report.saturation_level = n;
    }
  }
  report.slope = fit_x.size() >= 2 ? fit_slope(fit_x, fit_y) : 0.0;
  return report;
}

std::vector<std::pair<Complex, double>> local_dimension_samples(
    const DiscreteMeasure& mu, const std::vector<double>& radii, int sample_count,
    std::uint64_t seed) {
  if (radii.size() < 2) throw std::invalid_argument("need at least two radii");
  std::vector<double> sorted_r(radii);
  std::sort(sorted_r.begin(), sorted_r.end());
  if (sorted_r.front() <= 0.0) throw std::invalid_argument("radii must be positive");
  if (sorted_r.back() / sorted_r.front() < 100.0 * (1.0 - 1e-9))
    throw std::invalid_argument("radii must span at least two decades");

  // weighted sampling with replacement
  std::vector<double> cumulative;
  cumulative.reserve(mu.size());
  double acc = 0.0;
  for (const auto& w : mu.weights()) {
    acc += to_double(w);
    cumulative.push_back(acc);
  }
  Rng rng(seed);
  std::vector<std::pair<Complex, double>> out;
  for (int s = 0; s < sample_count; ++s) {
    const double u = rng.next_double() * acc;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = static_cast<std::size_t>(it - cumulative.begin());
    const Complex x = mu.atoms()[std::min(idx, mu.size() - 1)];
    const double own = to_double(mu.weights()[std::min(idx, mu.size() - 1)]);

    std::vector<double> lx, ly;
    for (double r : sorted_r) {
      const double mass = ball_mass(mu, x, r);
      if (mass <= own * 1.5) continue;  // single-atom floor
      lx.push_back(std::log2(r));
      ly.push_back(std::log2(mass));
    }
    out.emplace_back(x, lx.size() >= 2 ? fit_slope(lx, ly) : 0.0);
  }
  return out;
}

}  // namespace ssm
