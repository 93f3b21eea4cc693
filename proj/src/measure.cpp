#include "ssm/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssm {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::int64_t floor_scaled(double v, int level) {
  const double scaled = std::ldexp(v, level);
  if (!(std::abs(scaled) < 4.0e18))
    throw std::invalid_argument("coordinate too large for dyadic cell index");
  return static_cast<std::int64_t>(std::floor(scaled));
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ull;
  x ^= x >> 33;
  return x;
}

struct PairHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const {
    return mix64(static_cast<std::uint64_t>(k.first) * 0x9e3779b97f4a7c15ull ^
                 static_cast<std::uint64_t>(k.second));
  }
};

using MassMap = std::unordered_map<std::pair<std::int64_t, std::int64_t>, Rational, PairHash>;

MassMap cell_masses(const DiscreteMeasure& mu, const PartitionSpec& spec) {
  MassMap masses;
  masses.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    masses[spec.key(mu.atoms()[i])] += mu.weights()[i];
  return masses;
}

double entropy_of_masses(const MassMap& masses) {
  double h = 0.0;
  for (const auto& [key, m] : masses) {
    const double x = to_double(m);
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

}  // namespace

LineDirection::LineDirection(double a) {
  angle = std::fmod(a, kPi);
  if (angle < 0) angle += kPi;
  if (angle >= kPi) angle = 0.0;  // fmod landed exactly on pi
}

CellId dyadic_cell(Complex z, int level) {
  return CellId{floor_scaled(z.real(), level), floor_scaled(z.imag(), level), level};
}

Complex cell_corner(const CellId& cell) {
  return {std::ldexp(static_cast<double>(cell.x), -cell.level),
          std::ldexp(static_cast<double>(cell.y), -cell.level)};
}

// ---- DiscreteMeasure -------------------------------------------------------

DiscreteMeasure DiscreteMeasure::normalized(std::vector<Complex> atoms,
                                            std::vector<Rational> weights, double tol) {
  if (atoms.size() != weights.size())
    throw std::invalid_argument("atoms/weights length mismatch");
  if (atoms.empty()) throw std::invalid_argument("empty measure");

  const std::size_t n = atoms.size();

  // union-find over tol-balls via a spatial hash with tol-sized cells
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  const double cell = std::max(tol, 1e-300);
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::uint32_t>, PairHash>
      grid;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto gx = static_cast<std::int64_t>(std::floor(atoms[i].real() / cell));
    const auto gy = static_cast<std::int64_t>(std::floor(atoms[i].imag() / cell));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({gx + dx, gy + dy});
        if (it == grid.end()) continue;
        for (std::uint32_t j : it->second)
          if (std::abs(atoms[i] - atoms[j]) <= tol) unite(i, j);
      }
    grid[{gx, gy}].push_back(static_cast<std::uint32_t>(i));
  }

  struct Group {
    Complex centroid_num{0, 0};
    double total_d = 0.0;
    Rational total = 0;
    std::size_t first = 0;
    std::size_t members = 0;
  };
  std::unordered_map<std::size_t, Group> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] <= 0) throw std::invalid_argument("weights must be positive");
    Group& g = groups[find(i)];
    const double w = to_double(weights[i]);
    g.centroid_num += w * atoms[i];
    g.total_d += w;
    g.total += weights[i];
    if (g.members == 0) g.first = i;
    ++g.members;
  }

  DiscreteMeasure out;
  out.atoms_.reserve(groups.size());
  out.weights_.reserve(groups.size());
  std::vector<std::pair<Complex, Rational>> merged;
  merged.reserve(groups.size());
  Rational sum = 0;
  for (auto& [root, g] : groups) {
    // untouched atoms keep their exact position; only real merges average
    const Complex pos = g.members == 1 ? atoms[g.first] : g.centroid_num / g.total_d;
    merged.emplace_back(pos, g.total);
    sum += g.total;
  }
  if (sum != 1) {
    // renormalize exactly (used by components and raw restrictions)
    for (auto& [a, w] : merged) w /= sum;
  }
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    return a.first.real() != b.first.real() ? a.first.real() < b.first.real()
                                            : a.first.imag() < b.first.imag();
  });
  for (auto& [a, w] : merged) {
    out.atoms_.push_back(a);
    out.weights_.push_back(w);
  }
  return out;
}

DiscreteMeasure DiscreteMeasure::dirac(Complex z) {
  return normalized({z}, {Rational(1)});
}

double DiscreteMeasure::support_radius() const {
  double r = 0.0;
  for (const auto& a : atoms_) r = std::max(r, std::abs(a));
  return r;
}

DiscreteMeasure DiscreteMeasure::affine_image(Complex lambda, Complex t) const {
  std::vector<Complex> moved;
  moved.reserve(atoms_.size());
  for (const auto& a : atoms_) moved.push_back(lambda * a + t);
  return normalized(std::move(moved), weights_);
}

// ---- partitions -------------------------------------------------------------

PartitionSpec PartitionSpec::planar(int level, Complex offset) {
  DyadicLevel check(level);
  PartitionSpec s;
  s.kind = Kind::Planar;
  s.level = level;
  s.offset = offset;
  return s;
}

PartitionSpec PartitionSpec::line(int level, LineDirection w) {
  DyadicLevel check(level);
  PartitionSpec s;
  s.kind = Kind::Line;
  s.level = level;
  s.angle = w.angle;
  return s;
}

PartitionSpec PartitionSpec::join(int level, LineDirection w) {
  DyadicLevel check(level);
  PartitionSpec s;
  s.kind = Kind::Join;
  s.level = level;
  s.angle = w.angle;
  return s;
}

std::pair<std::int64_t, std::int64_t> PartitionSpec::key(Complex z) const {
  switch (kind) {
    case Kind::Planar:
      return {floor_scaled(z.real() - offset.real(), level),
              floor_scaled(z.imag() - offset.imag(), level)};
    case Kind::Line: {
      const Complex e = LineDirection(angle).unit();
      const double p = z.real() * e.real() + z.imag() * e.imag();
      return {floor_scaled(p, level), 0};
    }
    case Kind::Join: {
      const Complex e = LineDirection(angle).unit();
      const double p = z.real() * e.real() + z.imag() * e.imag();
      const double q = -z.real() * e.imag() + z.imag() * e.real();
      return {floor_scaled(p, level), floor_scaled(q, level)};
    }
  }
  return {0, 0};
}

double entropy(const DiscreteMeasure& mu, const PartitionSpec& spec) {
  return entropy_of_masses(cell_masses(mu, spec));
}

double entropy(const DiscreteMeasure& mu, DyadicLevel level) {
  return entropy(mu, PartitionSpec::planar(level.n));
}

double normalized_entropy(const DiscreteMeasure& mu, DyadicLevel level) {
  if (level.n == 0) return 0.0;
  return entropy(mu, level) / level.n;
}

double conditional_entropy(const DiscreteMeasure& mu, const PartitionSpec& fine,
                           const PartitionSpec& coarse) {
  if (fine.kind == coarse.kind && fine.level < coarse.level &&
      (fine.kind != PartitionSpec::Kind::Line || fine.angle == coarse.angle))
    throw std::invalid_argument("conditional entropy: fine level coarser than conditioning level");

  // group atom indices by coarse cell, then H(mu_F, fine) with exact masses
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::uint32_t>, PairHash>
      by_coarse;
  for (std::size_t i = 0; i < mu.size(); ++i)
    by_coarse[coarse.key(mu.atoms()[i])].push_back(static_cast<std::uint32_t>(i));

  double h = 0.0;
  for (const auto& [ckey, idx] : by_coarse) {
    Rational mass = 0;
    MassMap fine_masses;
    for (std::uint32_t i : idx) {
      mass += mu.weights()[i];
      fine_masses[fine.key(mu.atoms()[i])] += mu.weights()[i];
    }
    const double mf = to_double(mass);
    double hf = 0.0;
    for (const auto& [fkey, m] : fine_masses) {
      const double p = to_double(m / mass);
      if (p > 0.0) hf -= p * std::log2(p);
    }
    h += mf * hf;
  }
  return h;
}

// ---- components --------------------------------------------------------------

DiscreteMeasure component(const DiscreteMeasure& mu, const CellId& cell, bool rescaled) {
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (dyadic_cell(mu.atoms()[i], cell.level) == cell) {
      atoms.push_back(mu.atoms()[i]);
      weights.push_back(mu.weights()[i]);
    }
  }
  if (atoms.empty()) throw std::invalid_argument("component of a null cell");
  DiscreteMeasure raw = DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
  if (!rescaled) return raw;
  // T_D : t -> 2^n t + a_D maps the cell onto [0,1)^2
  const double scale = std::ldexp(1.0, cell.level);
  const Complex corner = cell_corner(cell);
  return raw.affine_image(scale, -scale * corner);
}

std::vector<CellComponent> level_components(const DiscreteMeasure& mu, int level) {
  DyadicLevel check(level);
  MassMap masses;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const CellId c = dyadic_cell(mu.atoms()[i], level);
    masses[{c.x, c.y}] += mu.weights()[i];
  }
  std::vector<CellComponent> out;
  out.reserve(masses.size());
  for (const auto& [key, m] : masses)
    out.push_back({CellId{key.first, key.second, level}, m});
  std::sort(out.begin(), out.end(), [](const CellComponent& a, const CellComponent& b) {
    return a.cell.x != b.cell.x ? a.cell.x < b.cell.x : a.cell.y < b.cell.y;
  });
  return out;
}

double component_expectation(const DiscreteMeasure& mu, int level_lo, int level_hi,
                             const std::function<double(const DiscreteMeasure&)>& statistic) {
  if (level_lo > level_hi) throw std::invalid_argument("empty level range");
  double total = 0.0;
  for (int lvl = level_lo; lvl <= level_hi; ++lvl) {
    for (const auto& cc : level_components(mu, lvl)) {
      const DiscreteMeasure comp = component(mu, cc.cell, /*rescaled=*/true);
      total += to_double(cc.mass) * statistic(comp);
    }
  }
  return total / static_cast<double>(level_hi - level_lo + 1);
}

// ---- projections / convolution ------------------------------------------------

DiscreteMeasure project(const DiscreteMeasure& mu, LineDirection w) {
  const Complex e = w.unit();
  std::vector<Complex> atoms;
  atoms.reserve(mu.size());
  for (const auto& a : mu.atoms())
    atoms.emplace_back(a.real() * e.real() + a.imag() * e.imag(), 0.0);
  return DiscreteMeasure::normalized(std::move(atoms), mu.weights());
}

DiscreteMeasure convolve(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         std::size_t budget) {
  if (mu.size() > budget / std::max<std::size_t>(nu.size(), 1))
    throw BudgetError("convolution atom-count product exceeds budget");
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  atoms.reserve(mu.size() * nu.size());
  weights.reserve(mu.size() * nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) {
      atoms.push_back(mu.atoms()[i] + nu.atoms()[j]);
      weights.push_back(mu.weights()[i] * nu.weights()[j]);
    }
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

// ---- tubes and balls -------------------------------------------------------------

double max_tube_mass(const DiscreteMeasure& mu, LineDirection w, double r) {
  // project onto the perpendicular; a tube of half-width r is a closed
  // interval of length 2r there. Sliding window over sorted projections
  // finds the exact optimum over all translates.
  const Complex e = w.unit();
  std::vector<std::pair<double, double>> proj;  // (perp coordinate, weight)
  proj.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Complex a = mu.atoms()[i];
    proj.emplace_back(-a.real() * e.imag() + a.imag() * e.real(), to_double(mu.weights()[i]));
  }
  std::sort(proj.begin(), proj.end());
  double best = 0.0, window = 0.0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < proj.size(); ++hi) {
    window += proj[hi].second;
    while (proj[hi].first - proj[lo].first > 2.0 * r) window -= proj[lo++].second;
    best = std::max(best, window);
  }
  return best;
}

double ball_mass(const DiscreteMeasure& mu, Complex center, double r) {
  double mass = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (std::abs(mu.atoms()[i] - center) <= r) mass += to_double(mu.weights()[i]);
  return mass;
}

TubeFrostmanReport tube_frostman_statistic(const DiscreteMeasure& mu,
                                           const std::vector<double>& radii,
                                           int direction_grid, bool golden_offset) {
  if (direction_grid < 8) throw std::invalid_argument("direction grid must be >= 8");
  const double offset = golden_offset ? 0.6180339887498949 : 0.0;
  TubeFrostmanReport report;
  std::vector<double> log_r, log_m;
  for (double r : radii) {
    double best = 0.0;
    for (int d = 0; d < direction_grid; ++d) {
      const LineDirection w(kPi * (d + offset) / direction_grid);
      best = std::max(best, max_tube_mass(mu, w, r));
    }
    report.max_tube_masses.emplace_back(r, best);
    if (best > 0.0 && best < 1.0) {
      log_r.push_back(std::log2(r));
      log_m.push_back(std::log2(best));
    }
  }
  report.rho = log_r.size() >= 2 ? fit_slope(log_r, log_m) : 0.0;
  return report;
}

// ---- comparison ----------------------------------------------------------------

MeasureCompareResult measure_equal(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                   double tol) {
  MeasureCompareResult res;
  if (a.size() != b.size()) {
    res.detail = "atom counts differ: " + std::to_string(a.size()) + " vs " +
                 std::to_string(b.size());
    Rational residue = 0;
    for (const auto& w : a.weights()) residue += w;
    for (const auto& w : b.weights()) residue += w;
    res.weight_residue = residue;
    return res;
  }

  const double cell = std::max(tol, 1e-300);
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::uint32_t>, PairHash>
      grid;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const auto gx = static_cast<std::int64_t>(std::floor(b.atoms()[j].real() / cell));
    const auto gy = static_cast<std::int64_t>(std::floor(b.atoms()[j].imag() / cell));
    grid[{gx, gy}].push_back(static_cast<std::uint32_t>(j));
  }
  std::vector<bool> used(b.size(), false);
  res.equal = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Complex z = a.atoms()[i];
    const auto gx = static_cast<std::int64_t>(std::floor(z.real() / cell));
    const auto gy = static_cast<std::int64_t>(std::floor(z.imag() / cell));
    // nearest unmatched candidate within tol; exact-weight matches win ties
    int best = -1;
    double best_d = 0.0;
    bool best_w = false;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({gx + dx, gy + dy});
        if (it == grid.end()) continue;
        for (std::uint32_t j : it->second) {
          if (used[j]) continue;
          const double d = std::abs(z - b.atoms()[j]);
          if (d > tol) continue;
          const bool w_ok = (a.weights()[i] == b.weights()[j]);
          if (best < 0 || (w_ok && !best_w) || (w_ok == best_w && d < best_d)) {
            best = static_cast<int>(j);
            best_d = d;
            best_w = w_ok;
          }
        }
      }
    if (best < 0) {
      res.equal = false;
      res.weight_residue += a.weights()[i];
      if (res.detail.empty())
        res.detail = "unmatched atom (" + std::to_string(z.real()) + "," +
                     std::to_string(z.imag()) + ")";
      continue;
    }
    used[static_cast<size_t>(best)] = true;
    res.max_atom_mismatch = std::max(res.max_atom_mismatch, best_d);
    if (a.weights()[i] != b.weights()[static_cast<size_t>(best)]) {
      res.equal = false;
      Rational diff = a.weights()[i] - b.weights()[static_cast<size_t>(best)];
      if (diff < 0) diff = -diff;
      res.weight_residue += diff;
      if (res.detail.empty())
        res.detail = "weight mismatch at (" + std::to_string(z.real()) + "," +
                     std::to_string(z.imag()) + "): " + format_rational(a.weights()[i]) +
                     " vs " + format_rational(b.weights()[static_cast<size_t>(best)]);
    }
  }
  return res;
}

// ---- streaming entropy ------------------------------------------------------------

std::size_t CellMassAccumulator::KeyHash::operator()(
    const std::pair<std::int64_t, std::int64_t>& k) const {
  return PairHash{}(k);
}

CellMassAccumulator::CellMassAccumulator(int finest_level) : level_(finest_level) {
  DyadicLevel check(finest_level);
}

void CellMassAccumulator::add(Complex z, const Rational& w) {
  masses_[{floor_scaled(z.real(), level_), floor_scaled(z.imag(), level_)}] += w;
}

std::vector<double> CellMassAccumulator::entropies(const std::vector<int>& levels) const {
  for (int lvl : levels)
    if (lvl > level_ || lvl < 0)
      throw std::invalid_argument("requested level above accumulator resolution");

  std::vector<int> order(levels.begin(), levels.end());
  std::sort(order.begin(), order.end(), std::greater<int>());

  std::unordered_map<std::pair<std::int64_t, std::int64_t>, Rational, KeyHash> current =
      masses_;
  int current_level = level_;
  std::unordered_map<int, double> by_level;
  for (int lvl : order) {
    while (current_level > lvl) {
      std::unordered_map<std::pair<std::int64_t, std::int64_t>, Rational, KeyHash> parent;
      parent.reserve(current.size() / 2 + 1);
      for (const auto& [key, m] : current) {
        // floor division by 2 (cell nesting is exact)
        const std::int64_t px = key.first >= 0 ? key.first / 2 : (key.first - 1) / 2;
        const std::int64_t py = key.second >= 0 ? key.second / 2 : (key.second - 1) / 2;
        parent[{px, py}] += m;
      }
      current = std::move(parent);
      --current_level;
    }
    double h = 0.0;
    for (const auto& [key, m] : current) {
      const double x = to_double(m);
      if (x > 0.0) h -= x * std::log2(x);
    }
    by_level[lvl] = h;
  }
  std::vector<double> out;
  out.reserve(levels.size());
  for (int lvl : levels) out.push_back(by_level[lvl]);
  return out;
}

DiscreteMeasure ifs_truncation(const Ifs& ifs, int depth, std::size_t budget) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  const auto k = static_cast<std::size_t>(ifs.size());
  std::size_t count = 1;
  for (int i = 0; i < depth; ++i) {
    if (count > budget / k) throw BudgetError("k^depth exceeds atom budget");
    count *= k;
  }
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  atoms.reserve(count);
  weights.reserve(count);
  std::vector<int> word(static_cast<size_t>(depth), 0);
  std::vector<Complex> prefix_lambda(static_cast<size_t>(depth) + 1, 1.0);
  std::vector<Complex> prefix_sum(static_cast<size_t>(depth) + 1, 0.0);
  std::vector<Rational> prefix_weight(static_cast<size_t>(depth) + 1, Rational(1));
  auto refresh_from = [&](int pos) {
    for (int j = pos; j < depth; ++j) {
      const Similarity& g = ifs.maps[static_cast<size_t>(word[static_cast<size_t>(j)])];
      prefix_sum[static_cast<size_t>(j) + 1] =
          prefix_sum[static_cast<size_t>(j)] + prefix_lambda[static_cast<size_t>(j)] * g.t;
      prefix_lambda[static_cast<size_t>(j) + 1] =
          prefix_lambda[static_cast<size_t>(j)] * g.lambda;
      prefix_weight[static_cast<size_t>(j) + 1] =
          prefix_weight[static_cast<size_t>(j)] *
          ifs.probs[static_cast<size_t>(word[static_cast<size_t>(j)])];
    }
  };
  refresh_from(0);
  while (true) {
    atoms.push_back(prefix_sum[static_cast<size_t>(depth)]);
    weights.push_back(prefix_weight[static_cast<size_t>(depth)]);
    int pos = depth - 1;
    while (pos >= 0 && word[static_cast<size_t>(pos)] + 1 >= ifs.size()) {
      word[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++word[static_cast<size_t>(pos)];
    refresh_from(pos);
  }
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace ssm
