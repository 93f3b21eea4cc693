#include "ssm/model.hpp"

#include <algorithm>
#include <cmath>

#include "ssm/rng.hpp"

namespace ssm {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_stochastic_rows(const std::vector<std::vector<Rational>>& matrix) {
  const std::size_t n = matrix.size();
  if (n == 0) throw std::invalid_argument("empty transition matrix");
  for (const auto& row : matrix) {
    if (row.size() != n) throw std::invalid_argument("transition matrix must be square");
    Rational sum = 0;
    for (const auto& p : row) {
      if (p < 0) throw std::invalid_argument("negative transition probability");
      sum += p;
    }
    if (sum != 1) throw std::invalid_argument("transition rows must sum to 1");
  }
}

bool strongly_connected(const std::vector<std::vector<Rational>>& matrix) {
  const std::size_t n = matrix.size();
  auto reach = [&](bool transpose) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < n; ++w) {
        const Rational& p = transpose ? matrix[w][v] : matrix[v][w];
        if (p > 0 && !seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  return reach(false) && reach(true);
}

int sample_from(const std::vector<Rational>& probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += to_double(probs[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

SelectionProcess SelectionProcess::bernoulli(std::vector<Rational> marginal,
                                             std::uint64_t seed) {
  if (!is_probability_vector(marginal))
    throw std::invalid_argument("Bernoulli marginal must be a probability vector");
  SelectionProcess sp;
  sp.kind = Kind::Bernoulli;
  sp.marginal = std::move(marginal);
  sp.seed = seed;
  return sp;
}

SelectionProcess SelectionProcess::markov(std::vector<std::vector<Rational>> matrix,
                                          std::uint64_t seed) {
  require_stochastic_rows(matrix);
  if (!strongly_connected(matrix))
    throw std::invalid_argument("Markov chain must be irreducible (unique stationary vector)");
  SelectionProcess sp;
  sp.kind = Kind::Markov;
  sp.matrix = std::move(matrix);
  sp.seed = seed;
  return sp;
}

SelectionProcess SelectionProcess::fixed(std::vector<int> sequence) {
  if (sequence.empty()) throw std::invalid_argument("explicit sequence must be non-empty");
  for (int s : sequence)
    if (s < 0) throw std::invalid_argument("explicit sequence symbols must be >= 0");
  SelectionProcess sp;
  sp.kind = Kind::Explicit;
  sp.sequence = std::move(sequence);
  return sp;
}

int SelectionProcess::state_count() const {
  switch (kind) {
    case Kind::Bernoulli:
      return static_cast<int>(marginal.size());
    case Kind::Markov:
      return static_cast<int>(matrix.size());
    case Kind::Explicit:
      return 1 + *std::max_element(sequence.begin(), sequence.end());
  }
  return 0;
}

std::vector<Rational> stationary_vector(const std::vector<std::vector<Rational>>& matrix) {
  // solve pi (P - I) = 0 with sum pi = 1 by exact Gaussian elimination;
  // the last equation is replaced by the normalization.
  const std::size_t n = matrix.size();
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1, Rational(0)));
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t row = 0; row < n; ++row) a[col][row] = matrix[row][col];
    a[col][col] -= 1;
  }
  for (std::size_t row = 0; row < n; ++row) a[n - 1][row] = 1;
  a[n - 1][n] = 1;

  for (std::size_t col = 0, row = 0; col < n && row < n; ++col) {
    std::size_t pivot = row;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) continue;
    std::swap(a[pivot], a[row]);
    const Rational inv = a[row][col];
    for (auto& v : a[row]) v /= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == row || a[r][col] == 0) continue;
      const Rational f = a[r][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[row][c];
    }
    ++row;
  }
  std::vector<Rational> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n];
  if (!is_probability_vector(pi))
    throw std::invalid_argument("stationary vector is not unique or not positive");
  return pi;
}

std::vector<Rational> SelectionProcess::invariant_marginal() const {
  switch (kind) {
    case Kind::Bernoulli:
      return marginal;
    case Kind::Markov:
      return stationary_vector(matrix);
    case Kind::Explicit: {
      const int states = state_count();
      std::vector<Rational> freq(static_cast<size_t>(states), Rational(0));
      const Rational share(1, static_cast<long>(sequence.size()));
      for (int s : sequence) freq[static_cast<size_t>(s)] += share;
      return freq;
    }
  }
  return {};
}

std::vector<int> SelectionProcess::generate(int n) const {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n));
  if (kind == Kind::Explicit) {
    for (int i = 0; i < n; ++i)
      out.push_back(sequence[static_cast<size_t>(i) % sequence.size()]);
    return out;
  }
  Rng rng(seed);
  if (kind == Kind::Bernoulli) {
    for (int i = 0; i < n; ++i) out.push_back(sample_from(marginal, rng.next_double()));
    return out;
  }
  const auto pi = stationary_vector(matrix);
  int state = sample_from(pi, rng.next_double());
  for (int i = 0; i < n; ++i) {
    out.push_back(state);
    state = sample_from(matrix[static_cast<size_t>(state)], rng.next_double());
  }
  return out;
}

// ---- Model -------------------------------------------------------------------

Model::Model(std::vector<std::string> names_, std::vector<Ifs> systems_, SelectionProcess sel)
    : names(std::move(names_)), systems(std::move(systems_)), selection(std::move(sel)) {
  if (systems.empty()) throw std::invalid_argument("model needs at least one system");
  if (names.size() != systems.size())
    throw std::invalid_argument("system name count mismatch");
  for (const auto& ifs : systems)
    if (!ifs.is_homogeneous())
      throw std::invalid_argument("every system must be homogeneous (one linear part)");
  if (selection.state_count() > index_count())
    throw std::invalid_argument("selection process references unknown system index");
  if (selection.kind != SelectionProcess::Kind::Explicit &&
      selection.state_count() != index_count())
    throw std::invalid_argument("selection marginal size must match the index set");
}

double Model::r_min() const {
  double r = 1.0;
  for (int i = 0; i < index_count(); ++i) r = std::min(r, contraction(i));
  return r;
}

double Model::r_max() const {
  double r = 0.0;
  for (int i = 0; i < index_count(); ++i) r = std::max(r, contraction(i));
  return r;
}

double Model::support_radius() const {
  double max_t = 0.0;
  for (const auto& ifs : systems) max_t = std::max(max_t, ifs.max_translation());
  return max_t / (1.0 - r_max()) * 1.01;
}

bool Model::non_degenerate(double tol) const {
  for (const auto& ifs : systems)
    for (std::size_t j = 1; j < ifs.maps.size(); ++j)
      if (std::abs(ifs.maps[j].t - ifs.maps[0].t) > tol) return true;
  return false;
}

double Model::max_rotation_imaginary() const {
  double v = 0.0;
  const auto marginal = selection.invariant_marginal();
  for (int i = 0; i < index_count(); ++i)
    if (static_cast<size_t>(i) < marginal.size() && marginal[static_cast<size_t>(i)] > 0)
      v = std::max(v, std::abs(rotation(i).imag()));
  return v;
}

std::vector<int> Model::omega(int n, const std::vector<int>& pinned) const {
  for (int s : pinned)
    if (s < 0 || s >= index_count())
      throw std::out_of_range("pinned omega symbol outside index set");
  std::vector<int> out = selection.generate(n);
  for (std::size_t i = 0; i < pinned.size() && i < out.size(); ++i) out[i] = pinned[i];
  return out;
}

std::size_t word_space_size(const Model& model, const std::vector<int>& omega,
                            std::size_t budget) {
  std::size_t count = 1;
  for (int s : omega) {
    if (s < 0 || s >= model.index_count())
      throw std::out_of_range("omega symbol outside index set");
    const auto k = static_cast<std::size_t>(model.branch_count(s));
    if (count > budget / k) throw BudgetError("word space exceeds atom budget");
    count *= k;
  }
  return count;
}

void enumerate_eta(const Model& model, const std::vector<int>& omega,
                   const std::function<void(Complex, const Rational&)>& sink,
                   std::size_t budget) {
  const int n = static_cast<int>(omega.size());
  if (n == 0) throw std::invalid_argument("omega prefix must be non-empty");
  word_space_size(model, omega, budget);

  // odometer over X_n^(omega) with incremental prefix products
  std::vector<int> word(static_cast<size_t>(n), 0);  // 0-based branch choice
  std::vector<Complex> prefix_lambda(static_cast<size_t>(n) + 1, 1.0);
  std::vector<Complex> prefix_sum(static_cast<size_t>(n) + 1, 0.0);
  std::vector<Rational> prefix_weight(static_cast<size_t>(n) + 1, Rational(1));
  for (int j = 0; j < n; ++j)
    prefix_lambda[static_cast<size_t>(j) + 1] =
        prefix_lambda[static_cast<size_t>(j)] * model.lambda(omega[static_cast<size_t>(j)]);

  auto refresh_from = [&](int pos) {
    for (int j = pos; j < n; ++j) {
      const Ifs& sys = model.systems[static_cast<size_t>(omega[static_cast<size_t>(j)])];
      const int c = word[static_cast<size_t>(j)];
      prefix_sum[static_cast<size_t>(j) + 1] =
          prefix_sum[static_cast<size_t>(j)] +
          prefix_lambda[static_cast<size_t>(j)] * sys.maps[static_cast<size_t>(c)].t;
      prefix_weight[static_cast<size_t>(j) + 1] =
          prefix_weight[static_cast<size_t>(j)] * sys.probs[static_cast<size_t>(c)];
    }
  };
  refresh_from(0);
  while (true) {
    sink(prefix_sum[static_cast<size_t>(n)], prefix_weight[static_cast<size_t>(n)]);
    int pos = n - 1;
    while (pos >= 0 && word[static_cast<size_t>(pos)] + 1 >=
                           model.branch_count(omega[static_cast<size_t>(pos)])) {
      word[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++word[static_cast<size_t>(pos)];
    refresh_from(pos);
  }
}

DiscreteMeasure eta_truncated(const Model& model, const std::vector<int>& omega,
                              std::size_t budget) {
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  atoms.reserve(word_space_size(model, omega, budget));
  enumerate_eta(
      model, omega,
      [&](Complex z, const Rational& w) {
        atoms.push_back(z);
        weights.push_back(w);
      },
      budget);
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

MeasureCompareResult verify_dynamic_self_similarity(const Model& model,
                                                    const std::vector<int>& omega, int k,
                                                    std::size_t budget) {
  const int n = static_cast<int>(omega.size());
  if (k < 1 || k >= n) throw std::invalid_argument("need 1 <= k < |omega|");

  const DiscreteMeasure lhs = eta_truncated(model, omega, budget);

  const std::vector<int> head(omega.begin(), omega.begin() + k);
  const std::vector<int> tail(omega.begin() + k, omega.end());
  const DiscreteMeasure eta_tail = eta_truncated(model, tail, budget);

  Complex lambda_prod = 1.0;
  for (int j = 0; j < k; ++j) lambda_prod *= model.lambda(omega[static_cast<size_t>(j)]);

  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  enumerate_eta(
      model, head,
      [&](Complex t_u, const Rational& p_u) {
        for (std::size_t i = 0; i < eta_tail.size(); ++i) {
          atoms.push_back(lambda_prod * eta_tail.atoms()[i] + t_u);
          weights.push_back(p_u * eta_tail.weights()[i]);
        }
      },
      budget);
  const DiscreteMeasure rhs = DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
  return measure_equal(lhs, rhs);
}

MeasureCompareResult verify_convolution_decomposition(const Model& model,
                                                      const std::vector<int>& omega, int k,
                                                      int tail, std::size_t budget) {
  const int np = k_prime(model, omega, k);
  if (np + tail > static_cast<int>(omega.size()))
    throw std::invalid_argument("omega prefix too short for n' + tail");

  const std::vector<int> full(omega.begin(), omega.begin() + np + tail);
  const DiscreteMeasure lhs = eta_truncated(model, full, budget);

  const std::vector<int> head(omega.begin(), omega.begin() + np);
  const std::vector<int> shifted(omega.begin() + np, omega.begin() + np + tail);
  const DiscreteMeasure nu = eta_truncated(model, head, budget);

  Complex lambda_prod = 1.0;
  for (int j = 0; j < np; ++j) lambda_prod *= model.lambda(omega[static_cast<size_t>(j)]);
  const DiscreteMeasure tau =
      eta_truncated(model, shifted, budget).affine_image(lambda_prod, 0.0);

  return measure_equal(lhs, convolve(nu, tau, budget));
}

double model_sdim(const Model& model) {
  const auto marginal = model.selection.invariant_marginal();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < model.index_count(); ++i) {
    const double q = static_cast<size_t>(i) < marginal.size()
                         ? to_double(marginal[static_cast<size_t>(i)])
                         : 0.0;
    if (q == 0.0) continue;
    num += q * entropy_bits(model.systems[static_cast<size_t>(i)].probs);
    den -= q * std::log2(model.contraction(i));
  }
  if (num == 0.0) return 0.0;
  return num / den;
}

double delta_n(const Model& model, const std::vector<int>& omega, std::size_t budget,
               double tol) {
  std::vector<Complex> points;
  points.reserve(word_space_size(model, omega, budget));
  enumerate_eta(
      model, omega, [&](Complex z, const Rational&) { points.push_back(z); }, budget);
  if (points.size() <= 1) return 0.0;
  return min_pairwise_distance(points, tol);
}

namespace {

double k_prime_radius(const Model& model) {
  // the k' definition needs 2R >= 1 and 2R r_min > 1/2
  double r = model.support_radius();
  r = std::max(r, 0.5 * 1.0000001);
  r = std::max(r, 0.25 * 1.0000001 / model.r_min());
  return r;
}

}  // namespace

int k_prime(const Model& model, const std::vector<int>& omega, int k) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  const double R = k_prime_radius(model);
  const double target = std::ldexp(1.0, -k);  // 2^-k
  double prod = 1.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    prod *= model.contraction(omega[i]);
    if (2.0 * R * prod <= target) return static_cast<int>(i) + 1;
  }
  throw std::invalid_argument("omega prefix too short to resolve k'");
}

int k_prime_cocycle_defect(const Model& model, const std::vector<int>& omega, int n, int k) {
  const int np = k_prime(model, omega, n);
  const std::vector<int> shifted(omega.begin() + np, omega.end());
  const int kp = k_prime(model, shifted, k);
  const int nkp = k_prime(model, omega, n + k);
  return std::abs(np + kp - nkp);
}

SkewOrbitReport skew_orbit(const Model& model, const std::vector<int>& omega,
                           LineDirection w0, int steps, int bins) {
  if (steps > static_cast<int>(omega.size()))
    throw std::invalid_argument("steps exceed omega prefix length");
  if (bins < 1) throw std::invalid_argument("need at least one bin");
  SkewOrbitReport report;
  report.bins = bins;
  report.occupation.assign(static_cast<size_t>(bins), 0.0);
  double angle = w0.angle;
  report.orbit.push_back(LineDirection(angle));
  for (int j = 0; j < steps; ++j) {
    angle -= std::arg(model.rotation(omega[static_cast<size_t>(j)]));
    report.orbit.push_back(LineDirection(angle));
  }
  for (const auto& dir : report.orbit) {
    auto bin = static_cast<std::size_t>(dir.angle / kPi * bins);
    if (bin >= static_cast<std::size_t>(bins)) bin = static_cast<std::size_t>(bins) - 1;
    report.occupation[bin] += 1.0 / static_cast<double>(report.orbit.size());
  }
  return report;
}

}  // namespace ssm
