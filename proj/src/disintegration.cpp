#include "ssm/disintegration.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ssm {

Complex complex_power(Complex base, Complex expo) {
  if (base.imag() == 0.0 && base.real() <= 0.0)
    throw std::invalid_argument("lambda on (-inf,0]: principal branch undefined");
  // integer exponents by repeated multiplication keep identities exact
  const double er = expo.real();
  if (expo.imag() == 0.0 && er == std::floor(er) && std::abs(er) <= 64.0) {
    Complex acc = 1.0;
    Complex b = er >= 0 ? base : 1.0 / base;
    for (int i = 0; i < static_cast<int>(std::abs(er)); ++i) acc *= b;
    return acc;
  }
  return std::exp(expo * std::log(base));
}

int BlockIndex::total() const {
  int s = 0;
  for (int c : counts) s += c;
  return s;
}

std::string BlockIndex::label() const {
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(counts[i]);
  }
  return s;
}

BlockIndex psi(const Word& word, int k) {
  BlockIndex idx;
  idx.counts.assign(static_cast<size_t>(k), 0);
  for (int s : word.symbols) {
    if (s < 1 || s > k) throw std::out_of_range("word symbol outside {1..k}");
    ++idx.counts[static_cast<size_t>(s - 1)];
  }
  return idx;
}

std::vector<BlockIndex> block_index_set(int k, int r) {
  std::vector<BlockIndex> out;
  std::vector<int> counts(static_cast<size_t>(k), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == k - 1) {
      counts[static_cast<size_t>(pos)] = left;
      out.push_back(BlockIndex{counts});
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[static_cast<size_t>(pos)] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, r);
  return out;
}

DisintegrationPlan::DisintegrationPlan(std::vector<Complex> translations_,
                                       std::vector<Rational> probs_,
                                       std::vector<Complex> betas_, int r, int s)
    : translations(std::move(translations_)),
      probs(std::move(probs_)),
      betas(std::move(betas_)),
      block_len(r),
      split_period(s) {
  if (translations.empty()) throw std::invalid_argument("plan needs translations");
  if (translations.size() != probs.size() || translations.size() != betas.size())
    throw std::invalid_argument("translations/probs/betas length mismatch");
  if (!is_probability_vector(probs))
    throw std::invalid_argument("probabilities must be positive and sum to 1");
  if (std::abs(betas[0] - Complex(1.0, 0.0)) > 1e-15)
    throw std::invalid_argument("beta_1 must equal 1");
  if (block_len < 2) throw std::invalid_argument("block length r must be >= 2");
  if (split_period < 2) throw std::invalid_argument("split period s must be >= 2");
}

Ifs DisintegrationPlan::base_ifs(Complex lambda) const {
  std::vector<Similarity> maps;
  maps.reserve(translations.size());
  for (std::size_t i = 0; i < translations.size(); ++i)
    maps.emplace_back(complex_power(lambda, betas[i]), translations[i]);
  return Ifs(std::move(maps), probs);
}

namespace {

Rational rational_pow(const Rational& base, int e) {
  Rational acc = 1;
  for (int i = 0; i < e; ++i) acc *= base;
  return acc;
}

// enumerate {1..k}^r words with composed translation and product weight
void enumerate_base_words(const DisintegrationPlan& plan, Complex lambda, int depth,
                          std::size_t budget,
                          const std::function<void(const std::vector<int>&, Complex,
                                                   const Rational&)>& sink) {
  const int k = plan.symbol_count();
  std::size_t count = 1;
  for (int i = 0; i < depth; ++i) {
    if (count > budget / static_cast<std::size_t>(k))
      throw BudgetError("k^depth exceeds budget");
    count *= static_cast<std::size_t>(k);
  }
  std::vector<Complex> lambdas(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i)
    lambdas[static_cast<size_t>(i)] = complex_power(lambda, plan.betas[static_cast<size_t>(i)]);

  std::vector<int> word(static_cast<size_t>(depth), 1);
  std::vector<Complex> prefix_lambda(static_cast<size_t>(depth) + 1, 1.0);
  std::vector<Complex> prefix_sum(static_cast<size_t>(depth) + 1, 0.0);
  std::vector<Rational> prefix_weight(static_cast<size_t>(depth) + 1, Rational(1));
  auto refresh_from = [&](int pos) {
    for (int j = pos; j < depth; ++j) {
      const int s = word[static_cast<size_t>(j)] - 1;
      prefix_sum[static_cast<size_t>(j) + 1] =
          prefix_sum[static_cast<size_t>(j)] +
          prefix_lambda[static_cast<size_t>(j)] * plan.translations[static_cast<size_t>(s)];
      prefix_lambda[static_cast<size_t>(j) + 1] =
          prefix_lambda[static_cast<size_t>(j)] * lambdas[static_cast<size_t>(s)];
      prefix_weight[static_cast<size_t>(j) + 1] =
          prefix_weight[static_cast<size_t>(j)] * plan.probs[static_cast<size_t>(s)];
    }
  };
  refresh_from(0);
  while (true) {
    sink(word, prefix_sum[static_cast<size_t>(depth)], prefix_weight[static_cast<size_t>(depth)]);
    int pos = depth - 1;
    while (pos >= 0 && word[static_cast<size_t>(pos)] == k) {
      word[static_cast<size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++word[static_cast<size_t>(pos)];
    refresh_from(pos);
  }
}

}  // namespace

BlockModel build_block_model(const DisintegrationPlan& plan, Complex lambda,
                             std::size_t budget) {
  const int k = plan.symbol_count();
  const int r = plan.block_len;

  const auto index_set = block_index_set(k, r);
  std::map<std::vector<int>, std::size_t> index_of;
  for (std::size_t i = 0; i < index_set.size(); ++i) index_of[index_set[i].counts] = i;

  std::vector<Complex> gammas(index_set.size());
  std::vector<Complex> linear(index_set.size());
  for (std::size_t i = 0; i < index_set.size(); ++i) {
    Complex gamma = 0.0;
    for (int j = 0; j < k; ++j)
      gamma += static_cast<double>(index_set[i].counts[static_cast<size_t>(j)]) *
               plan.betas[static_cast<size_t>(j)];
    gammas[i] = gamma;
    linear[i] = complex_power(lambda, gamma);
    if (!(std::abs(linear[i]) < 1.0))
      throw std::invalid_argument("block linear part |lambda^gamma| >= 1 for counts " +
                                  index_set[i].label());
  }

  // gather translations per count vector, in lexicographic word order
  std::vector<std::vector<Complex>> translations(index_set.size());
  enumerate_base_words(plan, lambda, r, budget,
                       [&](const std::vector<int>& word, Complex t, const Rational&) {
                         BlockIndex bi = psi(Word(word), k);
                         translations[index_of.at(bi.counts)].push_back(t);
                       });

  std::vector<std::string> names;
  std::vector<Ifs> systems;
  std::vector<Rational> q;
  names.reserve(index_set.size());
  systems.reserve(index_set.size());
  for (std::size_t i = 0; i < index_set.size(); ++i) {
    const auto k_n = static_cast<long>(translations[i].size());
    Rational p_word = 1;
    for (int j = 0; j < k; ++j)
      p_word *= rational_pow(plan.probs[static_cast<size_t>(j)],
                             index_set[i].counts[static_cast<size_t>(j)]);
    q.push_back(Rational(k_n) * p_word);

    std::vector<Similarity> maps;
    std::vector<Rational> probs;
    maps.reserve(static_cast<size_t>(k_n));
    for (const auto& t : translations[i]) {
      maps.emplace_back(linear[i], t);
      probs.emplace_back(1, k_n);
    }
    names.push_back(index_set[i].label());
    systems.emplace_back(std::move(maps), std::move(probs));
  }

  BlockModel bm{Model(std::move(names), std::move(systems),
                      SelectionProcess::bernoulli(std::move(q), 0)),
                index_set, gammas};
  return bm;
}

MeasureCompareResult verify_disintegration(const DisintegrationPlan& plan, Complex lambda,
                                           int depth_blocks, std::size_t budget) {
  const int r = plan.block_len;
  const int m = depth_blocks;
  if (m < 1) throw std::invalid_argument("need at least one block");

  // left side: depth r*m truncation of the self-similar measure
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  enumerate_base_words(plan, lambda, r * m, budget,
                       [&](const std::vector<int>&, Complex t, const Rational& w) {
                         atoms.push_back(t);
                         weights.push_back(w);
                       });
  const DiscreteMeasure lhs = DiscreteMeasure::normalized(std::move(atoms), std::move(weights));

  // right side: sum over omega' in I(r)^m of P(omega') eta^(omega')
  const BlockModel bm = build_block_model(plan, lambda, budget);
  const auto& q = bm.model.selection.marginal;
  const int idx_count = bm.model.index_count();

  std::vector<Complex> r_atoms;
  std::vector<Rational> r_weights;
  std::vector<int> omega(static_cast<size_t>(m), 0);
  while (true) {
    Rational p_omega = 1;
    for (int s : omega) p_omega *= q[static_cast<size_t>(s)];
    enumerate_eta(
        bm.model, omega,
        [&](Complex z, const Rational& w) {
          r_atoms.push_back(z);
          r_weights.push_back(p_omega * w);
        },
        budget);
    int pos = m - 1;
    while (pos >= 0 && omega[static_cast<size_t>(pos)] + 1 >= idx_count) {
      omega[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++omega[static_cast<size_t>(pos)];
  }
  const DiscreteMeasure rhs =
      DiscreteMeasure::normalized(std::move(r_atoms), std::move(r_weights));
  return measure_equal(lhs, rhs);
}

namespace {

// flat index of a tuple over I^s, first coordinate most significant
std::vector<std::vector<int>> tuples(int base, int len) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(static_cast<size_t>(len), 0);
  while (true) {
    out.push_back(t);
    int pos = len - 1;
    while (pos >= 0 && t[static_cast<size_t>(pos)] + 1 >= base) {
      t[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++t[static_cast<size_t>(pos)];
  }
  return out;
}

std::string tuple_name(const BlockModel& bm, const std::vector<int>& tup) {
  std::string s;
  for (std::size_t i = 0; i < tup.size(); ++i) {
    if (i) s.push_back('|');
    s += bm.index_set[static_cast<size_t>(tup[i])].label();
  }
  return s;
}

}  // namespace

SplitModels split_model(const DisintegrationPlan& plan, Complex lambda, std::size_t budget) {
  const int s = plan.split_period;
  const BlockModel bm = build_block_model(plan, lambda, budget);
  const auto& q = bm.model.selection.marginal;
  const auto idx_tuples = tuples(bm.model.index_count(), s);

  std::vector<std::string> names;
  std::vector<Ifs> prime_systems, dprime_systems;
  std::vector<Rational> q_prime;
  names.reserve(idx_tuples.size());

  for (const auto& tup : idx_tuples) {
    Complex lin = 1.0;
    Rational q_tup = 1;
    for (int i : tup) {
      lin *= bm.model.lambda(i);
      q_tup *= q[static_cast<size_t>(i)];
    }
    names.push_back(tuple_name(bm, tup));
    q_prime.push_back(q_tup);

    // Sigma': translations of the final block, premultiplied by the linear
    // parts of the first s-1 blocks so that eta' sums the s | n terms of
    // the original series (the identity eta = eta' * eta'' needs the
    // within-group prefix on the translation)
    const Ifs& last = bm.model.systems[static_cast<size_t>(tup.back())];
    {
      Complex prefix = 1.0;
      for (int l = 0; l + 1 < s; ++l) prefix *= bm.model.lambda(tup[static_cast<size_t>(l)]);
      std::vector<Similarity> maps;
      std::vector<Rational> probs;
      const auto k_last = static_cast<long>(last.maps.size());
      for (const auto& map : last.maps) {
        maps.emplace_back(lin, prefix * map.t);
        probs.emplace_back(1, k_last);
      }
      prime_systems.emplace_back(std::move(maps), std::move(probs));
    }

    // Sigma'': compositions over blocks 1..s-1, uniform weights
    {
      std::vector<Complex> trans{Complex(0.0, 0.0)};
      Complex prefix = 1.0;
      for (int l = 0; l + 1 < s; ++l) {
        const Ifs& sys = bm.model.systems[static_cast<size_t>(tup[static_cast<size_t>(l)])];
        std::vector<Complex> next;
        next.reserve(trans.size() * sys.maps.size());
        for (const auto& t0 : trans)
          for (const auto& map : sys.maps) next.push_back(t0 + prefix * map.t);
        trans = std::move(next);
        prefix *= bm.model.lambda(tup[static_cast<size_t>(l)]);
      }
      std::vector<Similarity> maps;
      std::vector<Rational> probs;
      const auto k_all = static_cast<long>(trans.size());
      for (const auto& t : trans) {
        maps.emplace_back(lin, t);
        probs.emplace_back(1, k_all);
      }
      dprime_systems.emplace_back(std::move(maps), std::move(probs));
    }
  }

  SplitModels out{
      Model(names, std::move(prime_systems), SelectionProcess::bernoulli(q_prime, 0)),
      Model(names, std::move(dprime_systems), SelectionProcess::bernoulli(q_prime, 0)), s};
  return out;
}

MeasureCompareResult verify_split_identity(const DisintegrationPlan& plan, Complex lambda,
                                           const std::vector<int>& omega_blocks,
                                           std::size_t budget) {
  const int s = plan.split_period;
  if (omega_blocks.empty() || static_cast<int>(omega_blocks.size()) % s != 0)
    throw std::invalid_argument("block prefix length must be a positive multiple of s");
  const int m = static_cast<int>(omega_blocks.size()) / s;

  const BlockModel bm = build_block_model(plan, lambda, budget);
  const DiscreteMeasure lhs = eta_truncated(bm.model, omega_blocks, budget);

  // F(omega): group the block sequence into length-s tuples
  const SplitModels split = split_model(plan, lambda, budget);
  std::vector<int> grouped;
  grouped.reserve(static_cast<size_t>(m));
  const int base = bm.model.index_count();
  for (int j = 0; j < m; ++j) {
    int flat = 0;
    for (int l = 0; l < s; ++l)
      flat = flat * base + omega_blocks[static_cast<size_t>(j * s + l)];
    grouped.push_back(flat);
  }

  const DiscreteMeasure eta_prime = eta_truncated(split.keep_last, grouped, budget);
  const DiscreteMeasure eta_dprime = eta_truncated(split.drop_last, grouped, budget);
  return measure_equal(lhs, convolve(eta_prime, eta_dprime, budget));
}

double block_sdim_closed_form(const DisintegrationPlan& plan, Complex lambda) {
  const int r = plan.block_len;
  const BlockModel bm = build_block_model(plan, lambda);
  const double h_q = entropy_bits(bm.model.selection.marginal);
  const double h_p = entropy_bits(plan.probs);
  const double s_dim = similarity_dimension(plan.base_ifs(lambda));
  return (1.0 - h_q / (r * h_p)) * s_dim;
}

double base_min_separation(const DisintegrationPlan& plan, Complex lambda, int depth,
                           std::size_t budget) {
  return min_separation(plan.base_ifs(lambda), depth, budget);
}

NondegeneracyReport nondegeneracy_check(const DisintegrationPlan& plan, Complex lambda,
                                        double tol) {
  NondegeneracyReport report;
  const int k = plan.symbol_count();
  for (int i = 0; i < k; ++i) {
    const Complex li = complex_power(lambda, plan.betas[static_cast<size_t>(i)]);
    report.fixed_points.push_back(plan.translations[static_cast<size_t>(i)] / (1.0 - li));
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      min_gap = std::min(min_gap,
                         std::abs(report.fixed_points[static_cast<size_t>(i)] -
                                  report.fixed_points[static_cast<size_t>(j)]));
  report.min_fixed_point_gap = k > 1 ? min_gap : 0.0;
  report.shared_fixed_point = k > 1 && min_gap <= tol;

  if (k >= 2) {
    const Complex l2 = complex_power(lambda, plan.betas[1]);
    report.pair_root_value = lambda * plan.translations[1] - l2 * plan.translations[0] +
                             plan.translations[0] - plan.translations[1];
    report.pair_root_condition = std::abs(report.pair_root_value) <= tol;
  }

  const BlockModel bm = build_block_model(plan, lambda);
  report.block_model_non_degenerate = bm.model.non_degenerate(tol);
  return report;
}

}  // namespace ssm
