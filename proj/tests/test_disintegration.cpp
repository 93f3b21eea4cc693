#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ssm/disintegration.hpp"

using namespace ssm;
using namespace ssm::test;

namespace {

DisintegrationPlan two_symbol_plan(int r = 2, int s = 2) {
  return DisintegrationPlan({{0.0, 0.0}, {1.0, 0.0}}, {R(1, 2), R(1, 2)},
                            {{1.0, 0.0}, {1.0, 0.0}}, r, s);
}

}  // namespace

TEST_CASE("complex power principal branch") {
  CHECK(std::abs(complex_power({0.5, 0.5}, {2.0, 0.0}) - Complex(0.0, 0.5)) < 1e-15);
  CHECK(std::abs(complex_power({0.25, 0.0}, {0.5, 0.0}) - Complex(0.5, 0.0)) < 1e-15);
  CHECK_THROWS_AS(complex_power({-0.5, 0.0}, {1.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(complex_power({0.0, 0.0}, {1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("psi counts symbol occurrences") {
  const BlockIndex idx = psi(Word({2, 1, 2, 3}), 3);
  CHECK(idx.counts == std::vector<int>{1, 2, 1});
  CHECK(psi(Word({1, 1}), 2).counts == std::vector<int>{2, 0});

  // |Psi^-1((1,1))| = 2 over {1,2}^2
  int hits = 0;
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b)
      if (psi(Word({a, b}), 2).counts == std::vector<int>{1, 1}) ++hits;
  CHECK(hits == 2);

  CHECK_THROWS_AS(psi(Word({1, 4}), 3), std::out_of_range);
}

TEST_CASE("block model construction") {
  const DisintegrationPlan plan = two_symbol_plan();
  const BlockModel bm = build_block_model(plan, {0.5, 0.0});

  REQUIRE(bm.model.index_count() == 3);
  // lexicographic count vectors: (0,2), (1,1), (2,0)
  CHECK(bm.index_set[0].counts == std::vector<int>{0, 2});
  CHECK(bm.index_set[1].counts == std::vector<int>{1, 1});
  CHECK(bm.index_set[2].counts == std::vector<int>{2, 0});

  const auto& q = bm.model.selection.marginal;
  CHECK(q[0] == R(1, 4));
  CHECK(q[1] == R(1, 2));
  CHECK(q[2] == R(1, 4));

  // the mixed system has two maps with uniform weights
  const Ifs& mixed = bm.model.systems[1];
  CHECK(mixed.size() == 2);
  CHECK(mixed.probs[0] == R(1, 2));
  CHECK(mixed.probs[1] == R(1, 2));
  // its linear part is lambda^2
  CHECK(std::abs(mixed.maps[0].lambda - Complex(0.25, 0.0)) < 1e-15);

  // zero translations build fine but the model is degenerate
  const DisintegrationPlan flat({{0.0, 0.0}, {0.0, 0.0}}, {R(1, 2), R(1, 2)},
                                {{1.0, 0.0}, {1.0, 0.0}}, 2, 2);
  const BlockModel degenerate = build_block_model(flat, {0.5, 0.0});
  CHECK_FALSE(degenerate.model.non_degenerate());
  CHECK(nondegeneracy_check(flat, {0.5, 0.0}).shared_fixed_point);

  // contraction violated for some gamma
  const DisintegrationPlan expanding({{0.0, 0.0}, {1.0, 0.0}}, {R(1, 2), R(1, 2)},
                                     {{1.0, 0.0}, {-1.0, 0.0}}, 2, 2);
  CHECK_THROWS_AS(build_block_model(expanding, {0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("disintegration identity") {
  // real lambda, one block
  CHECK(verify_disintegration(two_symbol_plan(), {0.5, 0.0}, 1).equal);
  // complex lambda, two blocks: 16-atom identity
  CHECK(verify_disintegration(two_symbol_plan(), {0.5, 0.5}, 2).equal);
  // three symbols
  const DisintegrationPlan three({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}},
                                 {R(1, 2), R(1, 4), R(1, 4)},
                                 {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}}, 2, 2);
  CHECK(verify_disintegration(three, {0.4, 0.2}, 2).equal);

  // negative control: corrupting the q mixture breaks the identity
  const DisintegrationPlan plan = two_symbol_plan();
  const BlockModel bm = build_block_model(plan, {0.5, 0.0});
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  const std::vector<Rational> corrupted{R(1, 2), R(1, 4), R(1, 4)};
  for (int i = 0; i < bm.model.index_count(); ++i) {
    const std::vector<int> omega{i};
    enumerate_eta(bm.model, omega, [&](Complex z, const Rational& w) {
      atoms.push_back(z);
      weights.push_back(corrupted[static_cast<size_t>(i)] * w);
    });
  }
  const DiscreteMeasure broken =
      DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
  std::vector<Complex> base_atoms;
  std::vector<Rational> base_weights;
  const Ifs base = plan.base_ifs({0.5, 0.0});
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b) {
      base_atoms.push_back(truncated_projection(base, Word({a, b})));
      base_weights.push_back(base.probs[static_cast<size_t>(a - 1)] *
                             base.probs[static_cast<size_t>(b - 1)]);
    }
  const DiscreteMeasure truth =
      DiscreteMeasure::normalized(std::move(base_atoms), std::move(base_weights));
  CHECK_FALSE(measure_equal(truth, broken).equal);
}

TEST_CASE("sdim closed form for the block model") {
  for (const Complex lambda : {Complex(0.5, 0.0), Complex(0.5, 0.5), Complex(0.3, 0.4)}) {
    for (int r : {2, 3, 4, 6}) {
      const DisintegrationPlan plan = two_symbol_plan(r);
      const BlockModel bm = build_block_model(plan, lambda);
      CHECK(model_sdim(bm.model) ==
            doctest::Approx(block_sdim_closed_form(plan, lambda)).epsilon(1e-12));
    }
    // non-uniform probabilities and three symbols
    const DisintegrationPlan three({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}},
                                   {R(1, 2), R(1, 3), R(1, 6)},
                                   {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}}, 3, 2);
    const BlockModel bm3 = build_block_model(three, lambda);
    CHECK(model_sdim(bm3.model) ==
          doctest::Approx(block_sdim_closed_form(three, lambda)).epsilon(1e-12));
  }
}

TEST_CASE("sdim ratio approaches the similarity dimension as r grows") {
  const Complex lambda{0.5, 0.3};
  double prev_ratio = 0.0;
  for (int r : {2, 4, 8, 12}) {
    const DisintegrationPlan plan = two_symbol_plan(r);
    const double ratio = block_sdim_closed_form(plan, lambda) /
                         similarity_dimension(plan.base_ifs(lambda));
    CHECK(ratio > prev_ratio);
    prev_ratio = ratio;
    // H(q) <= (k-1) log2(r+1) pins the convergence rate
    const double h_p = entropy_bits(plan.probs);
    CHECK(ratio >= 1.0 - std::log2(r + 1.0) / (r * h_p) - 1e-12);
  }
  CHECK(prev_ratio > 0.68);
}

TEST_CASE("split models") {
  const DisintegrationPlan plan = two_symbol_plan(2, 2);
  const Complex lambda{0.5, 0.5};
  const SplitModels split = split_model(plan, lambda);

  CHECK(split.keep_last.index_count() == 9);
  CHECK(split.drop_last.index_count() == 9);

  // sdim(Sigma') = sdim(Sigma)/s and sdim(Sigma'') = (1-1/s) sdim(Sigma)
  const BlockModel bm = build_block_model(plan, lambda);
  const double sdim_full = model_sdim(bm.model);
  CHECK(model_sdim(split.keep_last) == doctest::Approx(sdim_full / 2.0).epsilon(1e-12));
  CHECK(model_sdim(split.drop_last) ==
        doctest::Approx(sdim_full / 2.0).epsilon(1e-12));  // s = 2: both halves

  const DisintegrationPlan plan3 = two_symbol_plan(2, 3);
  const SplitModels split3 = split_model(plan3, lambda);
  CHECK(model_sdim(split3.keep_last) == doctest::Approx(sdim_full / 3.0).epsilon(1e-12));
  CHECK(model_sdim(split3.drop_last) ==
        doctest::Approx(sdim_full * 2.0 / 3.0).epsilon(1e-12));

  // eta = eta' * eta'' at matched truncations
  CHECK(verify_split_identity(plan, lambda, {0, 1}).equal);
  CHECK(verify_split_identity(plan, lambda, {2, 1, 1, 0}).equal);
  CHECK(verify_split_identity(plan3, {0.5, 0.0}, {0, 1, 2}).equal);
}

TEST_CASE("separation comparison between the split model and the base system") {
  const DisintegrationPlan plan = two_symbol_plan(2, 2);
  const Complex lambda{0.5, 0.0};
  const SplitModels split = split_model(plan, lambda);

  const double base_sep = base_min_separation(plan, lambda, 4);  // r*s*n with n = 1
  for (int i = 0; i < split.drop_last.index_count(); ++i) {
    const std::vector<int> omega{i};
    if (word_space_size(split.drop_last, omega) > 1)
      CHECK(delta_n(split.drop_last, omega) >= base_sep - 1e-12);
  }
}

TEST_CASE("nondegeneracy report") {
  // distinct fixed points 0 and 2
  const NondegeneracyReport basic = nondegeneracy_check(two_symbol_plan(), {0.5, 0.0});
  CHECK(std::abs(basic.fixed_points[0]) < 1e-15);
  CHECK(std::abs(basic.fixed_points[1] - Complex(2.0, 0.0)) < 1e-15);
  CHECK_FALSE(basic.shared_fixed_point);
  CHECK_FALSE(basic.pair_root_condition);
  CHECK(basic.block_model_non_degenerate);

  // beta = (1,2), t = (1,1): root value lambda(1 - lambda), nonzero inside the disk
  const DisintegrationPlan curved({{1.0, 0.0}, {1.0, 0.0}}, {R(1, 2), R(1, 2)},
                                  {{1.0, 0.0}, {2.0, 0.0}}, 2, 2);
  const NondegeneracyReport curved_rep = nondegeneracy_check(curved, {0.5, 0.3});
  const Complex lambda{0.5, 0.3};
  CHECK(std::abs(curved_rep.pair_root_value - lambda * (1.0 - lambda)) < 1e-12);
  CHECK_FALSE(curved_rep.pair_root_condition);
  CHECK(curved_rep.block_model_non_degenerate);
}
