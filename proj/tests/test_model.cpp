#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ssm/model.hpp"
#include "ssm/rng.hpp"

using namespace ssm;
using namespace ssm::test;

namespace {

Model two_system_model(std::uint64_t seed = 1) {
  // A = {z/2, z/2+1}, B = {iz/2, iz/2+i}
  const Ifs a = half_shift_ifs();
  const Ifs b({Similarity({0.0, 0.5}, {0.0, 0.0}), Similarity({0.0, 0.5}, {0.0, 1.0})},
              {R(1, 2), R(1, 2)});
  return Model({"A", "B"}, {a, b},
               SelectionProcess::bernoulli({R(1, 2), R(1, 2)}, seed));
}

}  // namespace

TEST_CASE("eta truncation examples") {
  const Model single = single_system_model(half_shift_ifs());
  const DiscreteMeasure mu = eta_truncated(single, {0, 0});
  CHECK(mu.size() == 4);
  const DiscreteMeasure expected = DiscreteMeasure::normalized(
      {{0.0, 0.0}, {0.5, 0.0}, {1.0, 0.0}, {1.5, 0.0}},
      {R(1, 4), R(1, 4), R(1, 4), R(1, 4)});
  CHECK(measure_equal(mu, expected).equal);

  // singleton system: one atom at its translation
  const Ifs one({Similarity({0.5, 0.0}, {0.7, -0.2})}, {R(1)});
  const Model trivial = single_system_model(one);
  const DiscreteMeasure point = eta_truncated(trivial, {0});
  CHECK(point.size() == 1);
  CHECK(point.atoms()[0] == Complex(0.7, -0.2));

  const Model ab = two_system_model();
  const DiscreteMeasure mixed = eta_truncated(ab, {0, 1});
  const DiscreteMeasure mixed_expected = DiscreteMeasure::normalized(
      {{0.0, 0.0}, {0.0, 0.5}, {1.0, 0.0}, {1.0, 0.5}},
      {R(1, 4), R(1, 4), R(1, 4), R(1, 4)});
  CHECK(measure_equal(mixed, mixed_expected).equal);
}

TEST_CASE("eta weights always sum to exactly one") {
  const Model ab = two_system_model(5);
  for (int n : {1, 3, 6}) {
    const auto omega = ab.omega(n);
    Rational sum = 0;
    enumerate_eta(ab, omega, [&](Complex, const Rational& w) { sum += w; });
    CHECK(sum == R(1));
  }
}

TEST_CASE("eta support stays inside B(0,R)") {
  const Model ab = two_system_model(9);
  const double radius = ab.support_radius();
  const auto omega = ab.omega(8);
  enumerate_eta(ab, omega,
                [&](Complex z, const Rational&) { CHECK(std::abs(z) <= radius); });
}

TEST_CASE("dynamic self-similarity") {
  const Model ab = two_system_model(2);
  for (int k : {1, 2, 3}) {
    const auto omega = ab.omega(5);
    CHECK(verify_dynamic_self_similarity(ab, omega, k).equal);
  }

  // one-step relation at k = n-1
  const auto omega = ab.omega(4);
  CHECK(verify_dynamic_self_similarity(ab, omega, 3).equal);

  // twindragon model at every k
  const Model dragon = single_system_model(twindragon_ifs());
  for (int k : {1, 2, 4})
    CHECK(verify_dynamic_self_similarity(dragon, std::vector<int>(6, 0), k).equal);

  // negative control: a corrupted weight breaks the multiset identity
  const Ifs skewed({Similarity({0.5, 0.5}, {0.0, 0.0}), Similarity({0.5, 0.5}, {1.0, 0.0})},
                   {R(1, 3), R(2, 3)});
  const DiscreteMeasure lhs = eta_truncated(dragon, std::vector<int>(4, 0));
  const DiscreteMeasure rhs =
      eta_truncated(single_system_model(skewed), std::vector<int>(4, 0));
  const MeasureCompareResult cmp = measure_equal(lhs, rhs);
  CHECK_FALSE(cmp.equal);
  CHECK_FALSE(cmp.detail.empty());
}

TEST_CASE("convolution decomposition eta = nu * tau") {
  const Model ab = two_system_model(7);
  const auto omega = ab.omega(14);
  for (int k : {0, 1, 2}) {
    const auto res = verify_convolution_decomposition(ab, omega, k, 3);
    CHECK(res.equal);
  }

  const Model dragon = single_system_model(twindragon_ifs(), 3);
  CHECK(verify_convolution_decomposition(dragon, dragon.omega(16), 2, 4).equal);
}

TEST_CASE("model sdim") {
  CHECK(model_sdim(single_system_model(half_shift_ifs())) == doctest::Approx(1.0));

  // q = (1/2,1/2), H(p_A) = 1, H(p_B) = 2, r = 1/2 everywhere -> 3/2
  const Ifs a = half_shift_ifs();
  const Ifs b({Similarity({0.5, 0.0}, {0.0, 0.0}), Similarity({0.5, 0.0}, {1.0, 0.0}),
               Similarity({0.5, 0.0}, {0.0, 1.0}), Similarity({0.5, 0.0}, {1.0, 1.0})},
              {R(1, 4), R(1, 4), R(1, 4), R(1, 4)});
  const Model m({"A", "B"}, {a, b},
                SelectionProcess::bernoulli({R(1, 2), R(1, 2)}, 1));
  CHECK(model_sdim(m) == doctest::Approx(1.5));

  // every branch deterministic -> zero entropy -> sdim 0
  const Ifs single({Similarity({0.5, 0.0}, {1.0, 0.0})}, {R(1)});
  CHECK(model_sdim(single_system_model(single)) == 0.0);

  // sdim of a constant model equals the similarity dimension of its system
  const Ifs mixed({Similarity({0.5, 0.0}, {0.0, 0.0}), Similarity({0.5, 0.0}, {1.0, 0.0})},
                  {R(1, 4), R(3, 4)});
  CHECK(model_sdim(single_system_model(mixed)) ==
        doctest::Approx(similarity_dimension(mixed)));
}

TEST_CASE("markov and explicit selection") {
  const std::vector<std::vector<Rational>> matrix{{R(1, 2), R(1, 2)},
                                                  {R(1, 4), R(3, 4)}};
  const auto pi = stationary_vector(matrix);
  CHECK(pi[0] == R(1, 3));
  CHECK(pi[1] == R(2, 3));

  CHECK_THROWS_AS(SelectionProcess::markov({{R(1), R(0)}, {R(0), R(1)}}, 1),
                  std::invalid_argument);

  const auto explicit_freq = SelectionProcess::fixed({0, 1, 0}).invariant_marginal();
  CHECK(explicit_freq[0] == R(2, 3));
  CHECK(explicit_freq[1] == R(1, 3));

  // explicit sequences cycle deterministically
  const auto seq = SelectionProcess::fixed({0, 1, 0}).generate(7);
  CHECK(seq == std::vector<int>{0, 1, 0, 0, 1, 0, 0});

  // seeded draws reproduce and pinning overrides the head
  const Model ab = two_system_model(123);
  CHECK(ab.omega(10) == ab.omega(10));
  const auto pinned = ab.omega(6, {1, 1, 0});
  CHECK(pinned[0] == 1);
  CHECK(pinned[1] == 1);
  CHECK(pinned[2] == 0);
}

TEST_CASE("delta_n") {
  const Model single = single_system_model(half_shift_ifs());
  CHECK(delta_n(single, {0, 0, 0}) == doctest::Approx(0.25));

  const Ifs one({Similarity({0.5, 0.0}, {1.0, 0.0})}, {R(1)});
  CHECK(delta_n(single_system_model(one), {0, 0}) == 0.0);

  // Delta_{n+j} <= Delta_n along every tested prefix
  const Model ab = two_system_model(11);
  const auto omega = ab.omega(9);
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 2; n <= 9; ++n) {
    const std::vector<int> head(omega.begin(), omega.begin() + n);
    const double cur = delta_n(ab, head);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("k prime") {
  const Model single = single_system_model(half_shift_ifs());

  SUBCASE("definition holds with the model radius") {
    // support radius 2.02, all r = 1/2: the unique k' is k + 3
    const auto omega = single.omega(40);
    for (int k : {0, 1, 5, 10}) CHECK(k_prime(single, omega, k) == k + 3);
  }

  SUBCASE("monotone in k, defining inequalities, almost additive") {
    const Ifs fast({Similarity({0.25, 0.0}, {0.0, 0.0}),
                    Similarity({0.25, 0.0}, {1.0, 0.0})},
                   {R(1, 2), R(1, 2)});
    const Model mixed({"A", "B"}, {half_shift_ifs(), fast},
                      SelectionProcess::bernoulli({R(1, 2), R(1, 2)}, 17));
    const auto omega = mixed.omega(80);
    const double radius = mixed.support_radius();
    int prev = 0;
    for (int k = 0; k <= 20; ++k) {
      const int kp = k_prime(mixed, omega, k);
      CHECK(kp >= prev);
      prev = kp;
      double prod = 1.0;
      for (int i = 0; i < kp; ++i)
        prod *= mixed.contraction(omega[static_cast<size_t>(i)]);
      CHECK(2.0 * radius * prod <= std::ldexp(1.0, -k) * (1 + 1e-12));
      double prod_prev = 1.0;
      for (int i = 0; i + 1 < kp; ++i)
        prod_prev *= mixed.contraction(omega[static_cast<size_t>(i)]);
      CHECK(std::ldexp(1.0, -k) <= 2.0 * radius * prod_prev * (1 + 1e-12));
    }
    for (int n : {2, 5})
      for (int k : {1, 4, 9}) CHECK(k_prime_cocycle_defect(mixed, omega, n, k) <= 6);
  }

  CHECK_THROWS_AS(k_prime(single, {0, 0}, 30), std::invalid_argument);
}

TEST_CASE("skew orbit") {
  // trivial rotations give a constant orbit
  const Model flat = single_system_model(half_shift_ifs());
  const auto flat_orbit =
      skew_orbit(flat, std::vector<int>(10, 0), LineDirection(0.4), 10);
  for (const auto& dir : flat_orbit.orbit) CHECK(dir.angle == doctest::Approx(0.4));

  // quarter turn alternates between 0 and pi/2 in RP^1
  const Ifs quarter({Similarity({0.0, 0.5}, {0.0, 0.0}),
                     Similarity({0.0, 0.5}, {1.0, 0.0})},
                    {R(1, 2), R(1, 2)});
  const auto orbit = skew_orbit(single_system_model(quarter), std::vector<int>(6, 0),
                                LineDirection(0.0), 6);
  for (std::size_t j = 0; j < orbit.orbit.size(); ++j) {
    const double expected = (j % 2 == 0) ? 0.0 : 1.5707963267948966;
    CHECK(orbit.orbit[j].angle == doctest::Approx(expected).epsilon(1e-9));
  }

  // irrational rotation equidistributes: TV distance to uniform < 0.05
  const double alpha = 0.6180339887498949;  // golden ratio fractional part
  const Complex phi = std::polar(1.0, 3.14159265358979323846 * alpha);
  const Ifs irr({Similarity(0.5 * phi, {0.0, 0.0}), Similarity(0.5 * phi, {1.0, 0.0})},
                {R(1, 2), R(1, 2)});
  const int steps = 10000;
  const auto rep = skew_orbit(single_system_model(irr), std::vector<int>(steps, 0),
                              LineDirection(0.0), steps, 64);
  double tv = 0.0;
  for (double occ : rep.occupation) tv += std::abs(occ - 1.0 / 64.0);
  CHECK(tv / 2.0 < 0.05);
}

TEST_CASE("model validation") {
  const Ifs not_homog({Similarity({0.5, 0.0}, {0.0, 0.0}),
                       Similarity({0.4, 0.0}, {1.0, 0.0})},
                      {R(1, 2), R(1, 2)});
  CHECK_THROWS_AS(single_system_model(not_homog), std::invalid_argument);

  const Model dragon = single_system_model(twindragon_ifs());
  CHECK(dragon.non_degenerate());
  CHECK(dragon.max_rotation_imaginary() == doctest::Approx(std::sqrt(0.5)));

  const Model flat = single_system_model(half_shift_ifs());
  CHECK(flat.max_rotation_imaginary() == 0.0);

  CHECK_THROWS_AS(eta_truncated(flat, std::vector<int>(30, 0)), BudgetError);
}
