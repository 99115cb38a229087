#include "doctest.h"
#include "heis/weights.hpp"

#include <cmath>
#include <numbers>

using namespace heis;

namespace {

constexpr double kPi = std::numbers::pi;

const Rules& rules1() {
  static const Rules r = make_rules(geometry_constants(1));
  return r;
}

const BallFamilySampler& radial_sampler() {
  static const BallFamilySampler s(rules1(), MCOracle{}, ApOptions{}, true);
  return s;
}

}  // namespace

TEST_CASE("weighted measure of balls") {
  const auto& R = rules1();
  CHECK(weighted_measure(Weight::unit(), Region::ball(1), R).value ==
        doctest::Approx(2 * kPi * kPi).epsilon(1e-10));
  CHECK(weighted_measure(Weight::power(-2), Region::ball(1), R).value ==
        doctest::Approx(4 * kPi * kPi).epsilon(1e-10));
  const double ratio = weighted_measure(Weight::power(-2), Region::ball(2), R).value /
                       weighted_measure(Weight::power(-2), Region::ball(1), R).value;
  CHECK(ratio == doctest::Approx(4.0).epsilon(1e-10));

  for (double g : {-3.5, -1.0, 0.5, 3.0}) {
    for (double rad : {0.25, 1.0, 7.0}) {
      const double exact = power_weight_ball_measure(g, rad, R.dims());
      CHECK(weighted_measure(Weight::power(g), Region::ball(rad), R).value ==
            doctest::Approx(exact).epsilon(1e-6));
    }
    const double h = 1e-3;
    const double slope = (std::log(weighted_measure(Weight::power(g), Region::ball(1 + h), R).value) -
                          std::log(weighted_measure(Weight::power(g), Region::ball(1 - h), R).value)) /
                         (std::log(1 + h) - std::log(1 - h));
    CHECK(std::abs(slope - (4 + g)) < 1e-4);
  }
}

TEST_CASE("non-integrable power weight is flagged") {
  const auto m = weighted_measure(Weight::power(-4), Region::ball(1), rules1());
  CHECK(m.status == Status::divergent);
  CHECK(std::isinf(power_weight_ball_measure(-4, 1, rules1().dims())));
  // Away from the origin the same weight is fine.
  const auto a = weighted_measure(Weight::power(-4), Region::shell(1, 2), rules1());
  CHECK(a.ok());
  CHECK(a.value == doctest::Approx(8 * kPi * kPi * std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("non-radial weight measure matches MC") {
  const auto& R = rules1();
  const Weight w = Weight::custom("1+x1^2", [](const HPoint& x) { return 1 + x[0] * x[0]; });
  const double polar = weighted_measure(w, Region::ball(1), R).value;
  const auto mc = mc_integrate(w.as_field(), Region::ball(1), R.dims(), MCOracle{7, 400000, {}});
  CHECK(std::abs(polar - mc.value.real()) < 3 * mc.std_error);
}

TEST_CASE("power weight A_p membership predicate") {
  const auto d = geometry_constants(1);
  CHECK(power_ap_membership(-2, 2, d));
  CHECK(power_ap_membership(0, 1, d));
  CHECK_FALSE(power_ap_membership(-4, 2, d));
  CHECK_FALSE(power_ap_membership(4, 1, d));
  CHECK_FALSE(power_ap_membership(4, 2, d));
  CHECK(power_ap_membership(3.9, 2, d));
}

TEST_CASE("A_p estimates on reference weights") {
  const auto& S = radial_sampler();
  for (double p : {1.0, 1.5, 2.0, 4.0}) {
    const auto rep = ap_constant_estimate(Weight::unit(), p, S);
    CHECK(rep.ap_estimate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.verdict == Verdict::member);
  }
  const auto m = ap_constant_estimate(Weight::power(-2), 2, S);
  CHECK(m.verdict == Verdict::member);
  CHECK(m.ap_estimate >= 1.0);
  CHECK(std::isfinite(m.ap_estimate));
  CHECK(m.ball_count == 13 + 9 * 3 * 13);

  const auto nm = ap_constant_estimate(Weight::power(4), 1, S);
  CHECK(nm.verdict == Verdict::non_member);
  CHECK(std::isinf(nm.ap_estimate));
}

TEST_CASE("A_p verdicts agree with the analytic predicate on the gamma x p grid") {
  const auto& S = radial_sampler();
  const auto d = rules1().dims();
  int agree = 0, total = 0;
  for (int k = -7; k <= 7; ++k) {
    const double g = 0.5 * k;
    for (double p : {1.0, 1.5, 2.0, 4.0}) {
      const auto rep = ap_constant_estimate(Weight::power(g), p, S);
      const bool expect = power_ap_membership(g, p, d);
      const Verdict want = expect ? Verdict::member : Verdict::non_member;
      CAPTURE(g);
      CAPTURE(p);
      CAPTURE(rep.note);
      CHECK(rep.verdict == want);
      if (std::isfinite(rep.ap_estimate)) CHECK(rep.ap_estimate >= 1.0 - 1e-12);
      agree += rep.verdict == want;
      ++total;
    }
  }
  CHECK(total == 60);
  CHECK(agree == 60);
}

TEST_CASE("A_p quotient monotonicity in p") {
  const auto& S = radial_sampler();
  for (double g : {-3.0, -1.0, 0.5, 1.5}) {
    const Weight w = Weight::power(g);
    const std::vector<double> ps = {1.25, 1.5, 2.0, 4.0};
    std::vector<std::vector<double>> q;
    for (double p : ps) q.push_back(ap_quotients(w, p, S));
    for (std::size_t a = 0; a + 1 < ps.size(); ++a) {
      const double e = (ps[a + 1] - 1) / (ps[a] - 1);
      for (std::size_t b = 0; b < q[a].size(); ++b) {
        if (!std::isfinite(q[a][b])) continue;
        CHECK(q[a + 1][b] <= q[a][b] * (1 + 1e-12));
        CHECK(q[a + 1][b] <= std::pow(q[a][b], e) * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("reverse Hölder quotient") {
  const auto& S = radial_sampler();
  for (double r : {1.5, 2.0, 5.0}) {
    CHECK(rh_constant_estimate(Weight::unit(), r, S).estimate == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Weight w = Weight::power(-2);
  CHECK_FALSE(rh_constant_estimate(w, 1.9, S).divergent);
  CHECK(rh_constant_estimate(w, 2.0, S).divergent);
  CHECK(rh_constant_estimate(w, 2.5, S).divergent);

  double prev = 0.0;
  for (double r : {1.1, 1.3, 1.5, 1.7, 1.9}) {
    const double q = rh_constant_estimate(w, r, S).estimate;
    CHECK(q >= prev);
    prev = q;
  }
}

TEST_CASE("critical reverse Hölder index") {
  const auto& R = rules1();
  CHECK(critical_index_estimate(Weight::power(-2), R) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(critical_index_estimate(Weight::power(-1), R) == doctest::Approx(4.0).epsilon(1e-5));
  CHECK(std::isinf(critical_index_estimate(Weight::power(1), R)));
  CHECK(std::isinf(critical_index_estimate(Weight::unit(), R)));
  CHECK(power_critical_index(-2, R.dims()) == 2.0);
  CHECK(std::isinf(power_critical_index(0, R.dims())));
}

TEST_CASE("doubling check") {
  const auto& R = rules1();
  const auto same = doubling_check(Weight::power(-2), 2, 2, {{Region::ball(1), Region::ball(1)}}, R);
  CHECK(same.measure_ratios[0] == doctest::Approx(1.0));
  CHECK(same.weight_ratios[0] == doctest::Approx(1.0));

  const auto rep = doubling_check(Weight::power(-2), 2, 1.9, {{Region::ball(1), Region::ball(2)}}, R);
  CHECK(rep.weight_ratios[0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(rep.measure_ratios[0] == doctest::Approx(1.0 / 16).epsilon(1e-12));
  CHECK(std::pow(1.0 / 16, 2) <= rep.weight_ratios[0]);
  CHECK(rep.weight_ratios[0] <= std::pow(1.0 / 16, 0.9 / 1.9));
  CHECK(rep.holds);

  const auto flat = doubling_check(Weight::unit(), 1, 2, {{Region::ball(0.5), Region::ball(3)}}, R);
  CHECK(flat.weight_ratios[0] == doctest::Approx(flat.measure_ratios[0]).epsilon(1e-12));

  std::vector<DoublingPair> shrinking;
  for (int k = 1; k <= 8; ++k) shrinking.push_back({Region::ball(std::ldexp(1.0, -k)), Region::ball(1)});
  CHECK(doubling_check(Weight::power(-2), 2, 1.9, shrinking, R).holds);
}

TEST_CASE("weighted average inequality") {
  const auto& R = rules1();
  const Field one = Field::constant(1.0);
  const auto a = weighted_average_check(Weight::power(-2), one, Region::ball(1), 2, R);
  CHECK(a.left == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(a.right == doctest::Approx(1.0).epsilon(1e-10));

  const Field h = Field::radial("|x|", [](double r) { return Complex(r); });
  const auto b = weighted_average_check(Weight::unit(), h, Region::ball(1), 2, R);
  CHECK(b.left == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(b.right == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-10));
  CHECK(b.ratio <= 1.0);

  const auto c = weighted_average_check(Weight::power(-1), h.scaled(3.5), Region::ball(2), 2, R);
  const auto c1 = weighted_average_check(Weight::power(-1), h, Region::ball(2), 2, R);
  CHECK(c.ratio == doctest::Approx(c1.ratio).epsilon(1e-12));
}

TEST_CASE("estimates are deterministic for a fixed seed") {
  const ApOptions o{2, 3, 1, 500};
  const BallFamilySampler a(rules1(), MCOracle{99, 1, {}}, o, true);
  const BallFamilySampler b(rules1(), MCOracle{99, 1, {}}, o, true);
  const auto qa = ap_quotients(Weight::power(-1.5), 2, a);
  const auto qb = ap_quotients(Weight::power(-1.5), 2, b);
  CHECK(qa == qb);
  const BallFamilySampler c(rules1(), MCOracle{100, 1, {}}, o, true);
  CHECK(ap_quotients(Weight::power(-1.5), 2, c) != qa);
}
