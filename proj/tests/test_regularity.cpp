#include "support.hpp"

#include "conjlab/regularity.hpp"

#include <catch2/catch.hpp>

using namespace conjlab;

namespace {

const oracles::Example11Params kP(0.1);

double H11(double x) { return oracles::oracle_H_11(kP, x); }
double G11(double y) { return oracles::oracle_G_11(kP, y); }
double H29(double x) { return oracles::oracle_H_29(0.1, x); }

std::function<double(double)> power(double a) {
  return [a](double x) { return x >= 0.0 ? std::pow(x, a) : -std::pow(-x, a); };
}

}  // namespace

TEST_CASE("modulus samples") {
  const ModulusSample id = sample_modulus([](double x) { return x; }, 0.3, dyadic_scales(1, 8));
  REQUIRE(id.pairs.size() == 8);
  for (const auto& [s, gap] : id.pairs) CHECK(gap == Approx(s).margin(1e-15));
  CHECK(id.scale_range.first == std::ldexp(1.0, -8));
  CHECK(id.scale_range.second == 0.5);

  const ModulusSample g = sample_modulus(G11, 0.0, {0.01});
  CHECK(g.pairs[0].second == Approx(std::pow(0.01 / 0.9, 0.9)).epsilon(1e-12));
  CHECK(g.pairs[0].second == Approx(0.017425359).epsilon(1e-7));

  CHECK(sample_modulus(H11, 2.0, {0.5}).pairs[0].second == Approx(0.5).margin(1e-14));

  const auto dirs = default_directions(3);
  REQUIRE(dirs.size() == 7);
  for (const auto& d : dirs) CHECK(d.norm() == Approx(1.0));
  CHECK_THROWS_AS(sample_modulus(G11, 0.0, {0.0}), std::invalid_argument);
}

TEST_CASE("interval samples stay inside the interval") {
  const ModulusSample s = sample_interval(H11, -1.0, 1.0, 11, {0.5, 1.5});
  for (const auto& [sep, gap] : s.pairs) CHECK((sep == 0.5 || sep == 1.5));
  // Five bases in (-0.5, 0.5) have no partner at separation 1.5.
  CHECK(s.pairs.size() == 11 + 6);
  CHECK_THROWS_AS(sample_interval(H11, 1.0, -1.0, 11, {0.5}), std::invalid_argument);
}

TEST_CASE("Lipschitz estimates") {
  const double lip = estimate_lipschitz(sample_interval(H11, -3.0, 3.0, 121, dyadic_scales()));
  CHECK(lip >= 0.99);
  CHECK(lip <= 1.000001);
  CHECK(estimate_lipschitz(sample_interval([](double x) { return 2.0 * x; }, -1.0, 1.0, 21,
                                           dyadic_scales())) == Approx(2.0));
  // Steepest slope of x^(10/9) on [-3, 3] is at the ends.
  CHECK(estimate_lipschitz(sample_interval(H29, -3.0, 3.0, 121, dyadic_scales())) ==
        Approx(std::pow(3.0, 1.0 / 9.0)).margin(1e-3));
  CHECK_THROWS_AS(estimate_lipschitz(ModulusSample{}), EmptyInput);
}

TEST_CASE("Hölder fits recover power laws") {
  for (double a : {0.3, 0.5, 0.9, 1.0}) {
    const HolderFit fit = fit_holder_exponent(sample_modulus(power(a), 0.0, dyadic_scales()));
    INFO("a=" << a);
    CHECK(fit.exponent == Approx(a).margin(0.01));
    CHECK(fit.r2 > 0.999);
    CHECK(fit.points == 14);
  }
  CHECK(fit_holder_exponent(sample_modulus(G11, 0.0, dyadic_scales())).exponent ==
        Approx(0.9).margin(0.02));
  // The singular branch of G is on the positive side only.
  CHECK(fit_holder_exponent(sample_modulus(G11, 0.0, dyadic_scales(), -1.0)).exponent ==
        Approx(1.0).margin(1e-3));
  const oracles::Example11Params p2(0.2);
  const auto g2 = [&](double y) { return oracles::oracle_G_11(p2, y); };
  CHECK(fit_holder_exponent(sample_modulus(g2, 0.0, dyadic_scales())).exponent ==
        Approx(0.8).margin(0.02));

  CHECK_THROWS_AS(fit_holder_exponent(sample_modulus(G11, 0.0, dyadic_scales(5, 8))), DegenerateFit);
  CHECK_THROWS_AS(fit_holder_exponent(sample_modulus(G11, 0.0, dyadic_scales(5, 12))), DegenerateFit);
  CHECK_THROWS_AS(fit_holder_exponent(sample_modulus([](double) { return 1.0; }, 0.0, dyadic_scales())),
                  DegenerateFit);
}

TEST_CASE("one-sided derivatives") {
  const OneSidedDerivatives h = one_sided_derivatives(H11, 0.0, dyadic_scales());
  REQUIRE(h.conclusive());
  CHECK(std::abs(h.right) <= 1e-3);
  CHECK(h.left == Approx(std::pow(0.9, 1.5)).margin(1e-3));
  CHECK(h.left == Approx(0.853815).margin(1e-3));

  const OneSidedDerivatives id = one_sided_derivatives([](double x) { return x; }, 0.4, dyadic_scales());
  CHECK(id.right == Approx(1.0));
  CHECK(id.left == Approx(1.0));

  const OneSidedDerivatives h29 = one_sided_derivatives(H29, 0.0, dyadic_scales());
  CHECK(std::abs(h29.right) <= 1e-3);
  CHECK(std::abs(h29.left) <= 1e-3);

  const OneSidedDerivatives aff = one_sided_derivatives([](double x) { return 3.0 * x - 1.0; }, 2.0,
                                                        dyadic_scales());
  CHECK(std::abs(aff.right - aff.left) <= 1e-9);
}

TEST_CASE("divergent quotients are flagged for G only") {
  const auto scales = dyadic_scales();
  const NonLipschitzResult g = detect_non_lipschitz(G11, 0.0, scales);
  CHECK(g.flagged);
  CHECK(g.tail_monotone);
  for (std::size_t i = 1; i < g.trace.size(); ++i) CHECK(g.trace[i].quotient > g.trace[i - 1].quotient);
  const auto quotient = [](double s) { return std::pow(s / 0.9, 0.9) / s; };
  CHECK(g.trace.front().quotient == Approx(quotient(std::ldexp(1.0, -5))).epsilon(1e-10));
  CHECK(g.trace.back().quotient == Approx(quotient(std::ldexp(1.0, -20))).epsilon(1e-10));
  CHECK(g.trace.front().quotient == Approx(1.55488).epsilon(1e-5));
  CHECK(g.trace.back().quotient == Approx(4.39786).epsilon(1e-5));
  CHECK(g.tail_slope == Approx(0.1).margin(1e-6));

  CHECK_FALSE(detect_non_lipschitz(G11, 0.0, scales, -1.0).flagged);
  CHECK_FALSE(detect_non_lipschitz([](double x) { return x; }, 0.0, scales).flagged);
  CHECK_FALSE(detect_non_lipschitz(H11, 0.0, scales).flagged);
  CHECK_FALSE(detect_non_lipschitz(H11, 0.0, scales, -1.0).flagged);
  CHECK(detect_non_lipschitz([](double y) { return std::sqrt(std::abs(y)); }, 0.0, scales).flagged);

  CHECK_THROWS_AS(detect_non_lipschitz(G11, 0.0, dyadic_scales(5, 9)), std::invalid_argument);
  CHECK_THROWS_AS(detect_non_lipschitz(G11, 0.0, dyadic_scales(20, 5)), std::invalid_argument);
}

TEST_CASE("fits do not depend on sample order") {
  ModulusSample s = sample_modulus(G11, 0.0, dyadic_scales());
  const HolderFit a = fit_holder_exponent(s);
  std::mt19937 rng(support::kSeed);
  std::shuffle(s.pairs.begin(), s.pairs.end(), rng);
  sort_pairs(s);
  const HolderFit b = fit_holder_exponent(s);
  CHECK(a.exponent == b.exponent);
  CHECK(estimate_lipschitz(s) == estimate_lipschitz(sample_modulus(G11, 0.0, dyadic_scales())));
}

TEST_CASE("quotient trace CSV") {
  const NonLipschitzResult g = detect_non_lipschitz(G11, 0.0, dyadic_scales());
  const std::string csv = quotient_trace_csv(g.trace);
  CHECK(csv.rfind("scale,gap,quotient\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(g.trace.size()));
}

TEST_CASE("full probe classifies the closed forms") {
  const RegularityReport h = probe_regularity(H11);
  CHECK(h.non_c1);
  CHECK_FALSE(h.non_lipschitz);
  CHECK(h.lipschitz_estimate <= 1.000001);

  const RegularityReport g = probe_regularity(G11);
  CHECK(g.non_lipschitz);
  CHECK(g.holder_fitted);
  CHECK(g.holder_exponent == Approx(0.9).margin(0.02));
  CHECK(g.quotient_trace.size() == 16);

  const RegularityReport h29 = probe_regularity(H29);
  CHECK_FALSE(h29.non_c1);
  CHECK_FALSE(h29.non_lipschitz);
  CHECK(h29.derivatives_conclusive);
}
