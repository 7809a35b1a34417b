// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include "support.hpp"

#include "conjlab/regularity.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

using namespace conjlab;
using support::vec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const oracles::Example11Params kP(0.1);

const ConjugacyEvaluator& ev11() {
  static const ConjugacyEvaluator ev(example11_system(0.1));
  return ev;
}

double H11(double x) { return evaluate_H(ev11(), 0.0, vec(x))(0); }
double G11(double y) { return evaluate_G(ev11(), 0.0, vec(y))(0); }
double oH(double x) { return oracles::oracle_H_11(kP, x); }
double oG(double y) { return oracles::oracle_G_11(kP, y); }

Outcome oracle_agreement() {
  double h = 0.0, g = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double x = -3.0 + 6.0 * i / 40.0;
    const double y = -2.7 + 5.4 * i / 40.0;
    h = std::max(h, std::abs(H11(x) - oH(x)));
    g = std::max(g, std::abs(G11(y) - oG(y)));
  }
  return {h <= 1e-3 && g <= 2e-3, fmt("max|H-H_oracle|=%.3g (<=1e-3), max|G-G_oracle|=%.3g (<=2e-3)", h, g)};
}

Outcome anchors() {
  const bool exact = oH(1.0) == 0.9 && oH(-1.0) == -0.9 && oH(2.0) == 1.9 && oG(0.9) == 1.0;
  const double err = std::max({std::abs(H11(1.0) - 0.9), std::abs(H11(-1.0) + 0.9), std::abs(H11(2.0) - 1.9),
                               std::abs(G11(0.9) - 1.0)});
  return {exact && err <= 1e-3, fmt("oracle exact=%g, numeric max error %.3g (<=1e-3)", exact, err)};
}

Outcome lipschitz_sharpness() {
  const double L = estimate_lipschitz(sample_interval(oH, -3.0, 3.0, 121, dyadic_scales()));
  return {L >= 0.99 && L <= 1.000001, fmt("L=%.9f in [0.99, 1.000001]", L)};
}

Outcome holder_sharpness() {
  const HolderFit a = fit_holder_exponent(sample_modulus(oG, 0.0, dyadic_scales()));
  const oracles::Example11Params p2(0.2);
  const HolderFit b = fit_holder_exponent(
      sample_modulus([&](double y) { return oracles::oracle_G_11(p2, y); }, 0.0, dyadic_scales()));
  const bool ok = std::abs(a.exponent - 0.9) <= 0.02 && a.r2 > 0.999 && std::abs(b.exponent - 0.8) <= 0.02 &&
                  b.r2 > 0.999;
  return {ok, fmt("eps=0.1: q=%.5f r2=%.6f; eps=0.2: q=%.5f r2=%.6f", a.exponent, a.r2, b.exponent, b.r2)};
}

Outcome non_c1() {
  const OneSidedDerivatives d = one_sided_derivatives(oH, 0.0, dyadic_scales());
  const bool ok = d.conclusive() && std::abs(d.right) <= 1e-3 && std::abs(d.left - 0.8538) <= 1e-3;
  return {ok, fmt("right=%.3g (<=1e-3), left=%.6f (0.8538 +- 1e-3)", d.right, d.left)};
}

Outcome non_lipschitz() {
  const NonLipschitzResult r = detect_non_lipschitz(oG, 0.0, dyadic_scales(5, 20));
  bool increasing = true;
  for (std::size_t i = 1; i < r.trace.size(); ++i) increasing = increasing && r.trace[i].quotient > r.trace[i - 1].quotient;
  return {r.flagged && increasing,
          fmt("flagged=%g increasing=%g quotients %.5f -> %.5f", r.flagged, increasing, r.trace.front().quotient,
              r.trace.back().quotient)};
}

Outcome conjugation_identity() {
  double worst = 0.0;
  for (int i = 0; i <= 50; ++i) {
    const double t = 0.1 * i;
    const double x = oracles::oracle_solution_11(kP, oracles::SolutionBranch::Positive, t);
    worst = std::max(worst, std::abs(evaluate_H(ev11(), t, vec(x))(0) - 0.9 * std::exp(-t)));
  }
  return {worst <= 1e-3, fmt("max|H(t,x(t)) - 0.9e^-t| over 51 times = %.3g (<=1e-3)", worst)};
}

Outcome picard() {
  ConjugacyOptions opt;
  opt.tol = 1e-10;
  const ConjugacyEvaluator ev(example211_system(0.5), opt);
  int iters = 0;
  double gerr = 0.0;
  for (double y : {-2.0, -0.5, 0.0, 0.7, 2.0}) {
    const GEvaluation g = evaluate_G_detailed(ev, 0.0, vec(y));
    iters = std::max(iters, g.iterations);
    gerr = std::max(gerr, std::abs(g.value(0) - y - 0.5));
  }
  const double bound = ev11().system().pert.theta * ev11().system().cert.k + 0.05;
  double ratio = 0.0;
  for (double y : {-2.0, -0.6, -0.05, 0.05, 0.45, 0.85, 2.0}) {
    const GEvaluation g = evaluate_G_detailed(ev11(), 0.0, vec(y));
    for (std::size_t m = 1; m < g.defects.size() && g.defects[m - 1] >= 1e-13; ++m) {
      ratio = std::max(ratio, g.defects[m] / g.defects[m - 1]);
    }
  }
  return {iters <= 2 && gerr <= 1e-8 && ratio <= bound,
          fmt("delta=0.5: %g iterations, |g-0.5|=%.3g; worst defect ratio %.4f (<= %.2f)", iters, gerr, ratio, bound)};
}

Outcome gronwall() {
  const ScenarioSystem sys = example11_system(0.1);
  std::mt19937 rng(support::kSeed);
  std::uniform_real_distribution<double> coord(-2.0, 2.0), span(-3.0, 3.0), start(-1.0, 1.0);
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    const double t0 = start(rng);
    if (!gronwall_check(sys, t0, vec(coord(rng)), vec(coord(rng)), t0 + span(rng), 1e-3).pass) ++failures;
  }
  const GronwallResult w = gronwall_check(sys, 0.0, vec(1.0), vec(0.5), 1.0, 1e-3);
  const bool ok = failures == 0 && w.pass && std::abs(w.lhs - 0.203285) <= 1e-4 &&
                  std::abs(w.rhs - 0.335160) <= 1e-4;
  return {ok, fmt("%g of 100 pairs violate; worked pair LHS=%.6f RHS=%.6f", failures, w.lhs, w.rhs)};
}

Outcome constants() {
  const ContractionCertificate cert{1.0, 1.0};
  const RegularityConstants rc = compute_regularity_constants(cert, 0.1, 0.3);
  const bool ok = rc.admissible && std::abs(rc.p1 - 2.5624) <= 1e-3 && std::abs(rc.q - 0.3581) <= 1e-3 &&
                  std::abs(rc.lambda_lower_bound - 0.9246) <= 1e-3 && verify_constraints(cert, 0.1, 0.3, rc).all();
  return {ok, fmt("p1=%.5f q=%.5f lambda_lower=%.5f, constraints re-verified=%g", rc.p1, rc.q,
                  rc.lambda_lower_bound, verify_constraints(cert, 0.1, 0.3, rc).all())};
}

Outcome c1_case() {
  const auto h = [](double x) { return oracles::oracle_H_29(0.1, x); };
  // 2^-30 is just below 1e-9.
  const OneSidedDerivatives d = one_sided_derivatives(h, 0.0, dyadic_scales(5, 30));
  RegularityProbe probe;
  probe.scales = dyadic_scales(5, 30);
  const RegularityReport r = probe_regularity(h, probe);
  const bool ok = d.conclusive() && std::abs(d.right) <= 1e-2 && std::abs(d.left) <= 1e-2 && !r.non_c1;
  return {ok, fmt("right=%.3g left=%.3g (<=1e-2), non_c1=%g", d.right, d.left, r.non_c1)};
}

Outcome spectrum() {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = -1.0;
  D(1, 1) = -2.0;
  const SpectrumResult a = dichotomy_spectrum_constant(D);
  const SpectrumResult b = dichotomy_spectrum_constant(scalar_matrix(-1.0 + 0.1));
  const bool ok = a.intervals.size() == 2 && a.intervals[0] == std::pair{-2.0, -2.0} &&
                  a.intervals[1] == std::pair{-1.0, -1.0} && b.intervals.size() == 1 &&
                  std::abs(b.intervals[0].first + 0.9) <= 1e-12 && std::abs(b.intervals[0].second + 0.9) <= 1e-12;
  return {ok, fmt("diag(-1,-2): [%g,%g] u [%g,%g]", a.intervals[0].first, a.intervals[0].second,
                  a.intervals.back().first, a.intervals.back().second) +
                  fmt("; -1 + 0.1: [%g,%g]", b.intervals[0].first, b.intervals[0].second)};
}

Outcome property_suites() {
  std::vector<std::string> failed;
  std::mt19937 rng(support::kSeed);

  const TimeMatrixField A = diagonal_periodic({-1.0, -0.5, -2.0}, {0.5, 0.3, 1.0}, 2.0);
  std::uniform_real_distribution<double> time(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const double s = time(rng), r = time(rng), t = time(rng);
    const Matrix rhs = transition_matrix(A, t, s, 1e-3);
    const Matrix lhs = transition_matrix(A, t, r, 1e-3) * transition_matrix(A, r, s, 1e-3);
    if ((lhs - rhs).norm() > 1e-9 * std::max(1.0, rhs.norm())) {
      failed.push_back("cocycle");
      break;
    }
  }

  const TimeMatrixField A1 = constant_field(scalar_matrix(-1.0));
  const VectorField f = example11_system(0.1).pert.f;
  const double exact = 0.5 * std::exp(-1.8);
  const double coarse = std::abs(flow(A1, f, 0.0, vec(0.5), 2.0, 0.2)(0) - exact);
  const double fine = std::abs(flow(A1, f, 0.0, vec(0.5), 2.0, 0.1)(0) - exact);
  if (coarse / fine < 12.0) failed.push_back("solver order");

  std::vector<Vector> pts;
  for (int i = 0; i <= 20; ++i) pts.push_back(vec(-2.0 + 0.2 * i));
  if (roundtrip_residual(ev11(), 0.0, pts).roundtrip_residual > 2e-3) failed.push_back("roundtrip");

  for (double eps : {0.05, 0.1, 0.2, 0.3}) {
    const oracles::Example11Params p(eps);
    const oracles::PiecewiseMap H = oracles::example11_H(p);
    const oracles::PiecewiseMap G = oracles::example11_G(p);
    bool cont = true, inverse = true, mono = true;
    for (const oracles::PiecewiseMap* m : {&H, &G}) {
      for (double b : m->breakpoints()) {
        for (const auto& br : m->branches()) {
          if ((br.guard.lo == b || br.guard.hi == b) && std::abs(br.value(b) - (*m)(b)) > 1e-12) cont = false;
        }
      }
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i) {
      const double x = -3.0 + 6.0 * i / 1000.0;
      if (std::abs(G(H(x)) - x) > 1e-12 * std::max(1.0, std::abs(x))) inverse = false;
      if (!(H(x) > prev)) mono = false;
      prev = H(x);
    }
    if (!cont) failed.push_back(fmt("breakpoint continuity eps=%g", eps));
    if (!inverse) failed.push_back(fmt("inverse identity eps=%g", eps));
    if (!mono) failed.push_back(fmt("monotonicity eps=%g", eps));
  }

  const ScenarioSystem& sys = ev11().system();
  const RegularityConstants rc = compute_regularity_constants(sys.cert, sys.pert.C1, sys.pert.C2);
  std::uniform_real_distribution<double> u(-2.0, 2.0), d(-0.999, 0.999);
  bool induction = true;
  for (int i = 0; i < 10; ++i) {
    const double a = u(rng), b = a + d(rng);
    const GEvaluation ga = evaluate_G_detailed(ev11(), 0.0, vec(a));
    const GEvaluation gb = evaluate_G_detailed(ev11(), 0.0, vec(b));
    for (std::size_t m = 0; m < std::min(ga.endpoint_iterates.size(), gb.endpoint_iterates.size()); ++m) {
      const double gap = (ga.endpoint_iterates[m] - gb.endpoint_iterates[m]).norm();
      if (gap > rc.lambda * std::pow(std::abs(a - b), rc.q) + 1e-6) induction = false;
    }
  }
  if (!induction) failed.push_back("induction bound");

  std::string detail = "cocycle, solver order, roundtrip, breakpoint continuity, inverse identity, "
                       "monotonicity, induction bound";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& s : failed) detail += " " + s + ";";
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 oracle agreement", oracle_agreement},
      {"AC2 anchor values", anchors},
      {"AC3 Lipschitz sharpness", lipschitz_sharpness},
      {"AC4 Holder sharpness", holder_sharpness},
      {"AC5 non-C1 detection", non_c1},
      {"AC6 non-Lipschitz detection", non_lipschitz},
      {"AC7 conjugation identity", conjugation_identity},
      {"AC8 Picard convergence", picard},
      {"AC9 flow separation bound", gronwall},
      {"AC10 constants calculator", constants},
      {"AC11 C1 case", c1_case},
      {"AC12 spectrum", spectrum},
      {"AC13 property suites", property_suites},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %-30s %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
