#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "swept/error.hpp"
#include "swept/perf_model.hpp"

namespace swept {
namespace {

double brute_force_min(double s, double tau, int n_min, int n_max, int* arg) {
  double best = INFINITY;
  for (int n = n_min; n <= n_max; n += 2) {
    const double c = static_cast<double>(n) * n * s + 4.0 * tau / n;
    if (c < best) {
      best = c;
      *arg = n;
    }
  }
  return best;
}

TEST(Predict, WorkedExample) {
  CostParams p;
  p.n = 8;
  p.s = 40e-9;
  p.tau = 150e-6;
  EXPECT_NEAR(predict_full(p), 7.756e-5, 1e-18);
  EXPECT_NEAR(predict_simplified(8, 40e-9, 150e-6), 7.756e-5, 1e-18);
}

TEST(Predict, LatencyFreeIsComputeOnly) {
  CostParams p;
  p.n = 12;
  p.s = 3e-9;
  EXPECT_DOUBLE_EQ(predict_full(p), 144 * 3e-9);
  EXPECT_DOUBLE_EQ(predict_simplified(24, 3e-9, 0.0), 4.0 * predict_simplified(12, 3e-9, 0.0));
}

TEST(Predict, FullEqualsSimplifiedWithoutOverheads) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> half(2, 2048);
  std::uniform_real_distribution<double> exponent(-15.0, -3.0);
  for (int k = 0; k < 1000; ++k) {
    CostParams p;
    p.n = 2 * half(rng);
    p.s = std::pow(10.0, exponent(rng));
    p.tau = std::pow(10.0, exponent(rng));
    const double simple = predict_simplified(p.n, p.s, p.tau);
    EXPECT_NEAR(predict_full(p), simple, 1e-14 * simple) << "n=" << p.n;
  }
}

TEST(Predict, OverheadsAddLinearly) {
  CostParams p;
  p.n = 8;
  p.s = 1e-9;
  p.tau = 1e-6;
  p.alpha_u.coeff = 1e-7;
  p.alpha_d.coeff = 2e-7;
  p.alpha_b.coeff = 3e-7;
  const double extra = (8e-7 + 16e-7 + 2 * 24e-7) / 4.0;
  EXPECT_NEAR(predict_full(p), predict_simplified(8, 1e-9, 1e-6) + extra, 1e-18);
}

TEST(Validate, RejectsBadParams) {
  CostParams p;
  p.s = 1e-9;
  EXPECT_NO_THROW(validate(p));
  p.n = 6;
  EXPECT_NO_THROW(validate(p));
  p.n = 7;
  EXPECT_THROW(validate(p), ValidationError);
  p.n = 8;
  p.tau = -1.0;
  EXPECT_THROW(validate(p), ValidationError);
  p.tau = 0.0;
  p.s = 0.0;
  EXPECT_THROW(validate(p), ValidationError);
}

TEST(OptimalN, ZeroLatencyPicksSmallest) {
  EXPECT_EQ(optimal_n(1e-9, 0.0).n, 4);
  EXPECT_EQ(optimal_n(1e-9, 0.0, 10, 100).n, 10);
}

TEST(OptimalN, FinitenessDifferenceExample) {
  const OptimalN o = optimal_n(0.6e-9, 150e-6);
  EXPECT_NEAR(o.analytic, std::cbrt(5e5), 1e-9);
  EXPECT_TRUE(o.n == 78 || o.n == 80) << o.n;
}

TEST(OptimalN, InfinibandFiniteVolumeMatchesScan) {
  int arg = 0;
  const double best = brute_force_min(40e-9, 0.7e-6, 4, 4096, &arg);
  const OptimalN o = optimal_n(40e-9, 0.7e-6);
  EXPECT_EQ(o.n, arg);
  EXPECT_EQ(o.cost, best);
}

TEST(OptimalN, ExhaustiveOverRandomPairs) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> exponent(-14.0, -4.0);
  for (int k = 0; k < 20; ++k) {
    const double s = std::pow(10.0, exponent(rng));
    const double tau = std::pow(10.0, exponent(rng));
    const OptimalN o = optimal_n(s, tau);
    for (int n = 4; n <= 4096; n += 2) ASSERT_LE(o.cost, predict_simplified(n, s, tau)) << "n=" << n;
    const double a = o.analytic;
    if (a >= 4.0 && a <= 4096.0) EXPECT_LE(std::abs(o.n - round_to_even(a)), 2) << "s=" << s << " tau=" << tau;
  }
}

TEST(OptimalN, PresetPairsNearAnalyticPoint) {
  for (const Preset& t : kLatencyPresets) {
    for (const Preset& s : kStepCostPresets) {
      const OptimalN o = optimal_n(s.value, t.value);
      if (o.analytic < 4.0 || o.analytic > 4096.0) continue;
      EXPECT_LE(std::abs(o.n - round_to_even(o.analytic)), 2) << t.name << " / " << s.name;
    }
  }
}

TEST(OptimalN, TiesGoToSmallerN) {
  // n^2 s + 4 tau / n takes the same value at n=4 and n=6 when tau = 60 s.
  const OptimalN o = optimal_n(1.0, 60.0, 4, 8);
  EXPECT_EQ(predict_simplified(4, 1.0, 60.0), predict_simplified(6, 1.0, 60.0));
  EXPECT_EQ(o.n, 4);
}

TEST(RoundToEven, NearestEven) {
  EXPECT_EQ(round_to_even(79.37), 80);
  EXPECT_EQ(round_to_even(78.9), 78);
  EXPECT_EQ(round_to_even(5.0), 6);
  EXPECT_EQ(round_to_even(4.99), 4);
}

// At the stationary point m the cost is 3 m^2 s while tau = m^3 s / 2, so the
// optimum beats one latency per sub-step exactly when m > 6.
TEST(LatencyBarrier, BrokenWheneverStationaryPointExceedsSix) {
  int broken = 0;
  int held = 0;
  for (const Preset& t : kLatencyPresets) {
    for (const Preset& s : kStepCostPresets) {
      const OptimalN o = optimal_n(s.value, t.value);
      if (o.analytic < 4.0 || o.analytic > 4096.0) continue;
      if (o.analytic > 6.5) {
        EXPECT_LT(o.cost, t.value) << t.name << " / " << s.name;
        ++broken;
      } else if (o.analytic < 5.5) {
        EXPECT_GE(o.cost, t.value) << t.name << " / " << s.name;
        ++held;
      }
    }
  }
  EXPECT_GT(broken, 10);
  EXPECT_GE(held, 1);
}

TEST(Presets, LookupIsCaseInsensitive) {
  EXPECT_EQ(latency_preset("ec2"), 150e-6);
  EXPECT_EQ(latency_preset("FDR-InfiniBand"), 0.7e-6);
  EXPECT_EQ(step_cost_preset("nehalem-fv"), 40e-9);
  EXPECT_EQ(step_cost_preset("Summit-FD"), 150e-15);
  EXPECT_THROW(latency_preset("carrier-pigeon"), ValidationError);
}

TEST(Curve, UShapedWithCsvHeader) {
  const auto curve = model_curve(40e-9, 150e-6, 4, 64);
  ASSERT_EQ(curve.size(), 31u);
  std::size_t min_at = 0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    EXPECT_DOUBLE_EQ(curve[k].total, curve[k].term_compute + curve[k].term_latency);
    if (curve[k].total < curve[min_at].total) min_at = k;
    if (k > 0) {
      EXPECT_GT(curve[k].term_compute, curve[k - 1].term_compute);
      EXPECT_LT(curve[k].term_latency, curve[k - 1].term_latency);
    }
  }
  EXPECT_GT(min_at, 0u);
  EXPECT_LT(min_at, curve.size() - 1);
  EXPECT_EQ(curve[min_at].n, optimal_n(40e-9, 150e-6, 4, 64).n);
  std::ostringstream os;
  write_curve_csv(os, curve);
  std::string header;
  std::getline(std::istringstream(os.str()) >> std::ws, header);
  EXPECT_EQ(header, "n,s,tau,term_compute,term_latency,total");
}

TEST(Fit, RecoversStepCostAndOverhead) {
  const std::vector<int> n{8, 16, 32, 64};
  std::vector<double> t;
  std::vector<double> lin;
  for (int v : n) {
    t.push_back(v * v * 2.5e-8);
    lin.push_back(v * 3e-7);
  }
  EXPECT_NEAR(fit_step_cost(n, t), 2.5e-8, 1e-20);
  EXPECT_NEAR(fit_linear_overhead(n, lin), 3e-7, 1e-20);
  EXPECT_THROW(fit_step_cost(n, std::vector<double>{1.0}), ValidationError);
}

}  // namespace
}  // namespace swept
