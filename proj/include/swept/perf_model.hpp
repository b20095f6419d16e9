#pragma once

// Analytic cost of one swept sub-step: compute n^2 s per level plus two
// latencies per half cycle, amortised over n/2 levels.

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swept {

/// Overhead of building one component of side n, modelled as coeff * n seconds.
struct LinearOverhead {
  double coeff = 0.0;
  double operator()(int n) const { return coeff * n; }
};

struct CostParams {
  int n = 8;
  double s = 0.0;    // seconds per point per sub-step
  double tau = 0.0;  // seconds per message round
  LinearOverhead alpha_u;
  LinearOverhead alpha_d;
  LinearOverhead alpha_b;
};

/// Throws ValidationError unless s > 0, tau >= 0 and n is even and >= 4.
void validate(const CostParams& p);

/// [n^2 s * n/2 + alpha_u + alpha_d + 2 alpha_b + 2 tau] / (n/2)
double predict_full(const CostParams& p);

/// n^2 s + 4 tau / n
double predict_simplified(int n, double s, double tau);

struct OptimalN {
  int n = 0;              // brute-force minimiser
  double cost = 0.0;      // predict_simplified at n
  double analytic = 0.0;  // stationary point (2 tau / s)^(1/3)
};

/// Exhaustive scan over even n in [n_min, n_max]; ties go to the smaller n.
OptimalN optimal_n(double s, double tau, int n_min = 4, int n_max = 4096);

/// Nearest even integer to x (halves round up).
int round_to_even(double x);

struct Preset {
  std::string_view name;
  double value;
};

/// Typical one-way network latencies, seconds.
inline constexpr Preset kLatencyPresets[] = {
    {"EC2", 150e-6},
    {"GigE", 50e-6},
    {"100GigE", 5e-6},
    {"FDR-InfiniBand", 0.7e-6},
};

/// Seconds per point per sub-step, keyed by node and discretization.
inline constexpr Preset kStepCostPresets[] = {
    {"Nehalem-FE", 800e-9},
    {"Nehalem-FV", 40e-9},
    {"Nehalem-FD", 0.6e-9},
    {"Summit-FE", 200e-12},
    {"Summit-FV", 10e-12},
    {"Summit-FD", 150e-15},
};

/// Case-insensitive preset lookup. Throws ValidationError when absent.
double latency_preset(std::string_view name);
double step_cost_preset(std::string_view name);

struct CurvePoint {
  int n = 0;
  double s = 0.0;
  double tau = 0.0;
  double term_compute = 0.0;
  double term_latency = 0.0;
  double total = 0.0;
};

/// Even n from n_min to n_max inclusive.
std::vector<CurvePoint> model_curve(double s, double tau, int n_min, int n_max);

/// Header `n,s,tau,term_compute,term_latency,total`, one row per point.
void write_curve_csv(std::ostream& os, std::span<const CurvePoint> curve);

/// Least-squares s for T(n) = n^2 s from latency-free measurements.
double fit_step_cost(std::span<const int> n, std::span<const double> seconds_per_substep);

/// Least-squares c for T(n) = c * n through the origin, for overhead calibration.
double fit_linear_overhead(std::span<const int> n, std::span<const double> seconds);

}  // namespace swept
