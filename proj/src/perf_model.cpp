#include "swept/perf_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "swept/error.hpp"

namespace swept {

void validate(const CostParams& p) {
  if (p.n < 4 || p.n % 2 != 0) throw ValidationError("n", "must be even and at least 4");
  if (!(p.s > 0.0) || !std::isfinite(p.s)) throw ValidationError("s", "must be positive and finite");
  if (!(p.tau >= 0.0) || !std::isfinite(p.tau)) throw ValidationError("tau", "must be non-negative and finite");
}

double predict_full(const CostParams& p) {
  validate(p);
  const double half = p.n / 2.0;
  const double n2s = static_cast<double>(p.n) * p.n * p.s;
  return (n2s * half + p.alpha_u(p.n) + p.alpha_d(p.n) + 2.0 * p.alpha_b(p.n) + 2.0 * p.tau) / half;
}

double predict_simplified(int n, double s, double tau) {
  return static_cast<double>(n) * n * s + 4.0 * tau / n;
}

OptimalN optimal_n(double s, double tau, int n_min, int n_max) {
  if (!(s > 0.0)) throw ValidationError("s", "must be positive");
  if (!(tau >= 0.0)) throw ValidationError("tau", "must be non-negative");
  if (n_min % 2 != 0) ++n_min;
  if (n_min < 4 || n_max < n_min) throw ValidationError("n_range", "needs an even n >= 4 within range");
  OptimalN best;
  best.analytic = std::cbrt(2.0 * tau / s);
  for (int n = n_min; n <= n_max; n += 2) {
    const double c = predict_simplified(n, s, tau);
    if (best.n == 0 || c < best.cost) {
      best.n = n;
      best.cost = c;
    }
  }
  return best;
}

int round_to_even(double x) { return 2 * static_cast<int>(std::floor(x / 2.0 + 0.5)); }

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
  });
}

template <std::size_t N>
double lookup(const Preset (&table)[N], std::string_view name, const char* field) {
  for (const Preset& p : table) {
    if (iequals(p.name, name)) return p.value;
  }
  std::string known;
  for (const Preset& p : table) known += (known.empty() ? "" : ", ") + std::string(p.name);
  throw ValidationError(field, "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace

double latency_preset(std::string_view name) { return lookup(kLatencyPresets, name, "tau"); }
double step_cost_preset(std::string_view name) { return lookup(kStepCostPresets, name, "s"); }

std::vector<CurvePoint> model_curve(double s, double tau, int n_min, int n_max) {
  if (n_min % 2 != 0) ++n_min;
  std::vector<CurvePoint> out;
  for (int n = std::max(n_min, 2); n <= n_max; n += 2) {
    CurvePoint c;
    c.n = n;
    c.s = s;
    c.tau = tau;
    c.term_compute = static_cast<double>(n) * n * s;
    c.term_latency = 4.0 * tau / n;
    c.total = c.term_compute + c.term_latency;
    out.push_back(c);
  }
  return out;
}

void write_curve_csv(std::ostream& os, std::span<const CurvePoint> curve) {
  const auto old_precision = os.precision(10);
  os << "n,s,tau,term_compute,term_latency,total\n";
  for (const CurvePoint& c : curve) {
    os << c.n << ',' << c.s << ',' << c.tau << ',' << c.term_compute << ',' << c.term_latency << ',' << c.total
       << '\n';
  }
  os.precision(old_precision);
}

double fit_step_cost(std::span<const int> n, std::span<const double> seconds_per_substep) {
  if (n.size() != seconds_per_substep.size() || n.empty()) throw ValidationError("fit", "needs matching samples");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double n2 = static_cast<double>(n[i]) * n[i];
    num += n2 * seconds_per_substep[i];
    den += n2 * n2;
  }
  return num / den;
}

double fit_linear_overhead(std::span<const int> n, std::span<const double> seconds) {
  if (n.size() != seconds.size() || n.empty()) throw ValidationError("fit", "needs matching samples");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    num += n[i] * seconds[i];
    den += static_cast<double>(n[i]) * n[i];
  }
  return num / den;
}

}  // namespace swept
