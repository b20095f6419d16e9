#pragma once

// Timing harness shared by `swept2d bench` and the acceptance suite.

#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "swept/engines.hpp"
#include "swept/kernels.hpp"

namespace swept {

enum class EngineKind { Serial, Classic, Swept };

EngineKind parse_engine(const std::string& name);
const char* to_string(EngineKind engine);

/// Which duration a measurement reports: real elapsed time, or the slowest
/// rank's modelled time (EngineReport::modeled), which stays meaningful when
/// ranks share fewer cores than there are ranks.
enum class TimingClock { Wall, Modeled };

TimingClock parse_clock(const std::string& name);
const char* to_string(TimingClock clock);

struct EngineRun {
  GlobalField field;  // gathered, shift (0, 0)
  EngineReport report;
};

/// Runs one engine from the kernel's initial condition on an in-process
/// transport behind a LatencyTransport with latency `tau`. Swept needs
/// `substeps` to be a multiple of n.
EngineRun run_engine(EngineKind engine, const KernelSetup& kernel, const Topology& topo, std::int64_t substeps,
                     std::chrono::nanoseconds tau = {}, SweptOptions options = {});

struct Measurement {
  std::string kernel;
  EngineKind engine = EngineKind::Swept;
  int px = 0;
  int py = 0;
  int n = 0;
  double tau_us = 0.0;
  std::int64_t substeps = 0;
  TimingClock clock = TimingClock::Modeled;
  /// Median over the timed repetitions, on `clock`.
  double us_per_substep = 0.0;
  double wall_us_per_substep = 0.0;
  double modeled_us_per_substep = 0.0;
  double messages_per_rank = 0.0;
  double bytes_per_rank = 0.0;
};

/// `warmup` untimed runs, then the median of `repetitions` timed runs.
Measurement measure(EngineKind engine, const std::string& kernel_name, const KernelSetup& kernel,
                    const Topology& topo, std::int64_t substeps, std::chrono::nanoseconds tau, int repetitions,
                    int warmup, TimingClock clock = TimingClock::Modeled);

double median(std::vector<double> values);

/// Sub-steps for a bench run: the smallest whole number of cycles covering
/// `target` sub-steps, times n.
std::int64_t bench_substeps(int n, std::int64_t target);

inline constexpr const char* kBenchCsvHeader =
    "kernel,engine,px,py,n,points_per_rank,tau_injected_us,substeps,us_per_substep,messages_per_rank,bytes_per_rank";

void write_csv_row(std::ostream& os, const Measurement& m);

}  // namespace swept
