#include "swept/bench.hpp"

#include <algorithm>
#include <iomanip>

namespace swept {

EngineKind parse_engine(const std::string& name) {
  if (name == "serial") return EngineKind::Serial;
  if (name == "classic") return EngineKind::Classic;
  if (name == "swept") return EngineKind::Swept;
  throw ValidationError("engine", "expected serial, classic or swept, got '" + name + "'");
}

const char* to_string(EngineKind engine) {
  switch (engine) {
    case EngineKind::Serial:
      return "serial";
    case EngineKind::Classic:
      return "classic";
    case EngineKind::Swept:
      return "swept";
  }
  return "?";
}

TimingClock parse_clock(const std::string& name) {
  if (name == "wall") return TimingClock::Wall;
  if (name == "modeled") return TimingClock::Modeled;
  throw ValidationError("clock", "expected wall or modeled, got '" + name + "'");
}

const char* to_string(TimingClock clock) { return clock == TimingClock::Wall ? "wall" : "modeled"; }

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

EngineRun run_engine(EngineKind engine, const KernelSetup& kernel, const Topology& topo, std::int64_t substeps,
                     std::chrono::nanoseconds tau, SweptOptions options) {
  if (substeps < 0) throw ValidationError("substeps", "must be non-negative");
  const StencilProgram& prog = *kernel.program;
  std::vector<Grid> grids = init_grids(topo, prog, kernel.init);
  EngineRun out;

  if (engine == EngineKind::Serial) {
    GlobalField f = gather(topo, grids, Shift{});
    const auto t0 = std::chrono::steady_clock::now();
    const auto cpu0 = thread_cpu_time();
    out.field = serial_reference(prog, std::move(f), substeps);
    out.report.modeled = thread_cpu_time() - cpu0;
    out.report.wall = std::chrono::steady_clock::now() - t0;
    out.report.substeps_advanced = substeps;
    out.report.ranks.resize(1);
    out.report.ranks[0].wall = out.report.wall;
    out.report.ranks[0].compute = out.report.wall;
    out.report.ranks[0].modeled = out.report.modeled;
    return out;
  }

  LatencyTransport transport(std::make_unique<InProcTransport>(topo.size()), tau);

  if (engine == EngineKind::Classic) {
    ClassicResult r = run_classic(prog, topo, transport, std::move(grids), substeps);
    out.field = gather(topo, r.grids, Shift{});
    out.report = std::move(r.report);
    return out;
  }
  if (substeps % topo.n() != 0) {
    throw ValidationError("substeps", "swept needs a multiple of n=" + std::to_string(topo.n()) + ", got " +
                                          std::to_string(substeps));
  }
  const auto cycles = static_cast<int>(substeps / topo.n());
  SweptResult r = run_swept_half_cycles(prog, topo, transport, std::move(grids), 2 * cycles, options);
  out.field = gather(topo, r.grids, r.shift);
  out.report = std::move(r.report);
  return out;
}

std::int64_t bench_substeps(int n, std::int64_t target) {
  const std::int64_t cycles = std::max<std::int64_t>(1, (target + n - 1) / n);
  return cycles * n;
}

Measurement measure(EngineKind engine, const std::string& kernel_name, const KernelSetup& kernel,
                    const Topology& topo, std::int64_t substeps, std::chrono::nanoseconds tau, int repetitions,
                    int warmup, TimingClock clock) {
  if (repetitions < 1) throw ValidationError("repetitions", "must be at least 1");
  if (warmup < 0) throw ValidationError("warmup", "must be non-negative");
  if (substeps < 1) throw ValidationError("substeps", "must be at least 1");
  Measurement m;
  m.kernel = kernel_name;
  m.engine = engine;
  m.px = topo.px();
  m.py = topo.py();
  m.n = topo.n();
  m.tau_us = std::chrono::duration<double, std::micro>(tau).count();
  m.substeps = substeps;
  m.clock = clock;
  std::vector<double> wall;
  std::vector<double> modeled;
  for (int w = 0; w < warmup; ++w) run_engine(engine, kernel, topo, substeps, tau);
  for (int r = 0; r < repetitions; ++r) {
    const EngineRun run = run_engine(engine, kernel, topo, substeps, tau);
    const auto per_substep = [&](std::chrono::nanoseconds d) {
      return std::chrono::duration<double, std::micro>(d).count() / static_cast<double>(substeps);
    };
    wall.push_back(per_substep(run.report.wall));
    modeled.push_back(per_substep(run.report.modeled));
    if (r == 0) {
      double msgs = 0.0;
      double bytes = 0.0;
      for (const RankStats& s : run.report.ranks) {
        msgs += static_cast<double>(s.messages_sent);
        bytes += static_cast<double>(s.bytes_sent);
      }
      const auto ranks = static_cast<double>(run.report.ranks.size());
      m.messages_per_rank = msgs / ranks;
      m.bytes_per_rank = bytes / ranks;
    }
  }
  m.wall_us_per_substep = median(wall);
  m.modeled_us_per_substep = median(modeled);
  m.us_per_substep = clock == TimingClock::Wall ? m.wall_us_per_substep : m.modeled_us_per_substep;
  return m;
}

void write_csv_row(std::ostream& os, const Measurement& m) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << m.kernel << ',' << to_string(m.engine) << ',' << m.px << ',' << m.py << ',' << m.n << ','
     << static_cast<long long>(m.n) * m.n << ',' << std::setprecision(10) << m.tau_us << ',' << m.substeps << ','
     << std::fixed << std::setprecision(3) << m.us_per_substep << std::defaultfloat << std::setprecision(10) << ','
     << m.messages_per_rank << ',' << m.bytes_per_rank << '\n';
  os.flags(flags);
  os.precision(precision);
}

}  // namespace swept
