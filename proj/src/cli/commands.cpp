#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "swept/bench.hpp"
#include "swept/cli.hpp"
#include "swept/codec.hpp"
#include "swept/perf_model.hpp"

namespace swept {

namespace {

// Result collection over TCP. Low bytes 0xF0.. never occur in engine tags.
constexpr std::uint32_t kGatherGridTag = 0xFFFFFFF0u;
constexpr std::uint32_t kGatherStatsTag = 0xFFFFFFF1u;
constexpr std::uint32_t kGatherAckTag = 0xFFFFFFF2u;

KernelParams kernel_params(const Config& c) {
  KernelParams p;
  p.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  p.init = c.get("init");
  p.symmetric = c.get_bool("symmetric");
  p.wave.cfl = c.get_double("cfl");
  p.euler.lx = c.get_double("lx");
  p.euler.ly = c.get_double("ly");
  p.euler.dt = c.get_double("dt");
  p.euler.rho = c.get_double("rho");
  p.euler.mach = c.get_double("mach");
  p.euler.p = c.get_double("pressure");
  p.euler.gamma = c.get_double("gamma");
  p.euler.pulse = c.get_double("pulse");
  p.euler.obstacle = c.get_bool("obstacle");
  p.euler.sigma = c.get_double("sigma");
  p.euler.eta = c.get_double("eta");
  return p;
}

int int_key(const Config& c, const std::string& key) {
  const long long v = c.get_int(key);
  if (v < -(1LL << 31) || v > (1LL << 31) - 1) throw ValidationError(key, "out of range");
  return static_cast<int>(v);
}

Topology config_topology(const Config& c, int n) { return make_topology(int_key(c, "px"), int_key(c, "py"), n); }

std::chrono::nanoseconds config_tau(const Config& c) {
  const double us = c.get_double("tau_us");
  if (!(us >= 0.0)) throw ValidationError("tau_us", "must be non-negative");
  return std::chrono::nanoseconds(static_cast<std::int64_t>(us * 1000.0));
}

// Writes to the configured path, or to `fallback` when the path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ValidationError("csv", "cannot open " + path + " for writing");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }
  bool is_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

void write_snapshot(const std::string& path, const GlobalField& field) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("snapshot", "cannot open " + path + " for writing");
  const Bytes bytes = encode_field(field);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ValidationError("snapshot", "write failed for " + path);
}

Measurement single_measurement(const std::string& kernel, EngineKind engine, const Topology& topo,
                               std::chrono::nanoseconds tau, std::int64_t substeps, const EngineReport& report,
                               TimingClock clock) {
  Measurement m;
  m.kernel = kernel;
  m.engine = engine;
  m.px = topo.px();
  m.py = topo.py();
  m.n = topo.n();
  m.tau_us = std::chrono::duration<double, std::micro>(tau).count();
  m.substeps = substeps;
  const auto per_substep = [&](std::chrono::nanoseconds d) {
    return substeps == 0 ? 0.0 : std::chrono::duration<double, std::micro>(d).count() / static_cast<double>(substeps);
  };
  m.clock = clock;
  m.wall_us_per_substep = per_substep(report.wall);
  m.modeled_us_per_substep = per_substep(report.modeled);
  m.us_per_substep = clock == TimingClock::Wall ? m.wall_us_per_substep : m.modeled_us_per_substep;
  double msgs = 0.0;
  double bytes = 0.0;
  for (const RankStats& s : report.ranks) {
    msgs += static_cast<double>(s.messages_sent);
    bytes += static_cast<double>(s.bytes_sent);
  }
  m.messages_per_rank = report.ranks.empty() ? 0.0 : msgs / static_cast<double>(report.ranks.size());
  m.bytes_per_rank = report.ranks.empty() ? 0.0 : bytes / static_cast<double>(report.ranks.size());
  return m;
}

std::int64_t run_substeps(const Config& cfg, EngineKind engine, int n) {
  const long long substeps = cfg.get_int("substeps");
  if (substeps < 0) throw ValidationError("substeps", "must be non-negative");
  if (substeps > 0) {
    if (engine == EngineKind::Swept && substeps % n != 0) {
      throw ValidationError("substeps", "swept needs a multiple of n=" + std::to_string(n));
    }
    return substeps;
  }
  const long long cycles = cfg.get_int("cycles");
  if (cycles < 1) throw ValidationError("cycles", "must be at least 1");
  return cycles * n;
}

// One rank per process; results are collected on rank 0.
int run_tcp(const Config& cfg, const std::string& kernel_name, EngineKind engine, const Topology& topo,
            const KernelSetup& kernel, std::int64_t substeps, std::ostream& out) {
  if (engine == EngineKind::Serial) throw ValidationError("transport", "serial engine runs in-process only");
  const std::string roster_path = cfg.get("roster");
  if (roster_path.empty()) throw ValidationError("roster", "required with transport = tcp");
  const int rank = int_key(cfg, "rank");
  if (rank < 0 || rank >= topo.size()) throw ValidationError("rank", "outside the topology");
  const auto timeout = std::chrono::milliseconds(cfg.get_int("timeout_ms"));
  const auto tau = config_tau(cfg);

  std::unique_ptr<Transport> transport = std::make_unique<TcpTransport>(load_roster(roster_path, topo), rank,
                                                                        communication_peers(topo, rank), timeout);
  if (tau.count() > 0) transport = std::make_unique<LatencyTransport>(std::move(transport), tau);
  Endpoint& ep = transport->endpoint(rank);

  const StencilProgram& prog = *kernel.program;
  Grid grid = init_grid(topo, topo.coord_of(rank), prog, kernel.init);
  RankStats stats;
  if (engine == EngineKind::Swept) {
    grid = swept_rank(prog, topo, ep, std::move(grid), 0, static_cast<int>(2 * substeps / topo.n()), {}, stats);
  } else {
    grid = classic_rank(prog, topo, ep, std::move(grid), substeps, stats);
  }

  const std::vector<double> my_stats{static_cast<double>(stats.messages_sent), static_cast<double>(stats.bytes_sent),
                                     static_cast<double>(stats.wall.count()),
                                     static_cast<double>(stats.modeled.count())};
  if (rank != 0) {
    ep.send(0, kGatherGridTag, encode_values(grid.values()));
    ep.send(0, kGatherStatsTag, encode_values(my_stats));
    (void)ep.recv(0, kGatherAckTag);
    return kExitOk;
  }

  std::vector<Grid> grids;
  EngineReport report;
  report.substeps_advanced = substeps;
  report.ranks.resize(static_cast<std::size_t>(topo.size()));
  const std::size_t count = static_cast<std::size_t>(topo.n()) * topo.n() * grid.arity();
  for (int r = 0; r < topo.size(); ++r) {
    std::vector<double> st = my_stats;
    if (r == 0) {
      grids.push_back(grid);
    } else {
      grids.emplace_back(topo.n(), grid.step(), grid.arity(), decode_values(ep.recv(r, kGatherGridTag), count));
      st = decode_values(ep.recv(r, kGatherStatsTag), my_stats.size());
    }
    RankStats& rs = report.ranks[static_cast<std::size_t>(r)];
    rs.messages_sent = static_cast<std::uint64_t>(st[0]);
    rs.bytes_sent = static_cast<std::uint64_t>(st[1]);
    rs.wall = std::chrono::nanoseconds(static_cast<std::int64_t>(st[2]));
    rs.modeled = std::chrono::nanoseconds(static_cast<std::int64_t>(st[3]));
    report.wall = std::max(report.wall, rs.wall);
    report.modeled = std::max(report.modeled, rs.modeled);
  }
  for (int r = 1; r < topo.size(); ++r) ep.send(r, kGatherAckTag, {});

  write_snapshot(cfg.get("snapshot"), gather(topo, grids, Shift{}));
  Sink sink(cfg.get("csv"), out);
  sink.stream() << kBenchCsvHeader << '\n';
  write_csv_row(sink.stream(),
                single_measurement(kernel_name, engine, topo, tau, substeps, report, parse_clock(cfg.get("clock"))));
  return kExitOk;
}

}  // namespace

int cmd_run(const Config& cfg, std::ostream& out) {
  const std::string kernel_name = cfg.get("kernel");
  const EngineKind engine = parse_engine(cfg.get("engine"));
  const Topology topo = config_topology(cfg, int_key(cfg, "n"));
  const KernelSetup kernel = make_kernel(kernel_name, topo, kernel_params(cfg));
  const std::int64_t substeps = run_substeps(cfg, engine, topo.n());
  const std::string transport = cfg.get("transport");
  if (transport == "tcp") return run_tcp(cfg, kernel_name, engine, topo, kernel, substeps, out);
  if (transport != "inproc") throw ValidationError("transport", "expected inproc or tcp, got '" + transport + "'");

  const auto tau = config_tau(cfg);
  const EngineRun run = run_engine(engine, kernel, topo, substeps, tau);
  write_snapshot(cfg.get("snapshot"), run.field);
  Sink sink(cfg.get("csv"), out);
  sink.stream() << kBenchCsvHeader << '\n';
  write_csv_row(sink.stream(), single_measurement(kernel_name, engine, topo, tau, substeps, run.report,
                                                  parse_clock(cfg.get("clock"))));
  return kExitOk;
}

int cmd_bench(const Config& cfg, std::ostream& out) {
  if (cfg.get("transport") != "inproc") throw ValidationError("transport", "bench runs in-process only");
  const std::string kernel_name = cfg.get("kernel");
  const auto tau = config_tau(cfg);
  const int reps = int_key(cfg, "repetitions");
  const int warmup = int_key(cfg, "warmup");
  const long long target = cfg.get_int("target_substeps");
  if (target < 1) throw ValidationError("target_substeps", "must be at least 1");
  std::vector<EngineKind> engines;
  for (const std::string& e : cfg.get_list("engines")) engines.push_back(parse_engine(e));
  if (engines.empty()) throw ValidationError("engines", "list is empty");
  const std::vector<int> ns = cfg.get_int_list("n_list");
  for (int n : ns) validate_side_length(n, "n_list");

  Sink sink(cfg.get("csv"), out);
  sink.stream() << kBenchCsvHeader << '\n';
  for (int n : ns) {
    const Topology topo = config_topology(cfg, n);
    const KernelSetup kernel = make_kernel(kernel_name, topo, kernel_params(cfg));
    const std::int64_t substeps = bench_substeps(n, target);
    for (EngineKind e : engines) {
      write_csv_row(sink.stream(),
                    measure(e, kernel_name, kernel, topo, substeps, tau, reps, warmup, parse_clock(cfg.get("clock"))));
      sink.stream().flush();
    }
  }
  return kExitOk;
}

int cmd_model(const Config& cfg, std::ostream& out) {
  const double s = cfg.get("s").empty() ? step_cost_preset(cfg.get("s_preset")) : cfg.get_double("s");
  const double tau = cfg.get("tau").empty() ? latency_preset(cfg.get("tau_preset")) : cfg.get_double("tau");
  const int n_min = int_key(cfg, "n_min");
  const int n_max = int_key(cfg, "n_max");
  const OptimalN opt = optimal_n(s, tau, n_min, n_max);
  const std::vector<CurvePoint> curve = model_curve(s, tau, n_min, n_max);
  Sink sink(cfg.get("csv"), out);
  write_curve_csv(sink.stream(), curve);
  std::ostream& summary = sink.is_file() ? out : sink.stream();
  const auto precision = summary.precision(10);
  summary << "# optimal_n=" << opt.n << " cost_s=" << opt.cost << " analytic_n=" << opt.analytic
          << " latency_barrier=" << (opt.cost < tau ? "broken" : "not-broken") << '\n';
  summary.precision(precision);
  return kExitOk;
}

int cmd_verify(const Config& cfg, std::ostream& out) {
  const int max_px = int_key(cfg, "max_px");
  const int max_py = int_key(cfg, "max_py");
  if (max_px < 1) throw ValidationError("max_px", "must be at least 1");
  if (max_py < 1) throw ValidationError("max_py", "must be at least 1");
  const int max_cycles = int_key(cfg, "max_cycles");
  if (max_cycles < 1) throw ValidationError("max_cycles", "must be at least 1");
  const std::string fault = cfg.get("fault");
  if (fault != "none" && fault != "miswire") throw ValidationError("fault", "expected none or miswire");
  SweptOptions options;
  options.miswire_bridge = fault == "miswire";
  const std::vector<int> ns = cfg.get_int_list("n_values");
  for (int n : ns) validate_side_length(n, "n_values");
  const std::vector<std::string> kernels = cfg.get_list("kernels");
  const KernelParams params = kernel_params(cfg);

  long long comparisons = 0;
  for (const std::string& name : kernels) {
    for (int n : ns) {
      for (int py = 1; py <= max_py; ++py) {
        for (int px = 1; px <= max_px; ++px) {
          const Topology topo = make_topology(px, py, n);
          const KernelSetup k = make_kernel(name, topo, params);
          const StencilProgram& prog = *k.program;
          const auto record = serial_reference_record(
              prog, gather(topo, init_grids(topo, prog, k.init), Shift{}), static_cast<std::int64_t>(max_cycles) * n);

          auto report = [&](const char* engine, int cycle, const GlobalField& got) {
            const GlobalField& want = record[static_cast<std::size_t>(cycle) * n];
            for (int gj = 0; gj < want.height; ++gj) {
              for (int gi = 0; gi < want.width; ++gi) {
                const auto a = got.point(gi, gj);
                const auto b = want.point(gi, gj);
                if (got.arity == want.arity && std::equal(a.begin(), a.end(), b.begin(), b.end())) continue;
                out << "divergence: kernel=" << name << " engine=" << engine << " topology=" << px << "x" << py
                    << " n=" << n << " cycle=" << cycle << " step=" << want.step
                    << " rank=" << topo.rank_of({gi / n, gj / n}) << " i=" << gi % n << " j=" << gj % n << '\n';
                return false;
              }
            }
            ++comparisons;
            return true;
          };

          InProcTransport swept_tr(topo.size());
          std::vector<Grid> grids = init_grids(topo, prog, k.init);
          for (int c = 1; c <= max_cycles; ++c) {
            SweptResult r = run_swept_half_cycles(prog, topo, swept_tr, std::move(grids), 2, options, 2 * (c - 1));
            if (!report("swept", c, gather(topo, r.grids, r.shift))) return kExitDivergence;
            grids = std::move(r.grids);
          }
          InProcTransport classic_tr(topo.size());
          grids = init_grids(topo, prog, k.init);
          for (int c = 1; c <= max_cycles; ++c) {
            ClassicResult r = run_classic(prog, topo, classic_tr, std::move(grids), n);
            if (!report("classic", c, gather(topo, r.grids, Shift{}))) return kExitDivergence;
            grids = std::move(r.grids);
          }
        }
      }
    }
  }
  out << "verify: " << comparisons << " comparisons bitwise identical to the serial oracle\n";
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Swept-rule 2D stencil engines, benchmarks and cost model", "swept2d"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::map<std::string, std::string> flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"run", "run one engine and write a snapshot and CSV row"},
      {"bench", "time engines over an n sweep"},
      {"model", "evaluate the cost model and its optimal n"},
      {"verify", "compare swept and classic against the serial oracle"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "config file (key = value, [section] headers)");
    for (const ConfigKey& k : config_schema()) {
      sub->add_option("--" + k.name, flags[k.name], k.help + " [" + k.section + ", default: " + k.default_value + "]");
    }
  }

  std::vector<const char*> argv{"swept2d"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    std::string msg = e.what();
    if (const auto nl = msg.find('\n'); nl != std::string::npos) msg.erase(nl);
    err << "error: usage: " << msg << '\n';
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Config cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const ConfigKey& k : config_schema()) {
      if (sub->get_option("--" + k.name)->count() > 0) cfg.set(k.name, flags[k.name]);
    }
    const std::string name = sub->get_name();
    if (name == "run") return cmd_run(cfg, out);
    if (name == "bench") return cmd_bench(cfg, out);
    if (name == "model") return cmd_model(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const ValidationError& e) {
    err << "error: usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "error: numeric: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const TransportError& e) {
    err << "error: transport: " << e.what() << '\n';
    return kExitTransport;
  } catch (const ProtocolError& e) {
    err << "error: protocol: " << e.what() << '\n';
    return kExitOther;
  } catch (const CodecError& e) {
    err << "error: codec: " << e.what() << '\n';
    return kExitOther;
  } catch (const ContractError& e) {
    err << "error: contract: " << e.what() << '\n';
    return kExitOther;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace swept
