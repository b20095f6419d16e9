#include "swept/engines.hpp"

#include <exception>
#include <latch>
#include <mutex>
#include <thread>

#include "swept/codec.hpp"
#include "swept/components.hpp"

namespace swept {

namespace {

using Clock = std::chrono::steady_clock;

int wrap(int v, int m) {
  const int r = v % m;
  return r < 0 ? r + m : r;
}

class Stopwatch {
 public:
  explicit Stopwatch(std::chrono::nanoseconds& sink) : sink_(sink), start_(Clock::now()) {}
  ~Stopwatch() { sink_ += Clock::now() - start_; }
  Stopwatch(const Stopwatch&) = delete;
  Stopwatch& operator=(const Stopwatch&) = delete;

 private:
  std::chrono::nanoseconds& sink_;
  Clock::time_point start_;
};

void check_grid_set(const Topology& topo, std::span<const Grid> grids) {
  if (grids.size() != static_cast<std::size_t>(topo.size())) {
    throw ContractError("expected " + std::to_string(topo.size()) + " grids, got " + std::to_string(grids.size()));
  }
  for (const Grid& g : grids) {
    if (g.n() != topo.n()) throw ContractError("grid side length does not match topology");
    if (g.step() != grids.front().step()) throw ContractError("grids are at inconsistent steps");
    if (g.arity() != grids.front().arity()) throw ContractError("grids have inconsistent arity");
  }
}

// Runs `body(rank)` on one thread per local rank with a common start line.
// The first failure aborts the transport so blocked peers unwind; it is then
// rethrown.
template <typename Body>
std::chrono::nanoseconds run_workers(Transport& transport, Body&& body) {
  const std::vector<int> ranks = transport.local_ranks();
  std::latch start(static_cast<std::ptrdiff_t>(ranks.size()));
  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<std::chrono::nanoseconds> walls(ranks.size());
  {
    std::vector<std::jthread> workers;
    workers.reserve(ranks.size());
    for (std::size_t w = 0; w < ranks.size(); ++w) {
      workers.emplace_back([&, w] {
        start.arrive_and_wait();
        const auto t0 = Clock::now();
        try {
          body(ranks[w]);
        } catch (...) {
          {
            std::lock_guard lock(mu);
            if (!first_error) first_error = std::current_exception();
          }
          transport.abort("rank " + std::to_string(ranks[w]) + " failed");
        }
        walls[w] = Clock::now() - t0;
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  std::chrono::nanoseconds wall{0};
  for (auto w : walls) wall = std::max(wall, w);
  return wall;
}

std::chrono::nanoseconds slowest_modeled(const std::vector<RankStats>& ranks) {
  std::chrono::nanoseconds m{0};
  for (const RankStats& s : ranks) m = std::max(m, s.modeled);
  return m;
}

void add_counter_delta(RankStats& stats, const TransportCounters& before, const TransportCounters& after) {
  stats.modeled += after.modeled_wait - before.modeled_wait;
  stats.messages_sent += after.messages_sent - before.messages_sent;
  stats.bytes_sent += after.bytes_sent - before.bytes_sent;
  stats.messages_received += after.messages_received - before.messages_received;
  stats.bytes_received += after.bytes_received - before.bytes_received;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tags

std::uint32_t swept_tag(int half_index, int phase, Side travel) {
  const auto cycle = static_cast<std::uint32_t>(half_index / 2) & 0x7FFFFFu;
  const auto half = static_cast<std::uint32_t>(half_index % 2);
  return (cycle << 8) | (half << 3) | (static_cast<std::uint32_t>(phase & 1) << 2) | static_cast<std::uint32_t>(travel);
}

std::uint32_t classic_tag(std::int64_t substep, int phase, Side travel) {
  const auto step = static_cast<std::uint32_t>(substep) & 0x7FFFFFu;
  return 0x80000000u | (step << 8) | (static_cast<std::uint32_t>(phase & 1) << 2) | static_cast<std::uint32_t>(travel);
}

// ---------------------------------------------------------------------------
// Serial oracle

namespace {

GlobalField serial_step(const StencilProgram& prog, const GlobalField& cur, std::int64_t first_step) {
  const std::int64_t t = cur.step;
  GlobalField next;
  next.width = cur.width;
  next.height = cur.height;
  next.step = t + 1;
  next.shift = cur.shift;
  next.arity = prog.arity(t + 1);
  next.values.resize(static_cast<std::size_t>(cur.width) * static_cast<std::size_t>(cur.height) * next.arity);
  const int w = cur.width;
  const int h = cur.height;
  for (int gj = 0; gj < h; ++gj) {
    const int jn = wrap(gj - 1, h);
    const int js = wrap(gj + 1, h);
    for (int gi = 0; gi < w; ++gi) {
      const int iw = wrap(gi - 1, w);
      const int ie = wrap(gi + 1, w);
      const std::array<const double*, 9> pts{
          cur.point(iw, jn).data(), cur.point(gi, jn).data(), cur.point(ie, jn).data(),
          cur.point(iw, gj).data(), cur.point(gi, gj).data(), cur.point(ie, gj).data(),
          cur.point(iw, js).data(), cur.point(gi, js).data(), cur.point(ie, js).data(),
      };
      apply_checked(prog, t, Neighborhood(pts, cur.arity), next.point(gi, gj),
                    {t, static_cast<int>(t - first_step), gi, gj});
    }
  }
  return next;
}

void check_field(const StencilProgram& prog, const GlobalField& field) {
  if (field.width <= 0 || field.height <= 0) throw ContractError("field has non-positive dimensions");
  if (field.arity != prog.arity(field.step)) {
    throw ContractError("field arity " + std::to_string(field.arity) + " does not match kernel arity " +
                        std::to_string(prog.arity(field.step)) + " at step " + std::to_string(field.step));
  }
  if (field.values.size() !=
      static_cast<std::size_t>(field.width) * static_cast<std::size_t>(field.height) * field.arity) {
    throw ContractError("field value count does not match width*height*arity");
  }
}

}  // namespace

GlobalField serial_reference(const StencilProgram& prog, GlobalField field, std::int64_t substeps) {
  check_field(prog, field);
  const std::int64_t first = field.step;
  for (std::int64_t s = 0; s < substeps; ++s) field = serial_step(prog, field, first);
  return field;
}

std::vector<GlobalField> serial_reference_record(const StencilProgram& prog, GlobalField field,
                                                 std::int64_t substeps) {
  check_field(prog, field);
  const std::int64_t first = field.step;
  std::vector<GlobalField> out;
  out.reserve(static_cast<std::size_t>(substeps + 1));
  out.push_back(std::move(field));
  for (std::int64_t s = 0; s < substeps; ++s) out.push_back(serial_step(prog, out.back(), first));
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

GlobalField gather(const Topology& topo, std::span<const Grid> grids, Shift shift) {
  check_grid_set(topo, grids);
  const int n = topo.n();
  GlobalField f;
  f.width = topo.width();
  f.height = topo.height();
  f.step = grids.front().step();
  f.arity = grids.front().arity();
  f.values.resize(static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height) * f.arity);
  for (int r = 0; r < topo.size(); ++r) {
    const RankCoord c = topo.coord_of(r);
    const Grid& g = grids[static_cast<std::size_t>(r)];
    for (int lj = 0; lj < n; ++lj) {
      const int gj = wrap(c.cy * n + lj + shift.sy, f.height);
      for (int li = 0; li < n; ++li) {
        const int gi = wrap(c.cx * n + li + shift.sx, f.width);
        const auto src = g.point(li, lj);
        std::copy(src.begin(), src.end(), f.point(gi, gj).begin());
      }
    }
  }
  return f;
}

std::vector<Grid> scatter(const Topology& topo, const GlobalField& field, Shift shift) {
  if (field.width != topo.width() || field.height != topo.height()) {
    throw ContractError("field dimensions do not match topology");
  }
  const int n = topo.n();
  std::vector<Grid> grids;
  grids.reserve(static_cast<std::size_t>(topo.size()));
  for (int r = 0; r < topo.size(); ++r) {
    const RankCoord c = topo.coord_of(r);
    Grid g(n, field.step, field.arity);
    for (int lj = 0; lj < n; ++lj) {
      const int gj = wrap(c.cy * n + lj + shift.sy, field.height);
      for (int li = 0; li < n; ++li) {
        const int gi = wrap(c.cx * n + li + shift.sx, field.width);
        const auto src = field.point(gi, gj);
        std::copy(src.begin(), src.end(), g.point(li, lj).begin());
      }
    }
    grids.push_back(std::move(g));
  }
  return grids;
}

std::vector<Grid> init_grids(const Topology& topo, const StencilProgram& prog, const InitFn& init) {
  std::vector<Grid> grids;
  grids.reserve(static_cast<std::size_t>(topo.size()));
  for (int r = 0; r < topo.size(); ++r) grids.push_back(init_grid(topo, topo.coord_of(r), prog, init));
  return grids;
}

// ---------------------------------------------------------------------------
// Classic

namespace {

// (n+2)^2 halo buffer; local coordinates run from -1 to n.
class HaloBuffer {
 public:
  HaloBuffer(int n, std::size_t arity)
      : n_(n), arity_(arity), buf_(static_cast<std::size_t>(n + 2) * static_cast<std::size_t>(n + 2) * arity) {}

  double* at(int i, int j) {
    return buf_.data() + (static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(n_ + 2) +
                          static_cast<std::size_t>(i + 1)) *
                             arity_;
  }

  std::vector<double> column(int i, int j0, int j1) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(j1 - j0) * arity_);
    for (int j = j0; j < j1; ++j) out.insert(out.end(), at(i, j), at(i, j) + arity_);
    return out;
  }
  void set_column(int i, int j0, int j1, const std::vector<double>& v) {
    for (int j = j0; j < j1; ++j) std::copy_n(v.data() + static_cast<std::size_t>(j - j0) * arity_, arity_, at(i, j));
  }
  std::vector<double> row(int j, int i0, int i1) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(i1 - i0) * arity_);
    for (int i = i0; i < i1; ++i) out.insert(out.end(), at(i, j), at(i, j) + arity_);
    return out;
  }
  void set_row(int j, int i0, int i1, const std::vector<double>& v) {
    for (int i = i0; i < i1; ++i) std::copy_n(v.data() + static_cast<std::size_t>(i - i0) * arity_, arity_, at(i, j));
  }

 private:
  int n_;
  std::size_t arity_;
  std::vector<double> buf_;
};

}  // namespace

Grid classic_rank(const StencilProgram& prog, const Topology& topo, Endpoint& ep, Grid grid, std::int64_t substeps,
                  RankStats& stats) {
  const int n = grid.n();
  const int me = ep.rank();
  const int north = topo.neighbor_rank(me, Compass::North);
  const int south = topo.neighbor_rank(me, Compass::South);
  const int west = topo.neighbor_rank(me, Compass::West);
  const int east = topo.neighbor_rank(me, Compass::East);
  const TransportCounters before = ep.counters();
  const auto t_begin = Clock::now();
  const auto cpu_begin = thread_cpu_time();

  auto receive = [&](int src, std::uint32_t tag, std::size_t count, const char* what) {
    Bytes msg;
    {
      Stopwatch sw(stats.wait);
      msg = ep.recv(src, tag);
    }
    try {
      return decode_values(msg, count);
    } catch (const CodecError& e) {
      throw ProtocolError(std::string("classic ") + what + " halo from rank " + std::to_string(src) + ": " + e.what());
    }
  };

  for (std::int64_t s = 0; s < substeps; ++s) {
    const std::int64_t t = grid.step();
    const std::size_t a = grid.arity();
    if (a != prog.arity(t)) throw ContractError("grid arity does not match kernel at step " + std::to_string(t));
    HaloBuffer halo(n, a);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) std::copy_n(grid.point(i, j).data(), a, halo.at(i, j));
    }

    // Phase 1: edge columns East/West.
    const auto col_count = static_cast<std::size_t>(n);
    if (west == me) {
      halo.set_column(-1, 0, n, halo.column(n - 1, 0, n));
      halo.set_column(n, 0, n, halo.column(0, 0, n));
    } else {
      ++stats.rounds;
      ep.send(west, classic_tag(t, 0, Side::West), encode_values(halo.column(0, 0, n)));
      ep.send(east, classic_tag(t, 0, Side::East), encode_values(halo.column(n - 1, 0, n)));
      halo.set_column(n, 0, n, receive(east, classic_tag(t, 0, Side::West), col_count * a, "east"));
      halo.set_column(-1, 0, n, receive(west, classic_tag(t, 0, Side::East), col_count * a, "west"));
    }

    // Phase 2: edge rows North/South including the corner halo cells.
    const auto row_count = static_cast<std::size_t>(n + 2);
    if (north == me) {
      halo.set_row(-1, -1, n + 1, halo.row(n - 1, -1, n + 1));
      halo.set_row(n, -1, n + 1, halo.row(0, -1, n + 1));
    } else {
      ++stats.rounds;
      ep.send(north, classic_tag(t, 1, Side::North), encode_values(halo.row(0, -1, n + 1)));
      ep.send(south, classic_tag(t, 1, Side::South), encode_values(halo.row(n - 1, -1, n + 1)));
      halo.set_row(n, -1, n + 1, receive(south, classic_tag(t, 1, Side::North), row_count * a, "south"));
      halo.set_row(-1, -1, n + 1, receive(north, classic_tag(t, 1, Side::South), row_count * a, "north"));
    }

    Stopwatch sw(stats.compute);
    Grid next(n, t + 1, prog.arity(t + 1));
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::array<const double*, 9> pts{
            halo.at(i - 1, j - 1), halo.at(i, j - 1), halo.at(i + 1, j - 1),
            halo.at(i - 1, j),     halo.at(i, j),     halo.at(i + 1, j),
            halo.at(i - 1, j + 1), halo.at(i, j + 1), halo.at(i + 1, j + 1),
        };
        apply_checked(prog, t, Neighborhood(pts, a), next.point(i, j), {t, static_cast<int>(s), i, j});
      }
    }
    grid = std::move(next);
  }

  stats.wall += Clock::now() - t_begin;
  stats.modeled += thread_cpu_time() - cpu_begin;
  add_counter_delta(stats, before, ep.counters());
  return grid;
}

ClassicResult run_classic(const StencilProgram& prog, const Topology& topo, Transport& transport,
                          std::vector<Grid> grids, std::int64_t substeps) {
  check_grid_set(topo, grids);
  if (transport.size() != topo.size()) throw ContractError("transport size does not match topology");
  ClassicResult result;
  result.report.ranks.resize(grids.size());
  result.report.wall = run_workers(transport, [&](int rank) {
    auto& slot = grids[static_cast<std::size_t>(rank)];
    slot = classic_rank(prog, topo, transport.endpoint(rank), std::move(slot), substeps,
                        result.report.ranks[static_cast<std::size_t>(rank)]);
  });
  result.report.substeps_advanced = substeps;
  result.report.modeled = slowest_modeled(result.report.ranks);
  result.grids = std::move(grids);
  return result;
}

// ---------------------------------------------------------------------------
// Swept

Shift shift_after(const Topology& topo, int half_cycles) {
  const int h = topo.n() / 2;
  return half_cycles % 2 == 0 ? Shift{0, 0} : Shift{h, h};
}

namespace {

class PanelLink {
 public:
  PanelLink(const StencilProgram& prog, Endpoint& ep, RankStats& stats) : prog_(prog), ep_(ep), stats_(stats) {}

  void send(int dest, std::uint32_t tag, const Panel& p) { ep_.send(dest, tag, encode_panel(p)); }

  Panel recv(int src, std::uint32_t tag, Side side, Orientation orientation, int n, std::int64_t start_step) {
    Bytes msg;
    {
      Stopwatch sw(stats_.wait);
      msg = ep_.recv(src, tag);
    }
    Panel p;
    try {
      p = decode_panel(msg);
    } catch (const CodecError& e) {
      throw ProtocolError("panel from rank " + std::to_string(src) + ": " + e.what());
    }
    const std::string who = std::string(to_string(orientation)) + " " + to_string(side) + " panel from rank " +
                            std::to_string(src);
    if (p.side != side || p.orientation != orientation) {
      throw ProtocolError("expected " + who + ", got " + to_string(p.orientation) + " " + to_string(p.side));
    }
    if (p.n != n) throw ProtocolError(who + " has n=" + std::to_string(p.n) + ", expected " + std::to_string(n));
    if (p.start_step != start_step) {
      throw ProtocolError(who + " starts at step " + std::to_string(p.start_step) + ", expected " +
                          std::to_string(start_step));
    }
    for (std::size_t k = 0; k < p.levels.size(); ++k) {
      if (p.levels[k].arity != prog_.arity(start_step + static_cast<std::int64_t>(k))) {
        throw ProtocolError(who + " level " + std::to_string(k) + " has the wrong arity");
      }
    }
    return p;
  }

 private:
  const StencilProgram& prog_;
  Endpoint& ep_;
  RankStats& stats_;
};

}  // namespace

Grid swept_rank(const StencilProgram& prog, const Topology& topo, Endpoint& ep, Grid grid, int first_half,
                int half_cycles, const SweptOptions& options, RankStats& stats) {
  const int n = grid.n();
  if (n != topo.n()) throw ContractError("grid side length does not match topology");
  const int me = ep.rank();
  const int north = topo.neighbor_rank(me, Compass::North);
  const int south = topo.neighbor_rank(me, Compass::South);
  const int west = topo.neighbor_rank(me, Compass::West);
  const int east = topo.neighbor_rank(me, Compass::East);
  const TransportCounters before = ep.counters();
  const auto t_begin = Clock::now();
  const auto cpu_begin = thread_cpu_time();
  PanelLink link(prog, ep, stats);

  for (int h = first_half; h < first_half + half_cycles; ++h) {
    const std::int64_t t0 = grid.step();
    PyramidPanels up;
    {
      Stopwatch c(stats.compute);
      Stopwatch u(stats.upward);
      up = upward_pyramid(prog, grid);
    }

    if (h % 2 == 0) {
      // Send North/West; the bridges sit South and East of this rank.
      stats.rounds += 2;
      link.send(north, swept_tag(h, 0, Side::North), up.north);
      link.send(west, swept_tag(h, 0, Side::West), up.west);
      Panel south_n = link.recv(south, swept_tag(h, 0, Side::North), Side::North, Orientation::Upward, n, t0);
      Panel east_w = link.recv(east, swept_tag(h, 0, Side::West), Side::West, Orientation::Upward, n, t0);

      LongitudinalPanels lon;
      LatitudinalPanels lat;
      {
        Stopwatch c(stats.compute);
        Stopwatch b(stats.bridges);
        lon = longitudinal_bridge(prog, up.south, options.miswire_bridge ? up.north : south_n);
        lat = latitudinal_bridge(prog, up.east, east_w);
      }

      link.send(north, swept_tag(h, 1, Side::North), lat.north);
      link.send(west, swept_tag(h, 1, Side::West), lon.west);
      Panel rn = link.recv(south, swept_tag(h, 1, Side::North), Side::North, Orientation::Downward, n, t0);
      Panel rw = link.recv(east, swept_tag(h, 1, Side::West), Side::West, Orientation::Downward, n, t0);

      Stopwatch c(stats.compute);
      Stopwatch d(stats.downward);
      grid = downward_pyramid(prog, lat.south, rn, lon.east, rw);
    } else {
      // Send South/East; the bridges sit North and West of this rank.
      stats.rounds += 2;
      link.send(south, swept_tag(h, 0, Side::South), up.south);
      link.send(east, swept_tag(h, 0, Side::East), up.east);
      Panel north_s = link.recv(north, swept_tag(h, 0, Side::South), Side::South, Orientation::Upward, n, t0);
      Panel west_e = link.recv(west, swept_tag(h, 0, Side::East), Side::East, Orientation::Upward, n, t0);

      LongitudinalPanels lon;
      LatitudinalPanels lat;
      {
        Stopwatch c(stats.compute);
        Stopwatch b(stats.bridges);
        lon = longitudinal_bridge(prog, options.miswire_bridge ? up.south : north_s, up.north);
        lat = latitudinal_bridge(prog, west_e, up.west);
      }

      link.send(south, swept_tag(h, 1, Side::South), lat.south);
      link.send(east, swept_tag(h, 1, Side::East), lon.east);
      Panel rs = link.recv(north, swept_tag(h, 1, Side::South), Side::South, Orientation::Downward, n, t0);
      Panel re = link.recv(west, swept_tag(h, 1, Side::East), Side::East, Orientation::Downward, n, t0);

      Stopwatch c(stats.compute);
      Stopwatch d(stats.downward);
      grid = downward_pyramid(prog, rs, lat.north, re, lon.west);
    }
  }

  stats.wall += Clock::now() - t_begin;
  stats.modeled += thread_cpu_time() - cpu_begin;
  add_counter_delta(stats, before, ep.counters());
  return grid;
}

SweptResult run_swept_half_cycles(const StencilProgram& prog, const Topology& topo, Transport& transport,
                                  std::vector<Grid> grids, int half_cycles, SweptOptions options, int first_half) {
  check_grid_set(topo, grids);
  if (transport.size() != topo.size()) throw ContractError("transport size does not match topology");
  if (half_cycles < 0) throw ValidationError("cycles", "must be non-negative");
  if (first_half < 0) throw ValidationError("first_half", "must be non-negative");
  const std::int64_t start = grids.front().step();
  SweptResult result;
  result.report.ranks.resize(grids.size());
  result.report.wall = run_workers(transport, [&](int rank) {
    auto& slot = grids[static_cast<std::size_t>(rank)];
    slot = swept_rank(prog, topo, transport.endpoint(rank), std::move(slot), first_half, half_cycles, options,
                      result.report.ranks[static_cast<std::size_t>(rank)]);
  });
  result.report.substeps_advanced = grids.front().step() - start;
  result.report.modeled = slowest_modeled(result.report.ranks);
  result.shift = shift_after(topo, first_half + half_cycles);
  result.grids = std::move(grids);
  return result;
}

SweptResult run_swept(const StencilProgram& prog, const Topology& topo, Transport& transport, std::vector<Grid> grids,
                      int cycles, SweptOptions options) {
  if (cycles < 1) throw ValidationError("cycles", "must be at least 1 (got " + std::to_string(cycles) + ")");
  return run_swept_half_cycles(prog, topo, transport, std::move(grids), 2 * cycles, options);
}

}  // namespace swept
