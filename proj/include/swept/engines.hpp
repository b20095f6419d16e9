#pragma once

// Integration engines: the serial oracle, the classic per-sub-step halo
// exchange, and the swept space-time decomposition. All three produce
// bitwise-identical fields for a pure kernel.

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "swept/grid.hpp"
#include "swept/transport.hpp"

namespace swept {

struct RankStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_received = 0;
  /// Exchange phases that went through the transport. Each costs one latency.
  std::uint64_t rounds = 0;
  std::chrono::nanoseconds wall{0};
  std::chrono::nanoseconds compute{0};
  std::chrono::nanoseconds wait{0};
  /// Thread CPU time plus idle time on the transport's modelled clock: the
  /// rank's duration had it owned a core.
  std::chrono::nanoseconds modeled{0};
  // Swept only: time spent inside each component kind.
  std::chrono::nanoseconds upward{0};
  std::chrono::nanoseconds bridges{0};
  std::chrono::nanoseconds downward{0};
};

struct EngineReport {
  std::int64_t substeps_advanced = 0;
  std::vector<RankStats> ranks;  // indexed by rank; ranks not local stay zero
  /// Slowest rank's wall time between the common start and its finish.
  std::chrono::nanoseconds wall{0};
  /// Slowest rank's modelled duration.
  std::chrono::nanoseconds modeled{0};
};

// ---------------------------------------------------------------------------
// Serial oracle

/// Applies `prog` to every point with periodic wrap, `substeps` times, in
/// row-major order on one thread.
GlobalField serial_reference(const StencilProgram& prog, GlobalField field, std::int64_t substeps);

/// As serial_reference, returning the field at every sub-step (entry 0 is the
/// input).
std::vector<GlobalField> serial_reference_record(const StencilProgram& prog, GlobalField field,
                                                 std::int64_t substeps);

// ---------------------------------------------------------------------------
// Assembly

/// Assembles per-rank grids into the global field, undoing `shift` so output
/// coordinates are the original global coordinates. Rank-local point
/// (li, lj) of rank (cx, cy) lands at ((cx*n + li + sx) mod W, (cy*n + lj + sy) mod H).
GlobalField gather(const Topology& topo, std::span<const Grid> grids, Shift shift);

/// Inverse of gather.
std::vector<Grid> scatter(const Topology& topo, const GlobalField& field, Shift shift);

/// One init_grid per rank.
std::vector<Grid> init_grids(const Topology& topo, const StencilProgram& prog, const InitFn& init);

// ---------------------------------------------------------------------------
// Classic halo exchange

struct ClassicResult {
  std::vector<Grid> grids;
  EngineReport report;
};

/// Each sub-step: East/West edge columns, then North/South edge rows carrying
/// the freshly received corners, then one stencil application. Self-neighbour
/// exchanges are copied in memory and never touch the transport.
ClassicResult run_classic(const StencilProgram& prog, const Topology& topo, Transport& transport,
                          std::vector<Grid> grids, std::int64_t substeps);

/// One rank's classic loop, for multi-process runs.
Grid classic_rank(const StencilProgram& prog, const Topology& topo, Endpoint& ep, Grid grid, std::int64_t substeps,
                  RankStats& stats);

// ---------------------------------------------------------------------------
// Swept

struct SweptOptions {
  /// Negative control: the longitudinal bridge is fed the rank's own North
  /// panel instead of the neighbour's.
  bool miswire_bridge = false;
};

struct SweptResult {
  std::vector<Grid> grids;
  EngineReport report;
  Shift shift;
};

/// `cycles` full cycles; each advances n sub-steps in 4 exchange rounds of two
/// panels per rank and leaves the shift at (0, 0).
SweptResult run_swept(const StencilProgram& prog, const Topology& topo, Transport& transport, std::vector<Grid> grids,
                      int cycles, SweptOptions options = {});

/// Half-cycle granularity. Even-numbered halves send North/West and move
/// ownership by (+n/2, +n/2); odd-numbered halves send South/East and move it
/// back. `first_half` is the index of the first half cycle to run.
SweptResult run_swept_half_cycles(const StencilProgram& prog, const Topology& topo, Transport& transport,
                                  std::vector<Grid> grids, int half_cycles, SweptOptions options = {},
                                  int first_half = 0);

/// One rank's swept loop, for multi-process runs.
Grid swept_rank(const StencilProgram& prog, const Topology& topo, Endpoint& ep, Grid grid, int first_half,
                int half_cycles, const SweptOptions& options, RankStats& stats);

/// Ownership shift after `half_cycles` halves starting from shift (0, 0).
Shift shift_after(const Topology& topo, int half_cycles);

// ---------------------------------------------------------------------------
// Message tags: (cycle, half, phase, direction) for swept, (sub-step, phase,
// direction) for classic.

std::uint32_t swept_tag(int half_index, int phase, Side travel);
std::uint32_t classic_tag(std::int64_t substep, int phase, Side travel);

}  // namespace swept
