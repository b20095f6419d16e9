#include "swept/grid.hpp"

#include <cmath>
#include <string>

namespace swept {

namespace {

int wrap(int v, int m) {
  const int r = v % m;
  return r < 0 ? r + m : r;
}

}  // namespace

const char* to_string(Side side) {
  switch (side) {
    case Side::North: return "North";
    case Side::South: return "South";
    case Side::West: return "West";
    case Side::East: return "East";
  }
  return "?";
}

const char* to_string(Orientation orientation) {
  return orientation == Orientation::Upward ? "Upward" : "Downward";
}

void validate_side_length(int n, const char* field) {
  if (n < 4) throw ValidationError(field, "must be at least 4 (got " + std::to_string(n) + ")");
  if (n % 2 != 0) throw ValidationError(field, "must be even (got " + std::to_string(n) + ")");
}

Topology::Topology(int px, int py, int n) : px_(px), py_(py), n_(n) {
  if (px < 1) throw ValidationError("px", "must be positive (got " + std::to_string(px) + ")");
  if (py < 1) throw ValidationError("py", "must be positive (got " + std::to_string(py) + ")");
  validate_side_length(n);
}

Topology make_topology(int px, int py, int n) { return Topology(px, py, n); }

bool Topology::contains(RankCoord c) const noexcept {
  return c.cx >= 0 && c.cx < px_ && c.cy >= 0 && c.cy < py_;
}

int Topology::rank_of(RankCoord c) const {
  if (!contains(c)) throw ContractError("rank coordinate outside topology");
  return c.cy * px_ + c.cx;
}

RankCoord Topology::coord_of(int rank) const {
  if (rank < 0 || rank >= size()) throw ContractError("rank " + std::to_string(rank) + " outside topology");
  return {rank % px_, rank / px_};
}

RankCoord Topology::neighbor(RankCoord c, Compass dir) const {
  int dx = 0;
  int dy = 0;
  switch (dir) {
    case Compass::North: dy = -1; break;
    case Compass::South: dy = 1; break;
    case Compass::West: dx = -1; break;
    case Compass::East: dx = 1; break;
    case Compass::NorthWest: dx = -1; dy = -1; break;
    case Compass::NorthEast: dx = 1; dy = -1; break;
    case Compass::SouthWest: dx = -1; dy = 1; break;
    case Compass::SouthEast: dx = 1; dy = 1; break;
  }
  return {wrap(c.cx + dx, px_), wrap(c.cy + dy, py_)};
}

RankCoord neighbor_of(const Topology& topo, RankCoord rank, Compass dir) {
  if (!topo.contains(rank)) throw ContractError("rank coordinate outside topology");
  return topo.neighbor(rank, dir);
}

Grid::Grid(int n, std::int64_t step, std::size_t arity)
    : Grid(n, step, arity, std::vector<double>(static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * arity)) {}

Grid::Grid(int n, std::int64_t step, std::size_t arity, std::vector<double> values)
    : n_(n), step_(step), arity_(arity), values_(std::move(values)) {
  validate_side_length(n);
  if (arity == 0) throw ContractError("grid arity must be positive");
  if (values_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * arity) {
    throw ContractError("grid value count does not match n*n*arity");
  }
}

PanelShape panel_shape(int n, Orientation orientation) {
  validate_side_length(n);
  PanelShape shape;
  const int levels = n / 2;
  shape.level_counts.reserve(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k) {
    const int count = orientation == Orientation::Upward ? 2 * (n - 2 * k) : 2 * (2 * k + 2);
    shape.level_counts.push_back(static_cast<std::size_t>(count));
    shape.total += static_cast<std::size_t>(count);
  }
  return shape;
}

void check_panel_shape(const Panel& panel) {
  const PanelShape shape = panel_shape(panel.n, panel.orientation);
  if (panel.levels.size() != shape.level_counts.size()) {
    throw ContractError(std::string(to_string(panel.side)) + " panel has " + std::to_string(panel.levels.size()) +
                        " levels, expected " + std::to_string(shape.level_counts.size()));
  }
  for (std::size_t k = 0; k < panel.levels.size(); ++k) {
    const Slab& slab = panel.levels[k];
    if (slab.arity == 0 || slab.values.size() != shape.level_counts[k] * slab.arity) {
      throw ContractError(std::string(to_string(panel.side)) + " panel level " + std::to_string(k) +
                          " has the wrong number of values");
    }
  }
}

void apply_checked(const StencilProgram& prog, std::int64_t step, const Neighborhood& nbhd,
                   std::span<double> out, const SpaceTimeLocation& loc) {
  try {
    prog.apply(step, nbhd, out);
  } catch (const NumericError& e) {
    if (e.location()) throw;
    throw NumericError(std::string(prog.name()) + ": " + e.what(), loc);
  }
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericError(std::string(prog.name()) + ": non-finite value", loc);
  }
}

Grid init_grid(const Topology& topo, RankCoord rank, const StencilProgram& prog, const InitFn& init) {
  if (!topo.contains(rank)) throw ContractError("rank coordinate outside topology");
  const int n = topo.n();
  const std::size_t arity = prog.arity(0);
  Grid grid(n, 0, arity);
  for (int lj = 0; lj < n; ++lj) {
    for (int li = 0; li < n; ++li) {
      const std::int64_t gi = static_cast<std::int64_t>(rank.cx) * n + li;
      const std::int64_t gj = static_cast<std::int64_t>(rank.cy) * n + lj;
      const StateVector v = init(gi, gj);
      if (v.size() != arity) {
        throw ContractError("init function returned arity " + std::to_string(v.size()) + " at (" +
                            std::to_string(gi) + ", " + std::to_string(gj) + "), kernel " +
                            std::string(prog.name()) + " expects " + std::to_string(arity));
      }
      std::copy(v.begin(), v.end(), grid.point(li, lj).begin());
    }
  }
  return grid;
}

}  // namespace swept
