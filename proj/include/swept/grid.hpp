#pragma once

// Domain types shared by every engine: rank topology, per-rank grids,
// pyramid/bridge panels, global fields and the stencil program contract.
//
// Coordinates: i grows toward the East, j grows toward the South. Points and
// ranks are stored row-major (j outer, i inner).

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "swept/error.hpp"

namespace swept {

using StateVector = std::vector<double>;

enum class Compass : std::uint8_t { North, South, West, East, NorthWest, NorthEast, SouthWest, SouthEast };

/// The four sides of a pyramid or bridge. Values are the wire encoding.
enum class Side : std::uint8_t { North = 0, South = 1, West = 2, East = 3 };

enum class Orientation : std::uint8_t { Upward = 0, Downward = 1 };

const char* to_string(Side side);
const char* to_string(Orientation orientation);

struct RankCoord {
  int cx = 0;
  int cy = 0;

  friend bool operator==(const RankCoord&, const RankCoord&) = default;
};

/// Cyclic offset of rank-owned data relative to global coordinates.
struct Shift {
  int sx = 0;
  int sy = 0;

  friend bool operator==(const Shift&, const Shift&) = default;
};

/// Doubly periodic px-by-py rank grid; every rank owns an n-by-n block.
class Topology {
 public:
  Topology(int px, int py, int n);

  int px() const noexcept { return px_; }
  int py() const noexcept { return py_; }
  int n() const noexcept { return n_; }
  int size() const noexcept { return px_ * py_; }
  int width() const noexcept { return px_ * n_; }
  int height() const noexcept { return py_ * n_; }

  int rank_of(RankCoord c) const;
  RankCoord coord_of(int rank) const;
  bool contains(RankCoord c) const noexcept;

  RankCoord neighbor(RankCoord c, Compass dir) const;
  int neighbor_rank(int rank, Compass dir) const { return rank_of(neighbor(coord_of(rank), dir)); }

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  int px_;
  int py_;
  int n_;
};

/// Validating factory. Throws ValidationError naming `px`, `py` or `n`.
Topology make_topology(int px, int py, int n);

RankCoord neighbor_of(const Topology& topo, RankCoord rank, Compass dir);

/// Throws ValidationError unless n is even and at least 4.
void validate_side_length(int n, const char* field = "n");

/// n-by-n block of state vectors, all of one arity, at one global sub-step.
class Grid {
 public:
  Grid(int n, std::int64_t step, std::size_t arity);
  Grid(int n, std::int64_t step, std::size_t arity, std::vector<double> values);

  int n() const noexcept { return n_; }
  std::int64_t step() const noexcept { return step_; }
  std::size_t arity() const noexcept { return arity_; }

  std::span<const double> point(int li, int lj) const {
    return {values_.data() + offset(li, lj), arity_};
  }
  std::span<double> point(int li, int lj) { return {values_.data() + offset(li, lj), arity_}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t offset(int li, int lj) const {
    return (static_cast<std::size_t>(lj) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(li)) * arity_;
  }

  int n_;
  std::int64_t step_;
  std::size_t arity_;
  std::vector<double> values_;
};

/// One level of a panel: `count()` state vectors of one arity, scan order fixed
/// by the component that produced it.
struct Slab {
  std::size_t arity = 0;
  std::vector<double> values;

  std::size_t count() const noexcept { return arity == 0 ? 0 : values.size() / arity; }
  std::span<const double> at(std::size_t idx) const { return {values.data() + idx * arity, arity}; }

  friend bool operator==(const Slab&, const Slab&) = default;
};

/// A triangular side of an upward pyramid (Upward) or of a bridge (Downward).
struct Panel {
  Side side = Side::North;
  Orientation orientation = Orientation::Upward;
  int n = 0;
  std::int64_t start_step = 0;
  std::vector<Slab> levels;

  friend bool operator==(const Panel&, const Panel&) = default;
};

struct PanelShape {
  std::vector<std::size_t> level_counts;
  std::size_t total = 0;
};

/// Per-level state vector counts of a panel. Upward level k holds 2(n-2k),
/// Downward level k holds 2(2k+2); both total n^2/2 + n.
PanelShape panel_shape(int n, Orientation orientation);

/// Throws ContractError if the panel's slab counts do not match panel_shape.
void check_panel_shape(const Panel& panel);

/// Whole periodic domain at one sub-step.
struct GlobalField {
  int width = 0;
  int height = 0;
  std::int64_t step = 0;
  Shift shift;
  std::size_t arity = 0;
  std::vector<double> values;

  std::span<const double> point(int gi, int gj) const {
    return {values.data() + (static_cast<std::size_t>(gj) * static_cast<std::size_t>(width) +
                             static_cast<std::size_t>(gi)) *
                                arity,
            arity};
  }
  std::span<double> point(int gi, int gj) {
    return {values.data() + (static_cast<std::size_t>(gj) * static_cast<std::size_t>(width) +
                             static_cast<std::size_t>(gi)) *
                                arity,
            arity};
  }

  friend bool operator==(const GlobalField&, const GlobalField&) = default;
};

/// Read-only 3x3 neighborhood: the center state plus its 8 neighbors.
class Neighborhood {
 public:
  Neighborhood(const std::array<const double*, 9>& points, std::size_t arity) noexcept
      : points_(points), arity_(arity) {}

  /// di in {-1,0,1} toward East, dj in {-1,0,1} toward South.
  std::span<const double> at(int di, int dj) const noexcept {
    return {points_[static_cast<std::size_t>((dj + 1) * 3 + (di + 1))], arity_};
  }
  std::span<const double> center() const noexcept { return at(0, 0); }
  std::span<const double> west() const noexcept { return at(-1, 0); }
  std::span<const double> east() const noexcept { return at(1, 0); }
  std::span<const double> north() const noexcept { return at(0, -1); }
  std::span<const double> south() const noexcept { return at(0, 1); }
  std::size_t arity() const noexcept { return arity_; }

 private:
  std::array<const double*, 9> points_;
  std::size_t arity_;
};

/// The per-point update. `apply(t, nbhd, out)` reads a neighborhood of
/// arity(t) vectors and writes one arity(t+1) vector. Implementations must be
/// pure: identical inputs give bit-identical outputs.
class StencilProgram {
 public:
  virtual ~StencilProgram() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t arity(std::int64_t step) const = 0;
  virtual void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const = 0;

  /// Sub-steps forming one physical time step.
  virtual int period() const { return 1; }
};

/// Applies `prog` and rejects non-finite output. Numeric errors raised by the
/// kernel itself are re-thrown with `loc` attached.
void apply_checked(const StencilProgram& prog, std::int64_t step, const Neighborhood& nbhd,
                   std::span<double> out, const SpaceTimeLocation& loc);

using InitFn = std::function<StateVector(std::int64_t gi, std::int64_t gj)>;

/// Step-0 grid of `rank`: local (li, lj) holds init(cx*n + li, cy*n + lj).
Grid init_grid(const Topology& topo, RankCoord rank, const StencilProgram& prog, const InitFn& init);

}  // namespace swept
